"""Rotation representations and conversions.

Local joint rotations travel through the toolkit as continuous 6D vectors
(the first two columns of a rotation matrix, orthonormalized at decode
time). All converters broadcast over leading batch dimensions.
"""

from __future__ import annotations

import numpy as np

from .validation import check_finite

_EPS_DEGENERATE = 1e-12
_ORTHO_TOL = 1e-6


def rot6d_to_matrix(r6: np.ndarray) -> np.ndarray:
    """Decode 6D rotation vectors into rotation matrices.

    Gram-Schmidt on the two embedded columns, third column by cross
    product. Invariant to positive rescaling of either column.

    Args:
        r6: array (..., 6), columns stacked as [a1, a2].

    Returns:
        array (..., 3, 3) with orthonormal columns and det +1.

    Raises:
        ValueError: if a column is (numerically) zero or the columns are
            parallel, where orthonormalization is undefined.
    """
    r6 = np.asarray(r6, dtype=np.float64)
    if r6.shape[-1] != 6:
        raise ValueError(f"rot6d: expected last dimension 6, got {r6.shape}")
    check_finite(r6, "rot6d")
    a1 = r6[..., 0:3]
    a2 = r6[..., 3:6]

    n1 = np.linalg.norm(a1, axis=-1, keepdims=True)
    if np.any(n1 <= _EPS_DEGENERATE):
        raise ValueError("rot6d: first column is zero")
    b1 = a1 / n1
    a2_proj = a2 - np.sum(b1 * a2, axis=-1, keepdims=True) * b1
    n2 = np.linalg.norm(a2_proj, axis=-1, keepdims=True)
    # Relative check: a2 parallel to a1 leaves no usable residual.
    if np.any(n2 <= _EPS_DEGENERATE * np.maximum(1.0, np.linalg.norm(a2, axis=-1, keepdims=True))):
        raise ValueError("rot6d: columns are parallel or second column is zero")
    b2 = a2_proj / n2
    b3 = np.cross(b1, b2)
    return np.stack([b1, b2, b3], axis=-1)


def matrix_to_rot6d(m: np.ndarray) -> np.ndarray:
    """Embed rotation matrices as 6D vectors (first two columns).

    Args:
        m: array (..., 3, 3), orthonormal with det +1 within 1e-6.

    Returns:
        array (..., 6).

    Raises:
        ValueError: if the input is not a rotation matrix within tolerance.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.shape[-2:] != (3, 3):
        raise ValueError(f"rotation matrix: expected (..., 3, 3), got {m.shape}")
    _check_rotation(m)
    return np.concatenate([m[..., :, 0], m[..., :, 1]], axis=-1)


def _check_rotation(m: np.ndarray, tol: float = _ORTHO_TOL) -> None:
    check_finite(m, "rotation matrix")
    eye = np.eye(3)
    ortho_err = np.abs(np.swapaxes(m, -1, -2) @ m - eye).max()
    if ortho_err > tol:
        raise ValueError(f"rotation matrix: not orthonormal (residual {ortho_err:.3g})")
    det = np.linalg.det(m)
    if np.any(np.abs(det - 1.0) > 1e-4):
        raise ValueError("rotation matrix: determinant not +1 (improper rotation?)")


def identity_rot6d(*leading: int) -> np.ndarray:
    """6D encoding of the identity rotation, optionally batched."""
    base = np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0])
    if not leading:
        return base.copy()
    return np.broadcast_to(base, (*leading, 6)).copy()


def axis_angle_matrix(axis, angle: float) -> np.ndarray:
    """Rotation matrix about a (not necessarily unit) axis, Rodrigues form."""
    axis = np.asarray(axis, dtype=np.float64)
    n = np.linalg.norm(axis)
    if n <= _EPS_DEGENERATE:
        raise ValueError("axis_angle_matrix: zero axis")
    x, y, z = axis / n
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def rotation_angle(m: np.ndarray) -> np.ndarray:
    """Geodesic rotation angle(s) in radians of rotation matrices (..., 3, 3)."""
    m = np.asarray(m, dtype=np.float64)
    tr = np.trace(m, axis1=-2, axis2=-1)
    return np.arccos(np.clip((tr - 1.0) * 0.5, -1.0, 1.0))


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    """Unit quaternion(s) [w, x, y, z] -> rotation matrix (..., 3, 3)."""
    q = np.asarray(q, dtype=np.float64)
    q = q / np.linalg.norm(q, axis=-1, keepdims=True)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    m = np.empty(q.shape[:-1] + (3, 3))
    m[..., 0, 0] = 1 - 2 * (y * y + z * z)
    m[..., 0, 1] = 2 * (x * y - w * z)
    m[..., 0, 2] = 2 * (x * z + w * y)
    m[..., 1, 0] = 2 * (x * y + w * z)
    m[..., 1, 1] = 1 - 2 * (x * x + z * z)
    m[..., 1, 2] = 2 * (y * z - w * x)
    m[..., 2, 0] = 2 * (x * z - w * y)
    m[..., 2, 1] = 2 * (y * z + w * x)
    m[..., 2, 2] = 1 - 2 * (x * x + y * y)
    return m


def matrix_to_quat(m: np.ndarray) -> np.ndarray:
    """Rotation matrix (..., 3, 3) -> unit quaternion [w, x, y, z], w >= 0."""
    m = np.asarray(m, dtype=np.float64)
    t = np.trace(m, axis1=-2, axis2=-1)
    q = np.empty(m.shape[:-2] + (4,))
    # Shepperd's method, branch on the largest diagonal term for stability.
    flat_m = m.reshape(-1, 3, 3)
    flat_q = q.reshape(-1, 4)
    flat_t = np.atleast_1d(t).reshape(-1)
    for i, (mi, ti) in enumerate(zip(flat_m, flat_t)):
        if ti > 0:
            s = np.sqrt(ti + 1.0) * 2
            flat_q[i] = [0.25 * s,
                         (mi[2, 1] - mi[1, 2]) / s,
                         (mi[0, 2] - mi[2, 0]) / s,
                         (mi[1, 0] - mi[0, 1]) / s]
        else:
            d = np.argmax([mi[0, 0], mi[1, 1], mi[2, 2]])
            if d == 0:
                s = np.sqrt(1.0 + mi[0, 0] - mi[1, 1] - mi[2, 2]) * 2
                flat_q[i] = [(mi[2, 1] - mi[1, 2]) / s, 0.25 * s,
                             (mi[0, 1] + mi[1, 0]) / s, (mi[0, 2] + mi[2, 0]) / s]
            elif d == 1:
                s = np.sqrt(1.0 - mi[0, 0] + mi[1, 1] - mi[2, 2]) * 2
                flat_q[i] = [(mi[0, 2] - mi[2, 0]) / s, (mi[0, 1] + mi[1, 0]) / s,
                             0.25 * s, (mi[1, 2] + mi[2, 1]) / s]
            else:
                s = np.sqrt(1.0 - mi[0, 0] - mi[1, 1] + mi[2, 2]) * 2
                flat_q[i] = [(mi[1, 0] - mi[0, 1]) / s, (mi[0, 2] + mi[2, 0]) / s,
                             (mi[1, 2] + mi[2, 1]) / s, 0.25 * s]
        if flat_q[i, 0] < 0:
            flat_q[i] = -flat_q[i]
    return q


def slerp_rot6d(a: np.ndarray, b: np.ndarray, w: float) -> np.ndarray:
    """Blend two 6D rotations by linear interpolation + re-orthonormalization.

    Not geodesic, but a valid rotation for every w in [0, 1] and exact at
    the endpoints; good enough for procedural pose blending.
    """
    mixed = (1.0 - w) * np.asarray(a, dtype=np.float64) + w * np.asarray(b, dtype=np.float64)
    return matrix_to_rot6d(rot6d_to_matrix(mixed))


def random_rotations(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform random rotation matrices (n, 3, 3) via normalized quaternions."""
    q = rng.normal(size=(n, 4))
    return quat_to_matrix(q)
