"""Body surface vertices: rigid capsule shells sampled per bone.

Each of the 699 surface vertices is assigned to one joint frame and moves
rigidly with that joint's global transform, which is all the scene
encodings and collision/vertex metrics downstream consume. Sampling is
seeded and cached per skeleton, so the vertex set is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .motion import MotionSequence, PoseState
from .skeleton import Skeleton, forward_kinematics, forward_kinematics_batch

VERTEX_COUNT = 699
SURFACE_SEED = 20240611

# capsule radius by the child joint of each bone segment
_BONE_RADIUS = {
    "hip_l": 0.10, "hip_r": 0.10, "spine1": 0.11, "spine2": 0.11, "spine3": 0.11,
    "knee_l": 0.07, "knee_r": 0.07, "ankle_l": 0.055, "ankle_r": 0.055,
    "foot_l": 0.04, "foot_r": 0.04, "neck": 0.05, "head": 0.06,
    "collar_l": 0.07, "collar_r": 0.07, "shoulder_l": 0.06, "shoulder_r": 0.06,
    "elbow_l": 0.045, "elbow_r": 0.045, "wrist_l": 0.04, "wrist_r": 0.04,
}
_DEFAULT_RADIUS = 0.05

# leaf extensions: joint name -> (local end point, radius)
_LEAF_EXTENSIONS = {
    "foot_l": ((0.06, 0.0, 0.0), 0.035),
    "foot_r": ((0.06, 0.0, 0.0), 0.035),
    "head": ((0.0, 0.0, 0.14), 0.095),
    "wrist_l": ((0.0, 0.16, 0.0), 0.04),
    "wrist_r": ((0.0, -0.16, 0.0), 0.04),
}


@dataclass
class BodySurface:
    """Sampled surface: per-vertex attachment joint and joint-local offset."""

    attach: np.ndarray    # (K,) joint index each vertex rides on
    local: np.ndarray     # (K, 3) offset in the attachment joint's frame
    template: np.ndarray  # (K, 3) rest-pose world positions (identity pose, root at origin)

    def __len__(self) -> int:
        return self.attach.shape[0]


def _orthonormal_frame(axis: np.ndarray) -> np.ndarray:
    """Columns (t1, t2, axis_hat) with axis_hat = axis / |axis|."""
    a = axis / np.linalg.norm(axis)
    helper = np.array([1.0, 0.0, 0.0]) if abs(a[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    t1 = np.cross(a, helper)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(a, t1)
    return np.stack([t1, t2, a], axis=1)


def _sample_capsule(rng: np.random.Generator, n: int, end: np.ndarray, radius: float) -> np.ndarray:
    """n points on the capsule around segment (0 -> end), in segment coordinates."""
    length = float(np.linalg.norm(end))
    frame = _orthonormal_frame(end)
    side_area = 2.0 * np.pi * radius * length
    cap_area = 4.0 * np.pi * radius ** 2
    pts = np.empty((n, 3))
    on_side = rng.random(n) < side_area / (side_area + cap_area)
    n_side = int(on_side.sum())

    theta = rng.uniform(0.0, 2.0 * np.pi, size=n_side)
    z = rng.uniform(0.0, length, size=n_side)
    pts[on_side] = np.stack(
        [radius * np.cos(theta), radius * np.sin(theta), z], axis=1)

    n_cap = n - n_side
    v = rng.normal(size=(n_cap, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    centers = np.where(v[:, 2:3] >= 0.0, length, 0.0)
    cap_pts = radius * v
    cap_pts[:, 2] += centers[:, 0]
    pts[~on_side] = cap_pts
    return pts @ frame.T


def build_body_surface(skeleton: Skeleton, count: int = VERTEX_COUNT,
                       seed: int = SURFACE_SEED) -> BodySurface:
    """Sample the per-bone capsule shells, apportioning vertices by area."""
    rest = skeleton.rest_positions()
    segments = []  # (attach_joint, end_in_attach_frame, radius)
    for j in range(1, skeleton.joint_count):
        name = skeleton.joint_names[j]
        radius = _BONE_RADIUS.get(name, _DEFAULT_RADIUS)
        segments.append((int(skeleton.parents[j]), skeleton.offsets[j].copy(), radius))
    for name, (end, radius) in _LEAF_EXTENSIONS.items():
        if name in skeleton.joint_names:
            segments.append((skeleton.index_of(name), np.asarray(end, dtype=np.float64), radius))

    areas = np.array([2 * np.pi * r * np.linalg.norm(end) + 4 * np.pi * r * r
                      for _, end, r in segments])
    quota = areas / areas.sum() * count
    counts = np.floor(quota).astype(int)
    # largest-remainder rounding to hit the count exactly
    remainder = quota - counts
    for idx in np.argsort(-remainder)[: count - counts.sum()]:
        counts[idx] += 1

    rng = np.random.default_rng(seed)
    attach = np.empty(count, dtype=np.int64)
    local = np.empty((count, 3))
    cursor = 0
    for (joint, end, radius), n in zip(segments, counts):
        if n == 0:
            continue
        local[cursor:cursor + n] = _sample_capsule(rng, n, end, radius)
        attach[cursor:cursor + n] = joint
        cursor += n
    template = rest[attach] + local
    return BodySurface(attach=attach, local=local, template=template)


_SURFACE_CACHE: dict[tuple, BodySurface] = {}


def get_body_surface(skeleton: Skeleton, count: int = VERTEX_COUNT,
                     seed: int = SURFACE_SEED) -> BodySurface:
    key = (skeleton.content_hash(), count, seed)
    if key not in _SURFACE_CACHE:
        _SURFACE_CACHE[key] = build_body_surface(skeleton, count, seed)
    return _SURFACE_CACHE[key]


def body_surface_vertices(skeleton: Skeleton, pose: PoseState) -> np.ndarray:
    """(699, 3) world-space surface vertices for one pose (via FK)."""
    surf = get_body_surface(skeleton)
    pos, glob = forward_kinematics(skeleton, pose.rot6d, pose.root, return_rotations=True)
    return pos[surf.attach] + np.einsum("vab,vb->va", glob[surf.attach], surf.local)


def body_surface_vertices_batch(skeleton: Skeleton, seq: MotionSequence) -> np.ndarray:
    """(T, 699, 3) surface vertices for every frame of a sequence."""
    surf = get_body_surface(skeleton)
    pos, glob = forward_kinematics_batch(skeleton, seq.rot6d, seq.roots, return_rotations=True)
    return pos[:, surf.attach] + np.einsum("tvab,vb->tva", glob[:, surf.attach], surf.local)
