"""Skeleton data model and forward kinematics.

The skeleton is a fixed 22-joint tree (pelvis root, three-link spine, two
legs with feet, collar/shoulder/elbow/wrist arms, neck and head). The
canonical bone offsets live in ``assets/skeleton_template.json``; custom
templates with the same topology rules load through :func:`Skeleton.from_json`.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .rotations import rot6d_to_matrix
from .validation import as_float_array, check_finite

JOINT_COUNT = 22


@dataclass(eq=False)
class Skeleton:
    """Joint tree with local bone offsets.

    Attributes:
        parents: (22,) parent index per joint; the root (joint 0) has -1.
        offsets: (22, 3) bone offsets, meters, in the parent's frame.
        joint_names: 22 joint names.
        wrist_index_right / wrist_index_left: reach end-effector indices.
        rest_root_height: root z in the standing rest pose, meters.
    """

    parents: np.ndarray
    offsets: np.ndarray
    joint_names: list[str] = field(default_factory=list)
    wrist_index_right: int = 21
    wrist_index_left: int = 20
    rest_root_height: float = 0.93

    def __post_init__(self):
        self.parents = np.asarray(self.parents, dtype=np.int64)
        self.offsets = as_float_array(self.offsets, "offsets", (JOINT_COUNT, 3))
        check_finite(self.offsets, "offsets")
        if self.parents.shape != (JOINT_COUNT,):
            raise ValueError(f"parents: expected ({JOINT_COUNT},), got {self.parents.shape}")
        if self.parents[0] != -1:
            raise ValueError("joint 0 must be the root (parent -1)")
        # Topological order: every joint's parent must precede it.
        for j in range(1, JOINT_COUNT):
            if not 0 <= self.parents[j] < j:
                raise ValueError(f"joint {j}: parent {self.parents[j]} does not precede it")
        if not self.joint_names:
            self.joint_names = [f"joint{j}" for j in range(JOINT_COUNT)]

    @property
    def joint_count(self) -> int:
        return JOINT_COUNT

    def rest_positions(self) -> np.ndarray:
        """Global joint positions with identity rotations and root at origin."""
        pos = np.zeros((JOINT_COUNT, 3))
        for j in range(1, JOINT_COUNT):
            pos[j] = pos[self.parents[j]] + self.offsets[j]
        return pos

    def children(self, j: int) -> list[int]:
        return [c for c in range(JOINT_COUNT) if self.parents[c] == j]

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "joint_names": list(self.joint_names),
            "parents": self.parents.tolist(),
            "offsets": self.offsets.tolist(),
            "wrist_index_right": int(self.wrist_index_right),
            "wrist_index_left": int(self.wrist_index_left),
            "rest_root_height": float(self.rest_root_height),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Skeleton":
        if data.get("version", 1) != 1:
            raise ValueError(f"skeleton template: unsupported version {data.get('version')!r}")
        return cls(
            parents=data["parents"],
            offsets=data["offsets"],
            joint_names=list(data.get("joint_names", [])),
            wrist_index_right=int(data.get("wrist_index_right", 21)),
            wrist_index_left=int(data.get("wrist_index_left", 20)),
            rest_root_height=float(data.get("rest_root_height", 0.93)),
        )

    @classmethod
    def from_json(cls, path: str | Path) -> "Skeleton":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True), encoding="utf-8")

    @classmethod
    def from_template(cls) -> "Skeleton":
        """Load the bundled canonical template."""
        text = resources.files("scenereach.assets").joinpath("skeleton_template.json").read_text()
        return cls.from_dict(json.loads(text))

    def content_hash(self) -> str:
        """Stable hash of the template contents, recorded in checkpoints."""
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def index_of(self, name: str) -> int:
        return self.joint_names.index(name)


def forward_kinematics(skeleton: Skeleton, rotations: np.ndarray, root: np.ndarray,
                       return_rotations: bool = False):
    """Global joint positions from local rotations and a root translation.

    joint j sits at parent_position + parent_global_rotation @ offset[j];
    the root joint sits at ``root``.

    Args:
        rotations: (22, 6) local 6D rotations or (22, 3, 3) matrices.
        root: (3,) root translation.
        return_rotations: also return (22, 3, 3) global rotations.

    Returns:
        (22, 3) positions, plus global rotations when requested.
    """
    rotations = np.asarray(rotations, dtype=np.float64)
    if rotations.shape == (JOINT_COUNT, 6):
        local = rot6d_to_matrix(rotations)
    elif rotations.shape == (JOINT_COUNT, 3, 3):
        local = rotations
    else:
        raise ValueError(f"rotations: expected (22, 6) or (22, 3, 3), got {rotations.shape}")
    root = as_float_array(root, "root", (3,))

    pos = np.empty((JOINT_COUNT, 3))
    glob = np.empty((JOINT_COUNT, 3, 3))
    pos[0] = root
    glob[0] = local[0]
    for j in range(1, JOINT_COUNT):
        p = skeleton.parents[j]
        pos[j] = pos[p] + glob[p] @ skeleton.offsets[j]
        glob[j] = glob[p] @ local[j]
    if return_rotations:
        return pos, glob
    return pos


def forward_kinematics_batch(skeleton: Skeleton, rotations: np.ndarray, roots: np.ndarray,
                             return_rotations: bool = False):
    """Batched FK over T frames: (T, 22, 6) + (T, 3) -> (T, 22, 3)."""
    rotations = np.asarray(rotations, dtype=np.float64)
    roots = as_float_array(roots, "roots", (-1, 3))
    if rotations.ndim == 3 and rotations.shape[1:] == (JOINT_COUNT, 6):
        local = rot6d_to_matrix(rotations)
    elif rotations.ndim == 4 and rotations.shape[1:] == (JOINT_COUNT, 3, 3):
        local = rotations
    else:
        raise ValueError(f"rotations: expected (T, 22, 6) or (T, 22, 3, 3), got {rotations.shape}")
    T = local.shape[0]
    if roots.shape[0] != T:
        raise ValueError("roots/rotations frame count mismatch")

    pos = np.empty((T, JOINT_COUNT, 3))
    glob = np.empty((T, JOINT_COUNT, 3, 3))
    pos[:, 0] = roots
    glob[:, 0] = local[:, 0]
    for j in range(1, JOINT_COUNT):
        p = skeleton.parents[j]
        pos[:, j] = pos[:, p] + np.einsum("tij,j->ti", glob[:, p], skeleton.offsets[j])
        glob[:, j] = glob[:, p] @ local[:, j]
    if return_rotations:
        return pos, glob
    return pos
