"""Pose and motion-sequence containers.

A pose state is the triple (root translation, global joint positions,
local 6D joint rotations); flattened it has 3 + 66 + 132 = 201 components
in that order. Sequences are stored struct-of-arrays for vectorized math,
with per-frame :class:`PoseState` views available through indexing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .skeleton import JOINT_COUNT, Skeleton, forward_kinematics_batch
from .validation import as_float_array, check_finite

POSE_DIM = 3 + JOINT_COUNT * 3 + JOINT_COUNT * 6  # 201
MODEL_FPS = 20.0
MAX_FRAMES = 240

LABEL_REACHING = "reaching"
LABEL_TRANSITION = "transition"


@dataclass
class PoseState:
    """One frame: root translation, global joint positions, local rotations."""

    root: np.ndarray          # (3,)
    joints: np.ndarray        # (22, 3)
    rot6d: np.ndarray         # (22, 6)

    def __post_init__(self):
        self.root = as_float_array(self.root, "root", (3,))
        self.joints = as_float_array(self.joints, "joints", (JOINT_COUNT, 3))
        self.rot6d = as_float_array(self.rot6d, "rot6d", (JOINT_COUNT, 6))
        for arr, name in ((self.root, "root"), (self.joints, "joints"), (self.rot6d, "rot6d")):
            check_finite(arr, name)

    def flatten(self) -> np.ndarray:
        """Pack as a 201-vector: [root, joints, rot6d]."""
        return np.concatenate([self.root, self.joints.ravel(), self.rot6d.ravel()])

    @classmethod
    def from_flat(cls, vec: np.ndarray) -> "PoseState":
        vec = as_float_array(vec, "pose vector", (POSE_DIM,))
        return cls(root=vec[:3],
                   joints=vec[3:3 + 66].reshape(JOINT_COUNT, 3),
                   rot6d=vec[69:].reshape(JOINT_COUNT, 6))

    def copy(self) -> "PoseState":
        return PoseState(self.root.copy(), self.joints.copy(), self.rot6d.copy())


@dataclass
class MotionSequence:
    """Time-ordered pose states with task metadata."""

    roots: np.ndarray         # (T, 3)
    joints: np.ndarray        # (T, 22, 3)
    rot6d: np.ndarray         # (T, 22, 6)
    fps: float = MODEL_FPS
    goal: np.ndarray | None = None     # (3,) target wrist position
    label: str = LABEL_REACHING
    scene_id: str = ""
    seq_id: str = ""
    task_id: str = ""

    def __post_init__(self):
        self.roots = as_float_array(self.roots, "roots", (-1, 3))
        T = self.roots.shape[0]
        self.joints = as_float_array(self.joints, "joints", (T, JOINT_COUNT, 3))
        self.rot6d = as_float_array(self.rot6d, "rot6d", (T, JOINT_COUNT, 6))
        if T < 1:
            raise ValueError("motion sequence must have at least one frame")
        if self.goal is not None:
            self.goal = as_float_array(self.goal, "goal", (3,))
        if self.label not in (LABEL_REACHING, LABEL_TRANSITION):
            raise ValueError(f"label must be reaching|transition, got {self.label!r}")

    def __len__(self) -> int:
        return self.roots.shape[0]

    def __getitem__(self, t: int) -> PoseState:
        return PoseState(self.roots[t].copy(), self.joints[t].copy(), self.rot6d[t].copy())

    def flatten(self) -> np.ndarray:
        """(T, 201) matrix of flattened pose states."""
        T = len(self)
        return np.concatenate(
            [self.roots, self.joints.reshape(T, -1), self.rot6d.reshape(T, -1)], axis=1)

    @classmethod
    def from_flat(cls, mat: np.ndarray, **meta) -> "MotionSequence":
        mat = as_float_array(mat, "pose matrix", (-1, POSE_DIM))
        T = mat.shape[0]
        return cls(roots=mat[:, :3],
                   joints=mat[:, 3:69].reshape(T, JOINT_COUNT, 3),
                   rot6d=mat[:, 69:].reshape(T, JOINT_COUNT, 6),
                   **meta)

    @classmethod
    def from_frames(cls, frames: list[PoseState], **meta) -> "MotionSequence":
        return cls(roots=np.stack([f.root for f in frames]),
                   joints=np.stack([f.joints for f in frames]),
                   rot6d=np.stack([f.rot6d for f in frames]),
                   **meta)

    def wrist_positions(self, skeleton: Skeleton) -> np.ndarray:
        """(T, 3) stored right-wrist trajectory."""
        return self.joints[:, skeleton.wrist_index_right, :]

    def recompute_joints(self, skeleton: Skeleton) -> "MotionSequence":
        """Replace stored joint positions with FK of rotations + roots."""
        self.joints = forward_kinematics_batch(skeleton, self.rot6d, self.roots)
        return self

    def copy(self) -> "MotionSequence":
        return MotionSequence(
            roots=self.roots.copy(), joints=self.joints.copy(), rot6d=self.rot6d.copy(),
            fps=self.fps, goal=None if self.goal is None else self.goal.copy(),
            label=self.label, scene_id=self.scene_id, seq_id=self.seq_id, task_id=self.task_id)
