"""Naive motion initialization: a shared constant pose translated to the
goal, with the root linearly interpolated from the start frame.

The refiner consumes these sequences; they are intentionally crude (the
root glides in a straight line and may cut through geometry).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .motion import MODEL_FPS, MotionSequence, PoseState
from .rotations import rot6d_to_matrix
from .skeleton import JOINT_COUNT, Skeleton, forward_kinematics, forward_kinematics_batch
from .validation import as_float_array, as_vec3


@dataclass
class ConstantPose:
    """Corpus-wide constant pose: local rotations + the rest wrist offset
    (right wrist position under FK with the root at the origin)."""

    rot6d: np.ndarray          # (22, 6)
    wrist_offset: np.ndarray   # (3,)

    def __post_init__(self):
        self.rot6d = as_float_array(self.rot6d, "rot6d", (JOINT_COUNT, 6))
        self.wrist_offset = as_vec3(self.wrist_offset, "wrist_offset")

    @classmethod
    def from_rotations(cls, rot6d: np.ndarray, skeleton: Skeleton) -> "ConstantPose":
        rot6d = as_float_array(rot6d, "rot6d", (JOINT_COUNT, 6))
        wrist = forward_kinematics(skeleton, rot6d, np.zeros(3))[skeleton.wrist_index_right]
        return cls(rot6d=rot6d, wrist_offset=wrist)

    def to_dict(self) -> dict:
        return {"rot6d": self.rot6d.tolist(), "wrist_offset": self.wrist_offset.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ConstantPose":
        return cls(rot6d=np.asarray(d["rot6d"]), wrist_offset=np.asarray(d["wrist_offset"]))


def compute_constant_pose(sequences: list[MotionSequence], skeleton: Skeleton,
                          max_frames: int = 500) -> ConstantPose:
    """Pick the medoid frame of the corpus sample: the frame minimizing the
    summed Frobenius rotation distance to all other sampled frames."""
    if not sequences:
        raise ValueError("need at least one sequence")
    all_rot = np.concatenate([seq.rot6d for seq in sequences], axis=0)
    if all_rot.shape[0] > max_frames:
        # deterministic even subsample
        pick = np.linspace(0, all_rot.shape[0] - 1, max_frames).astype(int)
        all_rot = all_rot[pick]
    mats = rot6d_to_matrix(all_rot).reshape(all_rot.shape[0], -1)
    dist = cdist(mats, mats)  # Frobenius distance summed over joints, squared-free
    medoid = int(np.argmin(dist.sum(axis=1)))
    return ConstantPose.from_rotations(all_rot[medoid], skeleton)


def initialize_motion(x0: PoseState, goal, n_frames: int, constant_pose: ConstantPose,
                      skeleton: Skeleton, fps: float = MODEL_FPS,
                      scene_id: str = "", task_id: str = "") -> MotionSequence:
    """Build the initial sequence: frame 0 is the start pose verbatim; the
    last frame is the constant pose translated so the right wrist sits at
    the goal; in-between frames carry the constant rotations with the root
    translation linearly interpolated.

    Raises:
        ValueError: if n_frames < 2 or the goal is not finite.
    """
    if n_frames < 2:
        raise ValueError(f"n_frames must be >= 2, got {n_frames}")
    goal = as_vec3(goal, "goal")

    root_last = goal - constant_pose.wrist_offset
    t = np.arange(n_frames, dtype=np.float64)[:, None] / (n_frames - 1)
    roots = x0.root + t * (root_last - x0.root)
    rot6d = np.broadcast_to(constant_pose.rot6d, (n_frames, JOINT_COUNT, 6)).copy()
    joints = forward_kinematics_batch(skeleton, rot6d, roots)

    roots[0] = x0.root
    joints[0] = x0.joints
    rot6d[0] = x0.rot6d
    return MotionSequence(roots=roots, joints=joints, rot6d=rot6d, fps=fps, goal=goal,
                          scene_id=scene_id, task_id=task_id)
