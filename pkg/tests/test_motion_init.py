import numpy as np
import pytest

from scenereach.motion import MotionSequence, PoseState
from scenereach.motion_init import ConstantPose, compute_constant_pose, initialize_motion
from scenereach.rotations import axis_angle_matrix, identity_rot6d, matrix_to_rot6d, rot6d_to_matrix
from scenereach.skeleton import forward_kinematics


@pytest.fixture(scope="module")
def constant_pose(skeleton):
    rot = identity_rot6d(22)
    rot[skeleton.index_of("shoulder_r")] = matrix_to_rot6d(axis_angle_matrix([1, 0, 0], 0.6))
    return ConstantPose.from_rotations(rot, skeleton)


@pytest.fixture(scope="session")
def skeleton():
    from scenereach.skeleton import Skeleton
    return Skeleton.from_template()


def make_start(skeleton, rng=None):
    rot = identity_rot6d(22)
    if rng is not None:
        for j in range(22):
            rot[j] = matrix_to_rot6d(axis_angle_matrix(rng.normal(size=3), rng.uniform(-0.4, 0.4)))
    root = np.array([0.2, -0.4, 0.93])
    joints = forward_kinematics(skeleton, rot, root)
    return PoseState(root=root, joints=joints, rot6d=rot)


def test_goal_at_start_root_collapses_interpolation(skeleton, constant_pose):
    x0 = make_start(skeleton)
    goal = x0.root + constant_pose.wrist_offset
    seq = initialize_motion(x0, goal, 8, constant_pose, skeleton)
    np.testing.assert_allclose(seq.roots, np.broadcast_to(x0.root, (8, 3)), atol=1e-15)
    for t in range(2, 8):
        np.testing.assert_array_equal(seq.rot6d[t], seq.rot6d[1])
        np.testing.assert_allclose(seq.joints[t], seq.joints[1], atol=1e-15)


def test_two_frames_is_start_then_translated_constant(skeleton, constant_pose):
    x0 = make_start(skeleton)
    goal = np.array([1.5, 0.3, 1.1])
    seq = initialize_motion(x0, goal, 2, constant_pose, skeleton)
    assert len(seq) == 2
    np.testing.assert_array_equal(seq.roots[0], x0.root)
    np.testing.assert_array_equal(seq.rot6d[0], x0.rot6d)
    np.testing.assert_array_equal(seq.rot6d[1], constant_pose.rot6d)
    np.testing.assert_allclose(seq.roots[1], goal - constant_pose.wrist_offset, atol=1e-15)


def test_final_wrist_hits_goal_random(skeleton, constant_pose, rng):
    x0 = make_start(skeleton, rng)
    for _ in range(100):
        goal = rng.uniform([-2, -2, 0.2], [2, 2, 1.8])
        seq = initialize_motion(x0, goal, rng.integers(2, 60), constant_pose, skeleton)
        wrist = forward_kinematics(skeleton, seq.rot6d[-1], seq.roots[-1])[skeleton.wrist_index_right]
        assert np.linalg.norm(wrist - goal) < 1e-9
        # stored joints agree with FK
        np.testing.assert_allclose(seq.joints[-1][skeleton.wrist_index_right], wrist, atol=1e-12)


def test_root_track_is_affine(skeleton, constant_pose, rng):
    x0 = make_start(skeleton)
    seq = initialize_motion(x0, rng.uniform(-2, 2, 3) + [0, 0, 2], 40, constant_pose, skeleton)
    second_diff = np.diff(seq.roots, n=2, axis=0)
    assert np.abs(second_diff).max() < 1e-12


def test_frame_zero_identical(skeleton, constant_pose, rng):
    x0 = make_start(skeleton, rng)
    seq = initialize_motion(x0, [1.0, 1.0, 1.0], 12, constant_pose, skeleton)
    np.testing.assert_array_equal(seq.roots[0], x0.root)
    np.testing.assert_array_equal(seq.joints[0], x0.joints)
    np.testing.assert_array_equal(seq.rot6d[0], x0.rot6d)


def test_short_sequence_rejected(skeleton, constant_pose):
    x0 = make_start(skeleton)
    with pytest.raises(ValueError):
        initialize_motion(x0, [1.0, 0.0, 1.0], 1, constant_pose, skeleton)
    with pytest.raises(ValueError):
        initialize_motion(x0, [np.nan, 0.0, 1.0], 5, constant_pose, skeleton)


def test_constant_pose_roundtrip(skeleton, constant_pose):
    back = ConstantPose.from_dict(constant_pose.to_dict())
    np.testing.assert_array_equal(back.rot6d, constant_pose.rot6d)
    np.testing.assert_array_equal(back.wrist_offset, constant_pose.wrist_offset)


def test_medoid_constant_pose_matches_brute_force(skeleton, rng):
    seqs = []
    for _ in range(4):
        T = 10
        rot = np.stack([
            np.stack([matrix_to_rot6d(axis_angle_matrix(rng.normal(size=3),
                                                        rng.uniform(-1, 1)))
                      for _ in range(22)])
            for _ in range(T)])
        roots = rng.normal(size=(T, 3))
        from scenereach.skeleton import forward_kinematics_batch
        seqs.append(MotionSequence(roots=roots, rot6d=rot,
                                   joints=forward_kinematics_batch(skeleton, rot, roots)))
    pose = compute_constant_pose(seqs, skeleton)

    # brute-force medoid over all frames
    all_rot = np.concatenate([s.rot6d for s in seqs])
    mats = rot6d_to_matrix(all_rot).reshape(len(all_rot), -1)
    sums = [sum(np.linalg.norm(mats[i] - mats[j]) for j in range(len(mats)))
            for i in range(len(mats))]
    np.testing.assert_array_equal(pose.rot6d, all_rot[int(np.argmin(sums))])
