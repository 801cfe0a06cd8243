import numpy as np
import pytest
import torch

from scenereach.features import (
    BASIS_COUNT,
    BPS_RAW_DIM,
    FEATURE_DIM,
    BpsHead,
    BpsSceneEncoder,
    CylinderBasis,
    NullSceneEncoder,
    PointFeatureSceneEncoder,
    RandomFourierFeatureProvider,
    bps_raw_vector,
    encode_bps,
    encode_bps_torch,
    encode_pointfeat,
    interpolate_feature,
    interpolate_features,
    make_encoder,
    nn_differences,
    place_basis,
)
from scenereach.kdtree import PointCloud, brute_force_k_nearest, build_index
from scenereach.motion import MotionSequence
from scenereach.motion_init import ConstantPose, initialize_motion
from scenereach.rotations import identity_rot6d
from scenereach.scene import Box, SceneModel, build_navigable_grid
from scenereach.skeleton import forward_kinematics
from scenereach.surface import body_surface_vertices
from scenereach.motion import PoseState


@pytest.fixture(scope="module")
def basis():
    return CylinderBasis.sample(seed=5)


def feature_cloud(rng, n=200):
    pts = rng.normal(size=(n, 3))
    feats = rng.normal(size=(n, 16))
    return PointCloud(points=pts, features=feats)


def test_basis_sampling_shape_and_bounds(basis):
    assert basis.points.shape == (BASIS_COUNT, 3)
    r = np.hypot(basis.points[:, 0], basis.points[:, 1])
    assert np.all(r <= basis.radius)
    assert np.all(np.abs(basis.points[:, 2]) <= basis.height / 2)
    np.testing.assert_array_equal(CylinderBasis.sample(seed=5).points, basis.points)


def test_place_basis_at_origin_offsets_by_half_height(basis):
    world = place_basis(basis, (0.0, 0.0))
    np.testing.assert_array_equal(world, basis.points + [0.0, 0.0, 1.0])
    assert world[:, 2].min() >= 0.0
    assert world[:, 2].max() <= 2.0


def test_place_basis_translation_equivariance(basis):
    base = place_basis(basis, (0.0, 0.0))
    moved = place_basis(basis, (1.5, -2.25))
    np.testing.assert_allclose(moved, base + [1.5, -2.25, 0.0], atol=1e-15)


def test_placed_points_respect_cylinder(basis):
    world = place_basis(basis, (3.0, -1.0))
    r = np.hypot(world[:, 0] - 3.0, world[:, 1] + 1.0)
    assert np.all(r <= basis.radius)
    assert np.all((world[:, 2] >= 0.0) & (world[:, 2] <= basis.height))


def test_nn_difference_coincident_is_zero(rng):
    pts = rng.normal(size=(50, 3))
    index = build_index(PointCloud(points=pts))
    diffs = nn_differences(pts[[3, 7]], index)
    np.testing.assert_array_equal(diffs, np.zeros((2, 3)))


def test_nn_difference_single_point():
    index = build_index(PointCloud(points=[[1.0, 0.0, 0.0]]))
    diffs = nn_differences(np.zeros((1, 3)), index)
    np.testing.assert_array_equal(diffs[0], [1.0, 0.0, 0.0])


def test_nn_differences_match_brute_force(skeleton, rng):
    # a posed body inside clutter
    pose = PoseState(root=[0, 0, 0.93],
                     joints=forward_kinematics(skeleton, identity_rot6d(22), [0, 0, 0.93]),
                     rot6d=identity_rot6d(22))
    verts = body_surface_vertices(skeleton, pose)
    pts = rng.uniform(-2, 2, size=(400, 3))
    index = build_index(PointCloud(points=pts))
    diffs = nn_differences(verts, index)
    for i in rng.choice(len(verts), 40, replace=False):
        ids, dists = brute_force_k_nearest(pts, verts[i], 1)
        np.testing.assert_array_equal(diffs[i], pts[ids[0]] - verts[i])
        assert abs(np.linalg.norm(diffs[i]) - dists[0]) < 1e-12


def test_interpolation_equidistant_mean():
    # three points forming an equilateral triangle around the query
    ang = np.array([0.0, 2 * np.pi / 3, 4 * np.pi / 3])
    pts = np.stack([np.cos(ang), np.sin(ang), np.zeros(3)], axis=1)
    far = np.array([[10.0, 0, 0], [0, 10.0, 0]])
    feats = np.arange(5 * 4, dtype=float).reshape(5, 4)
    index = build_index(PointCloud(points=np.concatenate([pts, far]), features=feats))
    out = interpolate_feature(np.zeros(3), index)
    np.testing.assert_allclose(out, feats[:3].mean(axis=0), atol=1e-12)


def test_interpolation_exact_hit_returns_feature_row(rng):
    cloud = feature_cloud(rng)
    index = build_index(cloud)
    out = interpolate_feature(cloud.points[11], index)
    np.testing.assert_array_equal(out, cloud.features[11])


def test_interpolation_matches_brute_force_formula(rng):
    cloud = feature_cloud(rng)
    index = build_index(cloud)
    for _ in range(200):
        e = rng.normal(size=3)
        ids, dists = brute_force_k_nearest(cloud.points, e, 3)
        w = 1.0 / dists
        expected = (w[:, None] * cloud.features[ids]).sum(0) / w.sum()
        np.testing.assert_allclose(interpolate_feature(e, index), expected, atol=1e-12)


def test_interpolation_convex_hull_property(rng):
    cloud = feature_cloud(rng)
    index = build_index(cloud)
    queries = rng.normal(size=(500, 3))
    out = interpolate_features(queries, index)
    from scenereach.kdtree import k_nearest_batch
    idx, _ = k_nearest_batch(index, queries, 3)
    neigh = cloud.features[idx]
    assert np.all(out >= neigh.min(axis=1) - 1e-12)
    assert np.all(out <= neigh.max(axis=1) + 1e-12)


def test_interpolation_requires_features(rng):
    index = build_index(PointCloud(points=rng.normal(size=(10, 3))))
    with pytest.raises(ValueError):
        interpolate_feature(np.zeros(3), index)


def test_encode_bps_zero_weights_gives_bias(rng):
    index = build_index(PointCloud(points=rng.normal(size=(50, 3))))
    head = BpsHead(hidden=8)
    with torch.no_grad():
        head.fc1.weight.zero_()
        head.fc1.bias.zero_()
        head.fc2.weight.zero_()
    verts = rng.normal(size=(699, 3))
    basis = rng.normal(size=(1024, 3))
    out = encode_bps(verts, basis, index, head)
    np.testing.assert_allclose(out, head.fc2.bias.detach().double().numpy(), atol=1e-7)


def test_encode_bps_deterministic(rng):
    index = build_index(PointCloud(points=rng.normal(size=(50, 3))))
    head = BpsHead(hidden=8)
    verts = rng.normal(size=(699, 3))
    basis = rng.normal(size=(1024, 3))
    np.testing.assert_array_equal(encode_bps(verts, basis, index, head),
                                  encode_bps(verts, basis, index, head))


def test_encode_bps_gradients_match_finite_differences(rng):
    torch.manual_seed(0)
    index = build_index(PointCloud(points=rng.normal(size=(60, 3))))
    head = BpsHead(hidden=6).double()
    verts = rng.normal(size=(699, 3))
    basis = rng.normal(size=(1024, 3))
    u = rng.normal(size=FEATURE_DIM)

    verts_t = torch.tensor(verts, requires_grad=True)
    out = encode_bps_torch(verts_t, basis, index, head)
    s = (out * torch.from_numpy(u)).sum()
    s.backward()

    def scalar(h=None, vt=None):
        out = encode_bps(vt if vt is not None else verts, basis, index, h or head)
        return float(out @ u)

    eps = 1e-6
    # a few head weight coordinates
    for (i, j) in [(0, 5), (3, 100), (5, 700)]:
        with torch.no_grad():
            orig = head.fc1.weight[i, j].item()
            head.fc1.weight[i, j] = orig + eps
            up = scalar()
            head.fc1.weight[i, j] = orig - eps
            down = scalar()
            head.fc1.weight[i, j] = orig
        fd = (up - down) / (2 * eps)
        an = head.fc1.weight.grad[i, j].item()
        assert abs(an - fd) / max(abs(fd), 1e-10) < 1e-4

    # a few vertex coordinates
    for (v, c) in [(0, 0), (123, 2), (698, 1)]:
        vp = verts.copy()
        vp[v, c] += eps
        vm = verts.copy()
        vm[v, c] -= eps
        fd = (scalar(vt=vp) - scalar(vt=vm)) / (2 * eps)
        an = verts_t.grad[v, c].item()
        assert abs(an - fd) / max(abs(fd), 1e-10) < 1e-4


def test_encode_pointfeat_constant_features(rng):
    pts = rng.normal(size=(80, 3))
    c = rng.normal(size=128)
    index = build_index(PointCloud(points=pts, features=np.tile(c, (80, 1))))
    out = encode_pointfeat(rng.normal(size=(699, 3)), rng.normal(size=(1024, 3)), index)
    np.testing.assert_allclose(out[:128], c, atol=1e-12)
    np.testing.assert_allclose(out[128:], c, atol=1e-12)


def test_encode_pointfeat_linear_in_features(rng):
    pts = rng.normal(size=(80, 3))
    feats = rng.normal(size=(80, 128))
    verts = rng.normal(size=(699, 3))
    basis = rng.normal(size=(1024, 3))
    out1 = encode_pointfeat(verts, basis, build_index(PointCloud(points=pts, features=feats)))
    out2 = encode_pointfeat(verts, basis, build_index(PointCloud(points=pts, features=2 * feats)))
    np.testing.assert_allclose(out2, 2 * out1, atol=1e-10)


def test_encode_pointfeat_matches_brute_force(rng):
    pts = rng.normal(size=(60, 3))
    feats = rng.normal(size=(60, 128))
    index = build_index(PointCloud(points=pts, features=feats))
    verts = rng.normal(size=(699, 3))
    basis = rng.normal(size=(1024, 3))
    out = encode_pointfeat(verts, basis, index)

    def brute_interp(e):
        ids, dists = brute_force_k_nearest(pts, e, 3)
        if dists[0] < 1e-9:
            return feats[ids[0]]
        w = 1.0 / dists
        return (w[:, None] * feats[ids]).sum(0) / w.sum()

    fh = np.mean([brute_interp(v) for v in verts], axis=0)
    fc = np.mean([brute_interp(pts[brute_force_k_nearest(pts, b, 1)[0][0]]) for b in basis], axis=0)
    np.testing.assert_allclose(out, np.concatenate([fh, fc]), atol=1e-10)


def test_encoder_invariant_to_cloud_permutation(skeleton, rng):
    # permuting the stored scene points must not change the BPS rows
    box = Box(min_corner=[0.5, -0.5, 0.0], max_corner=[1.5, 0.5, 0.9])
    nav = build_navigable_grid([box], 0.0, (-3, 3), (-3, 3))
    scene = SceneModel(boxes=[box], floor_height=0.0, navigable=nav, cloud_seed=7)
    cloud = scene.point_cloud()
    perm = rng.permutation(len(cloud.points))

    cp = ConstantPose.from_rotations(identity_rot6d(22), skeleton)
    x0 = PoseState(root=[-1, 0, 0.93],
                   joints=forward_kinematics(skeleton, identity_rot6d(22), [-1, 0, 0.93]),
                   rot6d=identity_rot6d(22))
    seq = initialize_motion(x0, [1.0, 0.0, 1.0], 5, cp, skeleton)

    enc = BpsSceneEncoder(skeleton=skeleton, basis_seed=1)
    enc.fit(scene)
    raw1 = enc.transform(seq)

    scene_perm = SceneModel(boxes=[box], floor_height=0.0, navigable=nav, cloud_seed=7)
    scene_perm._cloud = PointCloud(points=cloud.points[perm])
    enc2 = BpsSceneEncoder(skeleton=skeleton, basis_seed=1).fit(scene_perm)
    raw2 = enc2.transform(seq)
    np.testing.assert_allclose(raw1, raw2, atol=1e-12)


def test_encoder_transform_shapes(skeleton):
    box = Box(min_corner=[0.5, -0.5, 0.0], max_corner=[1.5, 0.5, 0.9])
    scene = SceneModel(boxes=[box], floor_height=0.0,
                       navigable=build_navigable_grid([box], 0.0, (-2, 2), (-2, 2)))
    cp = ConstantPose.from_rotations(identity_rot6d(22), skeleton)
    x0 = PoseState(root=[-1, 0, 0.93],
                   joints=forward_kinematics(skeleton, identity_rot6d(22), [-1, 0, 0.93]),
                   rot6d=identity_rot6d(22))
    seq = initialize_motion(x0, [1.0, 0.0, 1.0], 6, cp, skeleton)

    assert NullSceneEncoder(skeleton).fit(scene).transform(seq).shape == (6, FEATURE_DIM)
    assert np.all(NullSceneEncoder(skeleton).fit(scene).transform(seq) == 0.0)
    assert BpsSceneEncoder(skeleton).fit(scene).transform(seq).shape == (6, BPS_RAW_DIM)
    assert PointFeatureSceneEncoder(skeleton).fit(scene).transform(seq).shape == (6, FEATURE_DIM)


def test_make_encoder_kinds(skeleton):
    assert make_encoder("bps", skeleton).kind == "bps"
    assert make_encoder("pointfeat", skeleton).kind == "pointfeat"
    assert make_encoder("none", skeleton).kind == "none"
    with pytest.raises(ValueError):
        make_encoder("magic", skeleton)


def test_provider_roundtrip_and_determinism(rng):
    p1 = RandomFourierFeatureProvider(seed=9)
    p2 = RandomFourierFeatureProvider.from_dict(p1.to_dict())
    pts = rng.normal(size=(20, 3))
    np.testing.assert_array_equal(p1(pts), p2(pts))
    assert p1(pts).shape == (20, 128)
