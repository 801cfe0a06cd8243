import numpy as np
import pytest

from scenereach.kdtree import (
    PointCloud,
    brute_force_k_nearest,
    build_index,
    k_nearest,
    k_nearest_batch,
    nearest_points,
)


def test_single_point_cloud():
    idx = build_index(PointCloud(points=[[1.0, 2.0, 3.0]]))
    ids, dists = k_nearest(idx, [0.0, 0.0, 0.0], 1)
    assert ids.tolist() == [0]
    np.testing.assert_allclose(dists, [np.sqrt(14.0)])


def test_empty_cloud_rejected():
    with pytest.raises(ValueError):
        PointCloud(points=np.zeros((0, 3)))


def test_cube_corner_ties_broken_by_lowest_index():
    corners = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], dtype=float)
    idx = build_index(PointCloud(points=corners))
    center = np.array([0.5, 0.5, 0.5])
    ids, dists = k_nearest(idx, center, 8)
    assert ids.tolist() == list(range(8))
    np.testing.assert_allclose(dists, np.full(8, np.sqrt(3) / 2))
    ids1, _ = k_nearest(idx, center, 1)
    assert ids1.tolist() == [0]
    ids3, _ = k_nearest(idx, center, 3)
    assert ids3.tolist() == [0, 1, 2]


def test_k_equals_n_fully_sorted(rng):
    pts = rng.normal(size=(40, 3))
    idx = build_index(PointCloud(points=pts))
    q = rng.normal(size=3)
    ids, dists = k_nearest(idx, q, 40)
    assert np.all(np.diff(dists) >= 0)
    ref_ids, ref_d = brute_force_k_nearest(pts, q, 40)
    np.testing.assert_array_equal(ids, ref_ids)
    np.testing.assert_array_equal(dists, ref_d)


def test_coincident_query_returns_zero_first(rng):
    pts = rng.normal(size=(50, 3))
    idx = build_index(PointCloud(points=pts))
    ids, dists = k_nearest(idx, pts[17], 3)
    assert ids[0] == 17
    assert dists[0] == 0.0


def test_matches_brute_force_random(rng):
    pts = rng.normal(size=(500, 3))
    idx = build_index(PointCloud(points=pts))
    for k in (1, 3, 16):
        for _ in range(50):
            q = rng.normal(size=3) * 1.5
            ids, dists = k_nearest(idx, q, k)
            ref_ids, ref_d = brute_force_k_nearest(pts, q, k)
            np.testing.assert_array_equal(ids, ref_ids)
            np.testing.assert_array_equal(dists, ref_d)


def test_batch_matches_single(rng):
    pts = rng.normal(size=(300, 3))
    idx = build_index(PointCloud(points=pts))
    queries = rng.normal(size=(64, 3))
    ids, dists = k_nearest_batch(idx, queries, 3)
    for m in range(len(queries)):
        si, sd = k_nearest(idx, queries[m], 3)
        np.testing.assert_array_equal(ids[m], si)
        np.testing.assert_array_equal(dists[m], sd)


def test_batch_with_duplicated_points_tie_rule():
    # duplicated coordinates force exact distance ties at the k boundary
    pts = np.array([[0, 0, 0], [1, 0, 0], [1, 0, 0], [1, 0, 0], [2, 0, 0]], dtype=float)
    idx = build_index(PointCloud(points=pts))
    ids, dists = k_nearest_batch(idx, np.array([[0.9, 0.0, 0.0]]), 2)
    assert ids[0].tolist() == [1, 2]
    ref_ids, _ = brute_force_k_nearest(pts, np.array([0.9, 0.0, 0.0]), 2)
    np.testing.assert_array_equal(ids[0], ref_ids)


def test_k_out_of_range(rng):
    idx = build_index(PointCloud(points=rng.normal(size=(5, 3))))
    with pytest.raises(ValueError):
        k_nearest(idx, np.zeros(3), 6)
    with pytest.raises(ValueError):
        k_nearest(idx, np.zeros(3), 0)


def test_nearest_points_helper(rng):
    pts = rng.normal(size=(100, 3))
    idx = build_index(PointCloud(points=pts))
    queries = rng.normal(size=(20, 3))
    ids, dists = nearest_points(idx, queries)
    for m, q in enumerate(queries):
        ref_ids, ref_d = brute_force_k_nearest(pts, q, 1)
        assert ids[m] == ref_ids[0]
        assert dists[m] == ref_d[0]


def test_feature_row_count_checked(rng):
    with pytest.raises(ValueError):
        PointCloud(points=rng.normal(size=(4, 3)), features=rng.normal(size=(3, 8)))


def test_query_does_not_mutate_index(rng):
    pts = rng.normal(size=(50, 3))
    idx = build_index(PointCloud(points=pts))
    before = idx.points.copy()
    k_nearest(idx, rng.normal(size=3), 5)
    np.testing.assert_array_equal(idx.points, before)
