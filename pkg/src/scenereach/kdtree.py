"""Exact nearest-neighbor queries over scene point clouds.

The index is a thin wrapper over a k-d tree with a strict contract: the
k nearest points by exact Euclidean distance, ascending, ties broken by
the lower point index. Results are defined to match an exhaustive scan
bit-for-bit, so the encodings built on top stay reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .validation import as_float_array, check_finite


@dataclass
class PointCloud:
    """N points with optional per-point feature rows."""

    points: np.ndarray                 # (N, 3)
    features: np.ndarray | None = None  # (N, F)

    def __post_init__(self):
        self.points = as_float_array(self.points, "points", (-1, 3))
        check_finite(self.points, "points")
        if self.points.shape[0] < 1:
            raise ValueError("point cloud must contain at least one point")
        if self.features is not None:
            self.features = as_float_array(self.features, "features", (-1, -1))
            if self.features.shape[0] != self.points.shape[0]:
                raise ValueError(
                    f"feature rows ({self.features.shape[0]}) != points ({self.points.shape[0]})")

    def __len__(self) -> int:
        return self.points.shape[0]


class KdIndex:
    """Immutable spatial index over a :class:`PointCloud`."""

    def __init__(self, cloud: PointCloud):
        if len(cloud) < 1:
            raise ValueError("cannot index an empty cloud")
        self.cloud = cloud
        self._tree = cKDTree(cloud.points)

    def __len__(self) -> int:
        return len(self.cloud)

    @property
    def points(self) -> np.ndarray:
        return self.cloud.points


def build_index(cloud: PointCloud) -> KdIndex:
    return KdIndex(cloud)


def _exact_distances(points: np.ndarray, query: np.ndarray) -> np.ndarray:
    # The reference distance formula; sqrt of the coordinate-order sum of squares.
    diff = points - query
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def k_nearest(index: KdIndex, query, k: int) -> tuple[np.ndarray, np.ndarray]:
    """The k nearest points to ``query``.

    Returns:
        (indices, distances), distance-ascending, equal distances ordered
        by point index.

    Raises:
        ValueError: if k is out of range.
    """
    query = as_vec3_query(query)
    n = len(index)
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")

    # Over-query by one so a tie straddling the k boundary is visible.
    kq = min(k + 1, n)
    dist, idx = index._tree.query(query, k=kq)
    dist = np.atleast_1d(dist)
    idx = np.atleast_1d(idx)

    if kq > k and dist[k] <= dist[k - 1]:
        # Boundary tie: gather every point within the kth distance and
        # resolve deterministically.
        r = dist[k - 1] * (1.0 + 1e-12) + 1e-300
        cand = np.asarray(index._tree.query_ball_point(query, r), dtype=np.int64)
    else:
        cand = idx[:k]
    d = _exact_distances(index.points[cand], query)
    order = np.lexsort((cand, d))[:k]
    return cand[order], d[order]


def k_nearest_batch(index: KdIndex, queries: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`k_nearest` over (M, 3) queries -> (M, k) index/distance arrays."""
    queries = as_float_array(queries, "queries", (-1, 3))
    n = len(index)
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")

    kq = min(k + 1, n)
    dist, idx = index._tree.query(queries, k=kq)
    dist = dist.reshape(len(queries), kq)
    idx = idx.reshape(len(queries), kq)

    out_idx = idx[:, :k].copy()
    out_dist = np.empty((len(queries), k))
    # Re-rank by the reference distance formula with the index tie rule.
    diffs = index.points[out_idx] - queries[:, None, :]
    d = np.sqrt(np.einsum("mkj,mkj->mk", diffs, diffs))
    for m in range(len(queries)):
        if kq > k and dist[m, k] <= dist[m, k - 1]:
            row_idx, row_d = k_nearest(index, queries[m], k)
            out_idx[m], out_dist[m] = row_idx, row_d
        else:
            order = np.lexsort((out_idx[m], d[m]))
            out_idx[m] = out_idx[m][order]
            out_dist[m] = d[m][order]
    return out_idx, out_dist


def nearest_points(index: KdIndex, queries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Single nearest neighbor for (M, 3) queries -> ((M,) indices, (M,) distances)."""
    idx, dist = k_nearest_batch(index, queries, 1)
    return idx[:, 0], dist[:, 0]


def as_vec3_query(query) -> np.ndarray:
    q = np.asarray(query, dtype=np.float64)
    if q.shape != (3,):
        raise ValueError(f"query: expected shape (3,), got {q.shape}")
    check_finite(q, "query")
    return q


def brute_force_k_nearest(points: np.ndarray, query: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Exhaustive-scan reference: sort by (distance, index), take k."""
    d = _exact_distances(np.asarray(points, dtype=np.float64), np.asarray(query, dtype=np.float64))
    order = np.lexsort((np.arange(len(d)), d))[:k]
    return order, d[order]
