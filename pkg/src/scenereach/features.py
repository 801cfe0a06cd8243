"""Per-frame scene features.

Two pathways produce the 256-dim scene feature consumed by the refiner:

* basis-point-set: offsets from the body surface vertices and from a
  fixed cylinder of basis points to their nearest scene points, flattened
  and compressed by a small trainable MLP head;
* point-feature interpolation: inverse-distance interpolation of
  per-point scene features at the body vertices and at the scene points
  nearest the basis points, mean-pooled and concatenated.

Encoders follow the fit/transform idiom: ``fit(scene)`` builds the
spatial index, ``transform(sequence)`` emits the per-frame rows the model
consumes (raw offsets for the BPS pathway, final features otherwise).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from sklearn.base import BaseEstimator
from torch import nn

from .kdtree import KdIndex, PointCloud, build_index, k_nearest_batch, nearest_points
from .motion import MotionSequence
from .scene import SceneModel
from .skeleton import Skeleton
from .surface import VERTEX_COUNT, body_surface_vertices_batch
from .validation import as_float_array

BASIS_COUNT = 1024
BASIS_RADIUS = 0.6
BASIS_HEIGHT = 2.0
FEATURE_DIM = 256
POINT_FEATURE_DIM = 128
BPS_RAW_DIM = (VERTEX_COUNT + BASIS_COUNT) * 3  # 5169
EXACT_HIT_DIST = 1e-9


@dataclass
class CylinderBasis:
    """Fixed basis points sampled uniformly inside a vertical cylinder,
    stored centered on the cylinder's own axis midpoint."""

    points: np.ndarray        # (n, 3), local: |xy| <= radius, z in [-h/2, h/2]
    radius: float = BASIS_RADIUS
    height: float = BASIS_HEIGHT
    seed: int = 0

    @classmethod
    def sample(cls, seed: int = 0, n: int = BASIS_COUNT, radius: float = BASIS_RADIUS,
               height: float = BASIS_HEIGHT) -> "CylinderBasis":
        rng = np.random.default_rng(seed)
        pts = np.empty((0, 3))
        while pts.shape[0] < n:
            cand = rng.uniform([-radius, -radius, -height / 2],
                               [radius, radius, height / 2], size=(2 * n, 3))
            keep = cand[:, 0] ** 2 + cand[:, 1] ** 2 <= radius ** 2
            pts = np.concatenate([pts, cand[keep]])
        return cls(points=pts[:n], radius=radius, height=height, seed=seed)

    def place(self, root_xy) -> np.ndarray:
        """World points with the cylinder axis through (x, y), heights [0, h]."""
        root_xy = np.asarray(root_xy, dtype=np.float64)
        return self.points + np.array([root_xy[0], root_xy[1], self.height / 2])

    def place_batch(self, roots_xy: np.ndarray) -> np.ndarray:
        """(T, 2) root positions -> (T, n, 3) placed basis points."""
        roots_xy = as_float_array(roots_xy, "roots_xy", (-1, 2))
        offs = np.concatenate([roots_xy, np.full((len(roots_xy), 1), self.height / 2)], axis=1)
        return self.points[None, :, :] + offs[:, None, :]


def place_basis(basis: CylinderBasis, root_xy) -> np.ndarray:
    return basis.place(root_xy)


def nn_differences(queries: np.ndarray, index: KdIndex) -> np.ndarray:
    """Row i = nearest scene point minus query i; |row i| is the NN distance."""
    queries = as_float_array(queries, "queries", (-1, 3))
    idx, _ = nearest_points(index, queries)
    return index.points[idx] - queries


def interpolate_features(queries: np.ndarray, index: KdIndex,
                         n_neighbors: int = 3) -> np.ndarray:
    """Inverse-distance-weighted interpolation of per-point features.

    For each query e the feature is sum_i w_i F(p_i) / sum_i w_i over its
    n nearest points with w_i = 1 / |p_i - e|. A query within 1e-9 of a
    scene point returns that point's feature row exactly.
    """
    if index.cloud.features is None:
        raise ValueError("point cloud has no features to interpolate")
    queries = as_float_array(queries, "queries", (-1, 3))
    feats = index.cloud.features
    idx, dist = k_nearest_batch(index, queries, n_neighbors)
    out = np.empty((len(queries), feats.shape[1]))
    exact = dist[:, 0] < EXACT_HIT_DIST
    if np.any(exact):
        out[exact] = feats[idx[exact, 0]]
    rest = ~exact
    if np.any(rest):
        w = 1.0 / dist[rest]
        w /= w.sum(axis=1, keepdims=True)
        out[rest] = np.einsum("mk,mkf->mf", w, feats[idx[rest]])
    return out


def interpolate_feature(e, index: KdIndex, n_neighbors: int = 3) -> np.ndarray:
    """Single-query convenience wrapper around :func:`interpolate_features`."""
    e = as_float_array(e, "query", (3,))
    return interpolate_features(e[None, :], index, n_neighbors)[0]


class RandomFourierFeatureProvider:
    """Synthetic per-point feature source: smooth, geometry-dependent rows
    cos(p @ W + b) with a fixed seed. Stands in for an external model that
    would normally label the scene cloud."""

    def __init__(self, seed: int = 0, dim: int = POINT_FEATURE_DIM, length_scale: float = 0.5):
        self.seed = int(seed)
        self.dim = int(dim)
        self.length_scale = float(length_scale)
        rng = np.random.default_rng(self.seed)
        self._w = rng.normal(size=(3, self.dim)) / self.length_scale
        self._b = rng.uniform(0.0, 2.0 * np.pi, size=self.dim)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        points = as_float_array(points, "points", (-1, 3))
        return np.cos(points @ self._w + self._b)

    def to_dict(self) -> dict:
        return {"kind": "random-fourier", "seed": self.seed, "dim": self.dim,
                "length_scale": self.length_scale}

    @classmethod
    def from_dict(cls, d: dict) -> "RandomFourierFeatureProvider":
        return cls(seed=d["seed"], dim=d["dim"], length_scale=d["length_scale"])


class BpsHead(nn.Module):
    """MLP compressing the concatenated nearest-neighbor offsets to the
    256-dim scene feature."""

    def __init__(self, in_dim: int = BPS_RAW_DIM, hidden: int = 512,
                 out_dim: int = FEATURE_DIM):
        super().__init__()
        self.fc1 = nn.Linear(in_dim, hidden)
        self.fc2 = nn.Linear(hidden, out_dim)

    def forward(self, raw: torch.Tensor) -> torch.Tensor:
        return self.fc2(torch.relu(self.fc1(raw)))


def bps_raw_vector(pose_vertices: np.ndarray, basis_world: np.ndarray,
                   index: KdIndex) -> np.ndarray:
    """Concatenated offsets [d(vertices, S); d(basis, S)], flattened to 5169."""
    pose_vertices = as_float_array(pose_vertices, "pose_vertices", (-1, 3))
    basis_world = as_float_array(basis_world, "basis_world", (-1, 3))
    dv = nn_differences(pose_vertices, index)
    db = nn_differences(basis_world, index)
    return np.concatenate([dv.ravel(), db.ravel()])


def encode_bps(pose_vertices, basis_world, index: KdIndex, head: BpsHead) -> np.ndarray:
    """256-dim BPS scene feature for one frame (no gradient tracking)."""
    raw = bps_raw_vector(pose_vertices, basis_world, index)
    with torch.no_grad():
        dtype = head.fc1.weight.dtype
        out = head(torch.from_numpy(raw).to(dtype))
    return out.double().numpy()


def encode_bps_torch(pose_vertices: torch.Tensor, basis_world, index: KdIndex,
                     head: BpsHead) -> torch.Tensor:
    """Differentiable path: gradients flow to the head parameters and to
    ``pose_vertices`` (nearest-neighbor assignment held fixed)."""
    verts_np = pose_vertices.detach().cpu().double().numpy()
    basis_world = as_float_array(basis_world, "basis_world", (-1, 3))
    vi, _ = nearest_points(index, verts_np)
    bi, _ = nearest_points(index, basis_world)
    dtype = pose_vertices.dtype
    scene_pts = torch.from_numpy(index.points).to(dtype)
    dv = scene_pts[vi] - pose_vertices
    db = (torch.from_numpy(index.points[bi] - basis_world)).to(dtype)
    raw = torch.cat([dv.reshape(-1), db.reshape(-1)])
    return head(raw)


def encode_pointfeat(pose_vertices, basis_world, index: KdIndex) -> np.ndarray:
    """256-dim feature: mean interpolated feature over the body vertices,
    concatenated with the mean over the scene points nearest the basis."""
    pose_vertices = as_float_array(pose_vertices, "pose_vertices", (-1, 3))
    basis_world = as_float_array(basis_world, "basis_world", (-1, 3))
    fh = interpolate_features(pose_vertices, index).mean(axis=0)
    bi, _ = nearest_points(index, basis_world)
    fc = interpolate_features(index.points[bi], index).mean(axis=0)
    return np.concatenate([fh, fc])


class SceneEncoderBase(BaseEstimator):
    """Shared fit/transform plumbing for the scene encoders."""

    kind = "none"
    raw_dim = FEATURE_DIM
    needs_head = False

    def __init__(self, skeleton: Skeleton | None = None):
        self.skeleton = skeleton

    def _skeleton(self) -> Skeleton:
        return self.skeleton if self.skeleton is not None else Skeleton.from_template()

    def fit(self, scene: SceneModel):
        return self

    def transform(self, seq: MotionSequence) -> np.ndarray:
        raise NotImplementedError

    def fit_transform(self, scene: SceneModel, seq: MotionSequence) -> np.ndarray:
        return self.fit(scene).transform(seq)


class NullSceneEncoder(SceneEncoderBase):
    """The no-scene ablation: a zero feature vector every frame."""

    kind = "none"

    def transform(self, seq: MotionSequence) -> np.ndarray:
        return np.zeros((len(seq), FEATURE_DIM))


class BpsSceneEncoder(SceneEncoderBase):
    """Raw nearest-neighbor offset rows; the model's head maps them to 256."""

    kind = "bps"
    raw_dim = BPS_RAW_DIM
    needs_head = True

    def __init__(self, skeleton: Skeleton | None = None, basis_seed: int = 0,
                 n_basis: int = BASIS_COUNT):
        super().__init__(skeleton)
        self.basis_seed = basis_seed
        self.n_basis = n_basis
        self.basis_ = CylinderBasis.sample(seed=basis_seed, n=n_basis)

    def set_basis(self, basis: CylinderBasis):
        self.basis_ = basis
        return self

    def fit(self, scene: SceneModel):
        self.index_ = build_index(scene.point_cloud())
        return self

    def transform(self, seq: MotionSequence) -> np.ndarray:
        skeleton = self._skeleton()
        T = len(seq)
        verts = body_surface_vertices_batch(skeleton, seq)
        basis = self.basis_.place_batch(seq.roots[:, :2])
        dv = nn_differences(verts.reshape(-1, 3), self.index_).reshape(T, -1)
        db = nn_differences(basis.reshape(-1, 3), self.index_).reshape(T, -1)
        return np.concatenate([dv, db], axis=1)


class PointFeatureSceneEncoder(SceneEncoderBase):
    """Final 256-dim features from inverse-distance feature interpolation."""

    kind = "pointfeat"
    raw_dim = FEATURE_DIM

    def __init__(self, skeleton: Skeleton | None = None, basis_seed: int = 0,
                 n_basis: int = BASIS_COUNT, provider_seed: int = 0):
        super().__init__(skeleton)
        self.basis_seed = basis_seed
        self.n_basis = n_basis
        self.provider_seed = provider_seed
        self.basis_ = CylinderBasis.sample(seed=basis_seed, n=n_basis)
        self.provider_ = RandomFourierFeatureProvider(seed=provider_seed)

    def set_basis(self, basis: CylinderBasis):
        self.basis_ = basis
        return self

    def fit(self, scene: SceneModel):
        cloud = scene.point_cloud()
        self.index_ = build_index(PointCloud(points=cloud.points,
                                             features=self.provider_(cloud.points)))
        return self

    def transform(self, seq: MotionSequence) -> np.ndarray:
        skeleton = self._skeleton()
        T = len(seq)
        verts = body_surface_vertices_batch(skeleton, seq)
        basis = self.basis_.place_batch(seq.roots[:, :2])
        fh = interpolate_features(verts.reshape(-1, 3), self.index_)
        fh = fh.reshape(T, VERTEX_COUNT, -1).mean(axis=1)
        bi, _ = nearest_points(self.index_, basis.reshape(-1, 3))
        fc = interpolate_features(self.index_.points[bi], self.index_)
        fc = fc.reshape(T, self.n_basis, -1).mean(axis=1)
        return np.concatenate([fh, fc], axis=1)


def make_encoder(kind: str, skeleton: Skeleton | None = None, basis_seed: int = 0,
                 provider_seed: int = 0) -> SceneEncoderBase:
    if kind == "bps":
        return BpsSceneEncoder(skeleton=skeleton, basis_seed=basis_seed)
    if kind == "pointfeat":
        return PointFeatureSceneEncoder(skeleton=skeleton, basis_seed=basis_seed,
                                        provider_seed=provider_seed)
    if kind == "none":
        return NullSceneEncoder(skeleton=skeleton)
    raise ValueError(f"unknown encoder kind {kind!r} (want bps|pointfeat|none)")
