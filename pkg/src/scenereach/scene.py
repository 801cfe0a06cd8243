"""Synthetic scenes: axis-aligned box clutter with an analytic signed
distance, surface point-cloud sampling, and floor navigability.

Boxes are kept disjoint by the generators, which makes the min-over-boxes
signed distance exact and gives every collision metric an analytic oracle.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .kdtree import PointCloud
from .validation import as_float_array, check_finite

SCENE_FORMAT_VERSION = 1


@dataclass
class Box:
    """Axis-aligned box, meters."""

    min_corner: np.ndarray
    max_corner: np.ndarray

    def __post_init__(self):
        self.min_corner = as_float_array(self.min_corner, "min_corner", (3,))
        self.max_corner = as_float_array(self.max_corner, "max_corner", (3,))
        if not np.all(self.max_corner > self.min_corner):
            raise ValueError("box must have positive volume")

    @property
    def size(self) -> np.ndarray:
        return self.max_corner - self.min_corner

    def signed_distance(self, p: np.ndarray) -> np.ndarray:
        """Exact SDF of one box for points (..., 3)."""
        p = np.asarray(p, dtype=np.float64)
        q = np.maximum(self.min_corner - p, p - self.max_corner)
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
        inside = np.minimum(np.max(q, axis=-1), 0.0)
        return outside + inside

    def overlaps(self, other: "Box", margin: float = 0.0) -> bool:
        return bool(np.all(self.max_corner + margin > other.min_corner)
                    and np.all(other.max_corner + margin > self.min_corner))

    def to_dict(self) -> dict:
        return {"min": self.min_corner.tolist(), "max": self.max_corner.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Box":
        return cls(d["min"], d["max"])


@dataclass
class NavigableGrid:
    """Boolean occupancy grid of standable floor cells."""

    origin: np.ndarray           # (2,) x/y of the grid corner
    cell_size: float
    free: np.ndarray             # (ny, nx) bool

    def __post_init__(self):
        self.origin = as_float_array(self.origin, "origin", (2,))
        self.free = np.asarray(self.free, dtype=bool)
        if self.free.ndim != 2:
            raise ValueError("free mask must be 2-d")
        self._free_rects = None

    def cell_center(self, iy: int, ix: int) -> np.ndarray:
        return self.origin + (np.array([ix, iy]) + 0.5) * self.cell_size

    def cell_of(self, xy) -> tuple[int, int]:
        xy = np.asarray(xy, dtype=np.float64)
        ix = int(np.floor((xy[0] - self.origin[0]) / self.cell_size))
        iy = int(np.floor((xy[1] - self.origin[1]) / self.cell_size))
        return iy, ix

    def in_bounds(self, iy: int, ix: int) -> bool:
        return 0 <= iy < self.free.shape[0] and 0 <= ix < self.free.shape[1]

    def is_free(self, xy) -> bool:
        iy, ix = self.cell_of(xy)
        return self.in_bounds(iy, ix) and bool(self.free[iy, ix])

    def _rects(self) -> tuple[np.ndarray, np.ndarray]:
        # cached (n_free, 2) low corners and high corners of free cells
        if self._free_rects is None:
            iy, ix = np.nonzero(self.free)
            lo = self.origin + np.stack([ix, iy], axis=1) * self.cell_size
            self._free_rects = (lo, lo + self.cell_size)
        return self._free_rects

    def horizontal_distance(self, xy) -> float:
        """Distance from (x, y) to the free region (0 inside a free cell)."""
        xy = np.asarray(xy, dtype=np.float64)[:2]
        lo, hi = self._rects()
        if lo.shape[0] == 0:
            return float("inf")
        d = np.maximum(np.maximum(lo - xy, xy - hi), 0.0)
        return float(np.min(np.hypot(d[:, 0], d[:, 1])))

    def free_cells(self) -> np.ndarray:
        """(n_free, 2) array of (iy, ix) indices."""
        return np.argwhere(self.free)

    def to_dict(self) -> dict:
        return {
            "origin": self.origin.tolist(),
            "cell_size": float(self.cell_size),
            "rows": ["".join("1" if v else "0" for v in row) for row in self.free],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NavigableGrid":
        free = np.array([[c == "1" for c in row] for row in d["rows"]], dtype=bool)
        return cls(origin=d["origin"], cell_size=float(d["cell_size"]), free=free)


@dataclass
class SceneModel:
    """Boxes + floor + navigable region + lazily sampled surface cloud."""

    boxes: list[Box]
    floor_height: float = 0.0
    navigable: NavigableGrid | None = None
    cloud_seed: int = 0
    cloud_size: int = 2048
    scene_id: str = ""
    _cloud: PointCloud | None = field(default=None, repr=False, compare=False)

    def signed_distance(self, p) -> np.ndarray | float:
        """Union SDF over boxes: negative inside any box, +inf for no boxes."""
        p = np.asarray(p, dtype=np.float64)
        check_finite(p, "point")
        scalar = p.ndim == 1
        if not self.boxes:
            out = np.full(p.shape[:-1], np.inf)
            return float(out) if scalar else out
        d = np.stack([b.signed_distance(p) for b in self.boxes], axis=0).min(axis=0)
        return float(d) if scalar else d

    def point_cloud(self) -> PointCloud:
        if self._cloud is None:
            self._cloud = sample_point_cloud(self, self.cloud_size, self.cloud_seed)
        return self._cloud

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        if self.boxes:
            lo = np.min([b.min_corner for b in self.boxes], axis=0)
            hi = np.max([b.max_corner for b in self.boxes], axis=0)
        else:
            lo = hi = np.zeros(3)
        if self.navigable is not None:
            glo, ghi = self.navigable._rects()[0].min(axis=0), self.navigable._rects()[1].max(axis=0)
            lo = np.minimum(lo, [glo[0], glo[1], self.floor_height])
            hi = np.maximum(hi, [ghi[0], ghi[1], self.floor_height])
        return lo, hi

    def to_dict(self) -> dict:
        return {
            "version": SCENE_FORMAT_VERSION,
            "scene_id": self.scene_id,
            "floor_height": float(self.floor_height),
            "boxes": [b.to_dict() for b in self.boxes],
            "navigable": None if self.navigable is None else self.navigable.to_dict(),
            "cloud_seed": int(self.cloud_seed),
            "cloud_size": int(self.cloud_size),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SceneModel":
        if d.get("version") != SCENE_FORMAT_VERSION:
            raise ValueError(f"scene file: unsupported version {d.get('version')!r}")
        nav = d.get("navigable")
        return cls(
            boxes=[Box.from_dict(b) for b in d["boxes"]],
            floor_height=float(d.get("floor_height", 0.0)),
            navigable=None if nav is None else NavigableGrid.from_dict(nav),
            cloud_seed=int(d.get("cloud_seed", 0)),
            cloud_size=int(d.get("cloud_size", 2048)),
            scene_id=d.get("scene_id", ""),
        )

    def save(self, path: str | Path) -> None:
        from .io import atomic_write_text
        atomic_write_text(path, json.dumps(self.to_dict(), indent=2, sort_keys=True))

    @classmethod
    def load(cls, path: str | Path) -> "SceneModel":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def sample_point_cloud(scene: SceneModel, n: int, seed: int,
                       include_floor: bool = False) -> PointCloud:
    """n points, area-weighted uniform over box faces (optionally the floor).

    Deterministic given the seed. Points sampled from box faces satisfy
    |signed_distance| = 0 up to float rounding.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    faces = []   # (origin, edge_u, edge_v, area)
    for box in scene.boxes:
        lo, hi = box.min_corner, box.max_corner
        size = box.size
        for axis in range(3):
            u, v = (axis + 1) % 3, (axis + 2) % 3
            area = size[u] * size[v]
            for fixed in (lo[axis], hi[axis]):
                origin = lo.copy()
                origin[axis] = fixed
                eu = np.zeros(3)
                eu[u] = size[u]
                ev = np.zeros(3)
                ev[v] = size[v]
                faces.append((origin, eu, ev, area))
    if include_floor and scene.navigable is not None:
        lo_r, hi_r = scene.navigable._rects()
        origin = np.array([lo_r[:, 0].min(), lo_r[:, 1].min(), scene.floor_height])
        extent = np.array([hi_r[:, 0].max(), hi_r[:, 1].max()]) - origin[:2]
        faces.append((origin, np.array([extent[0], 0, 0]), np.array([0, extent[1], 0]),
                      extent[0] * extent[1]))
    if not faces:
        raise ValueError("scene has no surface to sample")

    areas = np.array([f[3] for f in faces])
    if areas.sum() <= 0:
        raise ValueError("scene has zero surface area")
    rng = np.random.default_rng(seed)
    choice = rng.choice(len(faces), size=n, p=areas / areas.sum())
    uv = rng.random((n, 2))
    pts = np.empty((n, 3))
    for i, f in enumerate(choice):
        origin, eu, ev, _ = faces[f]
        pts[i] = origin + uv[i, 0] * eu + uv[i, 1] * ev
    return PointCloud(points=pts)


def is_reachable(scene: SceneModel, goal, max_surface_dist: float = 1.0) -> bool:
    """A goal is reachable unless it is inside geometry or too far from
    the navigable region (horizontal distance)."""
    goal = as_float_array(goal, "goal", (3,))
    check_finite(goal, "goal")
    if scene.signed_distance(goal) < 0.0:
        return False
    if scene.navigable is None:
        return True
    return scene.navigable.horizontal_distance(goal[:2]) <= max_surface_dist


def build_navigable_grid(boxes: list[Box], floor_height: float,
                         x_range: tuple[float, float], y_range: tuple[float, float],
                         cell_size: float = 0.1, inflate: float = 0.2,
                         clearance: tuple[float, float] = (0.05, 1.5)) -> NavigableGrid:
    """Mark floor cells standable: no (inflated) box overlapping the
    body-height clearance band above the cell center."""
    nx = max(1, int(round((x_range[1] - x_range[0]) / cell_size)))
    ny = max(1, int(round((y_range[1] - y_range[0]) / cell_size)))
    origin = np.array([x_range[0], y_range[0]])
    xs = origin[0] + (np.arange(nx) + 0.5) * cell_size
    ys = origin[1] + (np.arange(ny) + 0.5) * cell_size
    gx, gy = np.meshgrid(xs, ys)
    free = np.ones((ny, nx), dtype=bool)
    z_lo, z_hi = floor_height + clearance[0], floor_height + clearance[1]
    for box in boxes:
        if box.max_corner[2] <= z_lo or box.min_corner[2] >= z_hi:
            continue
        hit = ((gx >= box.min_corner[0] - inflate) & (gx <= box.max_corner[0] + inflate)
               & (gy >= box.min_corner[1] - inflate) & (gy <= box.max_corner[1] + inflate))
        free &= ~hit
    return NavigableGrid(origin=origin, cell_size=cell_size, free=free)
