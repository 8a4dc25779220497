"""Seeded sampling of planar Poisson point processes and Boolean hole models.

All sampling is a pure function of (parameters, seed).  Point
configurations are stored sorted by ascending abscissa (ties by ordinate)
inside a half-open window, which every downstream module relies on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .seeding import make_rng


@dataclass(frozen=True)
class Window:
    """Axis-aligned sampling window, half-open in both axes: [x_min, x_max) x [y_min, y_max)."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"degenerate window {self}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    def dilated(self, margin: float) -> "Window":
        """Window grown by ``margin`` in every direction."""
        return Window(self.x_min - margin, self.x_max + margin,
                      self.y_min - margin, self.y_max + margin)

    def contains(self, x, y):
        """Half-open membership test; broadcasts over arrays."""
        return (x >= self.x_min) & (x < self.x_max) & (y >= self.y_min) & (y < self.y_max)


@dataclass(eq=False)
class PointSet:
    """A sampled planar configuration.

    ``points`` is an (n, 2) float64 array, sorted by ascending abscissa
    with ties broken by ascending ordinate.  Every point lies inside the
    half-open window and no two points coincide.
    """

    window: Window
    points: np.ndarray
    intensity: float
    seed: int

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=np.float64))
        if pts.size == 0:
            pts = pts.reshape(0, 2)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"points must be an (n, 2) array, got shape {pts.shape}")
        x, y = pts[:, 0], pts[:, 1]
        if not np.all(self.window.contains(x, y)):
            raise ValueError("point outside the half-open window")
        if len(pts) > 1:
            dx = np.diff(x)
            dy = np.diff(y)
            ordered = (dx > 0) | ((dx == 0) & (dy > 0))
            if not np.all(ordered):
                raise ValueError("points not sorted by (x, y), or duplicate point present")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_points(cls, window: Window, coords, intensity: float = 1.0,
                    seed: int = 0) -> "PointSet":
        """Build a PointSet from unsorted coordinates (stable (x, y) sort)."""
        pts = np.asarray(coords, dtype=np.float64)
        if pts.size == 0:
            pts = pts.reshape(0, 2)
        order = np.lexsort((pts[:, 1], pts[:, 0]))
        return cls(window=window, points=pts[order], intensity=intensity, seed=seed)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.points[:, 1]


@dataclass(eq=False)
class BooleanModel:
    """Union of closed discs of fixed radius around Poisson germs.

    Germs are sampled on the stated window, which is the target window
    dilated by the radius so grains overlapping the boundary are
    represented.
    """

    germs: np.ndarray
    germ_intensity: float
    radius: float
    seed: int
    window: Window

    def __post_init__(self):
        germs = np.ascontiguousarray(np.asarray(self.germs, dtype=np.float64))
        if germs.size == 0:
            germs = germs.reshape(0, 2)
        if germs.ndim != 2 or germs.shape[1] != 2:
            raise ValueError(f"germs must be an (n, 2) array, got shape {germs.shape}")
        if self.radius <= 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if len(germs) and not np.all(self.window.contains(germs[:, 0], germs[:, 1])):
            raise ValueError("germ outside the dilated sampling window")
        germs.setflags(write=False)
        object.__setattr__(self, "germs", germs)

    def __len__(self) -> int:
        return len(self.germs)


def _sample_uniform(window: Window, mean_count: float, rng: np.random.Generator) -> np.ndarray:
    count = int(rng.poisson(mean_count))
    xs = rng.uniform(window.x_min, window.x_max, size=count)
    ys = rng.uniform(window.y_min, window.y_max, size=count)
    return np.column_stack([xs, ys])


def sample_ppp(window: Window, intensity: float, seed: int) -> PointSet:
    """Sample a homogeneous Poisson point process on ``window``.

    The count is Poisson with mean ``intensity * window.area`` (numpy's
    PCG64 Poisson sampler: inversion at small means, transformed
    rejection above); positions are independent uniforms.  Identical
    (window, intensity, seed) inputs reproduce identical output.
    """
    if intensity <= 0:
        raise ValueError(f"intensity must be positive, got {intensity}")
    rng = make_rng(seed)
    pts = _sample_uniform(window, intensity * window.area, rng)
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    return PointSet(window=window, points=pts[order], intensity=intensity, seed=seed)


def sample_boolean(window: Window, lam: float, r: float, seed: int) -> BooleanModel:
    """Sample Poisson germs of intensity ``lam`` on ``window`` dilated by ``r``.

    Any germ farther than ``r`` from the window cannot cover an in-window
    point, so dilation by exactly ``r`` suffices.
    """
    if lam <= 0:
        raise ValueError(f"germ intensity must be positive, got {lam}")
    if r <= 0:
        raise ValueError(f"radius must be positive, got {r}")
    dilated = window.dilated(r)
    rng = make_rng(seed)
    germs = _sample_uniform(dilated, lam * dilated.area, rng)
    return BooleanModel(germs=germs, germ_intensity=lam, radius=r, seed=seed, window=dilated)


def remove_covered(points: PointSet, holes: BooleanModel) -> PointSet:
    """Drop every point within distance <= radius of some germ (closed grains).

    A point exactly on a grain boundary is covered and removed.  Order of
    the surviving points is preserved, so all PointSet invariants hold.
    """
    if holes.radius <= 0:
        raise ValueError("holes must have positive radius")
    if len(points) == 0 or len(holes) == 0:
        return points
    dist, _ = cKDTree(holes.germs).query(points.points)
    keep = dist > holes.radius
    return PointSet(window=points.window, points=points.points[keep],
                    intensity=points.intensity, seed=points.seed)


def save_point_set(points: PointSet, csv_path) -> None:
    """Write points as ``x,y`` CSV plus a metadata JSON sidecar."""
    csv_path = Path(csv_path)
    lines = ["x,y"]
    for px, py in points.points:
        lines.append(f"{px:.17g},{py:.17g}")
    csv_path.write_text("\n".join(lines) + "\n")
    meta = {
        "x_min": points.window.x_min,
        "x_max": points.window.x_max,
        "y_min": points.window.y_min,
        "y_max": points.window.y_max,
        "intensity": points.intensity,
        "seed": points.seed,
    }
    sidecar_path(csv_path).write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")


def sidecar_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".json")


def load_point_set(csv_path) -> PointSet:
    """Inverse of :func:`save_point_set`."""
    csv_path = Path(csv_path)
    meta = json.loads(sidecar_path(csv_path).read_text())
    window = Window(meta["x_min"], meta["x_max"], meta["y_min"], meta["y_max"])
    rows = csv_path.read_text().strip().splitlines()
    if rows[0] != "x,y":
        raise ValueError(f"unexpected point CSV header: {rows[0]!r}")
    coords = [tuple(map(float, row.split(","))) for row in rows[1:]]
    pts = np.array(coords, dtype=np.float64).reshape(len(coords), 2)
    return PointSet(window=window, points=pts, intensity=meta["intensity"], seed=meta["seed"])
