"""Directed spanning forest construction, path tracing and coalescence.

Each point's ancestor is its nearest neighbor with strictly larger
abscissa, so abscissae increase strictly along every path and the parent
relation is acyclic.  An edge is *certified* when the closed right
half-disc spanned by the edge lies inside the sampling window: only then
is the edge guaranteed to coincide with the infinite-plane construction,
and all headline statistics restrict themselves to certified edges.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path as FsPath

import numpy as np

from .point_process import PointSet
from .spatial_index import HalfPlaneIndex

DEFAULT_MAX_STEPS = 10 ** 6


class InvariantViolation(RuntimeError):
    """A deterministic model invariant failed; always a bug, never noise."""


@dataclass(eq=False)
class Forest:
    """Parent table over point indices with boundary-certification flags.

    ``parent[i]`` is -1 when point ``i`` has no strictly-right neighbor.
    ``dist[i]`` is the edge length (nan when no parent).
    """

    source: PointSet
    parent: np.ndarray
    dist: np.ndarray
    certified: np.ndarray

    def __post_init__(self):
        for arr in (self.parent, self.dist, self.certified):
            arr.setflags(write=False)
        self._children_start = None
        self._children_flat = None
        self._depths = None

    def __len__(self) -> int:
        return len(self.source)

    def _build_children(self):
        n = len(self)
        valid = self.parent >= 0
        kids = np.nonzero(valid)[0]
        counts = np.bincount(self.parent[kids], minlength=n)
        order = np.argsort(self.parent[kids], kind="stable")
        self._children_flat = kids[order]
        self._children_start = np.concatenate([[0], np.cumsum(counts)])

    def children(self, i: int) -> np.ndarray:
        """Indices of points whose ancestor is ``i`` (ascending)."""
        if self._children_start is None:
            self._build_children()
        return self._children_flat[self._children_start[i]:self._children_start[i + 1]]

    def has_children(self) -> np.ndarray:
        if self._children_start is None:
            self._build_children()
        return np.diff(self._children_start) > 0


@dataclass
class Path:
    """A traced ancestor sequence; abscissae strictly increase along it.

    ``fully_certified`` is False when the trace stopped in front of an
    uncertified edge; ``truncated`` is True when the trace hit the window
    boundary (uncertified edge) or the step limit rather than ending at a
    point with no right neighbor.
    """

    vertices: list
    fully_certified: bool = True
    truncated: bool = False

    def __len__(self) -> int:
        return len(self.vertices)


@dataclass(frozen=True)
class Cell:
    """The rectangle [-m, m) x [-M, M), optionally translated by ``center``."""

    m: int
    M: int
    center: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.m < 1 or self.M < 1:
            raise ValueError(f"cell sides must be positive integers, got m={self.m}, M={self.M}")

    @property
    def x_lo(self) -> float:
        return self.center[0] - self.m

    @property
    def x_hi(self) -> float:
        return self.center[0] + self.m

    @property
    def y_lo(self) -> float:
        return self.center[1] - self.M

    @property
    def y_hi(self) -> float:
        return self.center[1] + self.M


@dataclass(frozen=True)
class DisjointClassCount:
    """Coalescence classes among traced starts at a vertical line."""

    x_line: float
    n_classes: int
    n_reached: int
    n_excluded: int


def build_dsf(points: PointSet) -> Forest:
    """Construct the forest: parent[i] = nearest strictly-right point of i.

    An edge of length d from point (x, y) is certified when
    x + d <= x_max, y + d <= y_max and y - d >= y_min, i.e. when no point
    outside the window could have been a closer right neighbor.  Points
    without a parent are never certified.
    """
    index = HalfPlaneIndex(points)
    n = len(points)
    parent, dist = index.query_sites(np.arange(n, dtype=np.int64))
    w = points.window
    with np.errstate(invalid="ignore"):
        certified = (
            (parent >= 0)
            & (points.x + dist <= w.x_max)
            & (points.y + dist <= w.y_max)
            & (points.y - dist >= w.y_min)
        )
    return Forest(source=points, parent=parent, dist=dist, certified=certified)


def trace_path(forest: Forest, start: int, max_steps: int = DEFAULT_MAX_STEPS) -> Path:
    """Follow ancestors from ``start`` along certified edges.

    Stops when the parent is absent, in front of an uncertified edge
    (fully_certified=False, truncated=True), or after ``max_steps`` edges
    (truncated=True).
    """
    n = len(forest)
    if not 0 <= start < n:
        raise IndexError(f"start index {start} out of range for {n} points")
    if max_steps < 1:
        raise ValueError("max_steps must be positive")
    parent = forest.parent
    certified = forest.certified
    x = forest.source.x
    vertices = [start]
    fully = True
    truncated = False
    v = start
    while True:
        p = int(parent[v])
        if p < 0:
            break
        if not certified[v]:
            fully = False
            truncated = True
            break
        if len(vertices) - 1 >= max_steps:
            truncated = True
            break
        if x[p] <= x[v]:
            raise InvariantViolation(f"abscissa not increasing along edge {v} -> {p}")
        vertices.append(p)
        v = p
    return Path(vertices=vertices, fully_certified=fully, truncated=truncated)


def coalescence_point(forest: Forest, i: int, j: int,
                      max_steps: int = DEFAULT_MAX_STEPS):
    """First common vertex of the certified paths from ``i`` and ``j``.

    Each path includes its start.  Returns the shared vertex with the
    smallest abscissa, or None when the certified prefixes are disjoint.
    """
    path_i = trace_path(forest, i, max_steps)
    path_j = trace_path(forest, j, max_steps)
    seen = set(path_i.vertices)
    for v in path_j.vertices:
        if v in seen:
            return v
    return None


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def count_disjoint_classes(forest: Forest, starts, x_line: float,
                           max_steps: int = DEFAULT_MAX_STEPS) -> DisjointClassCount:
    """Coalescence classes of ``starts`` at abscissa ``x_line``.

    Two starts fall in the same class when their certified paths share a
    vertex at abscissa <= x_line.  Only starts whose certified path
    reaches abscissa >= x_line are counted; the rest are reported as
    excluded.  Walks share work: a path stops as soon as it joins a
    previously walked one, and the classes come from a union-find over
    start ordinals (local to this call).
    """
    w = forest.source.window
    if not (w.x_min <= x_line <= w.x_max):
        raise ValueError(f"x_line {x_line} outside window abscissa range")
    starts = [int(s) for s in starts]
    n = len(forest)
    for s in starts:
        if not 0 <= s < n:
            raise IndexError(f"start index {s} out of range")
    parent = forest.parent
    certified = forest.certified
    x = forest.source.x
    uf = _UnionFind(len(starts))
    owner = {}
    reached = [False] * len(starts)
    for a, s in enumerate(starts):
        v = s
        steps = 0
        while True:
            xv = x[v]
            if xv > x_line:
                reached[a] = True
                break
            if v in owner:
                o = owner[v]
                uf.union(a, o)
                reached[a] = reached[o]
                break
            owner[v] = a
            if xv == x_line:
                reached[a] = True
                break
            p = int(parent[v])
            if p < 0 or not certified[v] or steps >= max_steps:
                break
            v = p
            steps += 1
    roots = {uf.find(a) for a in range(len(starts)) if reached[a]}
    n_reached = sum(reached)
    return DisjointClassCount(x_line=float(x_line), n_classes=len(roots),
                              n_reached=n_reached, n_excluded=len(starts) - n_reached)


def save_forest(forest: Forest, csv_path) -> None:
    """Write the parent table as ``child_index,parent_index,certified`` CSV.

    Rows are aligned with the PointSet CSV row order; the parent field is
    empty when the point has no parent.
    """
    lines = ["child_index,parent_index,certified"]
    for i in range(len(forest)):
        p = int(forest.parent[i])
        parent_field = "" if p < 0 else str(p)
        lines.append(f"{i},{parent_field},{'true' if forest.certified[i] else 'false'}")
    FsPath(csv_path).write_text("\n".join(lines) + "\n")
