"""Measurable quantities of the forest: exit-edge counts and their scaling,
the deterministic edge-length bound, and backward-depth censuses that act
as a finite proxy for paths that are infinite to the left.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path as FsPath

import numpy as np

from .dsf import Cell, Forest, InvariantViolation


@dataclass(frozen=True)
class EtaReport:
    """Edges leaving the centered rectangle of (2L+1)^2 cells, split at length sqrt(L)."""

    L: int
    m: int
    M: int
    eta_short: int
    eta_long: int
    eta_total: int
    seed: int

    def __post_init__(self):
        if self.eta_total != self.eta_short + self.eta_long:
            raise InvariantViolation(
                f"eta decomposition broken: {self.eta_short}+{self.eta_long} != {self.eta_total}")


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares slope of log(mean eta_total) against log(L)."""

    slope: float
    intercept: float
    Ls: tuple
    means: tuple
    replicates: tuple


@dataclass(frozen=True)
class EdgeBoundCheck:
    """Deterministic bound on edge lengths out of a doubly-east-exited cell."""

    cell: Cell
    hypothesis_met: bool
    max_edge_length: float
    bound: float
    violated: bool

    def __post_init__(self):
        if self.violated and not self.hypothesis_met:
            raise InvariantViolation("violated flag without the two-east-exit hypothesis")


@dataclass(frozen=True)
class VerticalSegment:
    """Closed vertical segment {x} x [y_lo, y_hi]."""

    x: float
    y_lo: float
    y_hi: float

    def __post_init__(self):
        if self.y_lo > self.y_hi:
            raise ValueError(f"segment with y_lo > y_hi: {self}")


@dataclass(frozen=True)
class DepthCensus:
    """Crossings of a vertical segment, and those on deep backward chains."""

    segment: VerticalSegment
    depth_threshold: int
    crossing_count: int
    deep_count: int

    def __post_init__(self):
        if self.deep_count > self.crossing_count:
            raise InvariantViolation(
                f"deep_count {self.deep_count} exceeds crossing_count {self.crossing_count}")


def rectangle_bounds(L: int, m: int, M: int):
    """Half-open bounds of the union of the (2L+1)^2 translated cells."""
    a = (2 * L + 1) * m
    b = (2 * L + 1) * M
    return -a, a, -b, b


def count_exit_edges(forest: Forest, L: int, m: int, M: int) -> EtaReport:
    """Count certified edges with west endpoint inside the rectangle and
    east endpoint outside, split at length sqrt(L).

    Requires the rectangle to sit inside the window with margin at least
    sqrt(L); errors if any counted edge is uncertified.  Two deterministic
    facts are verified on every call: short exit edges start within
    sqrt(L) of the rectangle boundary, and each long exit edge's west
    endpoint has an empty open right half-disc of radius sqrt(L)
    (checked by direct scan).
    """
    for name, value in (("L", L), ("m", m), ("M", M)):
        if int(value) != value or value < 1:
            raise ValueError(f"{name} must be a positive integer, got {value}")
    x_lo, x_hi, y_lo, y_hi = rectangle_bounds(L, m, M)
    sqrt_l = math.sqrt(L)
    w = forest.source.window
    if (w.x_min > x_lo - sqrt_l or w.x_max < x_hi + sqrt_l
            or w.y_min > y_lo - sqrt_l or w.y_max < y_hi + sqrt_l):
        raise ValueError(
            f"rectangle [{x_lo},{x_hi})x[{y_lo},{y_hi}) needs margin {sqrt_l:g} inside {w}")
    x, y = forest.source.x, forest.source.y
    has_parent = forest.parent >= 0
    west_in = (x >= x_lo) & (x < x_hi) & (y >= y_lo) & (y < y_hi) & has_parent
    px = np.where(has_parent, x[np.where(has_parent, forest.parent, 0)], np.nan)
    py = np.where(has_parent, y[np.where(has_parent, forest.parent, 0)], np.nan)
    parent_in = (px >= x_lo) & (px < x_hi) & (py >= y_lo) & (py < y_hi)
    exit_mask = west_in & ~parent_in
    if np.any(exit_mask & ~forest.certified):
        bad = int(np.nonzero(exit_mask & ~forest.certified)[0][0])
        raise ValueError(f"exit edge from point {bad} is uncertified; enlarge the window margin")
    lengths = forest.dist[exit_mask]
    short = lengths <= sqrt_l
    eta_short = int(np.count_nonzero(short))
    eta_long = int(np.count_nonzero(~short))

    exit_idx = np.nonzero(exit_mask)[0]
    if eta_short:
        wx, wy = x[exit_idx[short]], y[exit_idx[short]]
        boundary_gap = np.minimum(np.minimum(wx - x_lo, x_hi - wx),
                                  np.minimum(wy - y_lo, y_hi - wy))
        if np.any(boundary_gap > sqrt_l):
            raise InvariantViolation("short exit edge starting deeper than sqrt(L) in the rectangle")
    for i in exit_idx[~short]:
        wx, wy = x[i], y[i]
        d2 = (x - wx) ** 2 + (y - wy) ** 2
        inside = (x > wx) & (d2 < L)
        if np.any(inside):
            raise InvariantViolation(
                f"long exit edge from point {i} has a right neighbor closer than sqrt(L)")
    return EtaReport(L=L, m=m, M=M, eta_short=eta_short, eta_long=eta_long,
                     eta_total=eta_short + eta_long, seed=forest.source.seed)


def fit_scaling(reports) -> ScalingFit:
    """Least-squares fit of log(mean eta_total) against log(L).

    Needs at least 3 distinct L values with at least 10 replicates each.
    """
    groups = {}
    for rep in reports:
        groups.setdefault(rep.L, []).append(rep.eta_total)
    if len(groups) < 3:
        raise ValueError(f"need >= 3 distinct L values, got {sorted(groups)}")
    for L, values in groups.items():
        if len(values) < 10:
            raise ValueError(f"need >= 10 replicates per L, got {len(values)} at L={L}")
    Ls = sorted(groups)
    means = [float(np.mean(groups[L])) for L in Ls]
    if min(means) <= 0:
        raise ValueError("mean eta_total must be positive for a log-log fit")
    slope, intercept = np.polyfit(np.log(Ls), np.log(means), 1)
    return ScalingFit(slope=float(slope), intercept=float(intercept),
                      Ls=tuple(Ls), means=tuple(means),
                      replicates=tuple(len(groups[L]) for L in Ls))


def scaling_fit_to_json(fit: ScalingFit, path) -> None:
    payload = {
        "slope": fit.slope,
        "intercept": fit.intercept,
        "Ls": list(fit.Ls),
        "means": list(fit.means),
        "replicates": list(fit.replicates),
    }
    FsPath(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def save_eta_reports(reports, path) -> None:
    """Write reports as ``seed,L,m,M,eta_short,eta_long,eta_total`` CSV."""
    lines = ["seed,L,m,M,eta_short,eta_long,eta_total"]
    for r in reports:
        lines.append(f"{r.seed},{r.L},{r.m},{r.M},{r.eta_short},{r.eta_long},{r.eta_total}")
    FsPath(path).write_text("\n".join(lines) + "\n")


def check_edge_length_bound(forest: Forest, cell: Cell) -> EdgeBoundCheck:
    """Check the deterministic length bound 2*sqrt((2m)^2 + (2M)^2).

    The hypothesis holds when at least two edges start inside the cell and
    exit through its east side (the segment {x_hi} x [y_lo, y_hi)).  Under
    the hypothesis, every edge whose west vertex lies in the cell must be
    shorter than the bound; a violation is an implementation bug, not
    noise.  The check uses all edges regardless of certification since the
    bound is a deterministic property of the sampled nearest-right graph.
    """
    w = forest.source.window
    if (cell.x_lo < w.x_min or cell.x_hi > w.x_max
            or cell.y_lo < w.y_min or cell.y_hi > w.y_max):
        raise ValueError(f"cell {cell} not inside window {w}")
    x, y = forest.source.x, forest.source.y
    has_parent = forest.parent >= 0
    in_cell = (x >= cell.x_lo) & (x < cell.x_hi) & (y >= cell.y_lo) & (y < cell.y_hi)
    west = in_cell & has_parent
    west_idx = np.nonzero(west)[0]
    bound = 2.0 * math.hypot(2 * cell.m, 2 * cell.M)
    if west_idx.size == 0:
        return EdgeBoundCheck(cell=cell, hypothesis_met=False, max_edge_length=0.0,
                              bound=bound, violated=False)
    par = forest.parent[west_idx]
    x0, y0 = x[west_idx], y[west_idx]
    x1, y1 = x[par], y[par]
    crosses_east = x1 >= cell.x_hi
    with np.errstate(invalid="ignore", divide="ignore"):
        t = (cell.x_hi - x0) / (x1 - x0)
        y_cross = y0 + t * (y1 - y0)
    east_exits = crosses_east & (y_cross >= cell.y_lo) & (y_cross < cell.y_hi)
    hypothesis_met = int(np.count_nonzero(east_exits)) >= 2
    max_edge_length = float(np.max(forest.dist[west_idx]))
    violated = bool(hypothesis_met and max_edge_length > bound)
    return EdgeBoundCheck(cell=cell, hypothesis_met=hypothesis_met,
                          max_edge_length=max_edge_length, bound=bound, violated=violated)


def backward_depths(forest: Forest) -> np.ndarray:
    """Longest descendant-chain length ending at each point (memoized).

    Children always precede their parent in the abscissa-sorted order, so
    one forward pass suffices.
    """
    if forest._depths is None:
        parent = forest.parent.tolist()
        depth = [0] * len(forest)
        for i, p in enumerate(parent):
            if p >= 0 and depth[i] + 1 > depth[p]:
                depth[p] = depth[i] + 1
        depths = np.asarray(depth, dtype=np.int64)
        depths.setflags(write=False)
        forest._depths = depths
    return forest._depths


def backward_depth(forest: Forest, i: int) -> int:
    """Longest descendant chain ending at point ``i`` (0 for a leaf)."""
    n = len(forest)
    if not 0 <= i < n:
        raise IndexError(f"point index {i} out of range for {n} points")
    return int(backward_depths(forest)[i])


def _segment_crossings(forest: Forest, segment: VerticalSegment) -> np.ndarray:
    """Boolean mask over points whose outgoing edge crosses the segment.

    Edges are closed plane segments; an edge whose endpoint falls exactly
    on the vertical line still counts (fixed zero-probability convention).
    Vertical edges cannot occur, so the intersection is always a single
    point.
    """
    x, y = forest.source.x, forest.source.y
    has_parent = forest.parent >= 0
    safe_parent = np.where(has_parent, forest.parent, 0)
    x1 = x[safe_parent]
    y1 = y[safe_parent]
    spans = has_parent & (x <= segment.x) & (x1 >= segment.x)
    with np.errstate(invalid="ignore", divide="ignore"):
        t = (segment.x - x) / (x1 - x)
        y_cross = y + t * (y1 - y)
    return spans & (y_cross >= segment.y_lo) & (y_cross <= segment.y_hi)


def census_bi_infinite(forest: Forest, segment: VerticalSegment, D: int) -> DepthCensus:
    """Count crossings of ``segment`` by forest edges, and the subset whose
    west endpoint has backward depth >= D.

    Backward depth is the direct finite truncation of "infinite to the
    left": at D = 0 every crossing qualifies.
    """
    if D < 0:
        raise ValueError(f"depth threshold must be non-negative, got {D}")
    w = forest.source.window
    if not (w.x_min <= segment.x <= w.x_max
            and w.y_min <= segment.y_lo and segment.y_hi <= w.y_max):
        raise ValueError(f"segment {segment} not inside window {w}")
    crossing = _segment_crossings(forest, segment)
    crossing_count = int(np.count_nonzero(crossing))
    if crossing_count == 0:
        deep_count = 0
    else:
        deep = crossing & (backward_depths(forest) >= D)
        deep_count = int(np.count_nonzero(deep))
    return DepthCensus(segment=segment, depth_threshold=D,
                       crossing_count=crossing_count, deep_count=deep_count)


def census_r_tilde(forest: Forest, I: VerticalSegment, J: VerticalSegment,
                   D: int) -> DepthCensus:
    """Crossings of ``J`` by edges whose west endpoint has a descendant
    (itself included) whose own edge crosses ``I``, filtered by backward
    depth >= D at the J-crossing.

    Requires the abscissa of ``I`` to be strictly smaller than that of
    ``J``.
    """
    if not I.x < J.x:
        raise ValueError(f"interval I (x={I.x}) must lie strictly left of J (x={J.x})")
    if D < 0:
        raise ValueError(f"depth threshold must be non-negative, got {D}")
    crosses_i = _segment_crossings(forest, I)
    crosses_j = _segment_crossings(forest, J)
    crossing_count = int(np.count_nonzero(crosses_j))
    # propagate "some descendant's edge crosses I" up the parent relation;
    # children precede parents in index order
    reach = crosses_i.tolist()
    parent = forest.parent.tolist()
    for i, flag in enumerate(reach):
        if flag:
            p = parent[i]
            if p >= 0:
                reach[p] = True
    reach = np.asarray(reach, dtype=bool)
    deep = crosses_j & reach & (backward_depths(forest) >= D)
    return DepthCensus(segment=J, depth_threshold=D,
                       crossing_count=crossing_count,
                       deep_count=int(np.count_nonzero(deep)))


def save_depth_censuses(rows, path) -> None:
    """Write (seed, census) pairs as ``seed,x,y_lo,y_hi,D,crossings,deep`` CSV."""
    lines = ["seed,x,y_lo,y_hi,D,crossings,deep"]
    for seed, census in rows:
        seg = census.segment
        lines.append(f"{seed},{seg.x:.17g},{seg.y_lo:.17g},{seg.y_hi:.17g},"
                     f"{census.depth_threshold},{census.crossing_count},{census.deep_count}")
    FsPath(path).write_text("\n".join(lines) + "\n")
