"""Discrete coalescing-walk forest on the even sublattice and its dual.

Every even vertex (i, j) with i + j even owns one fair orientation bit:
UP connects it to (i+1, j+1), DOWN to (i+1, j-1).  The dual forest lives
on the odd sublattice and points left; its edge at (i, j) is forced by
the primal bit at (i-1, j), which makes the two forests planar duals and
identically distributed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path as FsPath

import numpy as np

from .seeding import make_rng


@dataclass(eq=False)
class LatticeForest:
    """Orientation bits over even vertices of a W x (2H+1) grid.

    Columns run 0..W-1, ordinates -H..H; ``up[i, j + H]`` is the bit of
    vertex (i, j) and is meaningful only when i + j is even.  Vertices in
    column W-1 are censored (their outgoing edge leaves the grid).
    """

    W: int
    H: int
    up: np.ndarray
    seed: int

    def __post_init__(self):
        if self.up.shape != (self.W, 2 * self.H + 1):
            raise ValueError(f"bit table shape {self.up.shape} does not match W={self.W}, H={self.H}")
        self.up.setflags(write=False)

    def row(self, j: int) -> int:
        return j + self.H

    def is_even_vertex(self, i: int, j: int) -> bool:
        return abs(j) <= self.H and 0 <= i < self.W and (i + j) % 2 == 0

    def even_mask(self) -> np.ndarray:
        """Boolean (W, 2H+1) mask of meaningful (even-parity) entries."""
        i = np.arange(self.W)[:, None]
        j = np.arange(-self.H, self.H + 1)[None, :]
        return (i + j) % 2 == 0

    def edges(self):
        """All primal edges as ((i, j), (i + 1, j +/- 1)) pairs, censored column excluded."""
        out = []
        mask = self.even_mask()
        for i in range(self.W - 1):
            for jj in np.nonzero(mask[i])[0]:
                j = int(jj) - self.H
                j2 = j + 1 if self.up[i, jj] else j - 1
                out.append(((i, j), (i + 1, j2)))
        return out


@dataclass(eq=False)
class DualForest:
    """Left-pointing forest on odd vertices, derived from a LatticeForest.

    ``up[i, j + H]`` True means vertex (i, j) connects to (i-1, j+1);
    meaningful only when i + j is odd and 1 <= i <= W-1 (column 0 has no
    left neighbor and is censored).
    """

    W: int
    H: int
    up: np.ndarray

    def __post_init__(self):
        if self.up.shape != (self.W, 2 * self.H + 1):
            raise ValueError(f"bit table shape {self.up.shape} does not match W={self.W}, H={self.H}")
        self.up.setflags(write=False)

    def odd_mask(self) -> np.ndarray:
        i = np.arange(self.W)[:, None]
        j = np.arange(-self.H, self.H + 1)[None, :]
        return (i + j) % 2 == 1

    def edges(self):
        """All dual edges as ((i, j), (i - 1, j +/- 1)) pairs for interior odd vertices."""
        out = []
        mask = self.odd_mask()
        for i in range(1, self.W):
            for jj in np.nonzero(mask[i])[0]:
                j = int(jj) - self.H
                j2 = j + 1 if self.up[i, jj] else j - 1
                out.append(((i, j), (i - 1, j2)))
        return out


def sample_lattice(W: int, H: int, seed: int) -> LatticeForest:
    """One fair orientation bit per even vertex, reproducible from the seed."""
    if W < 2:
        raise ValueError(f"W must be at least 2, got {W}")
    if H < 1:
        raise ValueError(f"H must be at least 1, got {H}")
    rng = make_rng(seed)
    up = rng.integers(0, 2, size=(W, 2 * H + 1)).astype(bool)
    return LatticeForest(W=W, H=H, up=up, seed=seed)


def build_dual(forest: LatticeForest) -> DualForest:
    """Derive the dual: (i, j) goes to (i-1, j+1) iff (i-1, j) goes to (i, j-1).

    Since every even vertex sends exactly one edge, every interior odd
    vertex receives exactly one dual edge.
    """
    dual_up = np.zeros_like(forest.up)
    dual_up[1:, :] = ~forest.up[:-1, :]
    return DualForest(W=forest.W, H=forest.H, up=dual_up)


def _proper_crossing(p1, p2, q1, q2) -> bool:
    """True when the open interiors of segments p1p2 and q1q2 intersect.

    Integer coordinates, so orientation tests are exact.  Collinear
    overlap of interiors also counts.
    """
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    o1 = orient(p1, p2, q1)
    o2 = orient(p1, p2, q2)
    o3 = orient(q1, q2, p1)
    o4 = orient(q1, q2, p2)
    if o1 * o2 < 0 and o3 * o4 < 0:
        return True
    if o1 == 0 and o2 == 0 and o3 == 0 and o4 == 0:
        # collinear: compare 1D projections on the dominant axis
        axis = 0 if abs(p2[0] - p1[0]) >= abs(p2[1] - p1[1]) else 1
        lo_p, hi_p = sorted((p1[axis], p2[axis]))
        lo_q, hi_q = sorted((q1[axis], q2[axis]))
        return max(lo_p, lo_q) < min(hi_p, hi_q)
    return False


def check_no_crossing(forest: LatticeForest, dual: DualForest):
    """Return every primal/dual edge pair whose interiors intersect.

    A correctly derived dual yields an empty list; the check treats the
    bit tables as untrusted so corrupted duals are caught.
    """
    primal_by_strip = {}
    for edge in forest.edges():
        primal_by_strip.setdefault(edge[0][0], []).append(edge)
    violations = []
    for dedge in dual.edges():
        strip = dedge[1][0]  # dual edge spans columns [i-1, i]
        for pedge in primal_by_strip.get(strip, ()):
            if _proper_crossing(pedge[0], pedge[1], dedge[0], dedge[1]):
                violations.append((pedge, dedge))
    return violations


def lattice_coalescence_probability_dp(separation: int, T: int) -> float:
    """Exact probability that walks from (0, 0) and (0, separation) meet
    within T steps.

    The ordinate difference performs a lazy walk with steps -2, 0, +2 of
    probabilities 1/4, 1/2, 1/4, absorbed at 0; the recursion is evaluated
    in float64.
    """
    if separation % 2 != 0 or separation < 0:
        raise ValueError(f"separation must be a non-negative even integer, got {separation}")
    if T < 1:
        raise ValueError(f"T must be positive, got {T}")
    if separation == 0:
        return 1.0
    u0 = separation // 2
    p = np.zeros(u0 + T + 2, dtype=np.float64)
    p[u0] = 1.0
    absorbed = 0.0
    for _ in range(T):
        new = 0.5 * p
        new[:-1] += 0.25 * p[1:]
        new[1:] += 0.25 * p[:-1]
        absorbed += new[0]
        new[0] = 0.0
        p = new
    return float(absorbed)


@dataclass(frozen=True)
class CoalescenceSimResult:
    """Monte Carlo estimate of the pair-coalescence probability."""

    separation: int
    T: int
    replicates: int
    n_meet: int
    n_censored: int
    probability: float
    H: int

    @property
    def n_effective(self) -> int:
        return self.replicates - self.n_censored


def lattice_coalescence_simulate(separation: int, T: int, replicates: int,
                                 seed: int, H: int | None = None) -> CoalescenceSimResult:
    """Simulate pairs of walks with independent bits until they meet.

    Walks leaving |ordinate| <= H are censored and excluded from the
    estimate; the default H makes censoring negligible against the
    binomial error.
    """
    if separation % 2 != 0 or separation < 0:
        raise ValueError(f"separation must be a non-negative even integer, got {separation}")
    if T < 1:
        raise ValueError(f"T must be positive, got {T}")
    if replicates < 1:
        raise ValueError(f"replicates must be positive, got {replicates}")
    if H is None:
        H = separation + 4 * int(np.ceil(np.sqrt(T))) + 8
    rng = make_rng(seed)
    a = np.zeros(replicates, dtype=np.int64)
    b = np.full(replicates, separation, dtype=np.int64)
    met = a == b
    censored = np.zeros(replicates, dtype=bool)
    alive = ~met
    for _ in range(T):
        n_alive = int(np.count_nonzero(alive))
        if n_alive == 0:
            break
        steps_a = rng.integers(0, 2, size=n_alive) * 2 - 1
        steps_b = rng.integers(0, 2, size=n_alive) * 2 - 1
        a[alive] += steps_a
        b[alive] += steps_b
        meet_now = alive & (a == b)
        met |= meet_now
        alive &= ~meet_now
        off = alive & ((np.abs(a) > H) | (np.abs(b) > H))
        censored |= off
        alive &= ~off
    n_meet = int(np.count_nonzero(met))
    n_censored = int(np.count_nonzero(censored))
    effective = replicates - n_censored
    probability = n_meet / effective if effective else float("nan")
    return CoalescenceSimResult(separation=separation, T=T, replicates=replicates,
                                n_meet=n_meet, n_censored=n_censored,
                                probability=probability, H=int(H))


def lattice_backward_depths(forest: LatticeForest) -> np.ndarray:
    """Longest descendant-chain length for every even vertex, within the grid.

    Children of (i, j) are (i-1, j-1) when its bit is UP and (i-1, j+1)
    when DOWN; chains are counted inside the sampled rectangle only.
    """
    W, H = forest.W, forest.H
    rows = 2 * H + 1
    depth = np.zeros((W, rows), dtype=np.int64)
    neg_inf = np.int64(-1)
    for i in range(1, W):
        up_prev = forest.up[i - 1]
        d_prev = depth[i - 1]
        from_below = np.full(rows, neg_inf)
        from_above = np.full(rows, neg_inf)
        # child below at (i-1, j-1) points up into (i, j)
        from_below[1:] = np.where(up_prev[:-1], d_prev[:-1] + 1, neg_inf)
        # child above at (i-1, j+1) points down into (i, j)
        from_above[:-1] = np.where(~up_prev[1:], d_prev[1:] + 1, neg_inf)
        depth[i] = np.maximum(0, np.maximum(from_below, from_above))
    return depth


def lattice_backward_depth_census(forest: LatticeForest, column: int, D: int) -> int:
    """Number of even vertices in ``column`` with backward depth >= D."""
    if not 0 <= column < forest.W:
        raise ValueError(f"column {column} out of range for W={forest.W}")
    if D < 0:
        raise ValueError(f"depth threshold must be non-negative, got {D}")
    depth = lattice_backward_depths(forest)
    mask = forest.even_mask()[column]
    return int(np.count_nonzero(mask & (depth[column] >= D)))


def save_lattice_forest(forest: LatticeForest, path) -> None:
    """Write one ``i,j,bit`` CSV line per even vertex (1 = UP)."""
    lines = ["i,j,bit"]
    mask = forest.even_mask()
    for i in range(forest.W):
        for jj in np.nonzero(mask[i])[0]:
            j = int(jj) - forest.H
            lines.append(f"{i},{j},{1 if forest.up[i, jj] else 0}")
    FsPath(path).write_text("\n".join(lines) + "\n")


def save_dp_oracle(separation: int, T: int, probability: float, path) -> None:
    payload = {"separation": separation, "T": T, "probability": probability}
    FsPath(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
