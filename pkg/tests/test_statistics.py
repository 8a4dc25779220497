"""Exit-edge counts, scaling fit, edge bound, and depth censuses."""

import math

import pytest

from dsforest.dsf import Cell, build_dsf
from dsforest.point_process import PointSet, Window, sample_ppp
from dsforest.seeding import derive_seed
from dsforest.statistics import (EtaReport, VerticalSegment, backward_depth,
                                 backward_depths, census_bi_infinite,
                                 census_r_tilde, check_edge_length_bound,
                                 count_exit_edges, fit_scaling,
                                 rectangle_bounds)


def _forest(coords, window):
    return build_dsf(PointSet.from_points(window, coords))


# ---------------------------------------------------------------------- eta

def test_eta_no_crossing_edges():
    w = Window(-30, 30, -30, 30)
    f = _forest([(0, 0), (1, 0)], w)
    rep = count_exit_edges(f, L=9, m=1, M=1)
    assert (rep.eta_short, rep.eta_long, rep.eta_total) == (0, 0, 0)


def test_eta_hand_built_short_exit():
    # rectangle [-19,19)^2; edge (18,0)->(20,0) exits with length 2 <= sqrt(9)
    w = Window(-25, 25, -25, 25)
    f = _forest([(18, 0), (20, 0)], w)
    rep = count_exit_edges(f, L=9, m=1, M=1)
    assert (rep.eta_short, rep.eta_long, rep.eta_total) == (1, 0, 1)


def test_eta_long_exit():
    # edge (0,0)->(10,0) exits [-9,9)^2 with length 10 > sqrt(4)
    w = Window(-15, 15, -15, 15)
    f = _forest([(0, 0), (10, 0)], w)
    assert rectangle_bounds(4, 3, 3) == (-27, 27, -27, 27)
    rep = count_exit_edges(f, L=4, m=1, M=1)
    assert (rep.eta_short, rep.eta_long, rep.eta_total) == (0, 1, 1)


def test_eta_margin_precondition():
    w = Window(-19, 19, -19, 19)  # margin 0 around the L=9 rectangle
    f = _forest([(0, 0), (1, 0)], w)
    with pytest.raises(ValueError):
        count_exit_edges(f, L=9, m=1, M=1)


def test_eta_uncertified_exit_edge_rejected():
    # (2.5,0)->(9,4): length 7.63, half-disc leaves the window, and the
    # edge exits the L=1 rectangle [-3,3)^2
    w = Window(-10, 10, -10, 10)
    f = _forest([(2.5, 0), (9, 4)], w)
    assert not f.certified[0]
    with pytest.raises(ValueError):
        count_exit_edges(f, L=1, m=1, M=1)


def test_eta_matches_direct_scan():
    w = Window(-30, 30, -30, 30)
    for rep_i in range(5):
        ps = sample_ppp(w, 1.0, derive_seed(40, rep_i))
        f = build_dsf(ps)
        L, m, M = 4, 3, 3
        report = count_exit_edges(f, L, m, M)
        x_lo, x_hi, y_lo, y_hi = rectangle_bounds(L, m, M)
        short = long = 0
        for i in range(len(f)):
            p = int(f.parent[i])
            if p < 0:
                continue
            win = (x_lo <= ps.x[i] < x_hi) and (y_lo <= ps.y[i] < y_hi)
            pin = (x_lo <= ps.x[p] < x_hi) and (y_lo <= ps.y[p] < y_hi)
            if win and not pin:
                if f.dist[i] <= math.sqrt(L):
                    short += 1
                else:
                    long += 1
        assert (report.eta_short, report.eta_long) == (short, long)


def test_eta_report_decomposition_enforced():
    from dsforest.dsf import InvariantViolation
    with pytest.raises(InvariantViolation):
        EtaReport(L=1, m=1, M=1, eta_short=1, eta_long=1, eta_total=3, seed=0)


# -------------------------------------------------------------- scaling fit

def _reports(L, values):
    return [EtaReport(L=L, m=1, M=1, eta_short=v, eta_long=0, eta_total=v, seed=i)
            for i, v in enumerate(values)]


def test_fit_scaling_recovers_three_halves():
    reports = []
    for L in (1, 4, 9, 16):
        eta = 7 * int(round(L ** 1.5))
        reports += _reports(L, [eta] * 10)
    fit = fit_scaling(reports)
    assert fit.slope == pytest.approx(1.5, abs=1e-9)
    assert fit.Ls == (1, 4, 9, 16)
    assert fit.replicates == (10, 10, 10, 10)


def test_fit_scaling_recovers_square():
    reports = []
    for L in (2, 4, 8, 16):
        reports += _reports(L, [5 * L * L] * 12)
    fit = fit_scaling(reports)
    assert fit.slope == pytest.approx(2.0, abs=1e-9)


def test_fit_scaling_preconditions():
    with pytest.raises(ValueError):
        fit_scaling(_reports(4, [1] * 10) + _reports(8, [1] * 10))
    with pytest.raises(ValueError):
        fit_scaling(_reports(4, [1] * 10) + _reports(8, [1] * 10) + _reports(16, [1] * 9))


# --------------------------------------------------------------- edge bound

def test_edge_bound_value():
    w = Window(-5, 5, -5, 5)
    f = _forest([(0, 0), (2, 0)], w)
    check = check_edge_length_bound(f, Cell(m=1, M=1))
    assert check.bound == pytest.approx(4 * math.sqrt(2))


def test_edge_bound_hypothesis_not_met():
    w = Window(-5, 5, -5, 5)
    # single east exit only
    f = _forest([(0.5, 0), (1.5, 0)], w)
    check = check_edge_length_bound(f, Cell(m=1, M=1))
    assert not check.hypothesis_met
    assert not check.violated


def test_edge_bound_hypothesis_met():
    w = Window(-5, 5, -5, 5)
    # two edges from the cell crossing {x=1} inside [-1,1)
    f = _forest([(0.5, 0.5), (1.4, 0.5), (0.6, -0.5), (1.5, -0.5)], w)
    check = check_edge_length_bound(f, Cell(m=1, M=1))
    assert check.hypothesis_met
    assert not check.violated
    assert check.max_edge_length <= check.bound


def test_edge_bound_translated_cell():
    w = Window(-5, 15, -5, 5)
    # same configuration as the centered test, shifted to center (10, 0):
    # east side sits at x=11
    f = _forest([(10.5, 0.5), (11.4, 0.5), (10.6, -0.5), (11.5, -0.5)], w)
    from dsforest.dsf import Cell
    check = check_edge_length_bound(f, Cell(m=1, M=1, center=(10.0, 0.0)))
    assert check.hypothesis_met
    assert not check.violated


def test_edge_bound_cell_outside_window():
    w = Window(-5, 5, -5, 5)
    f = _forest([(0, 0), (1, 0)], w)
    with pytest.raises(ValueError):
        check_edge_length_bound(f, Cell(m=6, M=1))


def test_edge_bound_zero_violations_on_random_instances():
    # deterministic consequence of the two-east-exit hypothesis
    w = Window(-4, 8, -6, 6)
    met = 0
    for i in range(200):
        ps = sample_ppp(w, 1.0, derive_seed(50, i))
        f = build_dsf(ps)
        check = check_edge_length_bound(f, Cell(m=1, M=1))
        met += check.hypothesis_met
        assert not check.violated
    assert met > 0


# ------------------------------------------------------------ depth census

def test_backward_depth_examples():
    w = Window(-5, 5, -5, 5)
    f = _forest([(0, 0), (1, 0), (2, 0)], w)
    assert backward_depth(f, 0) == 0
    assert backward_depth(f, 2) == 2


def test_backward_depth_matches_recursive_oracle():
    ps = sample_ppp(Window(0, 20, 0, 12), 1.0, derive_seed(60, 0))
    f = build_dsf(ps)

    def oracle(i, memo={}):
        if i in memo:
            return memo[i]
        kids = f.children(i)
        val = 0 if len(kids) == 0 else 1 + max(oracle(int(c)) for c in kids)
        memo[i] = val
        return val

    depths = backward_depths(f)
    for i in range(len(f)):
        assert depths[i] == oracle(i)


def test_census_d_zero_counts_all_crossings():
    ps = sample_ppp(Window(-20, 20, -10, 10), 1.0, derive_seed(61, 1))
    f = build_dsf(ps)
    seg = VerticalSegment(0.0, -10.0, 10.0)
    census = census_bi_infinite(f, seg, 0)
    assert census.deep_count == census.crossing_count
    assert census.crossing_count > 0


def test_census_missing_segment():
    w = Window(-5, 5, -5, 5)
    f = _forest([(0, 0), (1, 0)], w)
    census = census_bi_infinite(f, VerticalSegment(0.5, 3.0, 4.0), 0)
    assert (census.crossing_count, census.deep_count) == (0, 0)


def test_census_matches_manual_intersection():
    ps = sample_ppp(Window(-15, 15, -8, 8), 1.0, derive_seed(62, 2))
    f = build_dsf(ps)
    seg = VerticalSegment(0.0, -3.0, 5.0)
    census = census_bi_infinite(f, seg, 0)
    count = 0
    for i in range(len(f)):
        p = int(f.parent[i])
        if p < 0 or not (ps.x[i] <= seg.x <= ps.x[p]):
            continue
        t = (seg.x - ps.x[i]) / (ps.x[p] - ps.x[i])
        yc = ps.y[i] + t * (ps.y[p] - ps.y[i])
        if seg.y_lo <= yc <= seg.y_hi:
            count += 1
    assert census.crossing_count == count


def test_census_monotone_in_threshold_and_vanishes():
    ps = sample_ppp(Window(-40, 40, -10, 10), 1.0, derive_seed(63, 3))
    f = build_dsf(ps)
    seg = VerticalSegment(0.0, -10.0, 10.0)
    deeps = [census_bi_infinite(f, seg, d).deep_count for d in (0, 5, 10, 20, 40)]
    assert deeps == sorted(deeps, reverse=True)
    assert census_bi_infinite(f, seg, len(f)).deep_count == 0


def test_census_r_tilde_ordering_precondition():
    w = Window(-5, 5, -5, 5)
    f = _forest([(0, 0), (1, 0)], w)
    with pytest.raises(ValueError):
        census_r_tilde(f, VerticalSegment(0.5, -1, 1), VerticalSegment(0.5, -1, 1), 0)


def test_census_r_tilde_no_shared_paths():
    w = Window(-5, 5, -5, 5)
    f = _forest([(-2, 3), (-1, 3), (2, -3), (3, -3)], w)
    # nothing crosses I at all (the only edge spanning x=-1.5 passes at y=3)
    res = census_r_tilde(f, VerticalSegment(-1.5, -4, -2), VerticalSegment(2.5, -4, -2), 0)
    assert res.deep_count == 0


def test_census_r_tilde_matches_subtree_oracle():
    ps = sample_ppp(Window(-12, 12, -6, 6), 1.0, derive_seed(64, 4))
    f = build_dsf(ps)
    I = VerticalSegment(-4.0, -3.0, 3.0)
    J = VerticalSegment(4.0, -6.0, 6.0)
    for d_thr in (0, 1, 3):
        res = census_r_tilde(f, I, J, d_thr)

        def crosses(i, seg):
            p = int(f.parent[i])
            if p < 0 or not (ps.x[i] <= seg.x <= ps.x[p]):
                return False
            t = (seg.x - ps.x[i]) / (ps.x[p] - ps.x[i])
            yc = ps.y[i] + t * (ps.y[p] - ps.y[i])
            return seg.y_lo <= yc <= seg.y_hi

        def subtree(i):
            out = {i}
            stack = [i]
            while stack:
                v = stack.pop()
                for c in f.children(v):
                    out.add(int(c))
                    stack.append(int(c))
            return out

        depths = backward_depths(f)
        expected = 0
        for i in range(len(f)):
            if not crosses(i, J) or depths[i] < d_thr:
                continue
            if any(crosses(w_, I) for w_ in subtree(i)):
                expected += 1
        assert res.deep_count == expected


def test_census_r_tilde_bounded_by_full_line_census():
    ps = sample_ppp(Window(-12, 12, -6, 6), 1.0, derive_seed(65, 5))
    f = build_dsf(ps)
    w = ps.window
    I = VerticalSegment(-4.0, -2.0, 2.0)
    J = VerticalSegment(4.0, -6.0, 6.0)
    for d_thr in (0, 2, 5):
        restricted = census_r_tilde(f, I, J, d_thr).deep_count
        full_line = census_bi_infinite(
            f, VerticalSegment(J.x, w.y_min, w.y_max), d_thr).deep_count
        assert restricted <= full_line
