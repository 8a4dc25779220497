"""Forest construction, tracing, coalescence and class counting."""

import numpy as np
import pytest

from dsforest.dsf import (Cell, build_dsf, coalescence_point,
                          count_disjoint_classes, save_forest, trace_path)
from dsforest.point_process import PointSet, Window, sample_ppp
from dsforest.seeding import derive_seed

BIG = Window(-10, 10, -10, 10)


def _forest(coords, window=BIG):
    return build_dsf(PointSet.from_points(window, coords))


def test_strict_abscissa_rule():
    f = _forest([(0, 0), (1, 0), (1, 5)])
    ps = f.source
    i00 = int(np.nonzero((ps.x == 0))[0][0])
    i10 = int(np.nonzero((ps.x == 1) & (ps.y == 0))[0][0])
    i15 = int(np.nonzero((ps.x == 1) & (ps.y == 5))[0][0])
    assert f.parent[i00] == i10
    assert f.parent[i10] == -1  # equal abscissa does not count
    assert f.parent[i15] == -1


def test_empty_forest():
    f = _forest([])
    assert len(f) == 0
    with pytest.raises(IndexError):
        trace_path(f, 0)


def test_children_table_inverse_of_parent():
    ps = sample_ppp(Window(0, 15, 0, 10), 1.0, derive_seed(1, 1))
    f = build_dsf(ps)
    for i in range(len(f)):
        for c in f.children(i):
            assert f.parent[c] == i
    total = sum(len(f.children(i)) for i in range(len(f)))
    assert total == int(np.count_nonzero(f.parent >= 0))


def test_certification_against_direct_scan():
    ps = sample_ppp(Window(0, 25, 0, 20), 1.0, derive_seed(2, 7))
    f = build_dsf(ps)
    w = ps.window
    for i in range(len(f)):
        p = int(f.parent[i])
        if p < 0:
            assert not f.certified[i]
            continue
        d = f.dist[i]
        expected = (ps.x[i] + d <= w.x_max and ps.y[i] + d <= w.y_max
                    and ps.y[i] - d >= w.y_min)
        assert bool(f.certified[i]) == expected
        if f.certified[i]:
            # definitional half-disc emptiness, full scan in one scheme
            dx = ps.x - ps.x[i]
            dy = ps.y - ps.y[i]
            d2 = dx * dx + dy * dy
            assert not np.any((ps.x > ps.x[i]) & (d2 < d2[p]))


def test_trace_chain():
    f = _forest([(0, 0), (1, 0), (2, 0)])
    path = trace_path(f, 0)
    assert path.vertices == [0, 1, 2]
    assert path.fully_certified
    assert not path.truncated


def test_trace_stops_at_parentless_start():
    f = _forest([(0, 0)])
    path = trace_path(f, 0)
    assert path.vertices == [0]
    assert path.fully_certified and not path.truncated


def test_trace_stops_before_uncertified_edge():
    # third edge (5,0)->(9,6) has length 7.21 so its half-disc leaves the window
    f = _forest([(0, 0), (1, 0), (5, 0), (9, 6)])
    assert f.certified[0] and f.certified[1] and not f.certified[2]
    path = trace_path(f, 0)
    assert path.vertices == [0, 1, 2]
    assert not path.fully_certified
    assert path.truncated


def test_trace_step_limit():
    f = _forest([(i, 0.0) for i in range(6)])
    path = trace_path(f, 0, max_steps=3)
    assert path.vertices == [0, 1, 2, 3]
    assert path.truncated
    assert path.fully_certified


def test_abscissae_increase_along_paths():
    ps = sample_ppp(Window(0, 30, 0, 12), 1.0, derive_seed(3, 3))
    f = build_dsf(ps)
    for start in range(0, len(f), 7):
        path = trace_path(f, start)
        xs = ps.x[path.vertices]
        assert np.all(np.diff(xs) > 0)


def test_coalescence_point_on_chain():
    f = _forest([(0, 0), (1, 0), (2, 0)])
    assert coalescence_point(f, 0, 1) == 1
    assert coalescence_point(f, 1, 0) == 1
    assert coalescence_point(f, 0, 0) == 0


def test_coalescence_point_disjoint():
    f = _forest([(0, 5), (0, -5)])
    assert coalescence_point(f, 0, 1) is None


def test_coalescence_point_matches_brute_force():
    ps = sample_ppp(Window(0, 10, 0, 8), 0.8, derive_seed(4, 4))
    f = build_dsf(ps)
    n = len(f)
    for i in range(min(n, 20)):
        for j in range(i + 1, min(n, 20)):
            got = coalescence_point(f, i, j)
            vi = trace_path(f, i).vertices
            vj = trace_path(f, j).vertices
            common = set(vi) & set(vj)
            if not common:
                assert got is None
            else:
                expected = min(common, key=lambda v: ps.x[v])
                assert got == expected


def test_merged_paths_share_suffix():
    ps = sample_ppp(Window(0, 20, 0, 10), 1.0, derive_seed(5, 5))
    f = build_dsf(ps)
    n = len(f)
    for i in range(0, min(n, 12)):
        for j in range(i + 1, min(n, 12)):
            z = coalescence_point(f, i, j)
            if z is None:
                continue
            vi = trace_path(f, i).vertices
            vj = trace_path(f, j).vertices
            assert vi[vi.index(z):] == vj[vj.index(z):]


def test_ancestor_avoids_descendant_half_discs():
    # the ancestor of a point never sits inside the open right half-disc
    # spanned by one of its descendants' certified edges
    ps = sample_ppp(Window(0, 18, 0, 12), 1.0, derive_seed(7, 7))
    f = build_dsf(ps)
    for z in range(len(f)):
        a = int(f.parent[z])
        if a < 0:
            continue
        stack = list(f.children(z))
        while stack:
            d = int(stack.pop())
            stack.extend(int(c) for c in f.children(d))
            if not f.certified[d]:
                continue
            dx = ps.x[a] - ps.x[d]
            dy = ps.y[a] - ps.y[d]
            if ps.x[a] > ps.x[d]:
                assert dx * dx + dy * dy >= f.dist[d] ** 2 - 1e-12


def test_count_disjoint_classes_small_cases():
    f = _forest([(0, 0), (1, 0), (2, 0)])
    res = count_disjoint_classes(f, [0], 1.5)
    assert res.n_classes == 1 and res.n_excluded == 0
    res = count_disjoint_classes(f, [0, 1], 1.5)
    assert res.n_classes == 1  # merged at x=1 already
    # two parentless points never reach the line
    g = _forest([(0, 5), (0, -5)])
    res = count_disjoint_classes(g, [0, 1], 3.0)
    assert res.n_classes == 0 and res.n_excluded == 2


def test_count_disjoint_classes_x_line_validation():
    f = _forest([(0, 0), (1, 0)])
    with pytest.raises(ValueError):
        count_disjoint_classes(f, [0], 11.0)
    with pytest.raises(IndexError):
        count_disjoint_classes(f, [99], 1.0)


def test_count_disjoint_classes_matches_pairwise_oracle():
    # ~5,000-point instance, 10 starts
    ps = sample_ppp(Window(0, 100, 0, 50), 1.0, derive_seed(6, 6))
    f = build_dsf(ps)
    starts = [int(s) for s in np.nonzero(ps.x <= 2.0)[0]][:10]
    for x_line in (10.0, 30.0, 70.0):
        res = count_disjoint_classes(f, starts, x_line)
        # oracle: union components where certified paths share a vertex at
        # abscissa <= x_line, restricted to starts reaching the line
        paths = {s: trace_path(f, s).vertices for s in starts}
        reach = {s: bool(len(paths[s]) and ps.x[paths[s][-1]] >= x_line) for s in starts}
        vert_sets = {s: {v for v in paths[s] if ps.x[v] <= x_line} for s in starts}
        import itertools
        groups = {s: {s} for s in starts}
        for a, b in itertools.combinations(starts, 2):
            if vert_sets[a] & vert_sets[b]:
                merged = groups[a] | groups[b]
                for m in merged:
                    groups[m] = merged
        classes = {frozenset(groups[s]) for s in starts if reach[s]}
        assert res.n_classes == len(classes)
        assert res.n_excluded == sum(not reach[s] for s in starts)


def test_class_count_non_increasing():
    ps = sample_ppp(Window(0, 120, -20, 20), 1.0, derive_seed(8, 8))
    f = build_dsf(ps)
    starts = [int(s) for s in np.nonzero(ps.x <= 3.0)[0]]
    counts = [count_disjoint_classes(f, starts, xl).n_classes
              for xl in (10, 30, 60, 90, 110)]
    assert counts == sorted(counts, reverse=True)


def test_cell_validation():
    with pytest.raises(ValueError):
        Cell(m=0, M=1)
    c = Cell(m=2, M=3, center=(1.0, -1.0))
    assert (c.x_lo, c.x_hi, c.y_lo, c.y_hi) == (-1.0, 3.0, -4.0, 2.0)


def test_save_forest_schema(tmp_path):
    f = _forest([(0, 0), (1, 0), (1, 5)])
    out = tmp_path / "forest.csv"
    save_forest(f, out)
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "child_index,parent_index,certified"
    assert len(lines) == len(f) + 1
    # parentless rows leave the parent field empty
    assert any(line.split(",")[1] == "" for line in lines[1:])
