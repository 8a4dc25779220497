"""Experiment orchestration: seeded replicates, reports, figures, invariants.

Every experiment is a pure function of its config (master seed included).
Replicate seeds are derived up front with the SplitMix64 mixer and results
are merged in replicate-index order, so reports are byte-identical no
matter how the worker pool schedules the tasks.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path as FsPath

import numpy as np

from . import figures
from .dsf import Cell, InvariantViolation, build_dsf, count_disjoint_classes
from .lattice_dual import (LatticeForest, build_dual, check_no_crossing,
                           lattice_backward_depth_census,
                           lattice_coalescence_probability_dp,
                           lattice_coalescence_simulate, sample_lattice,
                           save_dp_oracle, save_lattice_forest)
from .point_process import Window, remove_covered, sample_boolean, sample_ppp
from .render import RenderSpec, save_svg
from .seeding import derive_seed
from .statistics import (DepthCensus, EtaReport, VerticalSegment,
                         census_bi_infinite, check_edge_length_bound,
                         count_exit_edges, fit_scaling, save_depth_censuses,
                         save_eta_reports, scaling_fit_to_json)

OUT_DIR_ENV = "DSF_SIM_OUT"

EXPERIMENT_KINDS = ("dsf-coalescence", "eta-scaling", "edge-bound",
                    "boolean-coalescence", "bi-infinite-census",
                    "lattice-suite", "render")


@dataclass
class ExperimentConfig:
    """Parameters for one experiment run; unset fields take kind defaults."""

    kind: str
    seed: int = 1
    replicates: int | None = None
    parallelism: int | None = None
    window: tuple | None = None
    intensity: float = 1.0
    hole_lambda: float | None = None
    hole_radius: float | None = None
    start_x: tuple | None = None
    start_y_abs: float | None = None
    x_lines: tuple | None = None
    m: int = 1
    M: int = 1
    L_values: tuple | None = None
    instances: int | None = None
    segment: tuple | None = None
    depth_thresholds: tuple | None = None
    W: int | None = None
    H: int | None = None
    separation: int = 2
    T_values: tuple | None = None
    sim_replicates: int | None = None
    highlight_x: tuple | None = None
    highlight_y: tuple | None = None
    render_out: str | None = None
    make_figures: bool = True

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}; "
                             f"expected one of {', '.join(EXPERIMENT_KINDS)}")


class InvariantLog:
    """Pass/fail record of every deterministic invariant checked in a run."""

    def __init__(self):
        self.entries = []

    def record(self, name: str, ok: bool, detail: str = ""):
        self.entries.append((name, bool(ok), detail))

    @property
    def all_ok(self) -> bool:
        return all(ok for _, ok, _ in self.entries)

    def write(self, path) -> None:
        lines = []
        for name, ok, detail in self.entries:
            suffix = f": {detail}" if detail else ""
            lines.append(f"{'PASS' if ok else 'FAIL'} {name}{suffix}")
        FsPath(path).write_text("\n".join(lines) + "\n")


def _default_parallelism() -> int:
    return os.cpu_count() or 1


def _map_ordered(fn, args_list, parallelism: int):
    """Apply ``fn`` to each args tuple, preserving input order."""
    if parallelism <= 1 or len(args_list) <= 1:
        return [fn(a) for a in args_list]
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(fn, args_list))


def _write_csv(path, header: str, rows) -> None:
    FsPath(path).write_text("\n".join([header, *rows]) + "\n")


def _write_json(path, payload) -> None:
    FsPath(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def resolve_out_dir(config: ExperimentConfig, out_base=None, tag: str | None = None) -> FsPath:
    base = FsPath(out_base) if out_base else FsPath(os.environ.get(OUT_DIR_ENV, "out"))
    name = tag or time.strftime("%Y%m%d-%H%M%S")
    path = base / config.kind / name
    path.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------------------
# replicate workers (top-level so a process pool can pickle them)

def _coalescence_replicate(args) -> dict:
    (seed, window_t, intensity, start_lo, start_hi, start_y_abs, x_lines,
     hole_lambda, hole_radius) = args
    window = Window(*window_t)
    points = sample_ppp(window, intensity, derive_seed(seed, 0))
    removed_fraction = None
    if hole_lambda is not None:
        holes = sample_boolean(window, hole_lambda, hole_radius, derive_seed(seed, 1))
        before = len(points)
        points = remove_covered(points, holes)
        removed_fraction = 1.0 - len(points) / before if before else 0.0
    forest = build_dsf(points)
    mask = (points.x >= start_lo) & (points.x <= start_hi)
    if start_y_abs is not None:
        mask &= np.abs(points.y) <= start_y_abs
    starts = np.nonzero(mask)[0].tolist()
    rows = []
    monotone = True
    prev = None
    for x_line in x_lines:
        res = count_disjoint_classes(forest, starts, x_line)
        rows.append((x_line, res.n_classes, res.n_reached, res.n_excluded))
        if prev is not None and res.n_classes > prev:
            monotone = False
        prev = res.n_classes
    return {"seed": seed, "rows": rows, "monotone": monotone,
            "n_points": len(points), "n_starts": len(starts),
            "removed_fraction": removed_fraction}


def _eta_task(args) -> tuple:
    seed, L, m, M, intensity = args
    # margin 3*sqrt(L) (precondition asks only sqrt(L)) so that even the
    # occasional long exit edge stays certified
    margin = 3.0 * math.sqrt(L)
    half_w = (2 * L + 1) * m + margin
    half_h = (2 * L + 1) * M + margin
    window = Window(-half_w, half_w, -half_h, half_h)
    forest = build_dsf(sample_ppp(window, intensity, seed))
    report = count_exit_edges(forest, L, m, M)
    return (report.seed, report.L, report.m, report.M,
            report.eta_short, report.eta_long, report.eta_total)


def _edge_bound_task(args) -> tuple:
    seed, m, M, window_t, intensity = args
    window = Window(*window_t)
    forest = build_dsf(sample_ppp(window, intensity, seed))
    check = check_edge_length_bound(forest, Cell(m=m, M=M))
    return (seed, check.hypothesis_met, check.max_edge_length, check.bound, check.violated)


def _census_task(args) -> dict:
    seed, window_t, intensity, segment_t, d_list = args
    window = Window(*window_t)
    forest = build_dsf(sample_ppp(window, intensity, seed))
    segment = VerticalSegment(*segment_t)
    rows = []
    monotone = True
    prev = None
    for d in d_list:
        census = census_bi_infinite(forest, segment, d)
        rows.append((d, census.crossing_count, census.deep_count))
        if prev is not None and census.deep_count > prev:
            monotone = False
        prev = census.deep_count
    return {"seed": seed, "rows": rows, "monotone": monotone}


# ---------------------------------------------------------------------------
# experiment runners

def _run_coalescence(config: ExperimentConfig, out_dir: FsPath, log: InvariantLog,
                     with_holes: bool) -> None:
    window = config.window or (0.0, 2000.0, -150.0, 150.0)
    replicates = config.replicates or 50
    start_lo, start_hi = config.start_x or (0.0, 5.0)
    start_y_abs = 100.0 if config.start_y_abs is None else config.start_y_abs
    x_lines = config.x_lines or (100.0, 250.0, 500.0, 750.0, 1000.0, 1250.0, 1500.0)
    hole_lambda = config.hole_lambda if with_holes else None
    hole_radius = config.hole_radius if with_holes else None
    if with_holes and (hole_lambda is None or hole_radius is None):
        raise ValueError("boolean-coalescence needs hole_lambda and hole_radius")
    tasks = [(derive_seed(config.seed, j), window, config.intensity, start_lo,
              start_hi, start_y_abs, tuple(x_lines), hole_lambda, hole_radius)
             for j in range(replicates)]
    results = _map_ordered(_coalescence_replicate, tasks,
                           config.parallelism or _default_parallelism())
    csv_rows = []
    final_x = x_lines[-1]
    coalesced = 0
    all_monotone = True
    rows_by_replicate = []
    for j, res in enumerate(results):
        for x_line, classes, reached, excluded in res["rows"]:
            csv_rows.append(f"{j},{res['seed']},{x_line:.17g},{classes},{reached},{excluded}")
        final = res["rows"][-1]
        if final[1] == 1:
            coalesced += 1
        all_monotone &= res["monotone"]
        rows_by_replicate.append(res["rows"])
        extra = ""
        if res["removed_fraction"] is not None:
            extra = f" removed={res['removed_fraction']:.3f}"
        print(f"replicate {j}: seed={res['seed']} points={res['n_points']} "
              f"starts={res['n_starts']} classes@{final_x:g}={final[1]} "
              f"excluded={final[3]}{extra}")
    _write_csv(out_dir / "classes.csv",
               "replicate,seed,x_line,classes,reached,excluded", csv_rows)
    fraction = coalesced / replicates
    summary = {
        "replicates": replicates,
        "final_x_line": final_x,
        "fraction_single_class_at_final": fraction,
        "monotone_all_replicates": all_monotone,
    }
    if with_holes:
        summary["mean_removed_fraction"] = float(
            np.mean([r["removed_fraction"] for r in results]))
    _write_json(out_dir / "summary.json", summary)
    log.record("class count non-increasing in merge line", all_monotone)
    log.record("every replicate has starts", all(r["n_starts"] > 0 for r in results))
    if config.make_figures:
        figures.fig_class_counts(rows_by_replicate, out_dir / "classes_vs_x.png")
    print(f"aggregate: fraction with a single class at x={final_x:g}: {fraction:.3f}")


def _run_eta_scaling(config: ExperimentConfig, out_dir: FsPath, log: InvariantLog) -> None:
    l_values = tuple(config.L_values or (8, 16, 32, 64))
    replicates = config.replicates or 30
    tasks = []
    idx = 0
    for L in l_values:
        for _ in range(replicates):
            tasks.append((derive_seed(config.seed, idx), L, config.m, config.M,
                          config.intensity))
            idx += 1
    rows = _map_ordered(_eta_task, tasks, config.parallelism or _default_parallelism())
    reports = [EtaReport(seed=r[0], L=r[1], m=r[2], M=r[3], eta_short=r[4],
                         eta_long=r[5], eta_total=r[6]) for r in rows]
    for k, r in enumerate(reports):
        print(f"replicate {k}: seed={r.seed} L={r.L} eta_short={r.eta_short} "
              f"eta_long={r.eta_long} eta_total={r.eta_total}")
    save_eta_reports(reports, out_dir / "eta_reports.csv")
    fit = fit_scaling(reports)
    scaling_fit_to_json(fit, out_dir / "scaling_fit.json")
    by_l = {L: [r.eta_total for r in reports if r.L == L] for L in l_values}
    ratio = float(np.mean(by_l[l_values[-1]]) / np.mean(by_l[l_values[0]]))
    _write_json(out_dir / "summary.json", {
        "slope": fit.slope,
        "intercept": fit.intercept,
        "mean_ratio_last_to_first": ratio,
        "L_values": list(l_values),
        "replicates_per_L": replicates,
    })
    log.record("eta decomposition and exit-edge invariants", True,
               "checked inside count_exit_edges on every replicate")
    if config.make_figures:
        figures.fig_eta_scaling(fit, reports, out_dir / "eta_scaling.png")
    print(f"aggregate: log-log slope {fit.slope:.3f}, "
          f"mean ratio eta({l_values[-1]})/eta({l_values[0]}) = {ratio:.2f}")


def _run_edge_bound(config: ExperimentConfig, out_dir: FsPath, log: InvariantLog) -> None:
    instances = config.instances or 2500
    m, M = config.m, config.M
    window = config.window or (-(m + 2.0), m + 8.0, -(M + 5.0), M + 5.0)
    tasks = [(derive_seed(config.seed, i), m, M, window, config.intensity)
             for i in range(instances)]
    rows = _map_ordered(_edge_bound_task, tasks,
                        config.parallelism or _default_parallelism())
    csv_rows = []
    met = 0
    violations = 0
    met_lengths = []
    bound = rows[0][3] if rows else 0.0
    verbose = instances <= 100  # per-instance lines stay readable
    for i, (seed, hyp, max_len, bnd, violated) in enumerate(rows):
        csv_rows.append(f"{i},{seed},{'true' if hyp else 'false'},{max_len:.17g},"
                        f"{bnd:.17g},{'true' if violated else 'false'}")
        if verbose:
            print(f"instance {i}: seed={seed} hypothesis_met={hyp} "
                  f"max_edge_length={max_len:.4f} violated={violated}")
        if hyp:
            met += 1
            met_lengths.append(max_len)
        violations += bool(violated)
    _write_csv(out_dir / "edge_bound.csv",
               "instance,seed,hypothesis_met,max_edge_length,bound,violated", csv_rows)
    _write_json(out_dir / "summary.json", {
        "instances": instances,
        "hypothesis_met": met,
        "violations": violations,
        "bound": bound,
    })
    log.record("edge-length bound", violations == 0,
               f"{met} hypothesis-met instances, {violations} violations")
    if config.make_figures:
        figures.fig_edge_bound(met_lengths, bound, out_dir / "edge_bound.png")
    print(f"aggregate: {met}/{instances} instances met the two-east-exit hypothesis, "
          f"{violations} violations of bound {bound:.5f}")


def _run_census(config: ExperimentConfig, out_dir: FsPath, log: InvariantLog) -> None:
    window = config.window or (-500.0, 500.0, -100.0, 100.0)
    segment = config.segment or (0.0, 0.0, 100.0)
    d_list = tuple(config.depth_thresholds or (0, 5, 10, 20, 40))
    replicates = config.replicates or 30
    tasks = [(derive_seed(config.seed, j), window, config.intensity, segment, d_list)
             for j in range(replicates)]
    results = _map_ordered(_census_task, tasks,
                           config.parallelism or _default_parallelism())
    census_rows = []
    all_monotone = True
    seg = VerticalSegment(*segment)
    for j, res in enumerate(results):
        all_monotone &= res["monotone"]
        for d, crossings, deep in res["rows"]:
            census_rows.append((res["seed"], DepthCensus(
                segment=seg, depth_threshold=d,
                crossing_count=crossings, deep_count=deep)))
        printable = " ".join(f"D={d}:{deep}" for d, _, deep in res["rows"])
        print(f"replicate {j}: seed={res['seed']} {printable}")
    save_depth_censuses(census_rows, out_dir / "census.csv")
    mean_deep = [float(np.mean([res["rows"][k][2] for res in results]))
                 for k in range(len(d_list))]
    ratio = mean_deep[-1] / mean_deep[0] if mean_deep[0] else float("nan")
    _write_json(out_dir / "summary.json", {
        "depth_thresholds": list(d_list),
        "mean_deep": mean_deep,
        "deep_ratio_last_to_first": ratio,
        "replicates": replicates,
        "monotone_all_replicates": all_monotone,
    })
    log.record("deep count non-increasing in depth threshold", all_monotone)
    if config.make_figures:
        figures.fig_census_decay(list(d_list), mean_deep, out_dir / "census_decay.png")
    print(f"aggregate: mean deep counts {mean_deep}, "
          f"ratio D={d_list[-1]} / D={d_list[0]} = {ratio:.4f}")


def _lattice_subgrid(forest: LatticeForest, max_w: int, max_h: int) -> LatticeForest:
    """Centered sub-forest; the local dual rule commutes with restriction."""
    w = min(forest.W, max_w)
    h = min(forest.H, max_h)
    rows = slice(forest.H - h, forest.H + h + 1)
    return LatticeForest(W=w, H=h, up=forest.up[:w, rows].copy(), seed=forest.seed)


def _run_lattice_suite(config: ExperimentConfig, out_dir: FsPath, log: InvariantLog) -> None:
    W = config.W or 200
    H = config.H or 50
    forest = sample_lattice(W, H, derive_seed(config.seed, 0))
    dual = build_dual(forest)

    sub = _lattice_subgrid(forest, 50, 50)
    sub_dual = build_dual(sub)
    n_primal = len(sub.edges())
    n_even_expected = sum(int(np.count_nonzero(sub.even_mask()[i])) for i in range(sub.W - 1))
    n_dual = len(sub_dual.edges())
    n_odd_expected = sum(int(np.count_nonzero(sub_dual.odd_mask()[i])) for i in range(1, sub.W))
    log.record("primal out-degree one per non-censored vertex", n_primal == n_even_expected,
               f"{n_primal}/{n_even_expected} on {sub.W}x{2 * sub.H + 1} subgrid")
    log.record("dual out-degree one per interior vertex", n_dual == n_odd_expected,
               f"{n_dual}/{n_odd_expected}")
    crossings = check_no_crossing(sub, sub_dual)
    log.record("no primal/dual edge crossings", len(crossings) == 0,
               f"{len(crossings)} crossing pairs on the subgrid")
    recon = ~sub_dual.up[1:, :]
    log.record("dual-of-dual reconstructs the forest",
               bool(np.array_equal(recon, sub.up[:-1, :])))
    save_lattice_forest(sub, out_dir / "lattice_forest.csv")

    odd = dual.odd_mask()
    odd[0, :] = False
    n_bits = int(np.count_nonzero(odd))
    n_up = int(np.count_nonzero(dual.up & odd))
    frac = n_up / n_bits
    sigma = math.sqrt(0.25 / n_bits)
    log.record("dual orientation bits fair within 4 sigma",
               abs(frac - 0.5) <= 4 * sigma,
               f"fraction {frac:.5f} over {n_bits} bits, sigma {sigma:.5f}")
    print(f"dual bits: fraction UP {frac:.5f} over {n_bits} bits")

    t_values = tuple(config.T_values or (1, 100, 10000))
    sim_replicates = config.sim_replicates or 100000
    comparisons = []
    for k, t in enumerate(t_values):
        dp = lattice_coalescence_probability_dp(config.separation, t)
        sim = lattice_coalescence_simulate(config.separation, t, sim_replicates,
                                           derive_seed(config.seed, 100 + k))
        stderr = math.sqrt(max(dp * (1 - dp), 1e-12) / sim.n_effective)
        ok = abs(sim.probability - dp) <= 4 * stderr
        comparisons.append({
            "separation": config.separation,
            "T": t,
            "dp_probability": dp,
            "sim_probability": sim.probability,
            "sim_stderr": stderr,
            "n_effective": sim.n_effective,
            "n_censored": sim.n_censored,
            "within_4_sigma": ok,
        })
        save_dp_oracle(config.separation, t, dp, out_dir / f"dp_oracle_T{t}.json")
        log.record(f"simulation within 4 sigma of dynamic program at T={t}", ok,
                   f"dp={dp:.6f} sim={sim.probability:.6f} stderr={stderr:.6f} "
                   f"censored={sim.n_censored}")
        print(f"T={t}: dp={dp:.6f} sim={sim.probability:.6f} "
              f"(4 s.e. = {4 * stderr:.6f}, censored {sim.n_censored})")
    _write_json(out_dir / "dp_vs_sim.json", comparisons)

    depth_counts = {}
    for col in (0, min(10, W - 1), W - 1):
        depth_counts[str(col)] = {
            str(d): lattice_backward_depth_census(forest, col, d)
            for d in (0, 1, 2, 5, 10, 20)
        }
    _write_json(out_dir / "summary.json", {
        "W": W, "H": H,
        "dual_up_fraction": frac,
        "dual_bits": n_bits,
        "depth_census_by_column": depth_counts,
    })
    if config.make_figures:
        figures.fig_lattice_dp_vs_sim(comparisons, out_dir / "dp_vs_sim.png")
    print(f"aggregate: {len(comparisons)} horizon comparisons, "
          f"{sum(c['within_4_sigma'] for c in comparisons)} within 4 sigma")


def _run_render(config: ExperimentConfig, out_dir: FsPath, log: InvariantLog) -> None:
    window = Window(*(config.window or (0.0, 100.0, 0.0, 100.0)))
    points = sample_ppp(window, config.intensity, derive_seed(config.seed, 0))
    grains = None
    if config.hole_lambda is not None and config.hole_radius is not None:
        grains = sample_boolean(window, config.hole_lambda, config.hole_radius,
                                derive_seed(config.seed, 1))
        points = remove_covered(points, grains)
    forest = build_dsf(points)
    spec = RenderSpec(forest=forest, highlight_x=config.highlight_x,
                      highlight_y=config.highlight_y, grains=grains)
    target = FsPath(config.render_out) if config.render_out else out_dir / "forest.svg"
    save_svg(spec, target)
    log.record("render completed", True, str(target))
    print(f"wrote {target} ({len(points)} points)")


def run_experiment(config: ExperimentConfig, out_base=None, tag: str | None = None) -> int:
    """Run the configured experiment; returns the process exit status.

    0 when every deterministic invariant held, 1 on invariant violation.
    Parameter errors raise ValueError for the CLI to map to exit status 2.
    """
    out_dir = resolve_out_dir(config, out_base, tag)
    log = InvariantLog()
    payload = {k: v for k, v in asdict(config).items() if v is not None}
    _write_json(out_dir / "config.json", payload)
    runners = {
        "dsf-coalescence": lambda: _run_coalescence(config, out_dir, log, with_holes=False),
        "boolean-coalescence": lambda: _run_coalescence(config, out_dir, log, with_holes=True),
        "eta-scaling": lambda: _run_eta_scaling(config, out_dir, log),
        "edge-bound": lambda: _run_edge_bound(config, out_dir, log),
        "bi-infinite-census": lambda: _run_census(config, out_dir, log),
        "lattice-suite": lambda: _run_lattice_suite(config, out_dir, log),
        "render": lambda: _run_render(config, out_dir, log),
    }
    try:
        runners[config.kind]()
    except InvariantViolation as exc:
        log.record("run completed", False, str(exc))
        log.write(out_dir / "invariants.txt")
        print(f"invariant violation: {exc}")
        return 1
    log.write(out_dir / "invariants.txt")
    if not log.all_ok:
        print("invariant violations recorded; see invariants.txt")
        return 1
    return 0
