"""Matplotlib figures written next to the delimited experiment reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def fig_eta_scaling(fit, reports, path) -> None:
    """Log-log means with the fitted power law."""
    fig, ax = plt.subplots(figsize=(5.5, 4))
    by_l = {}
    for r in reports:
        by_l.setdefault(r.L, []).append(r.eta_total)
    for L, vals in sorted(by_l.items()):
        ax.plot([L] * len(vals), vals, ".", color="0.7", ms=3, zorder=1)
    ax.plot(fit.Ls, fit.means, "o", color="C0", label="mean exit-edge count")
    grid = np.linspace(min(fit.Ls), max(fit.Ls), 50)
    ax.plot(grid, np.exp(fit.intercept) * grid ** fit.slope, "-", color="C1",
            label=f"fit slope {fit.slope:.3f}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("L")
    ax.set_ylabel("edges leaving the rectangle")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def fig_class_counts(rows_by_replicate, path) -> None:
    """Coalescence class count against the merge line, one curve per replicate."""
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for rows in rows_by_replicate:
        xs = [r[0] for r in rows]
        cs = [r[1] for r in rows]
        ax.step(xs, cs, where="post", alpha=0.5)
    ax.set_xlabel("merge line abscissa")
    ax.set_ylabel("disjoint path classes")
    ax.set_ylim(bottom=0)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def fig_census_decay(thresholds, mean_deep, path) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 4))
    ax.plot(thresholds, mean_deep, "o-")
    ax.set_xlabel("backward depth threshold")
    ax.set_ylabel("mean deep crossings")
    ax.set_ylim(bottom=0)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def fig_edge_bound(max_lengths, bound, path) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 4))
    if max_lengths:
        ax.hist(max_lengths, bins=30, color="C0", alpha=0.8)
    ax.axvline(bound, color="C3", ls="--", label=f"bound {bound:.4f}")
    ax.set_xlabel("max edge length from the cell")
    ax.set_ylabel("instances")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def fig_lattice_dp_vs_sim(comparisons, path) -> None:
    """DP probability against the Monte Carlo estimate per horizon."""
    fig, ax = plt.subplots(figsize=(5.5, 4))
    ts = [c["T"] for c in comparisons]
    ax.plot(ts, [c["dp_probability"] for c in comparisons], "o-", label="dynamic program")
    ax.errorbar(ts, [c["sim_probability"] for c in comparisons],
                yerr=[4 * c["sim_stderr"] for c in comparisons],
                fmt="s", capsize=3, label="simulation (4 s.e.)")
    ax.set_xscale("log")
    ax.set_xlabel("horizon T")
    ax.set_ylabel("coalescence probability")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
