"""Command-line experiment runner.

Subcommands mirror the experiment kinds; flags override values from an
optional JSON config file.  Exit codes: 0 success, 1 invariant violation,
2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .experiments import ExperimentConfig, OUT_DIR_ENV, run_experiment


def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text: str) -> tuple:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _window(text: str) -> tuple:
    values = _floats(text)
    if len(values) != 4:
        raise argparse.ArgumentTypeError("window needs x_min,x_max,y_min,y_max")
    return values


def _pair(text: str) -> tuple:
    values = _floats(text)
    if len(values) != 2:
        raise argparse.ArgumentTypeError("expected lo,hi")
    return values


def _segment(text: str) -> tuple:
    values = _floats(text)
    if len(values) != 3:
        raise argparse.ArgumentTypeError("segment needs x,y_lo,y_hi")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dsf-sim",
        description="Directed spanning forest experiments on Poisson samples.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=1, help="master seed (default 1)")
    common.add_argument("--replicates", type=int, default=None)
    common.add_argument("--parallelism", type=int, default=None,
                        help="worker pool size (default: available cores)")
    common.add_argument("--out-dir", default=None,
                        help=f"report root (default env {OUT_DIR_ENV} or ./out)")
    common.add_argument("--tag", default=None,
                        help="run directory name (default: timestamp)")
    common.add_argument("--config", default=None,
                        help="JSON file with flag defaults; explicit flags win")
    common.add_argument("--no-figures", action="store_true",
                        help="skip matplotlib figure output")

    sub = parser.add_subparsers(dest="kind", required=True)

    p = sub.add_parser("dsf-coalescence", parents=[common],
                       help="class counts of coalescing paths against a merge line")
    p.add_argument("--window", type=_window, default=None)
    p.add_argument("--intensity", type=float, default=1.0)
    p.add_argument("--start-x", type=_pair, default=None, help="start abscissa range lo,hi")
    p.add_argument("--start-y-abs", type=float, default=None,
                   help="keep starts with |ordinate| <= this")
    p.add_argument("--x-lines", type=_floats, default=None)

    p = sub.add_parser("boolean-coalescence", parents=[common],
                       help="coalescence with points inside Boolean grains removed")
    p.add_argument("--window", type=_window, default=None)
    p.add_argument("--intensity", type=float, default=1.0)
    p.add_argument("--start-x", type=_pair, default=None)
    p.add_argument("--start-y-abs", type=float, default=None)
    p.add_argument("--x-lines", type=_floats, default=None)
    p.add_argument("--hole-lambda", type=float, required=True, help="germ intensity")
    p.add_argument("--hole-radius", type=float, required=True, help="grain radius")

    p = sub.add_parser("eta-scaling", parents=[common],
                       help="exit-edge counts of growing rectangles and their log-log slope")
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--M", type=int, default=1)
    p.add_argument("--L", type=_ints, default=None, help="comma-separated L values")
    p.add_argument("--intensity", type=float, default=1.0)

    p = sub.add_parser("edge-bound", parents=[common],
                       help="deterministic edge-length bound under the two-east-exit hypothesis")
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--M", type=int, default=1)
    p.add_argument("--instances", type=int, default=None)
    p.add_argument("--window", type=_window, default=None)
    p.add_argument("--intensity", type=float, default=1.0)

    p = sub.add_parser("bi-infinite-census", parents=[common],
                       help="crossings of a vertical segment on deep backward chains")
    p.add_argument("--window", type=_window, default=None)
    p.add_argument("--intensity", type=float, default=1.0)
    p.add_argument("--segment", type=_segment, default=None, help="x,y_lo,y_hi")
    p.add_argument("--D", type=_ints, default=None, help="depth thresholds")

    p = sub.add_parser("lattice-suite", parents=[common],
                       help="discrete coalescing-walk forest, dual checks and DP comparison")
    p.add_argument("--W", type=int, default=None)
    p.add_argument("--H", type=int, default=None)
    p.add_argument("--separation", type=int, default=2)
    p.add_argument("--T", type=_ints, default=None, help="horizons, comma-separated")
    p.add_argument("--sim-replicates", type=int, default=None)

    p = sub.add_parser("render", parents=[common],
                       help="render the forest (optionally with grains) to SVG")
    p.add_argument("--window", type=_window, default=None)
    p.add_argument("--intensity", type=float, default=1.0)
    p.add_argument("--highlight-x", type=_pair, default=None)
    p.add_argument("--highlight-y", type=_pair, default=None)
    p.add_argument("--hole-lambda", type=float, default=None)
    p.add_argument("--hole-radius", type=float, default=None)
    p.add_argument("--out", default=None, help="output SVG path")

    parser._dsf_subparsers = sub.choices  # reused when a config file sets defaults
    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv) -> list:
    """Load --config JSON (if any) as parser defaults; explicit flags override.

    Defaults must be pushed into every subparser: the subcommand parses into
    a fresh namespace, so only its own defaults count.
    """
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config", default=None)
    known, _ = probe.parse_known_args(argv)
    if not known.config:
        return argv
    try:
        file_values = json.loads(Path(known.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"cannot read config file {known.config}: {exc}")
    if not isinstance(file_values, dict):
        parser.error(f"config file {known.config} must hold a JSON object")
    defaults = {k.replace("-", "_"): v for k, v in file_values.items()}
    subparsers = getattr(parser, "_dsf_subparsers", {})
    valid = {action.dest for sp in subparsers.values() for action in sp._actions}
    unknown = set(defaults) - valid
    if unknown:
        parser.error(f"unknown config file keys: {', '.join(sorted(unknown))}")
    parser.set_defaults(**defaults)
    for sp in subparsers.values():
        sp.set_defaults(**{k: v for k, v in defaults.items()
                           if k in {a.dest for a in sp._actions}})
    return argv


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    get = lambda name, default=None: getattr(args, name, default)
    return ExperimentConfig(
        kind=args.kind,
        seed=args.seed,
        replicates=args.replicates,
        parallelism=args.parallelism,
        window=get("window"),
        intensity=get("intensity", 1.0),
        hole_lambda=get("hole_lambda"),
        hole_radius=get("hole_radius"),
        start_x=get("start_x"),
        start_y_abs=get("start_y_abs"),
        x_lines=get("x_lines"),
        m=get("m", 1),
        M=get("M", 1),
        L_values=get("L"),
        instances=get("instances"),
        segment=get("segment"),
        depth_thresholds=get("D"),
        W=get("W"),
        H=get("H"),
        separation=get("separation", 2),
        T_values=get("T"),
        sim_replicates=get("sim_replicates"),
        highlight_x=get("highlight_x"),
        highlight_y=get("highlight_y"),
        render_out=get("out"),
        make_figures=not args.no_figures,
    )


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    _apply_config_file(parser, argv)
    args = parser.parse_args(argv)
    try:
        config = _config_from_args(args)
        return run_experiment(config, out_base=args.out_dir, tag=args.tag)
    except (ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
