"""Command-line front end: run / sweep / classify / bounds / drift-check / plot.

Every subcommand is a thin wrapper over the library; identical parameters
give identical results.  Exit codes: 0 success, 1 validation error,
2 when a drift check reports a violated verdict.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .analysis import classify_leaves, multi_mutation_drift_bounds
from .drift_lab import drift_check
from .errors import ConfigError, GpLabError
from .evolution import InitSpec, RunConfig, run
from .experiments import (
    SweepConfig,
    plot_sweep,
    read_summary_csv,
    summarize,
    sweep,
    write_raw_csv,
    write_summary_csv,
)
from .gp_core import PROBLEMS, GpTree, parse_tree_text

_RUN_KEYS = {
    "problem", "bloat_control", "k_dist", "n", "init", "seed",
    "max_iterations", "trace", "stop_mode",
}
_INIT_KEYS = {"kind", "count", "var", "leaves"}
_SWEEP_KEYS = {
    "problem", "bloat_control", "k_dist", "init_kind", "init_leaves", "n_grid",
    "t_init_grid", "reps", "master_seed", "stop_mode", "max_iterations",
    "include_timing", "workers",
}


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return doc


def _reject_unknown(doc: dict, allowed: set[str], what: str) -> None:
    for key in doc:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in {what}")


def _require(doc: dict, key: str, what: str):
    if key not in doc:
        raise ConfigError(f"missing key {key!r} in {what}")
    return doc[key]


def _build_init(doc) -> InitSpec:
    if not isinstance(doc, dict):
        raise ConfigError("'init' must be an object")
    _reject_unknown(doc, _INIT_KEYS, "init")
    kind = _require(doc, "kind", "init")
    if kind == "explicit":
        leaves = _require(doc, "leaves", "init")
        return InitSpec(kind="explicit", leaves=tuple(parse_tree_text(leaves)))
    return InitSpec(
        kind=kind, count=int(doc.get("count", 1)), var=int(doc.get("var", 1))
    )


def load_run_config(path: str, seed_override: int | None = None) -> RunConfig:
    doc = _load_json(path)
    _reject_unknown(doc, _RUN_KEYS, "run config")
    trace = doc.get("trace", "off")
    if isinstance(trace, float):
        trace = int(trace)
    return RunConfig(
        problem=_require(doc, "problem", "run config"),
        bloat_control=bool(_require(doc, "bloat_control", "run config")),
        k_dist=_require(doc, "k_dist", "run config"),
        n=int(_require(doc, "n", "run config")),
        init=_build_init(_require(doc, "init", "run config")),
        seed=seed_override if seed_override is not None else int(doc.get("seed", 0)),
        max_iterations=(
            int(doc["max_iterations"]) if doc.get("max_iterations") is not None else None
        ),
        trace=trace,
        stop_mode=doc.get("stop_mode", "auto"),
    )


def load_sweep_config(path: str, seed_override: int | None = None) -> SweepConfig:
    doc = _load_json(path)
    _reject_unknown(doc, _SWEEP_KEYS, "sweep config")
    return SweepConfig(
        problem=_require(doc, "problem", "sweep config"),
        bloat_control=bool(_require(doc, "bloat_control", "sweep config")),
        k_dist=_require(doc, "k_dist", "sweep config"),
        init_kind=_require(doc, "init_kind", "sweep config"),
        n_grid=tuple(int(v) for v in _require(doc, "n_grid", "sweep config")),
        t_init_grid=tuple(int(v) for v in _require(doc, "t_init_grid", "sweep config")),
        reps=int(_require(doc, "reps", "sweep config")),
        master_seed=(
            seed_override
            if seed_override is not None
            else int(_require(doc, "master_seed", "sweep config"))
        ),
        stop_mode=doc.get("stop_mode", "auto"),
        max_iterations=(
            int(doc["max_iterations"]) if doc.get("max_iterations") is not None else None
        ),
        include_timing=bool(doc.get("include_timing", False)),
        workers=int(doc["workers"]) if doc.get("workers") is not None else None,
        init_leaves=doc.get("init_leaves"),
    )


def _cmd_run(args) -> int:
    config = load_run_config(args.config, args.seed)
    result = run(config)
    if args.trace:
        result.write_trace_csv(args.trace)
    print(json.dumps(result.to_json_dict(), indent=2, sort_keys=True))
    return 0


def _cmd_sweep(args) -> int:
    config = load_sweep_config(args.config, args.seed)
    result = sweep(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_raw_csv(result.rows, out / "runs.csv")
    write_summary_csv(result.cells, out / "summary.csv")
    print(f"wrote {len(result.rows)} runs and {len(result.cells)} cell summaries to {out}")
    bad = [c for c in result.cells if c.success_rate < 1.0]
    for c in bad:
        print(f"warning: cell n={c.n} t_init={c.t_init} success rate {c.success_rate:.2f}")
    return 0


def _cmd_classify(args) -> int:
    if args.problem not in PROBLEMS:
        raise ConfigError(f"unknown problem {args.problem!r}")
    leaves = parse_tree_text(args.tree)
    tree = GpTree(leaves, args.n, args.problem)
    cls = classify_leaves(tree)
    print(f"r={cls.redundant} c+={cls.critical_pos} c-={cls.critical_neg}")
    for pos, (lit, label) in enumerate(zip(leaves, cls.labels), start=1):
        print(f"{pos} {lit} {label}")
    return 0


def _cmd_bounds(args) -> int:
    b1, b2 = multi_mutation_drift_bounds(args.m)
    print(f"b1 = {b1:.12e}")
    print(f"b2_coefficient = {b2:.12e}")
    return 0


def _cmd_drift_check(args) -> int:
    reports = drift_check(args.theorem, fixture=args.fixture, trials=args.trials,
                          seed=args.seed)
    header = f"{'id':<4} {'fixture':<38} {'bound':>12} {'estimate':>12} {'2se':>10} {'verdict':<10}"
    print(header)
    print("-" * len(header))
    worst = 0
    for r in reports:
        se = 0.0 if r.std_error != r.std_error else r.std_error  # NaN-safe
        print(
            f"{r.theorem:<4} {r.fixture:<38} {r.bound:>12.4f} {r.estimate:>12.4f} "
            f"{2 * se:>10.4f} {r.verdict:<10}"
        )
        for key, val in r.extra.items():
            print(f"     {key} = {val}")
        if r.verdict == "violated":
            worst = 2
    return worst


def _cmd_plot(args) -> int:
    cells = read_summary_csv(Path(args.in_dir) / "summary.csv")
    written = plot_sweep(cells, args.out)
    for p in written:
        print(f"wrote {p}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gp-lab",
        description=(
            "(1+1) GP on ORDER/MAJORITY: runs, sweeps, leaf classification, "
            "drift-bound checks and scaling plots."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute one run from a JSON config")
    p.add_argument("--config", required=True, help="path to the run config JSON")
    p.add_argument("--trace", help="write the iteration trace CSV here")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="execute a grid of runs from a JSON config")
    p.add_argument("--config", required=True, help="path to the sweep config JSON")
    p.add_argument("--out", required=True, help="output directory for CSV artifacts")
    p.add_argument("--seed", type=int, help="override the config master seed")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("classify", help="classify the leaves of a tree")
    p.add_argument("--problem", required=True, choices=sorted(PROBLEMS))
    p.add_argument("--n", type=int, required=True, help="number of variables")
    p.add_argument("--tree", required=True, help='leaf text, e.g. "x1 !x1 x2"')
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("bounds", help="print the multi-mutation drift bound constants")
    p.add_argument("--m", type=int, default=10, help="potential weight (default 10)")
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("drift-check", help="check one drift bound against simulation")
    p.add_argument("--theorem", required=True, choices=["2", "3", "4", "5", "6", "L8", "l8"])
    p.add_argument("--fixture", help="restrict to fixtures whose name contains this")
    p.add_argument("--trials", type=int, help="trials per fixture (default 10000)")
    p.add_argument("--seed", type=int, default=0xD81F7)
    p.set_defaults(func=_cmd_drift_check)

    p = sub.add_parser("plot", help="render SVG plots from sweep summaries")
    p.add_argument("--in", dest="in_dir", required=True, help="directory with summary.csv")
    p.add_argument("--out", required=True, help="output directory for SVG files")
    p.set_defaults(func=_cmd_plot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GpLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
