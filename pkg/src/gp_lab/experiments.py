"""Sweep runner, scaling-law fits, and bloat tracking.

A sweep executes reps x (n-grid x t_init-grid) runs with per-run seeds
derived from the master seed and the cell coordinates, so the aggregate
output is byte-identical no matter how many worker threads execute it or
in which order they finish.

Raw CSV columns (exact order):
run_id,problem,bloat_control,k_dist,n,t_init,seed,iterations,exhausted,max_size,final_size,final_fitness,wall_ns

wall_ns is 0 unless ``include_timing`` is set: measured wall time would
break the byte-identical determinism contract, so timing is opt-in.
"""

from __future__ import annotations

import csv
import math
import os
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, DomainError
from .evolution import InitSpec, RunConfig, RunResult, run
from .gp_core import parse_tree_text
from .rng import derive_seed

RAW_COLUMNS = (
    "run_id", "problem", "bloat_control", "k_dist", "n", "t_init", "seed",
    "iterations", "exhausted", "max_size", "final_size", "final_fitness", "wall_ns",
)

SUMMARY_COLUMNS = (
    "n", "t_init", "reps", "t_min", "mean_iterations", "median_iterations",
    "stddev_iterations", "mean_max_size", "max_max_size", "success_rate",
)

MODEL_POWER = "power"
MODEL_SIZE_PLUS_NLOGN = "size-plus-nlogn"
MODEL_SIZELOG_PLUS_NLOG3 = "sizelog-plus-nlog3"
MODELS = (MODEL_POWER, MODEL_SIZE_PLUS_NLOGN, MODEL_SIZELOG_PLUS_NLOG3)


def t_min_scale(n: int, t_init: int) -> float:
    """max(T_init, n * ln(n)^2), the reference scale for bloat ratios."""
    return float(max(t_init, n * math.log(n) ** 2))


def resolve_workers(requested: int | None = None) -> int:
    env = os.environ.get("GP_LAB_THREADS")
    cap = None
    if env:
        try:
            cap = max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"GP_LAB_THREADS must be an integer, got {env!r}") from exc
    w = requested if requested is not None else (os.cpu_count() or 1)
    if cap is not None:
        w = min(w, cap)
    return max(1, w)


@dataclass(frozen=True)
class SweepConfig:
    problem: str
    bloat_control: bool
    k_dist: str
    init_kind: str  # "random" | "all_neg" | "explicit"
    n_grid: tuple[int, ...]
    t_init_grid: tuple[int, ...]
    reps: int = 50
    master_seed: int = 0
    stop_mode: str = "auto"
    max_iterations: int | None = None
    include_timing: bool = False
    workers: int | None = None
    init_leaves: str | None = None  # leaf text, only with init_kind="explicit"

    def __post_init__(self) -> None:
        if self.init_kind not in ("random", "all_neg", "explicit"):
            raise ConfigError(f"unknown init_kind {self.init_kind!r}")
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if not self.n_grid or not self.t_init_grid:
            raise ConfigError("grid must be non-empty")
        if self.init_kind == "explicit":
            if self.init_leaves is None:
                raise ConfigError("init_kind 'explicit' needs init_leaves")
            count = len(parse_tree_text(self.init_leaves))
            for t in self.t_init_grid:
                if t != count:
                    raise ConfigError(
                        f"explicit init has {count} leaves but the grid asks for t_init={t}"
                    )
        elif self.init_leaves is not None:
            raise ConfigError("init_leaves is only valid with init_kind 'explicit'")
        # delegate the rest of the validation to RunConfig
        self.run_config(self.n_grid[0], self.t_init_grid[0], 0)

    def run_config(self, n: int, t_init: int, rep: int) -> RunConfig:
        if self.init_kind == "explicit":
            init = InitSpec(kind="explicit", leaves=tuple(parse_tree_text(self.init_leaves)))
        else:
            init = InitSpec(kind=self.init_kind, count=t_init, var=1)
        return RunConfig(
            problem=self.problem,
            bloat_control=self.bloat_control,
            k_dist=self.k_dist,
            n=n,
            init=init,
            seed=derive_seed(self.master_seed, n, t_init, rep),
            max_iterations=self.max_iterations,
            trace="off",
            stop_mode=self.stop_mode,
        )


@dataclass(frozen=True)
class RunRow:
    run_id: int
    problem: str
    bloat_control: bool
    k_dist: str
    n: int
    t_init: int
    seed: int
    iterations: int
    exhausted: bool
    max_size: int
    final_size: int
    final_fitness: int
    wall_ns: int

    def as_csv(self) -> list[str]:
        return [
            str(self.run_id), self.problem, _fmt_bool(self.bloat_control), self.k_dist,
            str(self.n), str(self.t_init), str(self.seed), str(self.iterations),
            _fmt_bool(self.exhausted), str(self.max_size), str(self.final_size),
            str(self.final_fitness), str(self.wall_ns),
        ]


@dataclass(frozen=True)
class CellSummary:
    n: int
    t_init: int
    reps: int
    t_min: float
    mean_iterations: float
    median_iterations: float
    stddev_iterations: float
    mean_max_size: float
    max_max_size: int
    success_rate: float


@dataclass
class SweepResult:
    config: SweepConfig
    rows: list[RunRow]
    cells: list[CellSummary] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.cells:
            self.cells = summarize(self.rows)


def _fmt_bool(b: bool) -> str:
    return "true" if b else "false"


def _parse_bool(s: str) -> bool:
    if s == "true":
        return True
    if s == "false":
        return False
    raise ConfigError(f"bad boolean {s!r} in CSV")


def sweep(config: SweepConfig) -> SweepResult:
    """Execute the full grid; deterministic aggregate per master seed."""
    cells = [(n, t) for n in config.n_grid for t in config.t_init_grid]
    jobs = [(ci, rep) for ci in range(len(cells)) for rep in range(config.reps)]
    rows: list[RunRow | None] = [None] * len(jobs)

    def work(job_index: int) -> None:
        ci, rep = jobs[job_index]
        n, t_init = cells[ci]
        rc = config.run_config(n, t_init, rep)
        t0 = time.perf_counter_ns() if config.include_timing else 0
        result = run(rc)
        wall = time.perf_counter_ns() - t0 if config.include_timing else 0
        rows[job_index] = RunRow(
            run_id=job_index,
            problem=config.problem,
            bloat_control=config.bloat_control,
            k_dist=config.k_dist,
            n=n,
            t_init=t_init,
            seed=rc.seed,
            iterations=result.iterations_to_opt,
            exhausted=result.exhausted,
            max_size=result.max_size,
            final_size=result.final_size,
            final_fitness=result.final_fitness,
            wall_ns=wall,
        )

    workers = resolve_workers(config.workers)
    if workers == 1:
        for j in range(len(jobs)):
            work(j)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, range(len(jobs))))
    done = [r for r in rows if r is not None]
    assert len(done) == len(jobs)
    return SweepResult(config, done)


def summarize(rows: Sequence[RunRow]) -> list[CellSummary]:
    by_cell: dict[tuple[int, int], list[RunRow]] = {}
    for r in rows:
        by_cell.setdefault((r.n, r.t_init), []).append(r)
    out = []
    for (n, t_init) in sorted(by_cell):
        rs = by_cell[(n, t_init)]
        iters = [r.iterations for r in rs]
        out.append(
            CellSummary(
                n=n,
                t_init=t_init,
                reps=len(rs),
                t_min=t_min_scale(n, t_init),
                mean_iterations=statistics.fmean(iters),
                median_iterations=float(statistics.median(iters)),
                stddev_iterations=statistics.stdev(iters) if len(iters) > 1 else 0.0,
                mean_max_size=statistics.fmean(r.max_size for r in rs),
                max_max_size=max(r.max_size for r in rs),
                success_rate=sum(1 for r in rs if not r.exhausted) / len(rs),
            )
        )
    return out


def flagged_cells(rows: Sequence[RunRow]) -> list[tuple[int, int, float]]:
    """Cells with budget-exhausted runs: (n, t_init, success_rate)."""
    return [
        (c.n, c.t_init, c.success_rate) for c in summarize(rows) if c.success_rate < 1.0
    ]


# ---------------------------------------------------------------------------
# CSV I/O (round-trip exact)
# ---------------------------------------------------------------------------


def write_raw_csv(rows: Sequence[RunRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RAW_COLUMNS)
        for r in rows:
            w.writerow(r.as_csv())


def read_raw_csv(path: str | Path) -> list[RunRow]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != RAW_COLUMNS:
            raise ConfigError(f"unexpected raw CSV header {header!r}")
        for rec in reader:
            out.append(
                RunRow(
                    run_id=int(rec[0]), problem=rec[1], bloat_control=_parse_bool(rec[2]),
                    k_dist=rec[3], n=int(rec[4]), t_init=int(rec[5]), seed=int(rec[6]),
                    iterations=int(rec[7]), exhausted=_parse_bool(rec[8]),
                    max_size=int(rec[9]), final_size=int(rec[10]),
                    final_fitness=int(rec[11]), wall_ns=int(rec[12]),
                )
            )
    return out


def write_summary_csv(cells: Sequence[CellSummary], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for c in cells:
            w.writerow(
                [
                    str(c.n), str(c.t_init), str(c.reps), repr(c.t_min),
                    repr(c.mean_iterations), repr(c.median_iterations),
                    repr(c.stddev_iterations), repr(c.mean_max_size),
                    str(c.max_max_size), repr(c.success_rate),
                ]
            )


def read_summary_csv(path: str | Path) -> list[CellSummary]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != SUMMARY_COLUMNS:
            raise ConfigError(f"unexpected summary CSV header {header!r}")
        for rec in reader:
            out.append(
                CellSummary(
                    n=int(rec[0]), t_init=int(rec[1]), reps=int(rec[2]),
                    t_min=float(rec[3]), mean_iterations=float(rec[4]),
                    median_iterations=float(rec[5]), stddev_iterations=float(rec[6]),
                    mean_max_size=float(rec[7]), max_max_size=int(rec[8]),
                    success_rate=float(rec[9]),
                )
            )
    return out


# ---------------------------------------------------------------------------
# scaling fits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CellRatio:
    n: int
    t_init: int
    observed: float
    predicted: float

    @property
    def ratio(self) -> float:
        return self.observed / self.predicted


@dataclass(frozen=True)
class FitResult:
    model: str
    coefficients: tuple[float, ...]
    slope: float
    slope_stderr: float
    ratios: tuple[CellRatio, ...]
    ratio_spread: float
    flagged: bool
    spread_threshold: float

    def slope_ci95(self) -> tuple[float, float]:
        if math.isnan(self.slope_stderr):
            return (self.slope, self.slope)
        return (self.slope - 1.96 * self.slope_stderr, self.slope + 1.96 * self.slope_stderr)

    def to_json_dict(self) -> dict:
        return {
            "model": self.model,
            "coefficients": list(self.coefficients),
            "slope": None if math.isnan(self.slope) else self.slope,
            "slope_stderr": None if math.isnan(self.slope_stderr) else self.slope_stderr,
            "ratio_spread": self.ratio_spread,
            "flagged": self.flagged,
            "spread_threshold": self.spread_threshold,
            "ratios": [
                {"n": r.n, "t_init": r.t_init, "observed": r.observed,
                 "predicted": r.predicted, "ratio": r.ratio}
                for r in self.ratios
            ],
        }


def _check_grid(xs: Sequence[float]) -> None:
    if len(xs) < 3:
        raise DomainError("need at least 3 cells to fit")
    if max(xs) / min(xs) < 10.0:
        raise DomainError("dominant variable must span at least one decade")


def fit_scaling(
    cells: Sequence[CellSummary],
    model: str,
    spread_threshold: float = 3.0,
) -> FitResult:
    """Least-squares fit of a scaling model to per-cell mean iterations.

    ``power`` fits y = a * t_init^b on log-log axes and reports the slope
    with its standard error; the other models fit their coefficients
    linearly.  The per-cell observed/predicted ratio table and its
    max/min spread quantify constant-factor containment; ``flagged`` is
    set when the spread exceeds the threshold.
    """
    if model not in MODELS:
        raise DomainError(f"unknown model {model!r}")
    y = np.array([c.mean_iterations for c in cells], dtype=float)
    if np.any(y <= 0):
        raise DomainError("mean iterations must be positive to fit")
    slope = math.nan
    slope_se = math.nan
    if model == MODEL_POWER:
        x = np.array([c.t_init for c in cells], dtype=float)
        _check_grid(x)
        lx, ly = np.log(x), np.log(y)
        a_mat = np.vstack([lx, np.ones_like(lx)]).T
        coef, res, _rank, _sv = np.linalg.lstsq(a_mat, ly, rcond=None)
        slope, intercept = float(coef[0]), float(coef[1])
        dof = len(x) - 2
        if dof > 0 and res.size:
            s2 = float(res[0]) / dof
            sxx = float(np.sum((lx - lx.mean()) ** 2))
            slope_se = math.sqrt(s2 / sxx)
        coefficients = (math.exp(intercept), slope)
        pred = coefficients[0] * x ** slope
    elif model == MODEL_SIZE_PLUS_NLOGN:
        f = np.array([c.t_init + c.n * math.log(c.n) for c in cells], dtype=float)
        _check_grid(f)
        a = float(np.dot(f, y) / np.dot(f, f))
        coefficients = (a,)
        pred = a * f
    else:
        f1 = np.array([c.t_init * math.log(c.t_init) for c in cells], dtype=float)
        f2 = np.array([c.n * math.log(c.n + 1) ** 3 for c in cells], dtype=float)
        _check_grid(f1)
        a_mat = np.vstack([f1, f2]).T
        coef, _res, _rank, _sv = np.linalg.lstsq(a_mat, y, rcond=None)
        coefficients = (float(coef[0]), float(coef[1]))
        pred = a_mat @ np.array(coefficients)
        pred = np.maximum(pred, 1e-12)
    ratios = tuple(
        CellRatio(c.n, c.t_init, float(yo), float(pr))
        for c, yo, pr in zip(cells, y, pred)
    )
    rvals = [r.ratio for r in ratios]
    spread = max(rvals) / min(rvals) if min(rvals) > 0 else math.inf
    return FitResult(
        model=model,
        coefficients=coefficients,
        slope=slope,
        slope_stderr=slope_se,
        ratios=ratios,
        ratio_spread=spread,
        flagged=spread > spread_threshold,
        spread_threshold=spread_threshold,
    )


# ---------------------------------------------------------------------------
# bloat report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BloatCell:
    n: int
    t_init: int
    t_min: float
    q50: float
    q95: float
    q100: float


def bloat_report(rows: Sequence[RunRow]) -> list[BloatCell]:
    """Per-cell 50/95/100% quantiles of max_size / T_min."""
    by_cell: dict[tuple[int, int], list[float]] = {}
    for r in rows:
        tm = t_min_scale(r.n, r.t_init)
        by_cell.setdefault((r.n, r.t_init), []).append(r.max_size / tm)
    out = []
    for (n, t_init) in sorted(by_cell):
        ratios = np.array(by_cell[(n, t_init)])
        out.append(
            BloatCell(
                n=n,
                t_init=t_init,
                t_min=t_min_scale(n, t_init),
                q50=float(np.percentile(ratios, 50)),
                q95=float(np.percentile(ratios, 95)),
                q100=float(ratios.max()),
            )
        )
    return out


# ---------------------------------------------------------------------------
# plots
# ---------------------------------------------------------------------------


def plot_sweep(cells: Sequence[CellSummary], out_dir: str | Path) -> list[Path]:
    """Static SVG plots of mean iterations vs T_init and vs n (log axes)."""
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "gp-lab"
    import matplotlib.pyplot as plt

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    fig, ax = plt.subplots(figsize=(6, 4.5))
    for n in sorted({c.n for c in cells}):
        pts = sorted((c.t_init, c.mean_iterations) for c in cells if c.n == n)
        if len(pts) > 1:
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=f"n={n}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("initial size")
    ax.set_ylabel("mean iterations")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = out / "iterations_vs_t_init.svg"
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(6, 4.5))
    for t in sorted({c.t_init for c in cells}):
        pts = sorted((c.n, c.mean_iterations) for c in cells if c.t_init == t)
        if len(pts) > 1:
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=f"T={t}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("mean iterations")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = out / "iterations_vs_n.svg"
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)
    written.append(path)
    return written
