"""The (1+1) evolutionary loop: selection, stopping, trajectory recording.

Each iteration draws an op count k, applies k leaf mutations to a copy of
the best-so-far tree, and keeps the offspring unless it is worse.  Without
bloat control "not worse" compares expressed counts only; with bloat
control ties on fitness are broken toward the smaller tree.

``run`` uses the compiled engines by default.  ``engine="sequence"`` runs
a pure-Python loop over the literal in-order tree representation instead;
for ORDER the two consume the random stream identically and produce
identical results, for MAJORITY the compiled engine evolves the leaf
multiset (an exact lumping, equal in distribution but not draw-for-draw).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import engines
from .errors import ConfigError, ContractViolation
from .gp_core import (
    MAJORITY,
    ORDER,
    PROBLEMS,
    GpTree,
    Literal,
    literal_from_code,
    parse_tree_text,
)
from .mutation import (
    K_DISTRIBUTIONS,
    K_ONE_PLUS_POISSON,
    hvl_prime,
    sample_k,
)
from .rng import RngStream

STOP_AUTO = "auto"
STOP_FITNESS = "fitness"
STOP_G_ZERO = "g-zero"
STOP_MODES = (STOP_AUTO, STOP_FITNESS, STOP_G_ZERO)

TRACE_MODES = ("off", "summary", "full")

_TRACE_ROW_CAP = 4_000_000


@dataclass(frozen=True)
class Fitness:
    expressed: int
    size: int


def select(parent: Fitness, child: Fitness, bloat_control: bool) -> bool:
    """Accept the child? Ties accepted; with bloat control a fitness tie
    additionally requires the child not to be larger."""
    if bloat_control:
        return child.expressed > parent.expressed or (
            child.expressed == parent.expressed and child.size <= parent.size
        )
    return child.expressed >= parent.expressed


@dataclass(frozen=True)
class InitSpec:
    """Initial tree: `all_neg` repeats a negated variable, `random` draws
    uniform literals from the run's stream, `explicit` is verbatim."""

    kind: str
    count: int = 1
    var: int = 1
    leaves: tuple[Literal, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ("all_neg", "random", "explicit"):
            raise ConfigError(f"unknown init kind {self.kind!r}")
        if self.kind == "explicit":
            if not self.leaves:
                raise ConfigError("explicit init needs at least one leaf")
        elif self.count < 1:
            raise ConfigError("init count must be >= 1")
        if self.kind == "all_neg" and self.var < 1:
            raise ConfigError("init var must be >= 1")

    @property
    def t_init(self) -> int:
        return len(self.leaves) if self.kind == "explicit" else self.count


def build_initial_arrays(init: InitSpec, n: int, rng: RngStream) -> tuple[np.ndarray, np.ndarray]:
    """Materialize the initial leaf arrays; `random` advances the stream."""
    if init.kind == "all_neg":
        if init.var > n:
            raise ConfigError(f"init var x{init.var} exceeds n={n}")
        var = np.full(init.count, init.var, dtype=np.int32)
        sgn = np.full(init.count, -1, dtype=np.int8)
        return var, sgn
    if init.kind == "random":
        var = np.empty(init.count, dtype=np.int32)
        sgn = np.empty(init.count, dtype=np.int8)
        for j in range(init.count):
            code = rng.randint(2 * n)
            var[j] = code // 2 + 1
            sgn[j] = 1 if code % 2 == 0 else -1
        return var, sgn
    var = np.empty(len(init.leaves), dtype=np.int32)
    sgn = np.empty(len(init.leaves), dtype=np.int8)
    for j, lit in enumerate(init.leaves):
        if not 1 <= lit.var <= n:
            raise ConfigError(f"explicit init literal x{lit.var} outside [1, {n}]")
        var[j] = lit.var
        sgn[j] = 1 if lit.positive else -1
    return var, sgn


def default_budget(n: int, t_init: int) -> int:
    """Generous iteration budget that keeps sweeps terminating."""
    return int(
        math.ceil(200.0 * (t_init * math.log(t_init + 2) + n * math.log(n + 2) ** 3))
    )


@dataclass(frozen=True)
class RunConfig:
    problem: str
    bloat_control: bool
    k_dist: str
    n: int
    init: InitSpec
    seed: int
    max_iterations: int | None = None
    trace: str | int = "off"
    stop_mode: str = STOP_AUTO

    def __post_init__(self) -> None:
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}")
        if self.k_dist not in K_DISTRIBUTIONS:
            raise ConfigError(f"unknown k_dist {self.k_dist!r}")
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")
        if isinstance(self.trace, int):
            if isinstance(self.trace, bool) or self.trace < 1:
                raise ConfigError("numeric trace must be a sampling stride >= 1")
        elif self.trace not in TRACE_MODES:
            raise ConfigError(f"unknown trace mode {self.trace!r}")
        if self.stop_mode not in STOP_MODES:
            raise ConfigError(f"unknown stop_mode {self.stop_mode!r}")

    @property
    def budget(self) -> int:
        if self.max_iterations is not None:
            return self.max_iterations
        return default_budget(self.n, self.init.t_init)

    @property
    def resolved_stop_mode(self) -> str:
        if self.stop_mode != STOP_AUTO:
            return self.stop_mode
        return STOP_G_ZERO if self.bloat_control else STOP_FITNESS

    @property
    def trace_every(self) -> int:
        if self.trace == "full":
            return 1
        if isinstance(self.trace, int):
            return self.trace
        return 0


class TraceRow(NamedTuple):
    iteration: int
    fitness: int
    size: int
    k: int
    accepted: int


@dataclass
class RunResult:
    iterations_to_opt: int
    exhausted: bool
    max_size: int
    final_size: int
    final_fitness: int
    accepted_count: int
    seed: int
    trace: list[TraceRow] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "iterations_to_opt": self.iterations_to_opt,
            "exhausted": self.exhausted,
            "max_size": self.max_size,
            "final_size": self.final_size,
            "final_fitness": self.final_fitness,
            "accepted_count": self.accepted_count,
            "seed": self.seed,
        }

    def write_trace_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("iteration,fitness,size,k,accepted\n")
            for row in self.trace:
                fh.write(f"{row.iteration},{row.fitness},{row.size},{row.k},{row.accepted}\n")


def _stopped(stop_mode: str, n: int, v: int, s: int) -> bool:
    if stop_mode == STOP_FITNESS:
        return v == n
    return v == n and s == n


def run(config: RunConfig, engine: str = "fast") -> RunResult:
    """Execute one run; fully deterministic given the config (incl. seed)."""
    if engine == "fast":
        return _run_fast(config)
    if engine == "sequence":
        return _run_sequence(config)
    raise ContractViolation(f"unknown engine {engine!r}")


def _run_fast(config: RunConfig) -> RunResult:
    rng = RngStream(config.seed)
    var0, sgn0 = build_initial_arrays(config.init, config.n, rng)
    budget = config.budget
    trace_every = config.trace_every
    if trace_every > 0:
        rows = min(budget // trace_every + 1, _TRACE_ROW_CAP)
    else:
        rows = 0
    tr_it = np.empty(rows, dtype=np.int64)
    tr_v = np.empty(rows, dtype=np.int64)
    tr_s = np.empty(rows, dtype=np.int64)
    tr_k = np.empty(rows, dtype=np.int64)
    tr_acc = np.empty(rows, dtype=np.int8)
    kernel = engines.run_order if config.problem == ORDER else engines.run_majority
    kmode = 1 if config.k_dist == K_ONE_PLUS_POISSON else 0
    smode = 1 if config.resolved_stop_mode == STOP_G_ZERO else 0
    iterations, exhausted, max_size, final_size, final_v, accepted, n_trace = kernel(
        var0,
        sgn0,
        config.n,
        config.bloat_control,
        kmode,
        smode,
        budget,
        np.uint64(rng.state),
        trace_every,
        tr_it,
        tr_v,
        tr_s,
        tr_k,
        tr_acc,
    )
    trace = [
        TraceRow(int(tr_it[i]), int(tr_v[i]), int(tr_s[i]), int(tr_k[i]), int(tr_acc[i]))
        for i in range(n_trace)
    ]
    return RunResult(
        iterations_to_opt=int(iterations),
        exhausted=bool(exhausted),
        max_size=int(max_size),
        final_size=int(final_size),
        final_fitness=int(final_v),
        accepted_count=int(accepted),
        seed=config.seed,
        trace=trace,
    )


def _run_sequence(config: RunConfig) -> RunResult:
    """Reference loop over the literal in-order representation."""
    rng = RngStream(config.seed)
    var0, sgn0 = build_initial_arrays(config.init, config.n, rng)
    leaves = [Literal(int(v), s > 0) for v, s in zip(var0, sgn0)]
    tree = GpTree(leaves, config.n, config.problem, mode="indexed")
    stop_mode = config.resolved_stop_mode
    budget = config.budget
    trace_every = config.trace_every
    trace: list[TraceRow] = []

    max_size = tree.size
    accepted = 0
    iterations = 0
    exhausted = False
    if _stopped(stop_mode, config.n, tree.expressed_count, tree.size):
        return RunResult(0, False, max_size, tree.size, tree.expressed_count, 0,
                         config.seed, trace)

    for it in range(1, budget + 1):
        k = sample_k(config.k_dist, rng)
        child = tree.copy()
        for _ in range(k):
            hvl_prime(child, rng)
        ok = select(
            Fitness(tree.expressed_count, tree.size),
            Fitness(child.expressed_count, child.size),
            config.bloat_control,
        )
        if ok:
            tree = child
            accepted += 1
            max_size = max(max_size, tree.size)
        if trace_every > 0 and it % trace_every == 0 and len(trace) < _TRACE_ROW_CAP:
            trace.append(TraceRow(it, tree.expressed_count, tree.size, k, int(ok)))
        if _stopped(stop_mode, config.n, tree.expressed_count, tree.size):
            iterations = it
            break
        if it == budget:
            iterations = budget
            exhausted = True

    return RunResult(
        iterations_to_opt=iterations,
        exhausted=exhausted,
        max_size=max_size,
        final_size=tree.size,
        final_fitness=tree.expressed_count,
        accepted_count=accepted,
        seed=config.seed,
        trace=trace,
    )


def explicit_init(text_or_leaves) -> InitSpec:
    """Convenience: explicit InitSpec from leaf text or a literal list."""
    if isinstance(text_or_leaves, str):
        leaves = tuple(parse_tree_text(text_or_leaves))
    else:
        leaves = tuple(text_or_leaves)
    return InitSpec(kind="explicit", leaves=leaves)


def random_literals(count: int, n: int, rng: RngStream) -> list[Literal]:
    """count uniform draws from the 2n literal symbols."""
    return [literal_from_code(rng.randint(2 * n)) for _ in range(count)]
