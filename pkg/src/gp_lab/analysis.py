"""Executable analytical instruments: leaf classes, potentials, drift.

These operate on the literal tree representation (``gp_core.GpTree``) and
are meant for inspection and verification at desk scale, not for the hot
path of large sweeps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import mpmath as mp

from .errors import ContractViolation, DomainError, InsufficientSamples
from .evolution import Fitness, RunConfig, build_initial_arrays, select
from .gp_core import (
    MAJORITY,
    ORDER,
    GpTree,
    Literal,
    fitness,
    literal_from_code,
)
from .mutation import Delete, Insert, Substitute, hvl_prime, sample_k
from .rng import RngStream

LABEL_REDUNDANT = "R"
LABEL_CRITICAL_POS = "C+"
LABEL_CRITICAL_NEG = "C-"


@dataclass(frozen=True)
class LeafClassification:
    """Counts and per-leaf labels of the delete-one-leaf fitness effect."""

    redundant: int
    critical_pos: int
    critical_neg: int
    labels: tuple[str, ...]

    @property
    def total(self) -> int:
        return self.redundant + self.critical_pos + self.critical_neg


def _label(delta: int) -> str:
    if delta == 0:
        return LABEL_REDUNDANT
    return LABEL_CRITICAL_POS if delta < 0 else LABEL_CRITICAL_NEG


def _classify_oracle(leaves: Sequence[Literal], n: int, problem: str) -> list[str]:
    """Delete each leaf in turn and re-evaluate fitness (the definition)."""
    base = fitness(leaves, n, problem)
    labels = []
    for j in range(len(leaves)):
        rest = list(leaves[:j]) + list(leaves[j + 1 :])
        labels.append(_label(fitness(rest, n, problem) - base))
    return labels


def _classify_fast_majority(leaves: Sequence[Literal], n: int) -> list[str]:
    pos = [0] * (n + 1)
    neg = [0] * (n + 1)
    for lit in leaves:
        if lit.positive:
            pos[lit.var] += 1
        else:
            neg[lit.var] += 1
    labels = []
    for lit in leaves:
        p, q = pos[lit.var], neg[lit.var]
        before = p >= 1 and p >= q
        if lit.positive:
            after = p - 1 >= 1 and p - 1 >= q
        else:
            after = p >= 1 and p >= q - 1
        labels.append(_label(int(after) - int(before)))
    return labels


def _classify_fast_order(leaves: Sequence[Literal], n: int) -> list[str]:
    # first and second occurrence per variable decide every deletion effect
    first = [-1] * (n + 1)
    second = [-1] * (n + 1)
    for j, lit in enumerate(leaves):
        if first[lit.var] == -1:
            first[lit.var] = j
        elif second[lit.var] == -1:
            second[lit.var] = j
    labels = []
    for j, lit in enumerate(leaves):
        if j != first[lit.var]:
            labels.append(LABEL_REDUNDANT)
            continue
        snd = second[lit.var]
        before = lit.positive
        after = snd != -1 and leaves[snd].positive
        labels.append(_label(int(after) - int(before)))
    return labels


def classify_leaves(tree: GpTree, method: str = "fast") -> LeafClassification:
    """Label every leaf redundant / critical positive / critical negative.

    A leaf is redundant when deleting it leaves fitness unchanged,
    critical positive when deletion lowers fitness, critical negative
    when deletion raises it.  ``method="oracle"`` re-evaluates the
    definition directly in O(s^2); ``"fast"`` uses count/first-occurrence
    reasoning in O(s) and is oracle-equivalent (enforced by tests).
    """
    leaves = tree.leaves()
    if method == "oracle":
        labels = _classify_oracle(leaves, tree.n, tree.problem)
    elif method == "fast":
        if tree.problem == MAJORITY:
            labels = _classify_fast_majority(leaves, tree.n)
        else:
            labels = _classify_fast_order(leaves, tree.n)
    else:
        raise ContractViolation(f"unknown classify method {method!r}")
    return LeafClassification(
        redundant=labels.count(LABEL_REDUNDANT),
        critical_pos=labels.count(LABEL_CRITICAL_POS),
        critical_neg=labels.count(LABEL_CRITICAL_NEG),
        labels=tuple(labels),
    )


def combined_potential(tree: GpTree, weight: int = 10) -> int:
    """weight * (n - expressed) + size - expressed.

    Zero exactly when every variable is expressed and the tree has the
    minimal size n, i.e. at the bloat-control optimum.
    """
    if weight < 1:
        raise DomainError("weight must be a positive integer")
    v = tree.expressed_count
    return weight * (tree.n - v) + tree.size - v


def variable_balance(tree: GpTree, i: int) -> int:
    """Signed per-variable balance:

    -1 when no i-literal is present, -z when negatives lead by z > 0,
    +z (z >= 0) when variable i is expressed for MAJORITY.
    """
    if not 1 <= i <= tree.n:
        raise ContractViolation(f"variable index {i} outside [1, {tree.n}]")
    p = tree.pos_count(i)
    q = tree.neg_count(i)
    if p + q == 0:
        return -1
    return p - q


def variable_deficit(tree: GpTree, i: int) -> int:
    """max(-balance, 0): how far variable i is from being expressed."""
    return max(-variable_balance(tree, i), 0)


def multi_mutation_drift_bounds(m: int) -> tuple[float, float]:
    """Series bounds on the damage multi-op iterations can do to the
    combined potential when the op count is 1 + Poisson(1).

    Returns ``(b1, b2_coefficient)``:

    * ``b1``             = (1/e) * (2e - m*e + sum_{i=1..m} (m-i)/(i-1)!)
    * ``b2_coefficient`` = (1/e) * (1/(6m) + 2/3)
                                 * (5e - 2*m*e + sum_{i=1..m} i*(m-i)/(i-1)!)

    ``b1`` bounds the expected potential increase outright; the second
    value is the magnitude multiplying potential/n in the size-aware
    refinement.  Both series are the closed forms of the Poisson tails
    sum_{i>m} (i-m)/(i-1)! and sum_{i>m} i*(i-m)/(i-1)! (scaled by 1/e),
    evaluated here in 50-digit arithmetic before rounding to float.
    """
    if not isinstance(m, int) or m < 1:
        raise DomainError("m must be a positive integer")
    with mp.workdps(50):
        e = mp.e
        s1 = mp.fsum((m - i) / mp.factorial(i - 1) for i in range(1, m + 1))
        b1 = (2 * e - m * e + s1) / e
        s2 = mp.fsum(i * (m - i) / mp.factorial(i - 1) for i in range(1, m + 1))
        b2 = (mp.mpf(1) / (6 * m) + mp.mpf(2) / 3) * (5 * e - 2 * m * e + s2) / e
        return float(b1), float(b2)


# ---------------------------------------------------------------------------
# drift estimation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DriftEstimate:
    """Mean one-step potential change, conditioned on a state predicate.

    Sign convention: delta = potential(next state) - potential(current
    state), the raw change (negative means progress for the potentials
    used here).
    """

    mean: float
    std_error: float
    sample_count: int
    conditioning: str
    insufficient: bool = False


def drift_from_samples(deltas: Sequence[float], conditioning: str = "") -> DriftEstimate:
    k = len(deltas)
    if k == 0:
        return DriftEstimate(math.nan, math.nan, 0, conditioning, insufficient=True)
    mean = sum(deltas) / k
    if k == 1:
        return DriftEstimate(mean, math.nan, 1, conditioning)
    var = sum((d - mean) ** 2 for d in deltas) / (k - 1)
    return DriftEstimate(mean, math.sqrt(var / k), k, conditioning)


def _enumerate_one_step(tree: GpTree):
    """All k=1 mutation outcomes as (probability, op) pairs; exact."""
    s = tree.size
    n2 = 2 * tree.n
    out = []
    for pos in range(1, s + 1):
        for code in range(n2):
            out.append((1.0 / (3 * s * n2), Substitute(pos, literal_from_code(code))))
    # insertion slot idx (0-based, 0..s): end slots are half as likely
    for code in range(n2):
        lit = literal_from_code(code)
        out.append((1.0 / (3 * n2 * 2 * s), Insert(1, lit, after=False)))
        out.append((1.0 / (3 * n2 * 2 * s), Insert(s, lit, after=True)))
        for idx in range(1, s):
            out.append((1.0 / (3 * n2 * s), Insert(idx, lit, after=True)))
    for pos in range(1, s + 1):
        out.append((1.0 / (3 * s), Delete(pos)))
    return out


def exact_one_step_drift(
    tree: GpTree,
    potential: Callable[[GpTree], float],
    bloat_control: bool,
) -> float:
    """Exact E[potential(next) - potential(current)] for a single (k=1)
    mutation step including selection; enumerates every outcome with its
    probability.  Intended for small trees."""
    base = potential(tree)
    parent = Fitness(tree.expressed_count, tree.size)
    total = 0.0
    weight = 0.0
    for prob, op in _enumerate_one_step(tree):
        child = tree.copy()
        child.apply_edit(op)
        ok = select(parent, Fitness(child.expressed_count, child.size), bloat_control)
        nxt = potential(child) if ok else base
        total += prob * (nxt - base)
        weight += prob
    assert abs(weight - 1.0) < 1e-9
    return total


def estimate_drift(
    config: RunConfig,
    potential: Callable[[GpTree], float],
    predicate: Callable[[GpTree], bool] | None = None,
    samples: int = 1000,
    conditioning: str = "",
    max_total_iterations: int | None = None,
    raise_on_insufficient: bool = False,
) -> DriftEstimate:
    """Monte-Carlo one-step drift along real trajectories.

    Trajectories restart from the configured initial tree whenever the
    optimum is reached; at every visited state satisfying the predicate
    the change of the potential over the next iteration (after selection)
    is recorded.  Rejection conditioning: states failing the predicate
    are stepped over without recording.
    """
    budget = max_total_iterations if max_total_iterations is not None else 50 * samples
    step_cap = config.budget
    rng = RngStream(config.seed)
    deltas: list[float] = []
    spent = 0
    restart = 0
    while len(deltas) < samples and spent < budget:
        restart += 1
        traj_rng = rng.spawn(restart)
        var0, sgn0 = build_initial_arrays(config.init, config.n, traj_rng)
        leaves = [Literal(int(v), sg > 0) for v, sg in zip(var0, sgn0)]
        tree = GpTree(leaves, config.n, config.problem, mode="indexed")
        steps = 0
        while len(deltas) < samples and spent < budget and steps < step_cap:
            if _at_optimum(config, tree):
                break
            record = predicate is None or predicate(tree)
            before = potential(tree) if record else 0.0
            k = sample_k(config.k_dist, traj_rng)
            child = tree.copy()
            for _ in range(k):
                hvl_prime(child, traj_rng)
            ok = select(
                Fitness(tree.expressed_count, tree.size),
                Fitness(child.expressed_count, child.size),
                config.bloat_control,
            )
            if ok:
                tree = child
            if record:
                deltas.append(potential(tree) - before)
            spent += 1
            steps += 1
    est = drift_from_samples(deltas, conditioning)
    if est.sample_count < samples:
        est = DriftEstimate(est.mean, est.std_error, est.sample_count, conditioning, True)
        if raise_on_insufficient and est.sample_count == 0:
            raise InsufficientSamples(
                f"predicate matched no states within {budget} iterations"
            )
    return est


def _at_optimum(config: RunConfig, tree: GpTree) -> bool:
    if config.resolved_stop_mode == "g-zero":
        return tree.expressed_count == config.n and tree.size == config.n
    return tree.expressed_count == config.n


def make_combined_potential(weight: int = 10) -> Callable[[GpTree], float]:
    return lambda tree: float(combined_potential(tree, weight))


def make_deficit_potential(i: int) -> Callable[[GpTree], float]:
    return lambda tree: float(variable_deficit(tree, i))
