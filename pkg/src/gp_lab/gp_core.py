"""GP-tree representation and exact + incremental fitness for ORDER and MAJORITY.

Individuals are binary trees whose inner nodes are all the semantics-free
join symbol, so a tree is fully described by its in-order leaf sequence.
Every operation here works on that sequence; ``join_tree_from_leaves`` /
``JoinNode`` materialize the explicit binary shape for equivalence tests.

Fitness conventions (n variables, leaves are signed variable references):

* ORDER: variable i counts iff its first i-literal in the sequence is
  positive.
* MAJORITY: variable i counts iff it has at least one positive literal
  and at least as many positive as negative literals.

Two incremental backends maintain fitness under single-leaf edits:

* ``indexed`` - treap-backed sequence plus per-variable occurrence lists;
  first-occurrence queries stay logarithmic under insert/delete.
* ``scan``    - flat arrays, full vectorized re-evaluation per edit.
* ``check``   - runs both and asserts they agree after every edit.
"""

from __future__ import annotations

import re
from bisect import bisect_left, insort
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractViolation
from .indexseq import IndexedSequence, SeqNode

ORDER = "order"
MAJORITY = "majority"
PROBLEMS = (ORDER, MAJORITY)


@dataclass(frozen=True)
class Literal:
    """A signed variable reference; the leaf alphabet has 2n of these."""

    var: int
    positive: bool

    def negated(self) -> "Literal":
        return Literal(self.var, not self.positive)

    def __str__(self) -> str:
        return f"x{self.var}" if self.positive else f"!x{self.var}"


def literal_from_code(code: int) -> Literal:
    """Decode 0..2n-1 to a literal; even codes are positive.

    This is the single mapping used everywhere a uniform draw over the
    2n literal symbols has to be interpreted.
    """
    return Literal(code // 2 + 1, code % 2 == 0)


def literal_to_code(lit: Literal) -> int:
    return (lit.var - 1) * 2 + (0 if lit.positive else 1)


_TOKEN = re.compile(r"^(!?)x(\d+)$")


def parse_tree_text(text: str) -> list[Literal]:
    """Parse the whitespace-separated leaf format, e.g. ``"x1 !x1 x2"``."""
    leaves = []
    for tok in text.split():
        m = _TOKEN.match(tok)
        if m is None:
            raise ContractViolation(f"bad literal token {tok!r} (expected x<i> or !x<i>)")
        var = int(m.group(2))
        if var < 1:
            raise ContractViolation(f"variable index must be >= 1 in token {tok!r}")
        leaves.append(Literal(var, m.group(1) == ""))
    return leaves


def format_tree_text(leaves: Iterable[Literal]) -> str:
    return " ".join(str(lit) for lit in leaves)


# ---------------------------------------------------------------------------
# full-scan fitness (reference definitions)
# ---------------------------------------------------------------------------


def order_fitness(leaves: Sequence[Literal], n: int) -> int:
    """Number of variables whose first literal in the sequence is positive.

    Literal O(s) scan; this is the definition itself and doubles as the
    oracle for the incremental backends.
    """
    seen: set[int] = set()
    count = 0
    for lit in leaves:
        if lit.var > n:
            raise ContractViolation(f"literal x{lit.var} exceeds n={n}")
        if lit.var not in seen:
            seen.add(lit.var)
            if lit.positive:
                count += 1
    return count


def majority_fitness(leaves: Sequence[Literal], n: int) -> int:
    """Number of variables with >=1 positive literal and pos >= neg (ties count)."""
    pos = [0] * (n + 1)
    neg = [0] * (n + 1)
    for lit in leaves:
        if lit.var > n:
            raise ContractViolation(f"literal x{lit.var} exceeds n={n}")
        if lit.positive:
            pos[lit.var] += 1
        else:
            neg[lit.var] += 1
    return sum(1 for i in range(1, n + 1) if pos[i] >= 1 and pos[i] >= neg[i])


def fitness(leaves: Sequence[Literal], n: int, problem: str) -> int:
    if problem == ORDER:
        return order_fitness(leaves, n)
    if problem == MAJORITY:
        return majority_fitness(leaves, n)
    raise ContractViolation(f"unknown problem {problem!r}")


def _order_fitness_arrays(var: np.ndarray, sgn: np.ndarray) -> int:
    """Vectorized ORDER fitness over (var, sign) arrays."""
    if var.size == 0:
        return 0
    _, first_idx = np.unique(var, return_index=True)
    return int(np.count_nonzero(sgn[first_idx] > 0))


def _majority_fitness_arrays(var: np.ndarray, sgn: np.ndarray, n: int) -> int:
    """Vectorized MAJORITY fitness over (var, sign) arrays."""
    if var.size == 0:
        return 0
    pos = np.bincount(var[sgn > 0], minlength=n + 1)
    neg = np.bincount(var[sgn < 0], minlength=n + 1)
    return int(np.count_nonzero((pos[1:] >= 1) & (pos[1:] >= neg[1 : n + 1])))


def fitness_arrays(var: np.ndarray, sgn: np.ndarray, n: int, problem: str) -> int:
    if problem == ORDER:
        return _order_fitness_arrays(var, sgn)
    if problem == MAJORITY:
        return _majority_fitness_arrays(var, sgn, n)
    raise ContractViolation(f"unknown problem {problem!r}")


def leaves_to_arrays(leaves: Sequence[Literal]) -> tuple[np.ndarray, np.ndarray]:
    var = np.fromiter((lit.var for lit in leaves), dtype=np.int32, count=len(leaves))
    sgn = np.fromiter(
        ((1 if lit.positive else -1) for lit in leaves), dtype=np.int8, count=len(leaves)
    )
    return var, sgn


@dataclass(frozen=True)
class TreeStats:
    size: int
    expressed: int
    problem: str


# ---------------------------------------------------------------------------
# incremental backends
# ---------------------------------------------------------------------------


class _IndexedBackend:
    """Treap sequence + per-variable occurrence lists.

    ``occ[i]`` holds the live node handles of variable i in sequence
    order; relative order among one variable's leaves is unaffected by
    edits elsewhere, so the lists only need local maintenance.  The first
    handle answers ORDER's first-occurrence query in O(1).
    """

    __slots__ = ("n", "problem", "seq", "pos", "neg", "occ", "expressed", "v")

    def __init__(self, leaves: Sequence[Literal], n: int, problem: str) -> None:
        self.n = n
        self.problem = problem
        self.seq = IndexedSequence()
        self.pos = [0] * (n + 1)
        self.neg = [0] * (n + 1)
        self.occ: list[list[SeqNode]] = [[] for _ in range(n + 1)]
        self.expressed = [False] * (n + 1)
        self.v = 0
        for lit in leaves:
            node = self.seq.insert(len(self.seq), lit)
            self._count(lit, +1)
            self.occ[lit.var].append(node)
        for i in range(1, n + 1):
            self._refresh(i)

    @property
    def size(self) -> int:
        return len(self.seq)

    def _count(self, lit: Literal, delta: int) -> None:
        if lit.positive:
            self.pos[lit.var] += delta
        else:
            self.neg[lit.var] += delta

    def _refresh(self, var: int) -> None:
        if self.problem == ORDER:
            occ = self.occ[var]
            ex = bool(occ) and occ[0].value.positive
        else:
            ex = self.pos[var] >= 1 and self.pos[var] >= self.neg[var]
        if ex != self.expressed[var]:
            self.expressed[var] = ex
            self.v += 1 if ex else -1

    def _occ_insert(self, node: SeqNode) -> None:
        insort(self.occ[node.value.var], node, key=self.seq.index_of)

    def _occ_remove(self, node: SeqNode) -> None:
        occ = self.occ[node.value.var]
        i = bisect_left(occ, self.seq.index_of(node), key=self.seq.index_of)
        while occ[i] is not node:  # ranks are distinct, so this hits immediately
            i += 1
        occ.pop(i)

    def leaf_at(self, idx: int) -> Literal:
        return self.seq[idx]

    def insert(self, idx: int, lit: Literal) -> None:
        node = self.seq.insert(idx, lit)
        self._count(lit, +1)
        self._occ_insert(node)
        self._refresh(lit.var)

    def delete(self, idx: int) -> None:
        node = self.seq.node_at(idx)
        lit = node.value
        self._occ_remove(node)
        self.seq.remove_node(node)
        self._count(lit, -1)
        self._refresh(lit.var)

    def substitute(self, idx: int, lit: Literal) -> None:
        node = self.seq.node_at(idx)
        old = node.value
        self._occ_remove(node)
        node.value = lit
        self._occ_insert(node)
        self._count(old, -1)
        self._count(lit, +1)
        self._refresh(old.var)
        if lit.var != old.var:
            self._refresh(lit.var)

    def leaves(self) -> list[Literal]:
        return list(self.seq)


class _ScanBackend:
    """Flat arrays; fitness recomputed vectorized after every edit."""

    __slots__ = ("n", "problem", "var", "sgn", "size", "pos", "neg", "v")

    def __init__(self, leaves: Sequence[Literal], n: int, problem: str) -> None:
        self.n = n
        self.problem = problem
        var, sgn = leaves_to_arrays(leaves)
        cap = max(16, 2 * len(leaves))
        self.var = np.zeros(cap, dtype=np.int32)
        self.sgn = np.zeros(cap, dtype=np.int8)
        self.var[: len(leaves)] = var
        self.sgn[: len(leaves)] = sgn
        self.size = len(leaves)
        self.pos = np.bincount(var[sgn > 0], minlength=n + 1).astype(np.int64)
        self.neg = np.bincount(var[sgn < 0], minlength=n + 1).astype(np.int64)
        self.v = fitness_arrays(var, sgn, n, problem)

    def _grow(self) -> None:
        cap = max(16, 2 * self.var.size)
        var = np.zeros(cap, dtype=np.int32)
        sgn = np.zeros(cap, dtype=np.int8)
        var[: self.size] = self.var[: self.size]
        sgn[: self.size] = self.sgn[: self.size]
        self.var, self.sgn = var, sgn

    def _refit(self) -> None:
        self.v = fitness_arrays(self.var[: self.size], self.sgn[: self.size], self.n, self.problem)

    def leaf_at(self, idx: int) -> Literal:
        return Literal(int(self.var[idx]), self.sgn[idx] > 0)

    def insert(self, idx: int, lit: Literal) -> None:
        if self.size == self.var.size:
            self._grow()
        s = self.size
        self.var[idx + 1 : s + 1] = self.var[idx:s]
        self.sgn[idx + 1 : s + 1] = self.sgn[idx:s]
        self.var[idx] = lit.var
        self.sgn[idx] = 1 if lit.positive else -1
        self.size = s + 1
        (self.pos if lit.positive else self.neg)[lit.var] += 1
        self._refit()

    def delete(self, idx: int) -> None:
        lit = self.leaf_at(idx)
        s = self.size
        self.var[idx : s - 1] = self.var[idx + 1 : s]
        self.sgn[idx : s - 1] = self.sgn[idx + 1 : s]
        self.size = s - 1
        (self.pos if lit.positive else self.neg)[lit.var] -= 1
        self._refit()

    def substitute(self, idx: int, lit: Literal) -> None:
        old = self.leaf_at(idx)
        self.var[idx] = lit.var
        self.sgn[idx] = 1 if lit.positive else -1
        (self.pos if old.positive else self.neg)[old.var] -= 1
        (self.pos if lit.positive else self.neg)[lit.var] += 1
        self._refit()

    def leaves(self) -> list[Literal]:
        return [self.leaf_at(i) for i in range(self.size)]


class GpTree:
    """The evolving individual: in-order leaf sequence plus cached fitness.

    Trees never become empty; deleting the last remaining leaf is a
    no-op (the delete operator needs a sibling to splice in).
    """

    __slots__ = ("n", "problem", "mode", "_indexed", "_scan")

    def __init__(
        self,
        leaves: Sequence[Literal],
        n: int,
        problem: str,
        mode: str = "indexed",
    ) -> None:
        if problem not in PROBLEMS:
            raise ContractViolation(f"unknown problem {problem!r}")
        if n < 1:
            raise ContractViolation("n must be >= 1")
        if not leaves:
            raise ContractViolation("a tree needs at least one leaf")
        if mode not in ("indexed", "scan", "check"):
            raise ContractViolation(f"unknown backend mode {mode!r}")
        for lit in leaves:
            if not 1 <= lit.var <= n:
                raise ContractViolation(f"literal x{lit.var} outside [1, {n}]")
        self.n = n
        self.problem = problem
        self.mode = mode
        self._indexed = _IndexedBackend(leaves, n, problem) if mode != "scan" else None
        self._scan = _ScanBackend(leaves, n, problem) if mode != "indexed" else None

    @classmethod
    def from_text(cls, text: str, n: int, problem: str, mode: str = "indexed") -> "GpTree":
        return cls(parse_tree_text(text), n, problem, mode)

    @property
    def _primary(self):
        return self._indexed if self._indexed is not None else self._scan

    @property
    def size(self) -> int:
        return self._primary.size

    @property
    def expressed_count(self) -> int:
        return self._primary.v

    def stats(self) -> TreeStats:
        return TreeStats(self.size, self.expressed_count, self.problem)

    def pos_count(self, var: int) -> int:
        return int(self._primary.pos[var])

    def neg_count(self, var: int) -> int:
        return int(self._primary.neg[var])

    def leaf_at(self, pos: int) -> Literal:
        """Leaf at 1-based position pos."""
        if not 1 <= pos <= self.size:
            raise ContractViolation(f"position {pos} out of range 1..{self.size}")
        return self._primary.leaf_at(pos - 1)

    def leaves(self) -> list[Literal]:
        return self._primary.leaves()

    def to_text(self) -> str:
        return format_tree_text(self.leaves())

    def copy(self, mode: str | None = None) -> "GpTree":
        return GpTree(self.leaves(), self.n, self.problem, mode or self.mode)

    # -- edits -----------------------------------------------------------

    def _each_backend(self):
        if self._indexed is not None:
            yield self._indexed
        if self._scan is not None:
            yield self._scan

    def _check_lit(self, lit: Literal) -> None:
        if not 1 <= lit.var <= self.n:
            raise ContractViolation(f"literal x{lit.var} outside [1, {self.n}]")

    def apply_edit(self, op) -> "GpTree":
        """Apply one mutation op in place; returns self.

        Ops carry 1-based positions and a ``kind`` attribute; see the
        mutation module.  Deleting from a size-1 tree is a no-op.
        """
        s = self.size
        kind = op.kind
        if kind == "substitute":
            if not 1 <= op.pos <= s:
                raise ContractViolation(f"substitute position {op.pos} out of range 1..{s}")
            self._check_lit(op.literal)
            for b in self._each_backend():
                b.substitute(op.pos - 1, op.literal)
        elif kind == "insert":
            if not 1 <= op.anchor <= s:
                raise ContractViolation(f"insert anchor {op.anchor} out of range 1..{s}")
            self._check_lit(op.literal)
            idx = op.anchor - 1 + (1 if op.after else 0)
            for b in self._each_backend():
                b.insert(idx, op.literal)
        elif kind == "delete":
            if not 1 <= op.pos <= s:
                raise ContractViolation(f"delete position {op.pos} out of range 1..{s}")
            if s > 1:
                for b in self._each_backend():
                    b.delete(op.pos - 1)
        else:
            raise ContractViolation(f"unknown edit kind {kind!r}")
        if self.mode == "check":
            self._cross_check()
        return self

    def _cross_check(self) -> None:
        a, b = self._indexed, self._scan
        assert a is not None and b is not None
        if a.size != b.size or a.v != b.v:
            raise AssertionError(
                f"backend divergence: indexed (s={a.size}, v={a.v}) vs scan (s={b.size}, v={b.v})"
            )

    def validate(self) -> None:
        """Recompute everything from scratch and compare with the caches."""
        leaves = self.leaves()
        want_v = fitness(leaves, self.n, self.problem)
        for b in self._each_backend():
            assert b.size == len(leaves)
            assert b.v == want_v, f"cached fitness {b.v} != recomputed {want_v}"
            for i in range(1, self.n + 1):
                p = sum(1 for l in leaves if l.var == i and l.positive)
                q = sum(1 for l in leaves if l.var == i and not l.positive)
                assert int(b.pos[i]) == p and int(b.neg[i]) == q
        if self._indexed is not None:
            self._indexed.seq.check_invariants()
            assert self._indexed.leaves() == leaves


# ---------------------------------------------------------------------------
# explicit binary-tree debug representation
# ---------------------------------------------------------------------------


class JoinNode:
    """Inner node of the explicit binary form; carries no semantics."""

    __slots__ = ("left", "right")

    def __init__(self, left, right) -> None:
        self.left = left
        self.right = right


def join_tree_from_leaves(leaves: Sequence[Literal]):
    """Left-comb binary tree with the given in-order leaf sequence."""
    if not leaves:
        raise ContractViolation("a tree needs at least one leaf")
    root = leaves[0]
    for lit in leaves[1:]:
        root = JoinNode(root, lit)
    return root


def join_tree_leaves(root) -> list[Literal]:
    """In-order leaf sequence of an explicit binary tree."""
    out: list[Literal] = []
    stack = [root]
    while stack:
        node = stack.pop()
        if isinstance(node, JoinNode):
            stack.append(node.right)
            stack.append(node.left)
        else:
            out.append(node)
    return out


def join_tree_apply(root, op):
    """Apply a mutation op to the explicit binary form.

    substitute relabels the chosen leaf; insert replaces the anchor leaf u
    with a join node whose children are u and the new leaf (order per the
    op's side); delete removes the leaf and its parent join node, splicing
    the sibling in.  Returns the new root.
    """
    # leaf positions in in-order; walk with explicit parent tracking
    leaves: list[tuple] = []  # (leaf, parent, is_right_child)

    def collect(node, parent, is_right):
        if isinstance(node, JoinNode):
            collect(node.left, node, False)
            collect(node.right, node, True)
        else:
            leaves.append((node, parent, is_right))

    collect(root, None, False)
    s = len(leaves)
    kind = op.kind

    def attach(parent, is_right, new_child):
        nonlocal root
        if parent is None:
            root = new_child
        elif is_right:
            parent.right = new_child
        else:
            parent.left = new_child

    if kind == "substitute":
        _, parent, is_right = leaves[op.pos - 1]
        attach(parent, is_right, op.literal)
    elif kind == "insert":
        leaf, parent, is_right = leaves[op.anchor - 1]
        joined = JoinNode(leaf, op.literal) if op.after else JoinNode(op.literal, leaf)
        attach(parent, is_right, joined)
    elif kind == "delete":
        if s > 1:
            leaf, parent, is_right = leaves[op.pos - 1]
            sibling = parent.left if is_right else parent.right
            gp_entry = None
            # find the parent's own parent by rescanning (debug path, O(s))
            stack = [(root, None, False)]
            while stack:
                node, par, right = stack.pop()
                if node is parent:
                    gp_entry = (par, right)
                    break
                if isinstance(node, JoinNode):
                    stack.append((node.left, node, False))
                    stack.append((node.right, node, True))
            assert gp_entry is not None
            attach(gp_entry[0], gp_entry[1], sibling)
    else:
        raise ContractViolation(f"unknown edit kind {kind!r}")
    return root
