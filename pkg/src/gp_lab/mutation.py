"""The three-way leaf mutation operator and the per-iteration op-count draw.

One application picks uniformly among substitute / insert / delete, then
fills in the op-specific fields.  The exact draw order below is the wire
protocol every engine follows, so that independent implementations fed
the same stream produce identical runs:

    op kind:     randint(3)            0=substitute 1=insert 2=delete
    substitute:  pos=randint(s), literal=randint(2n)
    insert:      literal=randint(2n), anchor=randint(s), side=randint(2)
    delete:      pos=randint(s)

Insert places the new leaf before (side 0) or after (side 1) the anchor
leaf, i.e. the anchor leaf is replaced by a join of itself and the new
leaf in the drawn order.  End slots are therefore reachable only one way
and carry half the probability of interior slots.

Deleting from a size-1 tree is a no-op: the operator needs a sibling to
splice into the removed join node, and a singleton leaf has none.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ContractViolation
from .gp_core import GpTree, Literal, literal_from_code
from .rng import RngStream

K_CONSTANT_ONE = "constant-one"
K_ONE_PLUS_POISSON = "one-plus-poisson"
K_DISTRIBUTIONS = (K_CONSTANT_ONE, K_ONE_PLUS_POISSON)


@dataclass(frozen=True)
class Substitute:
    pos: int
    literal: Literal
    kind: str = "substitute"


@dataclass(frozen=True)
class Insert:
    anchor: int
    literal: Literal
    after: bool
    kind: str = "insert"


@dataclass(frozen=True)
class Delete:
    pos: int
    kind: str = "delete"


MutationOp = Substitute | Insert | Delete


def sample_k(dist: str, rng: RngStream) -> int:
    """Number of mutation applications for one iteration (always >= 1)."""
    if dist == K_CONSTANT_ONE:
        return 1
    if dist == K_ONE_PLUS_POISSON:
        return 1 + rng.poisson1()
    raise ContractViolation(f"unknown k distribution {dist!r}")


def sample_operation(tree_size: int, n: int, rng: RngStream) -> MutationOp:
    """Draw one mutation op against a tree of the given size."""
    if tree_size < 1 or n < 1:
        raise ContractViolation("tree_size and n must be >= 1")
    choice = rng.randint(3)
    if choice == 0:
        pos = rng.randint(tree_size) + 1
        lit = literal_from_code(rng.randint(2 * n))
        return Substitute(pos, lit)
    if choice == 1:
        lit = literal_from_code(rng.randint(2 * n))
        anchor = rng.randint(tree_size) + 1
        side = rng.randint(2)
        return Insert(anchor, lit, after=side == 1)
    pos = rng.randint(tree_size) + 1
    return Delete(pos)


def hvl_prime(tree: GpTree, rng: RngStream) -> tuple[GpTree, MutationOp]:
    """Sample one op and apply it in place; returns (tree, op)."""
    op = sample_operation(tree.size, tree.n, rng)
    tree.apply_edit(op)
    return tree, op


def mutate(tree: GpTree, k: int, rng: RngStream) -> GpTree:
    """Apply k mutation ops in sequence, each against the current state."""
    for _ in range(k):
        hvl_prime(tree, rng)
    return tree
