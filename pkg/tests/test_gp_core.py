import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gp_lab.errors import ContractViolation
from gp_lab.gp_core import (
    GpTree,
    Literal,
    fitness,
    format_tree_text,
    join_tree_apply,
    join_tree_from_leaves,
    join_tree_leaves,
    majority_fitness,
    order_fitness,
    parse_tree_text,
)
from gp_lab.mutation import Delete, Insert, Substitute, sample_operation
from gp_lab.rng import RngStream

from util import random_leaves, tree


# -- text format ------------------------------------------------------------


def test_parse_and_format_roundtrip():
    text = "x1 !x1 x2 !x17"
    leaves = parse_tree_text(text)
    assert leaves == [
        Literal(1, True), Literal(1, False), Literal(2, True), Literal(17, False)
    ]
    assert format_tree_text(leaves) == text


def test_parse_rejects_garbage():
    for bad in ("y1", "x", "x0", "!x0", "x-3", "x1!", ""):
        if bad == "":
            continue
        with pytest.raises(ContractViolation):
            parse_tree_text(bad)


# -- fitness definitions ----------------------------------------------------


def test_order_fitness_examples():
    assert order_fitness(parse_tree_text("x1"), 1) == 1
    assert order_fitness(parse_tree_text("!x1 x1"), 1) == 0
    assert order_fitness(parse_tree_text("x1 !x1 !x2 x2"), 2) == 1


def test_majority_fitness_examples():
    assert majority_fitness(parse_tree_text("x1"), 1) == 1
    assert majority_fitness(parse_tree_text("x1 !x1"), 1) == 1  # ties count
    assert majority_fitness(parse_tree_text("x1 !x1 !x1"), 1) == 0


def test_empty_sequences_have_zero_fitness():
    assert order_fitness([], 3) == 0
    assert majority_fitness([], 3) == 0


def test_fitness_rejects_out_of_range_variable():
    with pytest.raises(ContractViolation):
        order_fitness(parse_tree_text("x5"), 3)


@settings(max_examples=80, deadline=None)
@given(st.data())
def test_majority_invariant_under_permutation(data):
    n = data.draw(st.integers(1, 6))
    leaves = data.draw(
        st.lists(
            st.builds(Literal, st.integers(1, n), st.booleans()), min_size=1, max_size=30
        )
    )
    perm = data.draw(st.permutations(leaves))
    assert majority_fitness(leaves, n) == majority_fitness(perm, n)


@settings(max_examples=80, deadline=None)
@given(st.data())
def test_order_depends_only_on_first_literal_signs(data):
    n = data.draw(st.integers(1, 5))
    leaves = data.draw(
        st.lists(
            st.builds(Literal, st.integers(1, n), st.booleans()), min_size=1, max_size=25
        )
    )
    first = {}
    for lit in leaves:
        first.setdefault(lit.var, lit.positive)
    assert order_fitness(leaves, n) == sum(1 for v in first.values() if v)


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_fitness_bounds(data):
    n = data.draw(st.integers(1, 6))
    problem = data.draw(st.sampled_from(["order", "majority"]))
    leaves = data.draw(
        st.lists(
            st.builds(Literal, st.integers(1, n), st.booleans()), min_size=1, max_size=30
        )
    )
    f = fitness(leaves, n, problem)
    assert 0 <= f <= n
    assert f <= len(leaves)


# -- GpTree / apply_edit ----------------------------------------------------


def test_apply_edit_examples():
    t = tree("x1 !x1", 1, "majority", mode="check")
    t.apply_edit(Delete(pos=2))
    assert t.to_text() == "x1" and t.expressed_count == 1

    t = tree("x1", 1, "majority", mode="check")
    t.apply_edit(Substitute(pos=1, literal=Literal(1, False)))
    assert t.to_text() == "!x1" and t.expressed_count == 0

    t = tree("!x2", 2, "order", mode="check")
    t.apply_edit(Insert(anchor=1, literal=Literal(2, True), after=False))
    assert t.to_text() == "x2 !x2" and t.expressed_count == 1


def test_insert_after_places_leaf_behind_anchor():
    t = tree("x1 x2", 2, "order", mode="check")
    t.apply_edit(Insert(anchor=1, literal=Literal(1, False), after=True))
    assert t.to_text() == "x1 !x1 x2"


def test_delete_on_singleton_is_noop():
    t = tree("!x1", 1, "order", mode="check")
    t.apply_edit(Delete(pos=1))
    assert t.to_text() == "!x1" and t.size == 1


def test_out_of_range_positions_raise():
    t = tree("x1 x1", 1, "order")
    with pytest.raises(ContractViolation):
        t.apply_edit(Delete(pos=3))
    with pytest.raises(ContractViolation):
        t.apply_edit(Substitute(pos=0, literal=Literal(1, True)))
    with pytest.raises(ContractViolation):
        t.apply_edit(Insert(anchor=5, literal=Literal(1, True), after=False))
    with pytest.raises(ContractViolation):
        t.apply_edit(Substitute(pos=1, literal=Literal(3, True)))


def test_size_change_per_edit_kind():
    t = tree("x1 !x2 x3", 3, "majority", mode="check")
    s = t.size
    t.apply_edit(Substitute(pos=2, literal=Literal(1, True)))
    assert t.size == s
    t.apply_edit(Insert(anchor=1, literal=Literal(2, True), after=True))
    assert t.size == s + 1
    t.apply_edit(Delete(pos=1))
    assert t.size == s


def test_counts_match_leaves():
    rng = random.Random(5)
    t = GpTree(random_leaves(rng, 4, 60), 4, "majority", mode="check")
    t.validate()
    for _ in range(200):
        op = sample_operation(t.size, t.n, RngStream(rng.getrandbits(63)))
        t.apply_edit(op)
    t.validate()


@pytest.mark.parametrize("problem", ["order", "majority"])
def test_incremental_matches_full_recompute_under_edit_churn(problem):
    rng = random.Random(11)
    stream = RngStream(2025)
    t = GpTree(random_leaves(rng, 8, 40), 8, problem, mode="check")
    for step in range(3000):
        t.apply_edit(sample_operation(t.size, t.n, stream))
        # the check backend asserts indexed == scan sizes/fitness every edit
        if step % 750 == 0:
            t.validate()
    t.validate()


def test_copy_is_independent():
    t = tree("x1 !x2", 2, "order")
    c = t.copy()
    c.apply_edit(Delete(pos=1))
    assert t.to_text() == "x1 !x2"
    assert c.to_text() == "!x2"


def test_stats_fields():
    t = tree("x1 !x1 x2", 2, "majority")
    st_ = t.stats()
    assert (st_.size, st_.expressed, st_.problem) == (3, 2, "majority")
    assert t.pos_count(1) == 1 and t.neg_count(1) == 1


# -- explicit binary representation ----------------------------------------


def test_join_tree_roundtrip():
    leaves = parse_tree_text("x1 !x2 x3 x1")
    root = join_tree_from_leaves(leaves)
    assert join_tree_leaves(root) == leaves


def test_join_tree_ops_match_sequence_ops():
    rng = random.Random(31)
    stream = RngStream(99)
    leaves = random_leaves(rng, 3, 8)
    t = GpTree(leaves, 3, "order")
    root = join_tree_from_leaves(leaves)
    for _ in range(400):
        op = sample_operation(t.size, t.n, stream)
        t.apply_edit(op)
        root = join_tree_apply(root, op)
        assert join_tree_leaves(root) == t.leaves()
