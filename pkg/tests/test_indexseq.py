import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gp_lab.indexseq import IndexedSequence


def test_basic_insert_get():
    seq = IndexedSequence()
    for i, ch in enumerate("abcde"):
        seq.insert(i, ch)
    assert list(seq) == list("abcde")
    assert seq[0] == "a" and seq[4] == "e"
    seq.insert(2, "X")
    assert list(seq) == list("abXcde")


def test_pop_and_handles():
    seq = IndexedSequence()
    handles = [seq.insert(i, i) for i in range(10)]
    assert [seq.index_of(h) for h in handles] == list(range(10))
    seq.remove_node(handles[4])
    assert list(seq) == [0, 1, 2, 3, 5, 6, 7, 8, 9]
    assert seq.index_of(handles[5]) == 4
    assert seq.pop(0) == 0
    assert len(seq) == 8


def test_index_errors():
    seq = IndexedSequence()
    seq.insert(0, "a")
    with pytest.raises(IndexError):
        seq.node_at(1)
    with pytest.raises(IndexError):
        seq.insert(3, "b")


def test_random_ops_against_list_reference():
    rng = random.Random(2024)
    seq = IndexedSequence()
    ref: list[int] = []
    handles = []
    for step in range(4000):
        op = rng.random()
        if op < 0.55 or not ref:
            idx = rng.randint(0, len(ref))
            val = rng.randint(0, 10**6)
            handles.append(seq.insert(idx, val))
            ref.insert(idx, val)
        elif op < 0.8:
            idx = rng.randrange(len(ref))
            assert seq.pop(idx) == ref.pop(idx)
        else:
            idx = rng.randrange(len(ref))
            assert seq[idx] == ref[idx]
        if step % 500 == 0:
            seq.check_invariants()
            assert list(seq) == ref
    assert list(seq) == ref
    seq.check_invariants()


def test_handles_track_positions_through_churn():
    rng = random.Random(7)
    seq = IndexedSequence()
    live = {}
    for i in range(200):
        h = seq.insert(rng.randint(0, len(seq)), i)
        live[i] = h
    for i in rng.sample(sorted(live), 100):
        seq.remove_node(live.pop(i))
    order = list(seq)
    for val, h in live.items():
        assert order[seq.index_of(h)] == val


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 10**6), st.integers(0, 10**6)), max_size=80))
def test_insert_positions_match_list_semantics(pairs):
    seq = IndexedSequence()
    ref: list[int] = []
    for raw_idx, val in pairs:
        idx = raw_idx % (len(ref) + 1)
        seq.insert(idx, val)
        ref.insert(idx, val)
    assert list(seq) == ref
