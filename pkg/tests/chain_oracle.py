"""Exact absorption-time oracles for tiny n=1 runs of the (1+1) loop.

Both chains model one iteration with k=1: one uniformly drawn mutation,
offspring always accepted while the variable is unexpressed (fitness can
only stay 0 or rise to 1, and selection keeps anything not worse).  The
state space is truncated at a size cap; inserts at the cap become
self-loops, which distorts the expectation by far less than the
Monte-Carlo tolerance (verified by comparing two cap values).
"""

from __future__ import annotations

import numpy as np
from scipy.sparse import identity, lil_matrix
from scipy.sparse.linalg import spsolve


def _majority_absorbing(p: int, q: int) -> bool:
    return p >= 1 and p >= q


def majority_n1_expected_iterations(start=(0, 1), cap: int = 40) -> float:
    """Exact E[iterations] for MAJORITY, n=1, k=1, no bloat control.

    State is the (positive, negative) leaf-count pair; absorbing once
    p >= 1 and p >= q.
    """
    states = []
    for total in range(1, cap + 1):
        for p in range(total + 1):
            q = total - p
            if not _majority_absorbing(p, q):
                states.append((p, q))
    index = {st: i for i, st in enumerate(states)}
    m = len(states)
    q_mat = np.zeros((m, m))

    def add(i: int, st, prob: float) -> None:
        j = index.get(st)
        if j is not None:  # transitions into absorbing states just drop out
            q_mat[i, j] += prob

    for i, (p, q) in enumerate(states):
        s = p + q
        third = 1.0 / 3.0
        # substitute: leaf by counts, then a fresh uniform literal
        add(i, (p, q), third * (p / s) * 0.5)            # pos -> pos
        add(i, (p - 1, q + 1), third * (p / s) * 0.5)    # pos -> neg
        add(i, (p + 1, q - 1), third * (q / s) * 0.5)    # neg -> pos
        add(i, (p, q), third * (q / s) * 0.5)            # neg -> neg
        # insert: uniform literal; the cap turns it into a self-loop
        if s < cap:
            add(i, (p + 1, q), third * 0.5)
            add(i, (p, q + 1), third * 0.5)
        else:
            add(i, (p, q), third)
        # delete: no-op on singletons
        if s == 1:
            add(i, (p, q), third)
        else:
            add(i, (p - 1, q), third * (p / s))
            add(i, (p, q - 1), third * (q / s))

    t = np.linalg.solve(np.eye(m) - q_mat, np.ones(m))
    return float(t[index[start]])


def order_n1_transitions(state: tuple[int, ...], cap: int):
    """One-step law for ORDER, n=1, k=1: list of (probability, new_state).

    States are sign tuples (+1/-1); absorbing when the first sign is +1.
    """
    s = len(state)
    third = 1.0 / 3.0
    out = []
    for pos in range(s):  # substitute
        for sign in (1, -1):
            new = state[:pos] + (sign,) + state[pos + 1 :]
            out.append((third / (s * 2), new))
    for sign in (1, -1):  # insert: end slots half as likely as interior
        if s < cap:
            out.append((third * 0.5 / (2 * s), (sign,) + state))
            out.append((third * 0.5 / (2 * s), state + (sign,)))
            for idx in range(1, s):
                out.append((third * 0.5 / s, state[:idx] + (sign,) + state[idx:]))
        else:
            out.append((third * 0.5, state))
    if s == 1:  # delete
        out.append((third, state))
    else:
        for pos in range(s):
            out.append((third / s, state[:pos] + state[pos + 1 :]))
    return out


def order_n1_expected_iterations(start=(-1,), cap: int = 13) -> float:
    """Exact E[iterations] for ORDER, n=1, k=1, no bloat control."""
    states = []
    seen = {start}
    frontier = [start]
    while frontier:
        st = frontier.pop()
        states.append(st)
        for _p, new in order_n1_transitions(st, cap):
            if new[0] == -1 and new not in seen:
                seen.add(new)
                frontier.append(new)
    index = {st: i for i, st in enumerate(states)}
    m = len(states)
    q_mat = lil_matrix((m, m))
    for i, st in enumerate(states):
        for prob, new in order_n1_transitions(st, cap):
            j = index.get(new)
            if j is not None:
                q_mat[i, j] += prob
    a = (identity(m, format="csr") - q_mat.tocsr()).tocsc()
    t = spsolve(a, np.ones(m))
    return float(t[index[start]])
