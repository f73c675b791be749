"""Compiled run engines for the (1+1) loop.

Both engines consume randomness through the exact draw protocol of
``mutation.sample_operation`` (see that module's docstring), using the
same splitmix64 update as ``rng.RngStream``, so a pure-Python loop fed
the same seed reproduces them draw for draw.

State layouts:

* MAJORITY - fitness and selection are invariant under leaf permutation,
  so the engine evolves the unordered multiset of leaves: flat arrays
  with swap-delete and append-insert, O(1) per mutation, plus an undo
  log to roll back rejected iterations in O(k).  This is an exact
  lumping of the sequence process (uniform leaf choice depends only on
  multiplicities).  The anchor/side draws of inserts are consumed and
  ignored to keep the stream aligned with the sequence semantics.
* ORDER - first-occurrence structure matters, so the engine keeps the
  ordered sequence in flat arrays (shift insert/delete) together with a
  first-occurrence index per variable, and snapshots the parent into a
  scratch buffer each iteration (O(s) per iteration, which matches the
  cost of the shifts themselves).

All kernels are nogil so experiment sweeps can run them from threads.
"""

from __future__ import annotations

import numpy as np
from numba import njit

U64_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
U64_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
U64_MIX2 = np.uint64(0x94D049BB133111EB)
_U1 = np.uint64(1)
_U2 = np.uint64(2)
_U4 = np.uint64(4)
_U8 = np.uint64(8)
_U16 = np.uint64(16)
_U27 = np.uint64(27)
_U30 = np.uint64(30)
_U31 = np.uint64(31)
_U32 = np.uint64(32)
_U11 = np.uint64(11)
INV_2_53 = 2.0 ** -53
EXP_NEG1 = 0.36787944117144233  # double nearest e**-1; shared with rng.py


@njit(cache=True, nogil=True, inline="always")
def mix64(state):
    state = state + U64_GOLDEN
    z = state
    z = (z ^ (z >> _U30)) * U64_MIX1
    z = (z ^ (z >> _U27)) * U64_MIX2
    z = z ^ (z >> _U31)
    return state, z


@njit(cache=True, nogil=True, inline="always")
def randint64(state, m):
    """Uniform int64 in [0, m); identical rejection scheme as RngStream."""
    mask = np.uint64(m - 1)
    mask |= mask >> _U1
    mask |= mask >> _U2
    mask |= mask >> _U4
    mask |= mask >> _U8
    mask |= mask >> _U16
    mask |= mask >> _U32
    um = np.uint64(m)
    while True:
        state, z = mix64(state)
        v = z & mask
        if v < um:
            return state, np.int64(v)


@njit(cache=True, nogil=True, inline="always")
def uniform01(state):
    state, z = mix64(state)
    return state, np.float64(z >> _U11) * INV_2_53


@njit(cache=True, nogil=True, inline="always")
def poisson1(state):
    state, u = uniform01(state)
    k = 0
    p = EXP_NEG1
    cum = p
    while u > cum and p > 0.0:
        k += 1
        p /= k
        cum += p
    return state, k


@njit(cache=True, nogil=True, inline="always")
def _accept(bloat, v0, s0, v1, s1):
    if bloat:
        return v1 > v0 or (v1 == v0 and s1 <= s0)
    return v1 >= v0


@njit(cache=True, nogil=True, inline="always")
def _done(stop_mode, n, v, s):
    if stop_mode == 0:
        return v == n
    return v == n and s == n


# ---------------------------------------------------------------------------
# MAJORITY: multiset state, undo log
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True, inline="always")
def _maj_expressed(pos, neg, i):
    return pos[i] >= 1 and pos[i] >= neg[i]


@njit(cache=True, nogil=True)
def run_majority(var0, sgn0, n, bloat, kmode, stop_mode, max_iter, seed,
                 trace_every, tr_it, tr_v, tr_s, tr_k, tr_acc):
    """(1+1) loop on MAJORITY; returns
    (iterations, exhausted, max_size, final_size, final_v, accepted, n_trace).
    """
    state = np.uint64(seed)
    t_init = var0.shape[0]
    cap = t_init * 2 + 64
    var = np.empty(cap, dtype=np.int32)
    sgn = np.empty(cap, dtype=np.int8)
    var[:t_init] = var0
    sgn[:t_init] = sgn0
    s = t_init
    pos = np.zeros(n + 1, dtype=np.int64)
    neg = np.zeros(n + 1, dtype=np.int64)
    for j in range(s):
        if sgn[j] > 0:
            pos[var[j]] += 1
        else:
            neg[var[j]] += 1
    v = 0
    for i in range(1, n + 1):
        if _maj_expressed(pos, neg, i):
            v += 1

    # undo log: kind 0=sub 1=ins 2=del 3=noop
    log_kind = np.empty(256, dtype=np.int8)
    log_pos = np.empty(256, dtype=np.int64)
    log_var = np.empty(256, dtype=np.int32)
    log_sgn = np.empty(256, dtype=np.int8)

    max_size = s
    accepted = 0
    n_trace = 0
    iterations = 0
    exhausted = False

    if _done(stop_mode, n, v, s):
        return 0, False, max_size, s, v, accepted, 0

    two_n = 2 * n
    for it in range(1, max_iter + 1):
        if kmode == 0:
            k = 1
        else:
            state, kp = poisson1(state)
            k = 1 + kp
        v0 = v
        s0 = s
        if s + k >= cap:
            new_cap = max(cap * 2, s + k + 64)
            nvar = np.empty(new_cap, dtype=np.int32)
            nsgn = np.empty(new_cap, dtype=np.int8)
            nvar[:s] = var[:s]
            nsgn[:s] = sgn[:s]
            var, sgn, cap = nvar, nsgn, new_cap

        for m in range(k):
            state, choice = randint64(state, 3)
            if choice == 0:  # substitute
                state, p = randint64(state, s)
                state, code = randint64(state, two_n)
                nv = np.int32(code // 2 + 1)
                ns = np.int8(1) if code % 2 == 0 else np.int8(-1)
                ov = var[p]
                os_ = sgn[p]
                log_kind[m] = 0
                log_pos[m] = p
                log_var[m] = ov
                log_sgn[m] = os_
                eb = _maj_expressed(pos, neg, ov)
                if os_ > 0:
                    pos[ov] -= 1
                else:
                    neg[ov] -= 1
                if _maj_expressed(pos, neg, ov) != eb:
                    v += -1 if eb else 1
                eb = _maj_expressed(pos, neg, nv)
                if ns > 0:
                    pos[nv] += 1
                else:
                    neg[nv] += 1
                if _maj_expressed(pos, neg, nv) != eb:
                    v += 1 if not eb else -1
                var[p] = nv
                sgn[p] = ns
            elif choice == 1:  # insert (anchor/side consumed, order irrelevant)
                state, code = randint64(state, two_n)
                state, _anchor = randint64(state, s)
                state, _side = randint64(state, 2)
                nv = np.int32(code // 2 + 1)
                ns = np.int8(1) if code % 2 == 0 else np.int8(-1)
                log_kind[m] = 1
                log_pos[m] = s
                log_var[m] = nv
                log_sgn[m] = ns
                eb = _maj_expressed(pos, neg, nv)
                if ns > 0:
                    pos[nv] += 1
                else:
                    neg[nv] += 1
                if _maj_expressed(pos, neg, nv) != eb:
                    v += 1 if not eb else -1
                var[s] = nv
                sgn[s] = ns
                s += 1
            else:  # delete
                state, p = randint64(state, s)
                if s == 1:
                    log_kind[m] = 3
                else:
                    ov = var[p]
                    os_ = sgn[p]
                    log_kind[m] = 2
                    log_pos[m] = p
                    log_var[m] = ov
                    log_sgn[m] = os_
                    eb = _maj_expressed(pos, neg, ov)
                    if os_ > 0:
                        pos[ov] -= 1
                    else:
                        neg[ov] -= 1
                    if _maj_expressed(pos, neg, ov) != eb:
                        v += -1 if eb else 1
                    var[p] = var[s - 1]
                    sgn[p] = sgn[s - 1]
                    s -= 1

        ok = _accept(bloat, v0, s0, v, s)
        if ok:
            accepted += 1
            if s > max_size:
                max_size = s
        else:
            # roll back in reverse order
            for m in range(k - 1, -1, -1):
                kind = log_kind[m]
                if kind == 0:
                    p = log_pos[m]
                    cv = var[p]
                    cs = sgn[p]
                    eb = _maj_expressed(pos, neg, cv)
                    if cs > 0:
                        pos[cv] -= 1
                    else:
                        neg[cv] -= 1
                    if _maj_expressed(pos, neg, cv) != eb:
                        v += -1 if eb else 1
                    ov = log_var[m]
                    os_ = log_sgn[m]
                    eb = _maj_expressed(pos, neg, ov)
                    if os_ > 0:
                        pos[ov] += 1
                    else:
                        neg[ov] += 1
                    if _maj_expressed(pos, neg, ov) != eb:
                        v += 1 if not eb else -1
                    var[p] = ov
                    sgn[p] = os_
                elif kind == 1:
                    s -= 1
                    cv = var[s]
                    cs = sgn[s]
                    eb = _maj_expressed(pos, neg, cv)
                    if cs > 0:
                        pos[cv] -= 1
                    else:
                        neg[cv] -= 1
                    if _maj_expressed(pos, neg, cv) != eb:
                        v += -1 if eb else 1
                elif kind == 2:
                    p = log_pos[m]
                    var[s] = var[p]
                    sgn[s] = sgn[p]
                    ov = log_var[m]
                    os_ = log_sgn[m]
                    eb = _maj_expressed(pos, neg, ov)
                    if os_ > 0:
                        pos[ov] += 1
                    else:
                        neg[ov] += 1
                    if _maj_expressed(pos, neg, ov) != eb:
                        v += 1 if not eb else -1
                    var[p] = ov
                    sgn[p] = os_
                    s += 1

        if trace_every > 0 and it % trace_every == 0 and n_trace < tr_it.shape[0]:
            tr_it[n_trace] = it
            tr_v[n_trace] = v
            tr_s[n_trace] = s
            tr_k[n_trace] = k
            tr_acc[n_trace] = 1 if ok else 0
            n_trace += 1

        if _done(stop_mode, n, v, s):
            iterations = it
            break
        if it == max_iter:
            iterations = max_iter
            exhausted = True

    return iterations, exhausted, max_size, s, v, accepted, n_trace


# ---------------------------------------------------------------------------
# ORDER: ordered sequence, first-occurrence indices, double buffer
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True, inline="always")
def _ord_expressed(first, sgn, i):
    f = first[i]
    return f >= 0 and sgn[f] > 0


@njit(cache=True, nogil=True)
def _first_scan(var, s, i, start):
    for j in range(start, s):
        if var[j] == i:
            return j
    return -1


@njit(cache=True, nogil=True)
def run_order(var0, sgn0, n, bloat, kmode, stop_mode, max_iter, seed,
              trace_every, tr_it, tr_v, tr_s, tr_k, tr_acc):
    """(1+1) loop on ORDER; same return layout as run_majority."""
    state = np.uint64(seed)
    t_init = var0.shape[0]
    cap = t_init * 2 + 64
    pvar = np.empty(cap, dtype=np.int32)
    psgn = np.empty(cap, dtype=np.int8)
    pvar[:t_init] = var0
    psgn[:t_init] = sgn0
    ps = t_init
    pfirst = np.full(n + 1, -1, dtype=np.int64)
    for j in range(ps - 1, -1, -1):
        pfirst[pvar[j]] = j
    pv = 0
    for i in range(1, n + 1):
        if _ord_expressed(pfirst, psgn, i):
            pv += 1

    cvar = np.empty(cap, dtype=np.int32)
    csgn = np.empty(cap, dtype=np.int8)
    cfirst = np.empty(n + 1, dtype=np.int64)

    max_size = ps
    accepted = 0
    n_trace = 0
    iterations = 0
    exhausted = False

    if _done(stop_mode, n, pv, ps):
        return 0, False, max_size, ps, pv, accepted, 0

    two_n = 2 * n
    for it in range(1, max_iter + 1):
        if kmode == 0:
            k = 1
        else:
            state, kp = poisson1(state)
            k = 1 + kp

        if ps + k >= cvar.shape[0]:
            new_cap = max(cvar.shape[0] * 2, ps + k + 64)
            cvar = np.empty(new_cap, dtype=np.int32)
            csgn = np.empty(new_cap, dtype=np.int8)
        cvar[:ps] = pvar[:ps]
        csgn[:ps] = psgn[:ps]
        cfirst[:] = pfirst
        cs = ps
        cv = pv

        for m in range(k):
            state, choice = randint64(state, 3)
            if choice == 0:  # substitute
                state, p = randint64(state, cs)
                state, code = randint64(state, two_n)
                nv = np.int32(code // 2 + 1)
                nsg = np.int8(1) if code % 2 == 0 else np.int8(-1)
                ov = cvar[p]
                eb_old = _ord_expressed(cfirst, csgn, ov)
                eb_new = _ord_expressed(cfirst, csgn, nv)
                cvar[p] = nv
                csgn[p] = nsg
                if cfirst[ov] == p:
                    cfirst[ov] = _first_scan(cvar, cs, ov, p)
                if cfirst[nv] == -1 or p < cfirst[nv]:
                    cfirst[nv] = p
                if ov == nv:
                    # re-scan covered both roles; fix up from scratch
                    cfirst[ov] = _first_scan(cvar, cs, ov, 0)
                    ea = _ord_expressed(cfirst, csgn, ov)
                    if ea != eb_old:
                        cv += 1 if ea else -1
                else:
                    ea_old = _ord_expressed(cfirst, csgn, ov)
                    ea_new = _ord_expressed(cfirst, csgn, nv)
                    if ea_old != eb_old:
                        cv += 1 if ea_old else -1
                    if ea_new != eb_new:
                        cv += 1 if ea_new else -1
            elif choice == 1:  # insert
                state, code = randint64(state, two_n)
                state, anchor = randint64(state, cs)
                state, side = randint64(state, 2)
                nv = np.int32(code // 2 + 1)
                nsg = np.int8(1) if code % 2 == 0 else np.int8(-1)
                idx = anchor + side
                eb = _ord_expressed(cfirst, csgn, nv)
                for j in range(cs, idx, -1):
                    cvar[j] = cvar[j - 1]
                    csgn[j] = csgn[j - 1]
                cvar[idx] = nv
                csgn[idx] = nsg
                cs += 1
                for w in range(1, n + 1):
                    if cfirst[w] >= idx:
                        cfirst[w] += 1
                if cfirst[nv] == -1 or idx < cfirst[nv]:
                    cfirst[nv] = idx
                ea = _ord_expressed(cfirst, csgn, nv)
                if ea != eb:
                    cv += 1 if ea else -1
            else:  # delete
                state, p = randint64(state, cs)
                if cs > 1:
                    ov = cvar[p]
                    eb = _ord_expressed(cfirst, csgn, ov)
                    was_first = cfirst[ov] == p
                    for j in range(p, cs - 1):
                        cvar[j] = cvar[j + 1]
                        csgn[j] = csgn[j + 1]
                    cs -= 1
                    for w in range(1, n + 1):
                        if cfirst[w] > p:
                            cfirst[w] -= 1
                    if was_first:
                        cfirst[ov] = _first_scan(cvar, cs, ov, p)
                    ea = _ord_expressed(cfirst, csgn, ov)
                    if ea != eb:
                        cv += 1 if ea else -1

        ok = _accept(bloat, pv, ps, cv, cs)
        if ok:
            accepted += 1
            pvar, cvar = cvar, pvar
            psgn, csgn = csgn, psgn
            pfirst, cfirst = cfirst, pfirst
            ps = cs
            pv = cv
            if ps > max_size:
                max_size = ps

        if trace_every > 0 and it % trace_every == 0 and n_trace < tr_it.shape[0]:
            tr_it[n_trace] = it
            tr_v[n_trace] = pv
            tr_s[n_trace] = ps
            tr_k[n_trace] = k
            tr_acc[n_trace] = 1 if ok else 0
            n_trace += 1

        if _done(stop_mode, n, pv, ps):
            iterations = it
            break
        if it == max_iter:
            iterations = max_iter
            exhausted = True

    return iterations, exhausted, max_size, ps, pv, accepted, n_trace


@njit(cache=True, nogil=True)
def rng_selftest(seed, count):
    """First ``count`` raw outputs; locked against RngStream in tests."""
    out = np.empty(count, dtype=np.uint64)
    state = np.uint64(seed)
    for i in range(count):
        state, z = mix64(state)
        out[i] = z
    return out


@njit(cache=True, nogil=True)
def poisson_selftest(seed, count):
    out = np.empty(count, dtype=np.int64)
    state = np.uint64(seed)
    for i in range(count):
        state, k = poisson1(state)
        out[i] = k
    return out
