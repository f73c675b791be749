"""Deterministic random streams shared by every stochastic component.

The generator is splitmix64: pure 64-bit integer arithmetic, so the same
seed produces the same draw sequence on every platform and under any
thread schedule.  The compiled run engines re-implement the identical
update (see ``engines.py``); ``tests/test_rng.py`` locks the two together
draw for draw.
"""

from __future__ import annotations

import math

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

_INV_2_53 = 2.0 ** -53


def _mix(state: int) -> tuple[int, int]:
    """One splitmix64 step: returns (new_state, output)."""
    state = (state + _GOLDEN) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    z ^= z >> 31
    return state, z


def derive_seed(master: int, *parts: int) -> int:
    """Mix integer components into a child seed.

    Used to give every run/trial in a sweep its own independent stream;
    stable across platforms (no reliance on Python's ``hash``).
    """
    state = master & _MASK64
    for p in parts:
        state ^= p & _MASK64
        state, z = _mix(state)
        state = z
    state, z = _mix(state)
    return z


class RngStream:
    """A single deterministic stream of uniform draws.

    One stream per run; never shared between threads.
    """

    __slots__ = ("state",)

    def __init__(self, seed: int) -> None:
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state, z = _mix(self.state)
        return z

    def random(self) -> float:
        """Uniform float in [0, 1) with 53-bit resolution."""
        return (self.next_u64() >> 11) * _INV_2_53

    def randint(self, m: int) -> int:
        """Uniform integer in [0, m) via masked rejection (unbiased).

        Always consumes at least one draw, even for m == 1, so that
        independent implementations stay aligned on the stream.
        """
        if m < 1:
            raise ValueError("randint bound must be >= 1")
        mask = m - 1
        mask |= mask >> 1
        mask |= mask >> 2
        mask |= mask >> 4
        mask |= mask >> 8
        mask |= mask >> 16
        mask |= mask >> 32
        while True:
            v = self.next_u64() & mask
            if v < m:
                return v

    def poisson1(self) -> int:
        """Exact Poisson(1) sample by CDF inversion of a single uniform.

        No truncation: the walk continues as far as the 53-bit uniform
        can discriminate (k ~ 17 has probability below 2^-53).
        """
        u = self.random()
        k = 0
        p = math.exp(-1.0)
        cum = p
        while u > cum and p > 0.0:
            k += 1
            p /= k
            cum += p
        return k

    def spawn(self, *parts: int) -> "RngStream":
        """Child stream keyed by integer components (does not advance self)."""
        return RngStream(derive_seed(self.state, *parts))
