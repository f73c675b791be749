"""Shared test helpers: random trees and tree construction shorthands."""

from __future__ import annotations

import random

from gp_lab.gp_core import GpTree, Literal


def random_leaves(rng: random.Random, n: int, size: int) -> list[Literal]:
    return [Literal(rng.randint(1, n), rng.random() < 0.5) for _ in range(size)]


def random_tree(
    rng: random.Random, n: int, size: int, problem: str, mode: str = "indexed"
) -> GpTree:
    return GpTree(random_leaves(rng, n, size), n, problem, mode)


def tree(text: str, n: int, problem: str, mode: str = "indexed") -> GpTree:
    return GpTree.from_text(text, n, problem, mode)
