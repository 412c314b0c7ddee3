"""Seeded, exact sampling.

Generators are :class:`random.Random` (Mersenne Twister) instances seeded
from strings such as ``"7/example/3"``; string seeds hash through SHA-512,
so a stream depends only on the seed text.  Draws from rational pmfs never
go through floats: the masses are scaled to a common denominator ``L`` and
an integer is drawn uniformly from ``range(L)``.
"""

from __future__ import annotations

import math
import random
from fractions import Fraction
from typing import Iterable, Sequence, TypeVar

T = TypeVar("T")


def derive_rng(seed: int, *path: object) -> random.Random:
    return random.Random("/".join(str(p) for p in (seed, *path)))


def draw(rng: random.Random, items: Sequence[tuple[T, Fraction]]) -> T:
    """Draw one item with probability proportional to its (exact) mass."""
    items = [(item, Fraction(m)) for item, m in items if m > 0]
    if not items:
        raise ValueError("cannot draw from an empty or zero-mass pmf")
    denom = math.lcm(*(m.denominator for _, m in items))
    weights = [m.numerator * (denom // m.denominator) for _, m in items]
    r = rng.randrange(sum(weights))
    for (item, _), w in zip(items, weights):
        if r < w:
            return item
        r -= w
    raise AssertionError("unreachable")


def draw_many(rng: random.Random, items: Iterable[tuple[T, Fraction]], k: int) -> list[T]:
    items = list(items)
    return [draw(rng, items) for _ in range(k)]
