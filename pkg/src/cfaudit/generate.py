"""Seeded random SCMs for property testing.

Each model has 2-3 exogenous variables (the first is always the context
``Z``; the others are ``U1``, ``U2``), 1-2 endogenous variables (``X``
always, optionally ``W`` declared before it), and domains of size 2-3.
Prior masses are integers from 1 to 4 normalised to exact rationals, each
zeroed with probability ``zero_mass_prob`` while keeping at least one
positive entry.  Equation tables are filled uniformly at random.  ``W``
reads a nonempty subset of the exogenous variables; ``X`` reads a nonempty
subset of everything declared before it.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from cfaudit.scm import ENDOGENOUS, EXOGENOUS, Scm, StructuralEquation, VariableSpec

INPUT_VAR = "X"
CONTEXT_VAR = "Z"


def _labels(prefix: str, n: int) -> tuple[str, ...]:
    return tuple(f"{prefix}{i}" for i in range(n))


def _prior(rng: random.Random, domain, zero_mass_prob: float) -> dict[str, Fraction]:
    while True:
        raw = [0 if rng.random() < zero_mass_prob else rng.randint(1, 4) for _ in domain]
        if sum(raw):
            break
    total = sum(raw)
    return {v: Fraction(m, total) for v, m in zip(domain, raw)}


def _subset(rng: random.Random, names: list[str]) -> tuple[str, ...]:
    while True:
        chosen = tuple(n for n in names if rng.random() < 0.6)
        if chosen:
            return chosen


def random_scm(seed: int, zero_mass_prob: float = 0.2) -> Scm:
    rng = random.Random(seed)
    n_exo = rng.randint(2, 3)
    n_endo = rng.randint(1, 2)
    exo_names = ["Z", "U1", "U2"][:n_exo]
    endo_names = ["W", "X"] if n_endo == 2 else ["X"]

    specs = []
    priors = {}
    for name in exo_names:
        domain = _labels(name.lower(), rng.randint(2, 3))
        specs.append(VariableSpec(name, EXOGENOUS, domain))
        priors[name] = _prior(rng, domain, zero_mass_prob)

    equations = {}
    available = list(exo_names)
    for name in endo_names:
        domain = _labels(name.lower(), rng.randint(2, 3))
        spec = VariableSpec(name, ENDOGENOUS, domain)
        pool = exo_names if name == "W" else available
        parents = _subset(rng, pool)
        domains = {s.name: s.domain for s in specs}
        table = {
            combo: rng.choice(domain)
            for combo in itertools.product(*(domains[p] for p in parents))
        }
        specs.append(spec)
        equations[name] = StructuralEquation(name, parents, table)
        available.append(name)
    return Scm(tuple(specs), priors, equations)


def random_scms(count: int, base_seed: int = 0, zero_mass_prob: float = 0.2) -> list[Scm]:
    return [random_scm(base_seed + i, zero_mass_prob) for i in range(count)]
