"""Exact conditioning and counterfactual inference by enumeration.

Counterfactuals follow abduction, action, prediction: the exogenous prior
is conditioned on the evidence, intervened variables are pinned to
constants (for an exogenous variable this overrides its abducted
posterior), and every abducted exogenous completion is pushed through the
mutilated model.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Mapping, NamedTuple

from cfaudit.scm import QueryError, Scm, enumerate_worlds, format_rational, parse_rational

Assignment = Mapping[str, str]


class ImpossibleEvidenceError(QueryError):
    def __init__(self, evidence: Assignment):
        self.evidence = dict(evidence)
        shown = ", ".join(f"{k}={v}" for k, v in evidence.items())
        super().__init__(f"impossible evidence: P({shown}) = 0")


@dataclass(frozen=True)
class Distribution:
    """Exact pmf over one variable or a tuple of variables.

    Keys are plain values for a single variable and value tuples otherwise.
    Single-variable pmfs produced here are total over the domain, with zero
    entries kept explicit.
    """

    variables: tuple[str, ...]
    pmf: Mapping[Any, Fraction]

    def __getitem__(self, key) -> Fraction:
        return self.pmf.get(key, Fraction(0))

    def support(self) -> set:
        return {k for k, m in self.pmf.items() if m > 0}

    def nonzero(self) -> dict:
        return {k: m for k, m in self.pmf.items() if m > 0}

    def total(self) -> Fraction:
        return sum(self.pmf.values(), Fraction(0))

    def is_point_mass(self) -> bool:
        return len(self.support()) == 1

    def to_doc(self) -> dict:
        if len(self.variables) == 1:
            pmf = {k: format_rational(m) for k, m in self.pmf.items()}
        else:
            pmf = {"|".join(k): format_rational(m) for k, m in self.pmf.items()}
        return {"variables": list(self.variables), "pmf": pmf}

    @classmethod
    def from_doc(cls, doc: Mapping) -> Distribution:
        variables = tuple(doc["variables"])
        pmf = {}
        for k, m in doc["pmf"].items():
            key = k if len(variables) == 1 else tuple(k.split("|"))
            pmf[key] = parse_rational(m)
        return cls(variables, pmf)

    def __str__(self) -> str:
        items = self.nonzero()
        return ", ".join(f"{_key(k)}: {format_rational_short(m)}" for k, m in items.items())


def _key(k) -> str:
    return "|".join(k) if isinstance(k, tuple) else str(k)


def format_rational_short(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else format_rational(q)


def check_assignment(scm: Scm, assignment: Assignment, what: str = "assignment") -> None:
    for name, value in assignment.items():
        domain = scm.domain(name)
        if value not in domain:
            raise QueryError(f"{what}: {name}={value} is outside the domain of {name}")


def _matches(world, evidence: Assignment) -> bool:
    return all(world[k] == v for k, v in evidence.items())


def probability(scm: Scm, evidence: Assignment) -> Fraction:
    check_assignment(scm, evidence, "evidence")
    return sum((w.probability for w in enumerate_worlds(scm) if _matches(w, evidence)), Fraction(0))


def posterior(scm: Scm, query_vars, evidence: Assignment) -> Distribution:
    """Joint pmf of ``query_vars`` given ``evidence``.

    ``query_vars`` may be a single name; the result is then total over that
    variable's domain.  Joint results list only combinations that occur in
    some enumerated world.
    """
    if isinstance(query_vars, str):
        query_vars = (query_vars,)
    query_vars = tuple(query_vars)
    for q in query_vars:
        scm.var(q)
    check_assignment(scm, evidence, "evidence")

    if len(query_vars) == 1:
        pmf = {v: Fraction(0) for v in scm.domain(query_vars[0])}
    else:
        pmf = {}
    norm = Fraction(0)
    for w in enumerate_worlds(scm):
        if not _matches(w, evidence):
            continue
        key = w[query_vars[0]] if len(query_vars) == 1 else tuple(w[q] for q in query_vars)
        pmf[key] = pmf.get(key, Fraction(0)) + w.probability
        norm += w.probability
    if norm == 0:
        raise ImpossibleEvidenceError(evidence)
    return Distribution(query_vars, {k: m / norm for k, m in pmf.items()})


class MapContext(NamedTuple):
    value: str
    tie: bool
    posterior: Distribution


def map_context(scm: Scm, context_var: str, evidence: Assignment) -> MapContext:
    """MAP value of ``context_var`` given ``evidence``.

    Ties go to the value earliest in the domain order, and ``tie`` is set.
    """
    post = posterior(scm, context_var, evidence)
    best = max(post.pmf.values())
    winners = [v for v in scm.domain(context_var) if post.pmf[v] == best]
    return MapContext(winners[0], len(winners) > 1, post)


def exogenous_posterior(scm: Scm, evidence: Assignment) -> dict[tuple[str, ...], Fraction]:
    """Abduction: positive-mass exogenous completions given ``evidence``."""
    check_assignment(scm, evidence, "evidence")
    exo = scm.exogenous
    weights: dict[tuple[str, ...], Fraction] = {}
    norm = Fraction(0)
    for w in enumerate_worlds(scm):
        if w.probability > 0 and _matches(w, evidence):
            key = tuple(w[u] for u in exo)
            weights[key] = weights.get(key, Fraction(0)) + w.probability
            norm += w.probability
    if norm == 0:
        raise ImpossibleEvidenceError(evidence)
    return {k: m / norm for k, m in weights.items()}


@dataclass(frozen=True)
class CounterfactualQuery:
    target: str
    intervention: Assignment
    evidence: Assignment


def counterfactual(scm: Scm, query: CounterfactualQuery) -> Distribution:
    """Distribution of ``target`` had ``intervention`` held, given ``evidence``."""
    scm.var(query.target)
    check_assignment(scm, query.intervention, "intervention")
    abducted = exogenous_posterior(scm, query.evidence)
    exo = scm.exogenous
    pmf = {v: Fraction(0) for v in scm.domain(query.target)}
    for combo, mass in abducted.items():
        values = scm.propagate(dict(zip(exo, combo)), fixed=query.intervention)
        pmf[values[query.target]] += mass
    return Distribution((query.target,), pmf)


def guess_counterfactual(
    scm: Scm, target: str, context_var: str, do_value: str, evidence: Assignment
) -> Distribution:
    """Counterfactual of ``target`` under ``do(context_var=do_value)`` after
    conditioning on the MAP guess of ``context_var`` as extra evidence."""
    guess = map_context(scm, context_var, evidence)
    extended = {**evidence, context_var: guess.value}
    # the MAP value has positive posterior, so the extended evidence is possible
    assert probability(scm, extended) > 0, extended
    return counterfactual(scm, CounterfactualQuery(target, {context_var: do_value}, extended))
