"""Invariance constraints as partitions of an input variable's support.

A representation is audited only through the equalities it is forced to
satisfy: every constraint ``Γ(x) = Γ(x')`` merges two values, and the
transitive closure of all merges is a partition of ``supp(X)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Mapping

from cfaudit.inference import CounterfactualQuery, counterfactual, guess_counterfactual
from cfaudit.scm import CfauditError, Scm, marginal


class UnionFind:
    """Disjoint sets over hashable items, union by size with path halving."""

    def __init__(self, items: Iterable = ()):
        self.parent = {}
        self.size = {}
        for item in items:
            self.add(item)

    def add(self, item) -> None:
        if item not in self.parent:
            self.parent[item] = item
            self.size[item] = 1

    def find(self, item):
        parent = self.parent
        while parent[item] != item:
            parent[item] = parent[parent[item]]
            item = parent[item]
        return item

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True

    def groups(self) -> list[list]:
        out: dict = {}
        for item in self.parent:
            out.setdefault(self.find(item), []).append(item)
        return list(out.values())


@dataclass(frozen=True)
class ConstraintSet:
    """Per-value peer sets: ``Γ(x)`` must equal ``Γ(x')`` for each peer ``x'``.

    ``support`` lists the values the constraints range over and ``domain``
    fixes the canonical order.
    """

    input_var: str
    domain: tuple[str, ...]
    support: tuple[str, ...]
    constraints: tuple[tuple[str, frozenset[str]], ...]

    def peers(self, x: str) -> frozenset[str]:
        out: set[str] = set()
        for source, ps in self.constraints:
            if source == x:
                out |= ps
        return frozenset(out)


@dataclass(frozen=True)
class Partition:
    input_var: str
    classes: tuple[tuple[str, ...], ...]

    @property
    def support(self) -> frozenset[str]:
        return frozenset(v for c in self.classes for v in c)

    def class_of(self, x: str) -> tuple[str, ...] | None:
        for c in self.classes:
            if x in c:
                return c
        return None

    def as_sets(self) -> set[frozenset[str]]:
        return {frozenset(c) for c in self.classes}

    def to_doc(self) -> dict:
        return {"input_var": self.input_var, "classes": [list(c) for c in self.classes]}

    @classmethod
    def from_doc(cls, doc: Mapping) -> Partition:
        return cls(doc["input_var"], tuple(tuple(c) for c in doc["classes"]))

    def __str__(self) -> str:
        return " ".join("{" + ", ".join(c) + "}" for c in self.classes)


class Verdict(str, enum.Enum):
    EQUAL = "equal"
    CDA_STRICTLY_FINER = "cda_strictly_finer"
    INCONSISTENT = "inconsistent"


class MismatchedSupportError(CfauditError):
    pass


def _support(scm: Scm, var: str) -> tuple[str, ...]:
    pmf = marginal(scm, var).pmf
    return tuple(v for v in scm.domain(var) if pmf[v] > 0)


def _extract(scm: Scm, input_var: str, context_var: str, dist_for) -> ConstraintSet:
    xs = _support(scm, input_var)
    zs = _support(scm, context_var)
    constraints = []
    for x in xs:
        peers: set[str] = set()
        for z in zs:
            peers |= dist_for(x, z).support()
        constraints.append((x, frozenset(peers)))
    return ConstraintSet(input_var, scm.domain(input_var), xs, tuple(constraints))


def cf_distribution(scm: Scm, input_var: str, context_var: str, x: str, z: str):
    return counterfactual(scm, CounterfactualQuery(input_var, {context_var: z}, {input_var: x}))


def cda_distribution(scm: Scm, input_var: str, context_var: str, x: str, z: str):
    return guess_counterfactual(scm, input_var, context_var, z, {input_var: x})


def cf_constraints(scm: Scm, input_var: str, context_var: str) -> ConstraintSet:
    """Peers of each ``x`` under the true counterfactuals ``X(Z=z') | X=x``."""
    return _extract(
        scm, input_var, context_var, lambda x, z: cf_distribution(scm, input_var, context_var, x, z)
    )


def cda_constraints(scm: Scm, input_var: str, context_var: str) -> ConstraintSet:
    """Peers of each ``x`` under the guessed-context counterfactuals."""
    return _extract(
        scm, input_var, context_var, lambda x, z: cda_distribution(scm, input_var, context_var, x, z)
    )


def partition_from(constraints: ConstraintSet) -> Partition:
    """Transitive closure of the constraints, restricted to the support."""
    support = set(constraints.support)
    uf = UnionFind(constraints.support)
    for x, peers in constraints.constraints:
        for p in peers:
            if p in support and x in support:
                uf.union(x, p)
    order = {v: i for i, v in enumerate(constraints.domain)}
    classes = [tuple(sorted(g, key=order.__getitem__)) for g in uf.groups()]
    classes.sort(key=lambda c: order[c[0]])
    return Partition(constraints.input_var, tuple(classes))


@dataclass(frozen=True)
class SupportCheck:
    holds: bool
    witness: tuple[str, str, str] | None = None
    pairs_checked: int = 0


def check_support_subset(scm: Scm, input_var: str, context_var: str) -> SupportCheck:
    """Check that every guessed-context counterfactual support lies inside
    the corresponding true counterfactual support.

    Returns the first ``(x, z, x')`` with ``x'`` in the guessed support but
    not the true one, if any.
    """
    n = 0
    for x in _support(scm, input_var):
        for z in _support(scm, context_var):
            n += 1
            guessed = cda_distribution(scm, input_var, context_var, x, z).support()
            true = cf_distribution(scm, input_var, context_var, x, z).support()
            extra = [v for v in scm.domain(input_var) if v in guessed - true]
            if extra:
                return SupportCheck(False, (x, z, extra[0]), n)
    return SupportCheck(True, None, n)


def compare_partitions(cda: Partition, cf: Partition) -> Verdict:
    if cda.input_var != cf.input_var or cda.support != cf.support:
        raise MismatchedSupportError(
            f"partitions over {cda.input_var}/{sorted(cda.support)} and "
            f"{cf.input_var}/{sorted(cf.support)} are not comparable"
        )
    if cda.as_sets() == cf.as_sets():
        return Verdict.EQUAL
    cf_sets = cf.as_sets()
    if all(any(set(c) <= s for s in cf_sets) for c in cda.classes):
        return Verdict.CDA_STRICTLY_FINER
    return Verdict.INCONSISTENT
