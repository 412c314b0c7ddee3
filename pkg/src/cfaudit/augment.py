"""Counterfactual data augmentation in three flavours.

``full``       true counterfactuals, abducting over every context
``guess``      counterfactuals conditioned on the MAP context of each input
``posterior``  counterfactuals conditioned on each admissible context drawn
               from or thresholded on ``P(Z | X=x)``

Each flavour either enumerates whole counterfactual supports with exact
masses (the default) or draws ``k`` samples per (example, intervention).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator

from cfaudit import rng as rngmod
from cfaudit.inference import (
    CounterfactualQuery,
    Distribution,
    counterfactual,
    map_context,
    posterior,
)
from cfaudit.invariance import ConstraintSet
from cfaudit.scm import (
    CfauditError,
    QueryError,
    Scm,
    enumerate_worlds,
    format_rational,
    marginal,
    parse_rational,
)

FULL, GUESS, POSTERIOR = "full", "guess", "posterior"
ALL_CONTEXTS = "all"


class OutsideSupportError(QueryError):
    pass


class NoAdmissibleContextError(QueryError):
    pass


class DatasetFormatError(CfauditError):
    pass


@dataclass(frozen=True)
class LabeledExample:
    x: str
    y: str
    weight: int = 1


@dataclass(frozen=True)
class AugmentedExample:
    x: str
    y: str
    source_x: str
    intervened_z: str
    mode: str
    context_used: str
    mass: Fraction


@dataclass(frozen=True)
class Sampling:
    """Draw ``k`` values per (example, intervention) instead of enumerating."""

    k: int = 1
    seed: int = 0


@dataclass(frozen=True)
class Threshold:
    """Use every context whose posterior exceeds ``tau``."""

    tau: Fraction = Fraction(0)


@dataclass(frozen=True)
class SampleContexts:
    """Use the distinct contexts among ``k`` seeded posterior draws."""

    k: int = 1
    seed: int = 0


@dataclass
class AugmentedDataset:
    input_var: str
    domain: tuple[str, ...]
    mode: str
    originals: list[LabeledExample]
    augmented: list[AugmentedExample] = field(default_factory=list)
    parameters: dict = field(default_factory=dict)

    def x_primes(self, source_x: str | None = None) -> set[str]:
        return {a.x for a in self.augmented if source_x is None or a.source_x == source_x}

    def training_examples(self) -> list[LabeledExample]:
        """Originals followed by the augmented records, each with weight 1."""
        return list(self.originals) + [LabeledExample(a.x, a.y) for a in self.augmented]


def sample_dataset(scm: Scm, input_var: str, label_var: str, n: int, seed: int = 0) -> list[LabeledExample]:
    """Draw ``n`` i.i.d. examples ``(x, y)`` from the model's prior."""
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    scm.var(input_var)
    scm.var(label_var)
    enumerate_worlds(scm)
    rng = rngmod.derive_rng(seed, "sample")
    exo = scm.exogenous
    pmfs = [list(scm.priors[u].items()) for u in exo]
    out = []
    for _ in range(n):
        values = scm.propagate({u: rngmod.draw(rng, pmf) for u, pmf in zip(exo, pmfs)})
        out.append(LabeledExample(values[input_var], values[label_var]))
    return out


def _support(scm: Scm, var: str) -> tuple[str, ...]:
    pmf = marginal(scm, var).pmf
    return tuple(v for v in scm.domain(var) if pmf[v] > 0)


def _emit(
    dist: Distribution,
    ex: LabeledExample,
    z: str,
    mode: str,
    context: str,
    sampling: Sampling | None,
    rng,
) -> Iterator[AugmentedExample]:
    if sampling is None:
        values = [v for v, m in dist.pmf.items() if m > 0]
    else:
        values = rngmod.draw_many(rng, dist.pmf.items(), sampling.k)
    for v in values:
        yield AugmentedExample(v, ex.y, ex.x, z, mode, context, dist.pmf[v])


def _run(scm, input_var, context_var, data, mode, sampling, contexts_for, params) -> AugmentedDataset:
    """Shared driver: ``contexts_for(index, x)`` yields ``(label, evidence)``
    pairs, one counterfactual family per pair."""
    data = list(data)
    x_support = set(_support(scm, input_var))
    z_support = _support(scm, context_var)
    for i, ex in enumerate(data):
        if ex.x not in x_support:
            raise OutsideSupportError(
                f"example {i} outside model support: {input_var}={ex.x} has probability 0"
            )
    if sampling is not None:
        params = {**params, "k": sampling.k, "seed": sampling.seed}
    out = AugmentedDataset(input_var, scm.domain(input_var), mode, data, parameters=params)
    for i, ex in enumerate(data):
        rng = rngmod.derive_rng(sampling.seed, "augment", i) if sampling else None
        for context, evidence in contexts_for(i, ex.x):
            for z in z_support:
                dist = counterfactual(scm, CounterfactualQuery(input_var, {context_var: z}, evidence))
                out.augmented.extend(_emit(dist, ex, z, mode, context, sampling, rng))
    return out


def full_cda(
    scm: Scm,
    input_var: str,
    label_var: str,
    context_var: str,
    data: Iterable[LabeledExample],
    sampling: Sampling | None = None,
) -> AugmentedDataset:
    scm.var(label_var)

    def contexts(i, x):
        yield ALL_CONTEXTS, {input_var: x}

    return _run(scm, input_var, context_var, data, FULL, sampling, contexts, {})


def guess_cda(
    scm: Scm,
    input_var: str,
    label_var: str,
    context_var: str,
    data: Iterable[LabeledExample],
    sampling: Sampling | None = None,
) -> AugmentedDataset:
    scm.var(label_var)

    def contexts(i, x):
        guess = map_context(scm, context_var, {input_var: x})
        yield guess.value, {input_var: x, context_var: guess.value}

    return _run(scm, input_var, context_var, data, GUESS, sampling, contexts, {})


def posterior_cda(
    scm: Scm,
    input_var: str,
    label_var: str,
    context_var: str,
    data: Iterable[LabeledExample],
    context_rule: Threshold | SampleContexts = Threshold(),
    sampling: Sampling | None = None,
) -> AugmentedDataset:
    scm.var(label_var)
    if isinstance(context_rule, Threshold):
        tau = Fraction(context_rule.tau)
        if not 0 <= tau < 1:
            raise ValueError(f"threshold must satisfy 0 <= tau < 1, got {tau}")
        params = {"tau": format_rational(tau)}
    else:
        tau = None
        if context_rule.k < 1:
            raise ValueError("context draws must be at least 1")
        params = {"context_k": context_rule.k, "context_seed": context_rule.seed}

    def contexts(i, x):
        post = posterior(scm, context_var, {input_var: x})
        if isinstance(context_rule, Threshold):
            chosen = [z for z in scm.domain(context_var) if post.pmf[z] > tau]
        else:
            rng = rngmod.derive_rng(context_rule.seed, "context", i)
            drawn = set(rngmod.draw_many(rng, post.pmf.items(), context_rule.k))
            chosen = [z for z in scm.domain(context_var) if z in drawn]
        if not chosen:
            raise NoAdmissibleContextError(
                f"no admissible context for {input_var}={x}: no posterior mass exceeds {tau}"
            )
        for z in chosen:
            yield z, {input_var: x, context_var: z}

    return _run(scm, input_var, context_var, data, POSTERIOR, sampling, contexts, params)


def induced_constraints(aug: AugmentedDataset) -> ConstraintSet:
    """Equalities ``Γ(source_x) = Γ(x')`` forced by a finite augmented dataset,
    over the values that appear in it."""
    present = {ex.x for ex in aug.originals} | {a.x for a in aug.augmented}
    support = tuple(v for v in aug.domain if v in present)
    peers: dict[str, set[str]] = {}
    for a in aug.augmented:
        peers.setdefault(a.source_x, set()).add(a.x)
    constraints = tuple(
        (x, frozenset(peers[x])) for x in aug.domain if x in peers
    )
    return ConstraintSet(aug.input_var, aug.domain, support, constraints)


# -- dataset files (newline-delimited JSON) --------------------------------


def read_dataset(path: str | Path) -> list[LabeledExample]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetFormatError(f"line {lineno}: {exc.msg}") from exc
            if not isinstance(rec, dict) or not {"x", "y"} <= set(rec) or set(rec) - {"x", "y", "weight"}:
                raise DatasetFormatError(f"line {lineno}: expected fields x, y and optional weight")
            weight = rec.get("weight", 1)
            if not isinstance(weight, int) or weight < 1:
                raise DatasetFormatError(f"line {lineno}: weight must be a positive integer")
            out.append(LabeledExample(str(rec["x"]), str(rec["y"]), weight))
    return out


def write_dataset(path: str | Path, data: Iterable[LabeledExample]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ex in data:
            fh.write(json.dumps(asdict(ex)) + "\n")


def augmented_record(a: AugmentedExample) -> dict:
    return {
        "x": a.x,
        "y": a.y,
        "weight": 1,
        "source_x": a.source_x,
        "intervened_z": a.intervened_z,
        "mode": a.mode,
        "context_used": a.context_used,
        "mass": format_rational(a.mass),
    }


def parse_augmented_record(rec: dict) -> AugmentedExample:
    return AugmentedExample(
        rec["x"], rec["y"], rec["source_x"], rec["intervened_z"], rec["mode"],
        rec["context_used"], parse_rational(rec["mass"]),
    )


def write_augmented(path: str | Path, aug: AugmentedDataset) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for a in aug.augmented:
            fh.write(json.dumps(augmented_record(a)) + "\n")
