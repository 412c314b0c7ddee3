"""Discrete structural causal models with exact rational priors.

All randomness lives in mutually independent exogenous variables; every
endogenous variable is a deterministic table over its parents.  Values are
opaque string labels, and each variable's domain order (declaration order)
is the canonical order used for enumeration and tie-breaking.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from graphlib import CycleError, TopologicalSorter
from pathlib import Path
from typing import Any, Iterable, Mapping

EXOGENOUS = "exogenous"
ENDOGENOUS = "endogenous"


class CfauditError(Exception):
    """Base class for every error raised by this package."""


class ModelParseError(CfauditError):
    """A model document is ill-formed (bad JSON, wrong keys, bad rationals)."""

    def __init__(self, message: str, where: str = ""):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


class InvalidModelError(CfauditError):
    """An operation was given a model that does not pass :func:`validate`."""

    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("invalid model: " + "; ".join(violations))


class QueryError(CfauditError):
    """A query references unknown variables or values, or cannot be answered."""


@dataclass(frozen=True)
class VariableSpec:
    name: str
    kind: str
    domain: tuple[str, ...]

    def index(self, value: str) -> int:
        return self.domain.index(value)


@dataclass(frozen=True)
class StructuralEquation:
    """``child := table[parent values]`` with parents in the listed order."""

    child: str
    parents: tuple[str, ...]
    table: Mapping[tuple[str, ...], str]

    def __call__(self, values: Mapping[str, str]) -> str:
        return self.table[tuple(values[p] for p in self.parents)]


@dataclass(frozen=True)
class World:
    assignment: Mapping[str, str]
    probability: Fraction

    def __getitem__(self, name: str) -> str:
        return self.assignment[name]


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True, eq=False)
class Scm:
    """A structural causal model.

    ``priors`` maps each exogenous variable to a pmf over its domain and
    ``equations`` maps each endogenous variable to its structural equation.
    Construction performs no checks; call :func:`validate`.
    """

    variables: tuple[VariableSpec, ...]
    priors: Mapping[str, Mapping[str, Fraction]]
    equations: Mapping[str, StructuralEquation]
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.variables]

    def var(self, name: str) -> VariableSpec:
        for v in self.variables:
            if v.name == name:
                return v
        raise QueryError(f"unknown variable {name!r}")

    def domain(self, name: str) -> tuple[str, ...]:
        return self.var(name).domain

    @property
    def exogenous(self) -> list[str]:
        return [v.name for v in self.variables if v.kind == EXOGENOUS]

    @property
    def endogenous(self) -> list[str]:
        return [v.name for v in self.variables if v.kind == ENDOGENOUS]

    def topological_order(self) -> list[str]:
        """Endogenous variables ordered so that parents precede children."""
        if "topo" not in self._cache:
            endo = set(self.endogenous)
            graph = {
                name: [p for p in self.equations[name].parents if p in endo]
                for name in self.endogenous
            }
            self._cache["topo"] = list(TopologicalSorter(graph).static_order())
        return self._cache["topo"]

    def propagate(
        self, exogenous: Mapping[str, str], fixed: Mapping[str, str] | None = None
    ) -> dict[str, str]:
        """Complete an exogenous assignment by evaluating the equations.

        Variables in ``fixed`` keep the given value instead of their
        mechanism (the do-operation); this applies to exogenous variables too.
        """
        fixed = fixed or {}
        values = dict(exogenous)
        values.update({k: v for k, v in fixed.items() if k in values})
        for name in self.topological_order():
            if name in fixed:
                values[name] = fixed[name]
            else:
                values[name] = self.equations[name](values)
        return values


def _fmt(values: Iterable[str]) -> str:
    return "(" + ", ".join(values) + ")"


def validate(scm: Scm) -> ValidationReport:
    """Check every structural invariant of ``scm`` and list the violations."""
    out: list[str] = []
    seen: dict[str, VariableSpec] = {}
    for v in scm.variables:
        if v.name in seen:
            out.append(f"duplicate variable {v.name!r}")
        seen[v.name] = v
        if v.kind not in (EXOGENOUS, ENDOGENOUS):
            out.append(f"variable {v.name!r}: unknown kind {v.kind!r}")
        if not v.domain:
            out.append(f"variable {v.name!r}: empty domain")
        if len(set(v.domain)) != len(v.domain):
            out.append(f"variable {v.name!r}: duplicate domain labels")

    for name, v in seen.items():
        if v.kind == EXOGENOUS:
            if name in scm.equations:
                out.append(f"exogenous variable {name!r} has an equation")
            pmf = scm.priors.get(name)
            if pmf is None:
                out.append(f"exogenous variable {name!r} has no prior")
                continue
            extra = [k for k in pmf if k not in v.domain]
            if extra:
                out.append(f"prior {name!r}: values outside domain {extra}")
            missing = [k for k in v.domain if k not in pmf]
            if missing:
                out.append(f"prior {name!r}: not total, missing {missing}")
            if any(m < 0 for m in pmf.values()):
                out.append(f"prior {name!r}: negative mass")
            total = sum(pmf.values(), Fraction(0))
            if total != 1:
                out.append(f"prior {name!r}: prior mass ≠ 1 (sums to {total})")
        elif v.kind == ENDOGENOUS:
            if name in scm.priors:
                out.append(f"endogenous variable {name!r} has a prior")
            if name not in scm.equations:
                out.append(f"endogenous variable {name!r} has no equation")

    for name in scm.priors:
        if name not in seen:
            out.append(f"prior for unknown variable {name!r}")

    acyclic_ok = True
    for child, eq in scm.equations.items():
        if child not in seen:
            out.append(f"equation for unknown variable {child!r}")
            acyclic_ok = False
            continue
        if eq.child != child:
            out.append(f"equation {child!r}: child field is {eq.child!r}")
        unknown = [p for p in eq.parents if p not in seen]
        if unknown:
            out.append(f"equation {child!r}: unknown parents {unknown}")
            acyclic_ok = False
            continue
        if len(set(eq.parents)) != len(eq.parents):
            out.append(f"equation {child!r}: duplicate parents")
        domains = [seen[p].domain for p in eq.parents]
        expected = set(itertools.product(*domains))
        missing = [k for k in itertools.product(*domains) if k not in eq.table]
        if missing:
            out.append(
                f"equation {child!r}: equation not total, missing "
                + ", ".join(_fmt(k) for k in missing)
            )
        extra = [k for k in eq.table if k not in expected]
        if extra:
            out.append(
                f"equation {child!r}: rows outside parent domains "
                + ", ".join(_fmt(k) for k in extra)
            )
        bad = sorted({val for val in eq.table.values() if val not in seen[child].domain})
        if bad:
            out.append(f"equation {child!r}: outputs outside domain {bad}")

    if acyclic_ok:
        endo = {n for n, v in seen.items() if v.kind == ENDOGENOUS}
        graph = {c: [p for p in eq.parents if p in endo] for c, eq in scm.equations.items()}
        try:
            TopologicalSorter(graph).prepare()
        except CycleError as exc:
            out.append(f"equations are cyclic through {exc.args[1]}")
    return ValidationReport(tuple(out))


def require_valid(scm: Scm) -> None:
    if "valid" not in scm._cache:
        scm._cache["valid"] = validate(scm)
    report = scm._cache["valid"]
    if not report.ok:
        raise InvalidModelError(list(report.violations))


def enumerate_worlds(scm: Scm) -> list[World]:
    """Every element of the exogenous product space, completed and weighted.

    Worlds come out in lexicographic order over the exogenous variables (in
    declaration order), each varying over its canonical domain order.
    Zero-mass worlds are included.  The result is memoised on the model.
    """
    require_valid(scm)
    if "worlds" in scm._cache:
        return scm._cache["worlds"]
    exo = scm.exogenous
    worlds = []
    for combo in itertools.product(*(scm.domain(u) for u in exo)):
        prob = Fraction(1)
        for u, val in zip(exo, combo):
            prob *= scm.priors[u][val]
        values = scm.propagate(dict(zip(exo, combo)))
        assignment = {name: values[name] for name in scm.names}
        worlds.append(World(assignment, prob))
    scm._cache["worlds"] = worlds
    return worlds


def marginal(scm: Scm, variable: str):
    """Exact marginal pmf of ``variable``, total over its domain."""
    from cfaudit.inference import Distribution

    domain = scm.domain(variable)
    pmf = {value: Fraction(0) for value in domain}
    for w in enumerate_worlds(scm):
        pmf[w[variable]] += w.probability
    return Distribution((variable,), pmf)


# -- construction helpers -------------------------------------------------


def make_scm(
    variables: Iterable[tuple[str, str, Iterable[Any]]],
    priors: Mapping[str, Mapping[Any, Any]],
    equations: Iterable[tuple[str, Iterable[str], Mapping[tuple, Any]]],
) -> Scm:
    """Build an :class:`Scm` from plain tuples, stringifying labels."""
    specs = tuple(VariableSpec(n, k, tuple(str(d) for d in dom)) for n, k, dom in variables)
    pri = {
        name: {str(k): Fraction(m) for k, m in pmf.items()} for name, pmf in priors.items()
    }
    eqs = {}
    for child, parents, table in equations:
        eqs[child] = StructuralEquation(
            child,
            tuple(parents),
            {tuple(str(g) for g in given): str(val) for given, val in table.items()},
        )
    return Scm(specs, pri, eqs)


# -- JSON model files -----------------------------------------------------

_TOP_KEYS = {"variables", "priors", "equations"}
_VAR_KEYS = {"name", "kind", "domain"}
_EQ_KEYS = {"child", "parents", "table"}
_ROW_KEYS = {"given", "value"}


def parse_rational(text: Any, where: str = "") -> Fraction:
    """Parse ``"p/q"`` or a decimal string into an exact :class:`Fraction`."""
    if not isinstance(text, str):
        raise ModelParseError(f"expected a rational string, got {text!r}", where)
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ModelParseError(f"bad rational {text!r}", where) from exc


def format_rational(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def _keys(obj: Any, allowed: set[str], where: str) -> None:
    if not isinstance(obj, dict):
        raise ModelParseError("expected an object", where)
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ModelParseError(f"unknown keys {unknown}", where)
    missing = sorted(allowed - set(obj))
    if missing:
        raise ModelParseError(f"missing keys {missing}", where)


def _strings(obj: Any, where: str) -> list[str]:
    if not isinstance(obj, list) or not all(isinstance(s, str) for s in obj):
        raise ModelParseError("expected an array of strings", where)
    return list(obj)


def scm_from_dict(doc: Any) -> Scm:
    """Decode a model document; raises :class:`ModelParseError` on bad shape.

    Structural checks that do not concern the document's shape (prior sums,
    totality, acyclicity) are left to :func:`validate`.
    """
    _keys(doc, _TOP_KEYS, "$")
    if not isinstance(doc["variables"], list):
        raise ModelParseError("expected an array", "$.variables")
    specs = []
    for i, v in enumerate(doc["variables"]):
        where = f"$.variables[{i}]"
        _keys(v, _VAR_KEYS, where)
        if not isinstance(v["name"], str):
            raise ModelParseError("expected a string", where + ".name")
        if v["kind"] not in (EXOGENOUS, ENDOGENOUS):
            raise ModelParseError(f"kind must be {EXOGENOUS!r} or {ENDOGENOUS!r}", where + ".kind")
        specs.append(VariableSpec(v["name"], v["kind"], tuple(_strings(v["domain"], where + ".domain"))))

    if not isinstance(doc["priors"], dict):
        raise ModelParseError("expected an object", "$.priors")
    priors = {}
    for name, pmf in doc["priors"].items():
        where = f"$.priors.{name}"
        if not isinstance(pmf, dict):
            raise ModelParseError("expected an object", where)
        priors[name] = {k: parse_rational(m, f"{where}.{k}") for k, m in pmf.items()}

    if not isinstance(doc["equations"], list):
        raise ModelParseError("expected an array", "$.equations")
    equations = {}
    for i, eq in enumerate(doc["equations"]):
        where = f"$.equations[{i}]"
        _keys(eq, _EQ_KEYS, where)
        if not isinstance(eq["child"], str):
            raise ModelParseError("expected a string", where + ".child")
        parents = tuple(_strings(eq["parents"], where + ".parents"))
        if not isinstance(eq["table"], list):
            raise ModelParseError("expected an array", where + ".table")
        table = {}
        for j, row in enumerate(eq["table"]):
            rwhere = f"{where}.table[{j}]"
            _keys(row, _ROW_KEYS, rwhere)
            given = tuple(_strings(row["given"], rwhere + ".given"))
            if len(given) != len(parents):
                raise ModelParseError("'given' does not align with 'parents'", rwhere)
            if not isinstance(row["value"], str):
                raise ModelParseError("expected a string", rwhere + ".value")
            if given in table:
                raise ModelParseError(f"duplicate row {_fmt(given)}", rwhere)
            table[given] = row["value"]
        if eq["child"] in equations:
            raise ModelParseError(f"second equation for {eq['child']!r}", where)
        equations[eq["child"]] = StructuralEquation(eq["child"], parents, table)
    return Scm(tuple(specs), priors, equations)


def scm_to_dict(scm: Scm) -> dict:
    return {
        "variables": [
            {"name": v.name, "kind": v.kind, "domain": list(v.domain)} for v in scm.variables
        ],
        "priors": {
            name: {k: format_rational(m) for k, m in pmf.items()}
            for name, pmf in scm.priors.items()
        },
        "equations": [
            {
                "child": eq.child,
                "parents": list(eq.parents),
                "table": [{"given": list(g), "value": val} for g, val in eq.table.items()],
            }
            for eq in scm.equations.values()
        ],
    }


def loads_scm(text: str) -> Scm:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelParseError(exc.msg, f"line {exc.lineno} column {exc.colno}") from exc
    return scm_from_dict(doc)


def load_scm(path: str | Path) -> Scm:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelParseError(f"cannot read model file: {exc.strerror}", str(path)) from exc
    return loads_scm(text)


def dump_scm(scm: Scm, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scm_to_dict(scm), indent=2) + "\n", encoding="utf-8")
