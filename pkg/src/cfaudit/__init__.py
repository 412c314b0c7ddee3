"""Exact counterfactual inference for small discrete SCMs and an audit of the
invariances that counterfactual data augmentation actually enforces."""

from cfaudit.inference import (
    CounterfactualQuery,
    Distribution,
    ImpossibleEvidenceError,
    counterfactual,
    guess_counterfactual,
    map_context,
    posterior,
)
from cfaudit.invariance import (
    ConstraintSet,
    Partition,
    Verdict,
    cda_constraints,
    cf_constraints,
    check_support_subset,
    compare_partitions,
    partition_from,
)
from cfaudit.scm import (
    CfauditError,
    InvalidModelError,
    ModelParseError,
    QueryError,
    Scm,
    enumerate_worlds,
    load_scm,
    marginal,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "CfauditError",
    "ConstraintSet",
    "CounterfactualQuery",
    "Distribution",
    "ImpossibleEvidenceError",
    "InvalidModelError",
    "ModelParseError",
    "Partition",
    "QueryError",
    "Scm",
    "Verdict",
    "cda_constraints",
    "cf_constraints",
    "check_support_subset",
    "compare_partitions",
    "counterfactual",
    "enumerate_worlds",
    "guess_counterfactual",
    "load_scm",
    "map_context",
    "marginal",
    "partition_from",
    "posterior",
    "validate",
]
