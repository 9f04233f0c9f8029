"""Solution sets of possibly ill-posed dynamical systems as partial-map families.

The package checks the compactness, existence, uniqueness and domain axioms
on star-constructions, builds the shift (Bebutov) action, and verifies
morphisms, phase-space-preserving equivalences and conjugacies.
"""
from .core import (
    INF,
    INTEGERS,
    REALS,
    UNDEFINED,
    CompactSet,
    ElementDomain,
    IntervalDomain,
    PartialMap,
    PiecewiseLinear,
    TimeGroup,
    closed_form,
    eval_map,
    interpolant,
    permutation_group,
    restrict,
    translate_domain,
)
from .errors import (
    ConfigError,
    EmptyRestriction,
    IdentityViolation,
    InvalidParameter,
    NotCompactWindow,
    NotExtendable,
    PreconditionFailed,
    SourceTargetMismatch,
    StarflowError,
)

__version__ = "0.1.0"

__all__ = [
    "CompactSet",
    "ConfigError",
    "ElementDomain",
    "EmptyRestriction",
    "INF",
    "INTEGERS",
    "IdentityViolation",
    "IntervalDomain",
    "InvalidParameter",
    "NotCompactWindow",
    "NotExtendable",
    "PartialMap",
    "PiecewiseLinear",
    "PreconditionFailed",
    "REALS",
    "SourceTargetMismatch",
    "StarflowError",
    "TimeGroup",
    "UNDEFINED",
    "closed_form",
    "eval_map",
    "interpolant",
    "permutation_group",
    "restrict",
    "translate_domain",
]
