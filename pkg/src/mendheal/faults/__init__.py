"""Bug taxonomy, ground-truth fault injection, and the shared mutation operators."""

from .inject import MAX_DRAWS, combine, enumerate_sites, inject_bug
from .mutate import enumerate_mutations, mutate, operator_sites
from .taxonomy import (
    INJECTOR_ONLY, REPAIR_OPERATORS, SYNTACTIC_CLASSES, BugClass, CannotFalsify, FaultError,
    ForbiddenAssertTarget, GroundTruth, InapplicableOperator, MutationOperator, NoInjectableSite,
)

__all__ = [
    "INJECTOR_ONLY", "MAX_DRAWS", "REPAIR_OPERATORS", "SYNTACTIC_CLASSES", "BugClass",
    "CannotFalsify", "FaultError", "ForbiddenAssertTarget", "GroundTruth", "InapplicableOperator",
    "MutationOperator", "NoInjectableSite", "combine", "enumerate_mutations", "enumerate_sites",
    "inject_bug", "mutate", "operator_sites",
]
