from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional

from ..minilang.nodes import NodePath
from ..minilang.paths import dotted, undotted


class BugClass(str, Enum):
    OffByOne = "OffByOne"
    MissingNullCheck = "MissingNullCheck"
    WrongOperator = "WrongOperator"
    StaleSnapshot = "StaleSnapshot"
    BrittleAssertion = "BrittleAssertion"
    FlakySeedDependence = "FlakySeedDependence"
    Misconfiguration = "Misconfiguration"

    def __str__(self) -> str:
        return self.value


SYNTACTIC_CLASSES = (
    BugClass.OffByOne, BugClass.MissingNullCheck, BugClass.WrongOperator, BugClass.StaleSnapshot,
)


class MutationOperator(str, Enum):
    SwapComparisonOp = "SwapComparisonOp"
    SwapArithmeticOp = "SwapArithmeticOp"
    IntLiteralDelta = "IntLiteralDelta"
    DeleteStmt = "DeleteStmt"
    DuplicateStmt = "DuplicateStmt"
    RemoveNullGuard = "RemoveNullGuard"
    ReplaceSnapshotLiteral = "ReplaceSnapshotLiteral"
    ReplaceConfigValue = "ReplaceConfigValue"

    def __str__(self) -> str:
        return self.value


INJECTOR_ONLY = frozenset({MutationOperator.RemoveNullGuard, MutationOperator.ReplaceSnapshotLiteral})
REPAIR_OPERATORS = tuple(op for op in MutationOperator if op not in INJECTOR_ONLY)


@dataclass(frozen=True)
class GroundTruth:
    """Label for one injected fault.

    ``site`` is where a correct diagnosis should point. ``edit_site`` is where
    ``mutated_fragment`` was spliced into the clean program; the two differ
    only for StaleSnapshot (the stale literal vs. the code change that made it
    stale). Misconfiguration edits the config table, not the program, so it
    carries ``config_change`` and no ``edit_site``.
    """

    bug_class: BugClass
    site: NodePath
    original_fragment: str
    mutated_fragment: str
    seed: int
    edit_site: Optional[NodePath] = None
    config_change: Optional[Dict[str, Any]] = field(default=None)
    test_name: Optional[str] = None

    def to_record(self) -> dict:
        return {
            "class": self.bug_class.value,
            "site": dotted(self.site),
            "edit_site": None if self.edit_site is None else dotted(self.edit_site),
            "original_fragment": self.original_fragment,
            "mutated_fragment": self.mutated_fragment,
            "seed": self.seed,
            "config_change": self.config_change,
            "test_name": self.test_name,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "GroundTruth":
        return cls(
            BugClass(rec["class"]),
            undotted(rec["site"]),
            rec["original_fragment"],
            rec["mutated_fragment"],
            rec["seed"],
            None if rec.get("edit_site") is None else undotted(rec["edit_site"]),
            rec.get("config_change"),
            rec.get("test_name"),
        )


class FaultError(Exception):
    pass


class NoInjectableSite(FaultError):
    pass


class CannotFalsify(FaultError):
    pass


class InapplicableOperator(FaultError):
    pass


class ForbiddenAssertTarget(FaultError):
    pass
