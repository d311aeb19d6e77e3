"""Patch candidates and how they are applied."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple

from ..faults.taxonomy import BugClass
from ..fnv import fnv1a64, hex64
from ..minilang.edits import apply_fragment
from ..minilang.formatter import format_program
from ..minilang.nodes import NodePath, Program
from ..minilang.parser import ParseError, parse
from ..minilang.paths import PathError, dotted, undotted


class Origin(str, Enum):
    template = "template"
    search = "search"
    regeneration = "regeneration"
    external = "external"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Edit:
    site: NodePath
    replacement: str


@dataclass(frozen=True)
class ConfigChange:
    key: str
    new_value: Any


@dataclass(frozen=True)
class TestPolicyChange:
    test_name: str
    quarantine_reruns: int

    __test__ = False


@dataclass
class PatchCandidate:
    id: int
    edits: Tuple[Edit, ...]
    origin: Origin
    rationale: str
    predicted_class: BugClass
    config_change: Optional[ConfigChange] = None
    test_policy_change: Optional[TestPolicyChange] = None
    confidence: float = 0.0
    partial: bool = False
    fitness: Optional[float] = None

    def payload(self) -> dict:
        return {
            "edits": [[dotted(e.site), e.replacement] for e in self.edits],
            "config_change": None if self.config_change is None
            else [self.config_change.key, self.config_change.new_value],
            "test_policy_change": None if self.test_policy_change is None
            else [self.test_policy_change.test_name, self.test_policy_change.quarantine_reruns],
        }

    @property
    def digest(self) -> str:
        """Identity of what the candidate changes, ignoring where it came from."""
        return hex64(fnv1a64(json.dumps(self.payload(), sort_keys=True)))

    @property
    def touches_code(self) -> bool:
        return bool(self.edits)

    def to_record(self) -> dict:
        rec = {"id": self.id, "origin": self.origin.value, "rationale": self.rationale,
               "predicted_class": self.predicted_class.value, "confidence": round(self.confidence, 6),
               "partial": self.partial, "fitness": self.fitness, "digest": self.digest}
        rec.update(self.payload())
        return rec

    @classmethod
    def from_record(cls, rec: Mapping[str, Any]) -> "PatchCandidate":
        cc = rec.get("config_change")
        tp = rec.get("test_policy_change")
        return cls(
            rec["id"], tuple(Edit(undotted(s), r) for s, r in rec.get("edits", [])), Origin(rec["origin"]),
            rec.get("rationale", ""), BugClass(rec["predicted_class"]),
            None if cc is None else ConfigChange(cc[0], cc[1]),
            None if tp is None else TestPolicyChange(tp[0], tp[1]),
            rec.get("confidence", 0.0), rec.get("partial", False), rec.get("fitness"),
        )


class InvalidCandidate(Exception):
    """A candidate whose edits do not apply or do not survive the parse gate."""


def parse_gate(program: Program) -> bool:
    """Canonical text re-parses to the same tree."""
    try:
        return parse(format_program(program)) == program
    except ParseError:
        return False


def apply_edits(program: Program, edits: Sequence[Edit]) -> Program:
    """Apply edits deepest/latest first so earlier paths stay valid."""
    out = program
    for e in sorted(edits, key=lambda e: e.site, reverse=True):
        try:
            out = apply_fragment(out, e.site, e.replacement)
        except (ParseError, PathError, ValueError) as exc:
            raise InvalidCandidate(f"edit at {dotted(e.site)}: {exc}") from None
    if not parse_gate(out):
        raise InvalidCandidate("patched program fails the parse gate")
    return out


def apply_candidate(program: Program, config: Mapping[str, Any], quarantine: Mapping[str, int],
                    candidate: PatchCandidate):
    """``(program, config, quarantine)`` with the candidate applied."""
    new_program = apply_edits(program, candidate.edits) if candidate.edits else program
    new_config: Dict[str, Any] = dict(config)
    if candidate.config_change is not None:
        new_config[candidate.config_change.key] = candidate.config_change.new_value
    new_quarantine = dict(quarantine)
    if candidate.test_policy_change is not None:
        new_quarantine[candidate.test_policy_change.test_name] = candidate.test_policy_change.quarantine_reruns
    return new_program, new_config, new_quarantine
