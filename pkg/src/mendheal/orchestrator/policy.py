"""Healing policies and pipeline configurations."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Mapping, Optional

from ..diagnosis.rank import DiagnosisConfig, FaultHypothesis
from ..faults.taxonomy import BugClass
from ..healing.candidate import PatchCandidate
from ..healing.dispatch import ModelSelection


class Action(str, Enum):
    auto_apply = "auto_apply"
    review = "review"
    alert_only = "alert_only"

    def __str__(self) -> str:
        return self.value


class PolicyError(ValueError):
    pass


DEFAULT_CLASS_ACTIONS = {
    BugClass.FlakySeedDependence: Action.auto_apply,
    BugClass.StaleSnapshot: Action.auto_apply,
}

_UNIT_FIELDS = ("auto_apply_min_confidence", "mutation_kill_threshold", "canary_epsilon")


@dataclass(frozen=True)
class Policy:
    max_retries: int = 3
    auto_apply_min_confidence: float = 0.7
    per_class_action: Mapping[BugClass, Action] = field(default_factory=lambda: dict(DEFAULT_CLASS_ACTIONS))
    mutation_kill_threshold: float = 0.6
    canary_epsilon: float = 0.01
    flaky_rerun_count: int = 3
    anomaly_factor: float = 3.0

    def __post_init__(self):
        if type(self.max_retries) is not int or self.max_retries < 1:
            raise PolicyError("max_retries must be an integer >= 1")
        for name in _UNIT_FIELDS:
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise PolicyError(f"{name} must lie in [0, 1]")
        if self.anomaly_factor < 1.0:
            raise PolicyError("anomaly_factor must be >= 1")
        if type(self.flaky_rerun_count) is not int or self.flaky_rerun_count < 1:
            raise PolicyError("flaky_rerun_count must be an integer >= 1")

    def to_record(self) -> dict:
        return {
            "max_retries": self.max_retries, "auto_apply_min_confidence": self.auto_apply_min_confidence,
            "per_class_action": {c.value: a.value for c, a in sorted(self.per_class_action.items())},
            "mutation_kill_threshold": self.mutation_kill_threshold, "canary_epsilon": self.canary_epsilon,
            "flaky_rerun_count": self.flaky_rerun_count, "anomaly_factor": self.anomaly_factor,
        }


_FIELD_TYPES = {"max_retries": int, "flaky_rerun_count": int, "auto_apply_min_confidence": float,
                "mutation_kill_threshold": float, "canary_epsilon": float, "anomaly_factor": float}


def _number(key: str, raw: str):
    try:
        return _FIELD_TYPES[key](raw)
    except ValueError:
        raise PolicyError(f"{key}: expected {_FIELD_TYPES[key].__name__}, got {raw!r}") from None


def parse_policy(text: str, source: str = "heal.policy") -> Policy:
    """``key = value`` lines; ``class.<BugClass> = auto_apply|review|alert_only`` overrides.

    Class overrides start from the built-in defaults, so a file only lists what it changes.
    A ``class.<Name> = confidence`` line drops the default override for that class.
    """
    values: Dict[str, object] = {}
    actions: Dict[BugClass, Action] = dict(DEFAULT_CLASS_ACTIONS)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise PolicyError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key.startswith("class."):
            try:
                cls = BugClass(key[len("class."):])
            except ValueError:
                raise PolicyError(f"{source}:{lineno}: unknown bug class {key[6:]!r}") from None
            if value == "confidence":
                actions.pop(cls, None)
                continue
            try:
                actions[cls] = Action(value)
            except ValueError:
                raise PolicyError(f"{source}:{lineno}: unknown action {value!r}") from None
        elif key in _FIELD_TYPES:
            values[key] = _number(key, value)
        else:
            raise PolicyError(f"{source}:{lineno}: unknown policy key {key!r}")
    return Policy(per_class_action=actions, **values)


def load_policy(path) -> Policy:
    path = Path(path)
    if not path.exists():
        return Policy()
    return parse_policy(path.read_text(encoding="utf-8"), path.name)


SAMPLE_POLICY_DIR = Path(__file__).resolve().parent.parent / "policies"


def sample_policy(name: str) -> Policy:
    """Shipped profiles: ``startup`` (the defaults) and ``enterprise`` (strict review)."""
    path = SAMPLE_POLICY_DIR / f"{name}.policy"
    if not path.exists():
        raise PolicyError(f"no sample policy {name!r}")
    return load_policy(path)


def decide(policy: Policy, hypothesis: Optional[FaultHypothesis], candidate: PatchCandidate) -> Action:
    """Class override if present, else auto_apply iff confidence clears the threshold."""
    cls = candidate.predicted_class if hypothesis is None else hypothesis.suspected_class
    override = policy.per_class_action.get(cls)
    if override is not None:
        return override
    confidence = candidate.confidence if hypothesis is None else hypothesis.confidence
    return Action.auto_apply if confidence >= policy.auto_apply_min_confidence else Action.review


class PipelineMode(str, Enum):
    full = "full"
    trace_only = "trace_only"
    search_only = "search_only"
    template_only = "template_only"

    def __str__(self) -> str:
        return self.value

    def diagnosis_config(self) -> DiagnosisConfig:
        return DiagnosisConfig.trace_only() if self is PipelineMode.trace_only else DiagnosisConfig()

    def selection(self) -> ModelSelection:
        if self is PipelineMode.search_only:
            return ModelSelection(templates=False, regeneration=False, search=True, external=False)
        if self is PipelineMode.template_only:
            return ModelSelection(templates=True, regeneration=True, search=False, external=False)
        return ModelSelection()
