"""Evidence fusion: trace frames, detector findings, and incident history."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple

from ..faults.taxonomy import BugClass
from ..incidents import HEALED_OUTCOMES, IncidentStore
from ..minilang.interpreter import RuntimeEnv
from ..minilang.nodes import NodePath, Program
from ..minilang.paths import dotted, enclosing_statement, is_prefix
from ..signals import FailureEvent, Fingerprint, config_key_of
from .detectors import PatternFinding, run_detectors
from .spectrum import spectrum_localize

DEFAULT_WEIGHTS = {"trace": 0.5, "pattern": 0.3, "history": 0.2}
OUTER_FRAME_SCORE = 0.6

CODE_CLASS = {
    "E_INDEX_OOB": BugClass.OffByOne,
    "E_NULL_DEREF": BugClass.MissingNullCheck,
    "E_SNAPSHOT_MISMATCH": BugClass.StaleSnapshot,
    "E_ASSERT_FAIL": BugClass.WrongOperator,
}


class NoHypothesis(Exception):
    pass


@dataclass(frozen=True)
class Evidence:
    kind: str  # trace | pattern | history
    score: float
    detail: str = ""


@dataclass(frozen=True)
class FaultHypothesis:
    site: NodePath
    suspected_class: BugClass
    confidence: float
    evidence: Tuple[Evidence, ...] = ()

    def to_record(self) -> dict:
        return {"site": dotted(self.site), "class": self.suspected_class.value,
                "confidence": round(self.confidence, 6),
                "evidence": [{"kind": e.kind, "score": e.score, "detail": e.detail} for e in self.evidence]}


@dataclass(frozen=True)
class HistoryPrior:
    bug_class: BugClass
    score: float
    count: int


@dataclass(frozen=True)
class DiagnosisConfig:
    detectors: bool = True
    spectrum: bool = True
    history: bool = True
    weights: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    strengths: Optional[Mapping[str, float]] = None

    @classmethod
    def trace_only(cls) -> "DiagnosisConfig":
        return cls(detectors=False, spectrum=False, history=False)


def confidence_of(evidence, weights: Mapping[str, float] = DEFAULT_WEIGHTS) -> float:
    """Weighted sum of the strongest score of each evidence kind."""
    best: Dict[str, float] = {}
    for e in evidence:
        best[e.kind] = max(best.get(e.kind, 0.0), e.score)
    return sum(weights[k] * best.get(k, 0.0) for k in ("trace", "pattern", "history"))


def history_prior(fingerprint: Fingerprint, store: Optional[IncidentStore]) -> Optional[HistoryPrior]:
    """Modal healed class among past incidents with this fingerprint, scored m/(m+1)."""
    if store is None:
        return None
    counts: Counter = Counter()
    for inc in store.read():
        if inc.fingerprint == fingerprint.hex and inc.outcome in HEALED_OUTCOMES and inc.healed_class:
            counts[inc.healed_class] += 1
    if not counts:
        return None
    # ties go to the class name that sorts first so the prior is deterministic
    cls_name, m = min(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return HistoryPrior(BugClass(cls_name), m / (m + 1), m)


def _class_for_code(code: Optional[str], message: str) -> BugClass:
    if code == "E_UNDEFINED" and config_key_of(message):
        return BugClass.Misconfiguration
    return CODE_CLASS.get(code, BugClass.WrongOperator)


def _applies(finding: PatternFinding, program: Program, site: NodePath) -> bool:
    if finding.site == site:
        return True
    anchor = enclosing_statement(program, finding.site)
    return anchor is not None and is_prefix(anchor, site)


def diagnose(event: FailureEvent, program: Program, store: Optional[IncidentStore] = None,
             config: Optional[Mapping[str, Any]] = None, options: Optional[DiagnosisConfig] = None,
             env: Optional[RuntimeEnv] = None) -> List[FaultHypothesis]:
    """Ranked hypotheses: confidence descending, ties by source order of site."""
    options = options or DiagnosisConfig()
    env = env or RuntimeEnv(config=dict(config or {}))
    trace_ev: Dict[NodePath, List[Evidence]] = {}
    site_code: Dict[NodePath, BugClass] = {}

    results = event.report.failing if event.report is not None else []
    for r in results:
        frames = r.trace
        for depth, (fn, path) in enumerate(reversed(frames)):
            score = 1.0 if depth == 0 else OUTER_FRAME_SCORE
            label = "innermost frame" if depth == 0 else "outer frame"
            trace_ev.setdefault(path, []).append(Evidence("trace", score, f"{label} of {r.test_name} ({r.error_code})"))
            if depth == 0 or path not in site_code:
                site_code.setdefault(path, _class_for_code(r.error_code, r.message))

    findings: List[PatternFinding] = []
    if options.detectors:
        findings = run_detectors(program, config, options.strengths)

    spectrum = []
    if options.spectrum and event.report is not None:
        spectrum = spectrum_localize(program, event.report, env)
    spectrum_class = {}
    for s in spectrum:
        trace_ev.setdefault(s.site, []).append(Evidence("trace", s.score, s.detail))
        spectrum_class[s.site] = s.suspected_class

    sites = set(trace_ev) | {f.site for f in findings}
    # an expression inside the statement that raised is part of the innermost frame
    innermost = {path: ev.detail for path, evs in trace_ev.items() for ev in evs
                 if ev.detail.startswith("innermost")}
    for site in sites:
        for frame_path, detail in innermost.items():
            if len(site) > len(frame_path) and is_prefix(frame_path, site):
                trace_ev.setdefault(site, []).append(Evidence("trace", 1.0, "within " + detail))
                break
    if not sites:
        raise NoHypothesis(f"no trace and no detector findings for {event.fingerprint.canonical}")

    prior = history_prior(event.fingerprint, store) if options.history else None

    hyps = []
    for site in sites:
        evidence = list(trace_ev.get(site, []))
        applicable = [f for f in findings if _applies(f, program, site)]
        for f in applicable:
            evidence.append(Evidence("pattern", f.strength, f"{f.detector_id}: {f.detail}"))
        if applicable:
            top = max(applicable, key=lambda f: (f.strength, f.site == site, f.detector_id))
            cls = top.suspected_class
        elif site in spectrum_class:
            cls = spectrum_class[site]
        else:
            cls = site_code.get(site, BugClass.WrongOperator)
        if prior is not None and prior.bug_class == cls:
            evidence.append(Evidence("history", prior.score, f"{prior.count} healed incident(s) as {cls.value}"))
        hyps.append(FaultHypothesis(site, cls, confidence_of(evidence, options.weights), tuple(evidence)))
    hyps.sort(key=lambda h: (-h.confidence, h.site))
    return hyps
