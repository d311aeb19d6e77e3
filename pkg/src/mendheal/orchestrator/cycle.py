"""The heal cycle: detect, snapshot, diagnose, try candidates, decide, record."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import List, Optional

from ..clock import SystemClock
from ..diagnosis.rank import FaultHypothesis, NoHypothesis, diagnose
from ..faults.inject import inject_bug
from ..faults.taxonomy import BugClass, GroundTruth
from ..healing.candidate import PatchCandidate, apply_candidate
from ..healing.dispatch import candidate_queue
from ..healing.external import ExternalAdapter
from ..healing.search import SearchBudget
from ..healing.templates import RepairContext
from ..incidents import Incident, IncidentStore
from ..minilang.interpreter import RuntimeEnv, TestReport
from ..signals import FailureEvent, MetricWindow, detect_failure, signal_record
from ..verify import (
    EmptyWorkload, HashMismatchAfterRestore, SnapshotMissing, VerifySettings, canary, discard_snapshot,
    rollback, sandbox_run, take_snapshot, verify_candidate,
)
from ..verify.verdict import MIN_STEP_BUDGET
from ..workspace import Workspace
from .alert import (
    APPROVED_MARKER, CANDIDATE_FILE, PENDING_MARKER, REPORTS_DIR, AttemptRecord, BundleContent, unified_diff,
    write_bundle,
)
from .policy import Action, PipelineMode, Policy, decide

MAX_RECORDED_HYPOTHESES = 10
SEARCH_STEP_FACTOR = 20
SEARCH_STEP_FLOOR = 20_000
INJECTIONS_FILE = "injections.jsonl"


class CycleState(str, Enum):
    NoFailure = "NoFailure"
    Healed = "Healed"
    PendingReview = "PendingReview"
    Escalated = "Escalated"

    def __str__(self) -> str:
        return self.value


class FatalRollbackFailure(Exception):
    """A rollback could not restore the pre-cycle workspace; the cycle is aborted."""


class ApprovalError(Exception):
    pass


@dataclass
class CycleOutcome:
    state: CycleState
    fingerprint: Optional[str] = None
    attempts: int = 0
    incident: Optional[Incident] = None
    bundle: Optional[Path] = None
    hypotheses: List[FaultHypothesis] = field(default_factory=list)
    invalid_candidates: int = 0
    accepted: Optional[PatchCandidate] = None

    def line(self) -> str:
        return f"HEAL {self.state.value} {self.fingerprint or '-'} {self.attempts}"

    def to_record(self) -> dict:
        timings = self.incident.timings if self.incident is not None else {}
        return {"state": self.state.value, "fingerprint": self.fingerprint, "attempts": self.attempts,
                "bundle": None if self.bundle is None else self.bundle.name,
                "mttr_ms": timings.get("mttr_ms")}


def reference_steps(report: TestReport, window: MetricWindow) -> int:
    """Typical per-test step count, from passing results and the green-run window."""
    counts = [r.step_count for r in report.results if r.status == "pass"]
    counts += [window.mean(name) or 0 for name in window.history]
    return int(max(counts, default=0))


def _event_record(event: FailureEvent) -> dict:
    return {"fingerprint": event.fingerprint.hex, "canonical": event.fingerprint.canonical,
            "failing_tests": list(event.failing_tests), "primary": signal_record(event.primary_signal),
            "detected_at": event.detected_at}


def _hypothesis_for(hyps: List[FaultHypothesis], cand: PatchCandidate) -> Optional[FaultHypothesis]:
    for h in hyps:
        if h.suspected_class is cand.predicted_class and h.confidence == cand.confidence:
            return h
    return None


def _restore(ws: Workspace, snapshot) -> None:
    try:
        rollback(ws, snapshot)
    except (SnapshotMissing, HashMismatchAfterRestore) as exc:
        raise FatalRollbackFailure(str(exc)) from exc


def _write_changes(ws: Workspace, cand: PatchCandidate, program, config, quarantine) -> None:
    if cand.edits:
        ws.write_program(program)
    if cand.config_change is not None:
        ws.write_config(config)
    if cand.test_policy_change is not None:
        ws.write_quarantine(quarantine)


def _record_green(ws: Workspace, state: dict, window: MetricWindow, report: TestReport,
                  canary_rate: Optional[float]) -> None:
    window.observe(report)
    state["metrics"] = window.to_dict()
    if canary_rate is not None:
        state["canary_baseline"] = canary_rate
    ws.save_state(state)


def heal_cycle(ws: Workspace, policy: Optional[Policy] = None, store: Optional[IncidentStore] = None,
               seed: int = 0, mode: PipelineMode = PipelineMode.full, clock=None,
               adapter: Optional[ExternalAdapter] = None, budget: SearchBudget = SearchBudget()) -> CycleOutcome:
    """One detect-diagnose-repair-verify cycle over the workspace, holding its lock throughout."""
    policy = policy or Policy()
    store = store if store is not None else IncidentStore(ws.incidents_file)
    clock = clock or SystemClock()
    with ws.lock():
        return _cycle(ws, policy, store, seed, PipelineMode(mode), clock, adapter, budget)


def _cycle(ws, policy, store, seed, mode, clock, adapter, budget) -> CycleOutcome:
    program = ws.read_program()
    config = ws.read_config()
    quarantine = ws.read_quarantine()
    workload = ws.read_workload()
    state = ws.load_state()
    window = MetricWindow.from_dict(state.get("metrics"))
    baseline_rate = float(state.get("canary_baseline", 0.0))
    settings = VerifySettings(kill_threshold=policy.mutation_kill_threshold, canary_epsilon=policy.canary_epsilon)

    report = sandbox_run(program, RuntimeEnv(config=dict(config)), quarantine)
    event = detect_failure(report, window, policy.anomaly_factor, clock)
    ref = reference_steps(report, window)
    env = RuntimeEnv(config=dict(config), step_limit=max(MIN_STEP_BUDGET, 100 * ref))
    if event is None:
        try:
            rate = canary(program, workload, settings.canary_window, env).error_rate
        except EmptyWorkload:
            rate = None
        _record_green(ws, state, window, report, rate)
        return CycleOutcome(CycleState.NoFailure)

    counter = int(state.get("snapshot_counter", 0)) + 1
    state["snapshot_counter"] = counter
    ws.save_state(state)
    snapshot = take_snapshot(ws, str(counter))
    fp = event.fingerprint.hex
    try:
        hyps = diagnose(event, program, store, config, mode.diagnosis_config(), env)
    except NoHypothesis:
        hyps = []

    ctx = RepairContext(env=env, workload=workload, flaky_rerun_count=policy.flaky_rerun_count,
                        failing={r.test_name: r for r in report.failing})
    search_env = env.with_step_limit(max(SEARCH_STEP_FLOOR, SEARCH_STEP_FACTOR * ref))
    settings = VerifySettings(settings.kill_threshold, settings.n_mutants, settings.canary_window,
                              settings.canary_epsilon, env.step_limit)
    queue = candidate_queue(event, hyps, program, ctx, mode.selection(), adapter, budget, seed, search_env) \
        if hyps else iter(())

    attempts: List[AttemptRecord] = []
    invalid = 0
    chosen = None
    for cand in queue:
        if len(attempts) >= policy.max_retries:
            break
        result = verify_candidate(program, config, quarantine, cand, workload, baseline_rate, settings, seed)
        invalid += result.invalid
        diff = (f"# candidate could not be applied: {result.verdict.note}\n" if result.invalid else
                unified_diff(ws.name, program, result.program, config, result.config, quarantine, result.quarantine))
        attempts.append(AttemptRecord(len(attempts) + 1, cand.to_record(), result.verdict.to_record(), diff))
        if result.verdict.accepted:
            chosen = (cand, result)
            break
        _restore(ws, snapshot)

    hyp_records = [h.to_record() for h in hyps[:MAX_RECORDED_HYPOTHESES]]
    incident = Incident(fp, event.fingerprint.canonical, "escalated", _event_record(event), hyp_records,
                        [{"candidate": a.candidate["id"], "origin": a.candidate["origin"],
                          "digest": a.candidate["digest"], "verdict": a.verdict} for a in attempts],
                        timings={"detected_at": event.detected_at})
    outcome = CycleOutcome(CycleState.Escalated, fp, len(attempts), incident, None, hyps, invalid)
    content = BundleContent(fp, event.fingerprint.canonical, "escalated",
                            [signal_record(s) for s in event.all_signals], hyp_records, attempts)

    if chosen is None:
        content.note = incident.note = ("no hypothesis" if not hyps else
                                        f"no candidate accepted within {len(attempts)} attempt(s)")
    else:
        cand, result = chosen
        hyp = _hypothesis_for(hyps, cand)
        action = decide(policy, hyp, cand)
        healed_class = (hyp.suspected_class if hyp is not None else cand.predicted_class).value
        outcome.accepted = cand
        if action is Action.auto_apply:
            _write_changes(ws, cand, result.program, result.config, result.quarantine)
            resolved = clock.now_ms()
            incident.outcome, incident.healed_class = "healed_auto", healed_class
            incident.timings.update(resolved_at=resolved, mttr_ms=resolved - event.detected_at)
            outcome.state = CycleState.Healed
            _record_green(ws, state, window, result.report, result.verdict.canary_error_rate)
        elif action is Action.review:
            _restore(ws, snapshot)
            incident.outcome = content.outcome = "pending_review"
            incident.note = content.note = f"accepted candidate {cand.id} awaits review"
            content.review = {"candidate": cand.to_record(), "base_hashes": ws.hashes(), "fingerprint": fp,
                              "fingerprint_key": event.fingerprint.canonical, "detected_at": event.detected_at,
                              "healed_class": healed_class, "canary_error_rate": result.verdict.canary_error_rate}
            outcome.state = CycleState.PendingReview
        else:
            _restore(ws, snapshot)
            incident.note = content.note = f"policy is alert_only for {healed_class}"

    if outcome.state is not CycleState.Healed:
        bundle = write_bundle(ws, content, int(clock.now_ms()))
        outcome.bundle = bundle
        incident.bundle = bundle.name
    discard_snapshot(ws, snapshot.id)
    store.append(incident)
    return outcome


def approve_bundle(ws: Workspace, bundle_id: str, store: Optional[IncidentStore] = None,
                   clock=None) -> CycleOutcome:
    """Apply a reviewed candidate, provided the workspace is unchanged since the review bundle."""
    store = store if store is not None else IncidentStore(ws.incidents_file)
    clock = clock or SystemClock()
    root = ws.heal_dir / REPORTS_DIR / bundle_id
    if not (root / CANDIDATE_FILE).is_file():
        raise ApprovalError(f"no review bundle {bundle_id}")
    if not (root / PENDING_MARKER).exists():
        raise ApprovalError(f"bundle {bundle_id} is not pending approval")
    review = json.loads((root / CANDIDATE_FILE).read_text(encoding="utf-8"))
    with ws.lock():
        if ws.hashes() != review["base_hashes"]:
            raise ApprovalError("workspace changed since the review bundle was written")
        cand = PatchCandidate.from_record(review["candidate"])
        program, config, quarantine = apply_candidate(ws.read_program(), ws.read_config(), ws.read_quarantine(),
                                                      cand)
        report = sandbox_run(program, RuntimeEnv(config=dict(config)), quarantine)
        if not report.passed:
            raise ApprovalError("candidate no longer passes the test suite")
        _write_changes(ws, cand, program, config, quarantine)
        (root / PENDING_MARKER).unlink()
        (root / APPROVED_MARKER).write_text("approved\n", encoding="utf-8")
        resolved = clock.now_ms()
        incident = Incident(review["fingerprint"], review["fingerprint_key"], "healed_after_review",
                            healed_class=review["healed_class"], bundle=bundle_id,
                            timings={"detected_at": review["detected_at"], "resolved_at": resolved,
                                     "mttr_ms": resolved - review["detected_at"]},
                            attempts=[{"candidate": cand.id, "origin": cand.origin.value, "digest": cand.digest,
                                       "verdict": {"decision": "Accept"}}])
        state = ws.load_state()
        _record_green(ws, state, MetricWindow.from_dict(state.get("metrics")), report,
                      review.get("canary_error_rate"))
        store.append(incident)
    return CycleOutcome(CycleState.Healed, review["fingerprint"], 1, incident, root)


def inject_workspace(ws: Workspace, bug_class: BugClass, seed: int) -> GroundTruth:
    """Inject one fault into the workspace files and log its ground truth under ``.heal/``."""
    with ws.lock():
        program = ws.read_program()
        config = ws.read_config()
        mutant, truth = inject_bug(program, bug_class, seed, RuntimeEnv(config=dict(config)), ws.read_hidden())
        if truth.config_change is not None:
            ws.write_config({**config, truth.config_change["key"]: truth.config_change["new"]})
        else:
            ws.write_program(mutant)
        with open(ws.heal_dir / INJECTIONS_FILE, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(truth.to_record(), sort_keys=True) + "\n")
    return truth
