"""The verification pipeline: test gate, then mutation testing, then canary."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional, Sequence

from ..healing.candidate import InvalidCandidate, PatchCandidate, apply_candidate
from ..minilang.interpreter import RuntimeEnv, TestReport
from ..minilang.nodes import Program
from .canary import DEFAULT_EPSILON, DEFAULT_WINDOW, EmptyWorkload, canary
from .mutation import DEFAULT_KILL_THRESHOLD, DEFAULT_N_MUTANTS, mutation_score
from .sandbox import sandbox_run

ACCEPT = "Accept"
REJECT_REASONS = ("tests", "mutation", "canary")
MIN_STEP_BUDGET = 50_000
MUTANT_STEP_FACTOR = 20
MUTANT_STEP_FLOOR = 5_000


@dataclass(frozen=True)
class VerificationVerdict:
    tests_passed: int
    tests_failed: int
    mutation_kill_ratio: Optional[float]  # None: not run
    canary_error_rate: Optional[float]  # None: not run
    baseline_error_rate: float
    decision: str  # Accept | Reject
    reason: Optional[str] = None  # tests | mutation | canary when rejected
    note: str = ""

    @property
    def accepted(self) -> bool:
        return self.decision == ACCEPT

    def is_sound(self, kill_threshold: float = DEFAULT_KILL_THRESHOLD, epsilon: float = DEFAULT_EPSILON) -> bool:
        """Accept implies every gate that ran was passed."""
        if not self.accepted:
            return self.reason in REJECT_REASONS
        return (self.tests_failed == 0
                and (self.mutation_kill_ratio is None or self.mutation_kill_ratio >= kill_threshold)
                and (self.canary_error_rate is None
                     or self.canary_error_rate <= self.baseline_error_rate + epsilon))

    def label(self) -> str:
        return ACCEPT if self.accepted else f"Reject{{{self.reason}}}"

    def to_record(self) -> dict:
        return {
            "tests_passed": self.tests_passed, "tests_failed": self.tests_failed,
            "mutation_kill_ratio": "not-run" if self.mutation_kill_ratio is None
            else round(self.mutation_kill_ratio, 6),
            "canary_error_rate": "not-run" if self.canary_error_rate is None else round(self.canary_error_rate, 6),
            "baseline_error_rate": round(self.baseline_error_rate, 6),
            "decision": self.label(), "note": self.note,
        }


@dataclass(frozen=True)
class VerifySettings:
    kill_threshold: float = DEFAULT_KILL_THRESHOLD
    n_mutants: int = DEFAULT_N_MUTANTS
    canary_window: int = DEFAULT_WINDOW
    canary_epsilon: float = DEFAULT_EPSILON
    step_limit: Optional[int] = None


@dataclass
class Verification:
    verdict: VerificationVerdict
    program: Optional[Program] = None
    config: Dict[str, Any] = field(default_factory=dict)
    quarantine: Dict[str, int] = field(default_factory=dict)
    report: Optional[TestReport] = None
    invalid: bool = False


def step_budget(report: Optional[TestReport]) -> int:
    """Per-run step budget: generous relative to the pre-patch suite, never below MIN_STEP_BUDGET."""
    if report is None or not report.results:
        return MIN_STEP_BUDGET
    return max(MIN_STEP_BUDGET, 100 * max(r.step_count for r in report.results))


def mutation_region(program: Program, candidate: PatchCandidate):
    """First edited non-test function, or None when only tests are touched."""
    for edit in sorted(candidate.edits, key=lambda e: e.site):
        fi = edit.site[0]
        if fi < len(program.functions) and not program.functions[fi].is_test:
            return (fi,)
    return None


def verify_candidate(program: Program, config: Mapping[str, Any], quarantine: Mapping[str, int],
                     candidate: PatchCandidate, workload: Sequence = (), baseline_error_rate: float = 0.0,
                     settings: VerifySettings = VerifySettings(), seed: int = 0) -> Verification:
    """Apply ``candidate`` in memory and run the gates in order, stopping at the first rejection."""
    try:
        patched, new_config, new_quarantine = apply_candidate(program, config, quarantine, candidate)
    except InvalidCandidate as exc:
        n_tests = sum(1 for fn in program.functions if fn.is_test)
        verdict = VerificationVerdict(0, n_tests, None, None, baseline_error_rate, "Reject", "tests",
                                      f"invalid candidate: {exc}")
        return Verification(verdict, invalid=True)

    env = RuntimeEnv(config=dict(new_config), step_limit=settings.step_limit or MIN_STEP_BUDGET)
    report = sandbox_run(patched, env, new_quarantine)
    passed, failed = report.counts()

    def done(ratio, rate, reason=None, note=""):
        decision = ACCEPT if reason is None else "Reject"
        verdict = VerificationVerdict(passed, failed, ratio, rate, baseline_error_rate, decision, reason, note)
        return Verification(verdict, patched, new_config, new_quarantine, report)

    if failed:
        names = ", ".join(r.test_name for r in report.failing)
        return done(None, None, "tests", f"failing: {names}")

    ratio = None
    region = mutation_region(patched, candidate)
    if region is not None:
        mutant_steps = max(MUTANT_STEP_FLOOR, MUTANT_STEP_FACTOR * max((r.step_count for r in report.results),
                                                                       default=0))
        ratio = mutation_score(patched, region, settings.n_mutants, seed,
                               env.with_step_limit(min(env.step_limit, mutant_steps)), new_quarantine)
        if ratio is not None and ratio < settings.kill_threshold:
            return done(ratio, None, "mutation", f"kill ratio {ratio:.3f} < {settings.kill_threshold}")

    try:
        result = canary(patched, workload, settings.canary_window, env, baseline_error_rate)
    except EmptyWorkload:
        return done(ratio, None)
    if not result.passes(settings.canary_epsilon):
        return done(ratio, result.error_rate, "canary",
                    f"error rate {result.error_rate:.3f} > baseline {baseline_error_rate:.3f}"
                    f" + {settings.canary_epsilon}")
    return done(ratio, result.error_rate)
