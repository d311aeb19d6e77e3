"""Acceptance criteria, each at its stated tolerance; one PASS/FAIL line per criterion is printed."""

import shutil
import time

import pytest
from hypothesis import HealthCheck, assume, given, settings, strategies as st

from mendheal.clock import FixedClock
from mendheal.evalharness import (
    ALL, F1_TOLERANCE, Campaign, compare_baselines, emit_report, metrics, run_campaign, shipped_fixtures,
)
from mendheal.faults import SYNTACTIC_CLASSES, BugClass, FaultError
from mendheal.healing import Edit, Origin, PatchCandidate
from mendheal.incidents import IncidentStore, MemoryStore
from mendheal.minilang import RuntimeEnv, parse
from mendheal.orchestrator import CycleState, PipelineMode, Policy, heal_cycle, inject_workspace, parse_policy
from mendheal.verify import DEFAULT_KILL_THRESHOLD, classify_flaky, verify_candidate
from mendheal.workspace import Workspace

from conftest import CORPUS_DIR

FIXTURES = tuple(shipped_fixtures())
SEED = 2024


def fixed_clock():
    return FixedClock(0, 1)


@pytest.fixture(scope="module")
def syntactic():
    """The syntactic campaign (criteria 1, 2, 7): 4 injections per class per fixture."""
    campaign = Campaign("syntactic", FIXTURES, SYNTACTIC_CLASSES, 4, SEED)
    start = time.monotonic()
    result = run_campaign(campaign, clock_factory=fixed_clock)
    return campaign, result, time.monotonic() - start


def test_c1_repair_rate(syntactic, criterion):
    campaign, result, elapsed = syntactic
    table = metrics(result)
    per_class = {c.value: sum(1 for t in result.injected if t.bug_class == c.value) for c in campaign.classes}
    rate = table.row(ALL).repair_success_rate
    ok = len(FIXTURES) >= 6 and min(per_class.values()) >= 20 and rate >= 0.80 and elapsed < 600
    criterion(1, ok, f"repair_success_rate {rate:.4f} (>= 0.80) over {len(FIXTURES)} fixtures, "
                     f"injected per class {per_class}, runtime {elapsed:.1f}s (< 600s)")
    assert ok


def test_c2_detection_f1(syntactic, criterion, tmp_path):
    _, result, _ = syntactic
    table = metrics(result)
    f1 = table.row(ALL).f1
    txt, _ = emit_report(table, None, tmp_path, normalize=True)
    documented = f"tolerance +/-{F1_TOLERANCE:.2f}" in txt.read_text()
    ok = f1 >= 0.85 and documented
    criterion(2, ok, f"detection F1 {f1:.4f} (>= 0.85, top-3 site match); tolerance documented in report: "
                     f"{documented}")
    assert ok


SWAPPED = """fn bigger(a, b) {
  if a < b {
    return a;
  }
  return b;
}

fn crash() {
  return 1 / 0;
}

fn test_bigger() {
  assert_eq(bigger(3, 5), 5);
  assert_eq(bigger(9, 2), 9);
}
"""


def test_c3_retry_bound(source_ws, criterion):
    # every replayed call errors, so candidates either fail the tests or the canary
    ws = source_ws(SWAPPED, workload='{"entry": "crash", "args": [], "jitter_seed": 0}\n')
    out = heal_cycle(ws, Policy(), MemoryStore(), clock=FixedClock(0))
    names = sorted(p.name for p in out.bundle.iterdir()) if out.bundle else []
    diffs = [n for n in names if n.endswith(".diff")]
    verdicts = (out.bundle / "verdicts.jsonl").read_text().splitlines() if out.bundle else []
    ok = out.state is CycleState.Escalated and out.attempts == 3 and len(diffs) == 3 and len(verdicts) == 3
    criterion(3, ok, f"state {out.state.value}, attempts {out.attempts}, bundle diffs {len(diffs)}, "
                     f"verdicts {len(verdicts)} (exactly 3 each)")
    assert ok


def test_c4_bypass_rejected(make_ws, criterion):
    ws = make_ws("acct")
    program = ws.read_program()
    fi = program.function_index("interest")
    # summary([400, 800, -200]) needs interest(1000) == 30; the patch returns that constant outright
    cand = PatchCandidate(1, (Edit((fi, 1), "return 30;"),), Origin.external, "hard-coded interest",
                          BugClass.WrongOperator)
    v = verify_candidate(program, ws.read_config(), ws.read_quarantine(), cand, ws.read_workload())
    verdict = v.verdict
    ok = (verdict.tests_failed == 0 and verdict.label() == "Reject{mutation}"
          and verdict.mutation_kill_ratio < DEFAULT_KILL_THRESHOLD)
    criterion(4, ok, f"tests failed {verdict.tests_failed}, kill ratio {verdict.mutation_kill_ratio:.3f} "
                     f"(< 0.6), decision {verdict.label()}")
    assert ok


FLAKY_SUITE = """
fn test_seed_parity() { assert(jitter() % 2 == 0); }
fn test_seed_third() { assert(jitter() % 3 == 1); }
fn test_seed_low() { assert(jitter() < 500); }
fn test_seed_fifth() { assert(jitter() % 5 != 0 && jitter() % 2 == 1); }
fn test_seed_sum() { let a = jitter(); assert_eq(a % 4, 3); }
fn test_det_eq() { assert_eq(1 + 1, 3); }
fn test_det_index() { let a = [1]; assert(a[2] == 1); }
fn test_det_null() { let x = null; assert(x[0] == 1); }
fn test_det_div() { assert(1 / 0 == 0); }
fn test_det_snapshot() { assert_snapshot(str(2 * 3), "7"); }
"""


def test_c5_flaky_classification(criterion):
    program = parse(FLAKY_SUITE)
    expected = {fn.name: "flaky" if fn.name.startswith("test_seed") else "deterministic" for fn in program.functions}
    got = {name: classify_flaky(program, name, RuntimeEnv(jitter_seed=SEED)) for name in expected}
    correct = sum(got[n] == expected[n] for n in expected)
    ok = correct == 10 and len(expected) == 10
    criterion(5, ok, f"{correct}/10 classified correctly (5 seed-dependent, 5 deterministic)")
    assert ok


ROLLBACK = {"cycles": 0, "non_healed": 0, "rejects": 0, "mismatches": 0}
ALERT_ALL = parse_policy("\n".join(f"class.{c.value} = alert_only" for c in BugClass))
REVIEW_ALL = parse_policy("auto_apply_min_confidence = 1.0\n"
                          + "\n".join(f"class.{c.value} = review" for c in BugClass))


@settings(max_examples=100, deadline=None, derandomize=True,
          suppress_health_check=[HealthCheck.function_scoped_fixture, HealthCheck.filter_too_much,
                                 HealthCheck.too_slow])
@given(st.sampled_from(FIXTURES), st.sampled_from(list(BugClass)), st.integers(0, 2 ** 31),
       st.sampled_from(["default", "alert", "review", "one_retry"]))
def test_c6_rollback_property(tmp_path_factory, fixture, bug_class, seed, policy_name):
    root = tmp_path_factory.mktemp("cycle")
    shutil.rmtree(root)
    shutil.copytree(CORPUS_DIR / fixture, root)
    ws = Workspace.open(root)
    try:
        inject_workspace(ws, bug_class, seed)
    except FaultError:
        assume(False)
    policy = {"default": Policy(), "alert": ALERT_ALL, "review": REVIEW_ALL,
              "one_retry": Policy(max_retries=1)}[policy_name]
    before = ws.hashes()
    out = heal_cycle(ws, policy, MemoryStore(), seed=seed, clock=FixedClock(0))
    ROLLBACK["cycles"] += 1
    ROLLBACK["rejects"] += sum(1 for a in (out.incident.attempts if out.incident else [])
                               if a["verdict"]["decision"] != "Accept")
    if out.state is not CycleState.Healed:
        ROLLBACK["non_healed"] += 1
        if ws.hashes() != before:
            ROLLBACK["mismatches"] += 1
        assert ws.hashes() == before


def test_c6_rollback_summary(criterion):
    # runs after the property above in file order
    ok = ROLLBACK["cycles"] >= 100 and ROLLBACK["mismatches"] == 0
    criterion(6, ok, f"{ROLLBACK['cycles']} randomized cycles, {ROLLBACK['non_healed']} ended Reject/Escalated/"
                     f"PendingReview, {ROLLBACK['rejects']} rejected attempts, hash mismatches "
                     f"{ROLLBACK['mismatches']}")
    assert ok


def test_c7_determinism(syntactic, tmp_path, criterion):
    campaign, first, _ = syntactic
    second = run_campaign(campaign, clock_factory=lambda: FixedClock(999, 13))
    a = emit_report(metrics(first), None, tmp_path / "a", normalize=True)
    b = emit_report(metrics(second), None, tmp_path / "b", normalize=True)
    same = [x.read_bytes() == y.read_bytes() for x, y in zip(a, b)]
    ok = all(same)
    criterion(7, ok, f"normalized report.txt identical {same[0]}, report.jsonl identical {same[1]} "
                     f"(equal seeds, different clocks)")
    assert ok


@pytest.fixture(scope="module")
def detector_comparison():
    return compare_baselines(FIXTURES, [BugClass.StaleSnapshot, BugClass.Misconfiguration], 4, SEED,
                             (PipelineMode.full, PipelineMode.trace_only), "detector",
                             clock_factory=fixed_clock)


@pytest.fixture(scope="module")
def model_comparison():
    return compare_baselines(FIXTURES, SYNTACTIC_CLASSES, 4, SEED,
                             (PipelineMode.template_only, PipelineMode.search_only), "models",
                             clock_factory=fixed_clock)


def test_c8_baseline_separation(syntactic, detector_comparison, model_comparison, criterion):
    full = detector_comparison.tables["full"]
    trace = detector_comparison.tables["trace_only"]
    per_class = {c: (full.row(c).f1, trace.row(c).f1) for c in ("StaleSnapshot", "Misconfiguration")}
    invalid = (metrics(syntactic[1]).row(ALL).invalid_candidates
               + sum(t.row(ALL).invalid_candidates for t in detector_comparison.tables.values())
               + sum(t.row(ALL).invalid_candidates for t in model_comparison.tables.values()))
    ok = full.row(ALL).f1 > trace.row(ALL).f1 and all(f > t for f, t in per_class.values()) and invalid == 0
    criterion(8, ok, f"F1 full {full.row(ALL).f1:.4f} > trace_only {trace.row(ALL).f1:.4f} "
                     f"(per class {per_class}); parse-invalid candidates across campaigns: {invalid}")
    assert ok


def test_c9_memory_effect(make_ws, tmp_path, criterion):
    store = IncidentStore(tmp_path / "incidents.jsonl")
    pairs = []
    for cls in SYNTACTIC_CLASSES:
        for seed in (1, 2, 3):
            first = make_ws("acct", f"{cls.value}-{seed}-a")
            try:
                inject_workspace(first, cls, seed)
            except FaultError:
                continue
            a = heal_cycle(first, Policy(), store, seed=seed, clock=FixedClock(0))
            if a.state is not CycleState.Healed:
                continue
            second = make_ws("acct", f"{cls.value}-{seed}-b")
            inject_workspace(second, cls, seed)
            b = heal_cycle(second, Policy(), store, seed=seed, clock=FixedClock(0))
            pairs.append((a.hypotheses[0].confidence, b.hypotheses[0].confidence))
    raised = sum(b > a for a, b in pairs)
    ok = bool(pairs) and all(b >= a for a, b in pairs)
    criterion(9, ok, f"{len(pairs)} re-injected fingerprints, second confidence >= first in all "
                     f"({raised} strictly higher)")
    assert ok


def test_c10_substitute(syntactic, model_comparison, criterion):
    mttr = metrics(syntactic[1]).row(ALL).mean_mttr_ms
    rows = {}
    for cls in SYNTACTIC_CLASSES:
        t, s, n = model_comparison.paired_attempts("template_only", "search_only", cls.value)
        rows[cls.value] = (t, s, n)
    compared = {c: v for c, v in rows.items() if v[2] > 0}
    ok = mttr is not None and bool(compared) and all(t <= s for t, s, _ in compared.values())
    detail = ", ".join(f"{c} template {t:.2f} <= search {s:.2f} (n={n})" for c, (t, s, n) in compared.items())
    skipped = [c for c, v in rows.items() if v[2] == 0]
    criterion(10, ok, f"human-baseline claims not reproduced; mean MTTR reported ({mttr} ms, fixed clock); "
                      f"{detail}; no paired healed trials for {skipped}")
    assert ok
