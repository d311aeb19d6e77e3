import json
import multiprocessing

import pytest

from mendheal.clock import FixedClock
from mendheal.diagnosis import FaultHypothesis
from mendheal.faults import BugClass
from mendheal.healing import Origin, PatchCandidate
from mendheal.incidents import Incident, IncidentStore, MemoryStore
from mendheal.minilang import run_tests
from mendheal.orchestrator import (
    APPROVED_MARKER, PENDING_MARKER, Action, ApprovalError, CycleState, Policy, PolicyError, approve_bundle,
    decide, heal_cycle, inject_workspace, load_policy, parse_policy, sample_policy,
)
from mendheal.workspace import WorkspaceLockHeld

OOB = """fn total(a) {
  let s = 0;
  let i = 0;
  while i <= len(a) {
    s = s + a[i];
    i = i + 1;
  }
  return s;
}

fn test_total() {
  assert_eq(total([1, 2, 3]), 6);
}
"""

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

# every replay call errors, so any candidate that passes the tests fails the canary
CRASH_WORKLOAD = '{"entry": "crash", "args": [], "jitter_seed": 0}\n'


def cand(cls=BugClass.OffByOne, confidence=0.0):
    return PatchCandidate(1, (), Origin.template, "", cls, confidence=confidence)


def test_policy_defaults_and_parse():
    p = Policy()
    assert (p.max_retries, p.auto_apply_min_confidence, p.flaky_rerun_count) == (3, 0.7, 3)
    assert p.per_class_action[BugClass.StaleSnapshot] is Action.auto_apply
    parsed = parse_policy("max_retries = 5\nclass.WrongOperator = alert_only\nclass.StaleSnapshot = confidence\n")
    assert parsed.max_retries == 5
    assert parsed.per_class_action[BugClass.WrongOperator] is Action.alert_only
    assert BugClass.StaleSnapshot not in parsed.per_class_action


@pytest.mark.parametrize("text", ["max_retries = 0", "canary_epsilon = 1.5", "anomaly_factor = 0.5",
                                  "bogus = 1", "class.Nope = review", "class.OffByOne = maybe", "no equals"])
def test_policy_rejects(text):
    with pytest.raises(PolicyError):
        parse_policy(text)


def test_policy_file_absent_is_default(tmp_path):
    assert load_policy(tmp_path / "heal.policy") == Policy()
    assert sample_policy("startup") == Policy()
    assert sample_policy("enterprise").per_class_action[BugClass.OffByOne] is Action.review


def test_decide_examples():
    policy = Policy()
    assert decide(policy, FaultHypothesis((0,), BugClass.StaleSnapshot, 0.1), cand()) is Action.auto_apply
    assert decide(policy, FaultHypothesis((0,), BugClass.OffByOne, 0.69), cand()) is Action.review
    assert decide(policy, FaultHypothesis((0,), BugClass.OffByOne, 0.7), cand()) is Action.auto_apply
    strict = parse_policy("class.WrongOperator = alert_only")
    assert decide(strict, FaultHypothesis((0,), BugClass.WrongOperator, 1.0), cand()) is Action.alert_only


def test_no_failure(make_ws):
    ws = make_ws("acct")
    store = MemoryStore()
    before = ws.hashes()
    out = heal_cycle(ws, store=store)
    assert out.state is CycleState.NoFailure and store.read() == []
    assert ws.hashes() == before
    assert out.line() == "HEAL NoFailure - 0"


def test_off_by_one_healed_auto(source_ws):
    ws = source_ws(OOB)
    store = MemoryStore()
    out = heal_cycle(ws, store=store, clock=FixedClock(1000, 5))
    assert out.state is CycleState.Healed and out.attempts == 1
    assert abs(out.hypotheses[0].confidence - 0.77) < 1e-12
    (incident,) = store.read()
    assert incident.outcome == "healed_auto" and incident.healed_class == "OffByOne"
    timings = incident.timings
    assert timings["mttr_ms"] == timings["resolved_at"] - timings["detected_at"] > 0
    assert run_tests(ws.read_program(), ws.env()).passed


def test_retry_bound_and_bundle(source_ws):
    ws = source_ws(SWAPPED, workload=CRASH_WORKLOAD)
    before = ws.hashes()
    store = MemoryStore()
    out = heal_cycle(ws, store=store, clock=FixedClock(0))
    assert out.state is CycleState.Escalated and out.attempts == 3
    assert ws.hashes() == before
    files = sorted(p.name for p in out.bundle.iterdir())
    assert [f for f in files if f.endswith(".diff")] == ["attempt-1.diff", "attempt-2.diff", "attempt-3.diff"]
    verdicts = (out.bundle / "verdicts.jsonl").read_text().splitlines()
    assert len(verdicts) == 3 and all(json.loads(v)["decision"].startswith("Reject") for v in verdicts)
    assert "evidence kinds: trace" in (out.bundle / "summary.txt").read_text()
    assert store.read()[0].outcome == "escalated" and "mttr_ms" not in store.read()[0].timings


def test_retry_bound_follows_policy(source_ws):
    ws = source_ws(SWAPPED, workload=CRASH_WORKLOAD)
    out = heal_cycle(ws, Policy(max_retries=1), MemoryStore())
    assert out.attempts == 1


def test_review_then_approve(source_ws):
    ws = source_ws(OOB)
    before = ws.hashes()
    store = MemoryStore()
    out = heal_cycle(ws, Policy(auto_apply_min_confidence=0.9), store, clock=FixedClock(10))
    assert out.state is CycleState.PendingReview
    assert ws.hashes() == before
    assert (out.bundle / PENDING_MARKER).exists()
    assert store.read()[0].outcome == "pending_review"
    approved = approve_bundle(ws, out.bundle.name, store, FixedClock(50))
    assert approved.state is CycleState.Healed
    assert (out.bundle / APPROVED_MARKER).exists() and not (out.bundle / PENDING_MARKER).exists()
    assert store.read()[-1].outcome == "healed_after_review"
    assert run_tests(ws.read_program(), ws.env()).passed
    with pytest.raises(ApprovalError):
        approve_bundle(ws, out.bundle.name, store)


def test_approval_refused_after_edit(source_ws):
    ws = source_ws(OOB)
    out = heal_cycle(ws, Policy(auto_apply_min_confidence=0.9), MemoryStore())
    (ws.root / "notes.txt").write_text("changed")
    with pytest.raises(ApprovalError):
        approve_bundle(ws, out.bundle.name, MemoryStore())


def test_alert_only_leaves_workspace(source_ws):
    ws = source_ws(OOB)
    before = ws.hashes()
    out = heal_cycle(ws, parse_policy("class.OffByOne = alert_only"), MemoryStore())
    assert out.state is CycleState.Escalated and out.bundle is not None
    assert ws.hashes() == before


def test_lock_held(source_ws):
    ws = source_ws(OOB)
    ws.heal_dir.mkdir(exist_ok=True)
    (ws.heal_dir / "lock").write_text("other")
    with pytest.raises(WorkspaceLockHeld):
        heal_cycle(ws, store=MemoryStore())


def test_memory_effect(make_ws):
    store = MemoryStore()
    first = make_ws("acct", "first")
    inject_workspace(first, BugClass.OffByOne, 7)
    a = heal_cycle(first, store=store)
    assert a.state is CycleState.Healed
    second = make_ws("acct", "second")
    inject_workspace(second, BugClass.OffByOne, 7)
    b = heal_cycle(second, store=store)
    assert b.fingerprint == a.fingerprint
    assert b.hypotheses[0].confidence >= a.hypotheses[0].confidence
    assert any(e.kind == "history" for e in b.hypotheses[0].evidence)


def test_store_round_trip_and_creation(tmp_path):
    path = tmp_path / "sub" / "incidents.jsonl"
    store = IncidentStore(path)
    inc = Incident("ab" * 8, "E_X|f|0", "escalated", {"k": 1}, [{"site": "0"}], [], None, {"detected_at": 1})
    store.append(inc)
    assert path.exists() and store.read() == [inc]


def _append_many(path, tag, n):
    store = IncidentStore(path)
    for i in range(n):
        store.append(Incident(f"{tag:016x}", f"{tag}|{i}", "escalated", {"pad": "x" * 2000, "i": i}))


def test_concurrent_appends(tmp_path):
    path = tmp_path / "incidents.jsonl"
    procs = [multiprocessing.Process(target=_append_many, args=(path, tag, 40)) for tag in (1, 2, 3)]
    for p in procs:
        p.start()
    for p in procs:
        p.join()
    records = IncidentStore(path).read()
    assert len(records) == 120
    for tag in (1, 2, 3):
        assert sorted(r.event["i"] for r in records if r.fingerprint == f"{tag:016x}") == list(range(40))
