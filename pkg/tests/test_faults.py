import json

import pytest
from hypothesis import given, settings, strategies as st

from mendheal.evalharness import CORPUS_DIR
from mendheal.faults import (
    INJECTOR_ONLY, REPAIR_OPERATORS, BugClass, CannotFalsify, FaultError, ForbiddenAssertTarget, GroundTruth,
    InapplicableOperator, MutationOperator, NoInjectableSite, combine, enumerate_mutations, enumerate_sites,
    inject_bug, mutate, operator_sites,
)
from mendheal.faults.mutate import within_assert
from mendheal.minilang import RuntimeEnv, format_program, parse, resolve, run_tests
from mendheal.minilang.edits import apply_fragment
from mendheal.minilang.nodes import Block, Stmt
from mendheal.minilang.paths import dotted
from mendheal.workspace import Workspace

from conftest import FIXTURES

SMALL = """fn total(a) {
  let s = 0;
  let i = 0;
  while i < len(a) {
    s = s + a[i];
    i = i + 1;
  }
  return s;
}

fn test_total() {
  assert_eq(total([1, 2, 3]), 6);
}
"""


def load(name):
    ws = Workspace.open(CORPUS_DIR / name)
    return ws.read_program(), ws.read_hidden(), RuntimeEnv(config=ws.read_config())


def test_single_for_loop_has_one_offbyone_site():
    p = parse("fn f(a) { for i in 0..len(a) { print(str(a[i])); } }")
    assert enumerate_sites(p, BugClass.OffByOne) == [(0, 0, 1)]


def test_no_null_means_no_null_sites():
    assert enumerate_sites(parse(SMALL), BugClass.MissingNullCheck) == []


def test_acct_sites_match_hand_enumeration():
    oracle = json.loads((CORPUS_DIR / "acct" / "acct.sites.json").read_text())
    program, _, env = load("acct")
    for cls in BugClass:
        got = [dotted(s) for s in enumerate_sites(program, cls, dict(env.config))]
        assert got == oracle[cls.value], cls


def test_offbyone_injection_adds_index_error():
    p = parse(SMALL)
    mutant, truth = inject_bug(p, BugClass.OffByOne, 3)
    assert truth.mutated_fragment == "i <= len(a)"
    clean = run_tests(p, RuntimeEnv())
    after = run_tests(mutant, RuntimeEnv())
    assert clean.passed
    assert after.result("test_total").error_code == "E_INDEX_OOB"


@pytest.mark.parametrize("cls", list(BugClass))
def test_injection_is_deterministic(cls):
    program, hidden, env = load("config" if cls is BugClass.Misconfiguration else "acct")
    try:
        first = inject_bug(program, cls, 5, env, hidden)
    except FaultError:
        with pytest.raises(FaultError):
            inject_bug(program, cls, 5, env, hidden)
        return
    second = inject_bug(program, cls, 5, env, hidden)
    assert format_program(first[0]) == format_program(second[0])
    assert first[1] == second[1]


def test_no_site_raises():
    with pytest.raises(NoInjectableSite):
        inject_bug(parse(SMALL), BugClass.MissingNullCheck, 0)


def test_unfalsifiable_raises():
    # The loop condition is never observed by any test, so no variant fails.
    p = parse("fn f(a) { let i = 0; while i < 3 { i = i + 1; } return 0; }\nfn test_f() { assert_eq(f([]), 0); }")
    with pytest.raises(CannotFalsify):
        inject_bug(p, BugClass.OffByOne, 0)


def test_stale_snapshot_injection_changes_actual():
    src = """fn total(a) {
  let s = 0;
  for i in 0..len(a) {
    s = s + a[i];
  }
  return s;
}

fn test_total() {
  assert_snapshot(str(total([40, 2])), "42");
}
"""
    mutant, truth = inject_bug(parse(src), BugClass.StaleSnapshot, 1)
    result = run_tests(mutant, RuntimeEnv()).result("test_total")
    assert result.error_code == "E_SNAPSHOT_MISMATCH"
    assert result.detail["actual"] in ("41", "43")
    assert truth.site == (1, 0, 1)


def _reproduce(program, truth):
    site = truth.edit_site if truth.edit_site is not None else truth.site
    return apply_fragment(program, site, truth.mutated_fragment)


@pytest.mark.parametrize("name", FIXTURES)
@pytest.mark.parametrize("cls", list(BugClass))
def test_falsifiable_and_reproducible(name, cls):
    program, hidden, env = load(name)
    clean = run_tests(program, env)
    for seed in range(2):
        try:
            mutant, truth = inject_bug(program, cls, seed, env, hidden)
        except FaultError:
            continue
        if truth.config_change is not None:
            mutant_env = env.with_config({**env.config, truth.config_change["key"]: truth.config_change["new"]})
            assert format_program(mutant) == format_program(program)
        else:
            mutant_env = env
            assert format_program(_reproduce(program, truth)) == format_program(mutant)
        report = run_tests(mutant, mutant_env)
        newly = [r for r in report.failing if clean.result(r.test_name).status == "pass"]
        assert newly, (name, cls, seed)
        for r in report.failing:
            if r.error_code not in ("E_ASSERT_FAIL", "E_SNAPSHOT_MISMATCH") and r.trace:
                # trace soundness: the innermost frame resolves to a statement
                assert isinstance(resolve(mutant, r.trace[-1][1]), Stmt)


def test_ground_truth_record_round_trip():
    truth = GroundTruth(BugClass.OffByOne, (0, 2, 0), "i < n", "i <= n", 9, (0, 2, 0), None, None)
    assert GroundTruth.from_record(json.loads(json.dumps(truth.to_record()))) == truth


def test_swap_comparison_cycle():
    p = parse("fn f(a, b) { return a < b; }")
    expected = ["<=", ">", ">=", "==", "!="]
    for seed, op in enumerate(expected):
        assert mutate(p, MutationOperator.SwapComparisonOp, (0, 0, 0), seed).functions[0].body[0].value.op == op


def test_delete_only_statement_leaves_empty_block():
    p = parse("fn f(x) { if x { print(x); } }")
    out = mutate(p, MutationOperator.DeleteStmt, (0, 0, 1, 0), 0)
    assert out.functions[0].body[0].then == Block(())
    assert parse(format_program(out)) == out


def test_int_literal_delta_parity():
    p = parse("fn f(n) { for i in 0..n { print(str(i)); } }")
    even = mutate(p, MutationOperator.IntLiteralDelta, (0, 0, 0), 0)
    odd = mutate(p, MutationOperator.IntLiteralDelta, (0, 0, 0), 1)
    assert "for i in 1..n" in format_program(even)
    assert "for i in -1..n" in format_program(odd)
    for out in (even, odd):
        assert parse(format_program(out)) == out


def test_assert_targets_forbidden():
    p = parse("fn test_a() { assert 1 < 2; }")
    with pytest.raises(ForbiddenAssertTarget):
        mutate(p, MutationOperator.SwapComparisonOp, (0, 0, 0), 0)
    with pytest.raises(ForbiddenAssertTarget):
        mutate(p, MutationOperator.DeleteStmt, (0, 0), 0)


def test_inapplicable_operator():
    with pytest.raises(InapplicableOperator):
        mutate(parse("fn f() { return 1; }"), MutationOperator.SwapComparisonOp, (0, 0, 0), 0)


def test_injector_only_operators_not_used_for_repair():
    assert not INJECTOR_ONLY & set(REPAIR_OPERATORS)


@pytest.mark.parametrize("name", FIXTURES)
def test_repair_mutations_parse_and_avoid_asserts(name):
    program, _, _ = load(name)
    code = [i for i, f in enumerate(program.functions) if not f.is_test]
    for op, site, seed in enumerate_mutations(program, code):
        out = mutate(program, op, site, seed)
        assert parse(format_program(out)) == out
        assert not within_assert(program, site)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(FIXTURES), st.sampled_from(list(MutationOperator)), st.integers(0, 2 ** 32))
def test_mutate_output_always_round_trips(name, op, seed):
    program, _, _ = load(name)
    sites = operator_sites(program, op, forbid_asserts=False)
    if not sites:
        return
    site = sites[seed % len(sites)]
    out = mutate(program, op, site, seed, forbid_asserts=False)
    assert parse(format_program(out)) == out


def test_combine_appends_hidden_functions():
    program, hidden, _ = load("acct")
    both = combine(program, hidden)
    assert len(both.functions) == len(program.functions) + len(hidden.functions)
