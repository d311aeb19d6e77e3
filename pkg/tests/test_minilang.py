import pytest
from hypothesis import given, settings

from mendheal.evalharness import CORPUS_DIR
from mendheal.minilang import (
    DuplicateFunction, ParseError, RuntimeEnv, UnknownEntry, execute, format_program, parse, resolve, run_tests,
    walk,
)
from mendheal.minilang.nodes import Call, For

from conftest import FIXTURES
from strategies import programs

MASK = (1 << 64) - 1


def splitmix_oracle(seed):
    """Reference SplitMix64 stream written out from its published constants."""
    state = seed & MASK
    while True:
        state = (state + 0x9E3779B97F4A7C15) & MASK
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        yield z ^ (z >> 31)


def test_splitmix_oracle_matches_published_vector():
    assert next(splitmix_oracle(0)) == 0xE220A8397B1DCDAF


def test_parse_empty_function():
    p = parse("fn main() { }")
    assert len(p.functions) == 1
    assert p.functions[0].name == "main" and p.functions[0].body == ()


def test_parse_for_loop_round_trips():
    src = "fn t() { let a = [1,2]; for i in 0..len(a) { print(str(a[i])); } }"
    p = parse(src)
    loop = p.functions[0].body[1]
    assert isinstance(loop, For)
    assert isinstance(loop.end, Call) and loop.end.name == "len"
    canonical = format_program(p)
    assert canonical == ("fn t() {\n  let a = [1, 2];\n  for i in 0..len(a) {\n    print(str(a[i]));\n  }\n}\n")
    assert format_program(parse(canonical)) == canonical


def test_parse_error_names_line():
    with pytest.raises(ParseError) as info:
        parse("fn broken( {")
    assert info.value.line == 1


def test_duplicate_function_rejected():
    with pytest.raises(DuplicateFunction):
        parse("fn f() { }\nfn f() { }")


def test_format_empty_main():
    assert format_program(parse("fn main(){}")) == "fn main() {\n}\n"


def test_div_zero_trace():
    p = parse("fn f(){ return 1/0; }")
    out = execute(p, "f", [], RuntimeEnv())
    assert out.status.code == "E_DIV_ZERO"
    assert out.status.trace == (("f", (0, 0)),)


def test_null_deref():
    p = parse("fn f(){ let x = null; return x[0]; }")
    assert execute(p, "f", [], RuntimeEnv()).status.code == "E_NULL_DEREF"


def test_unknown_entry():
    with pytest.raises(UnknownEntry):
        execute(parse("fn f(){ }"), "g", [], RuntimeEnv())


def test_jitter_follows_seeded_schedule():
    p = parse("fn f(){ return [jitter(), jitter()]; }")
    env = RuntimeEnv(jitter_seed=7)
    stream = splitmix_oracle(7)
    expected = [next(stream) % 1000, next(stream) % 1000]
    assert execute(p, "f", [], env).status.value == expected
    assert execute(p, "f", [], env).status.value == expected


def test_execute_is_deterministic():
    p = parse(open(CORPUS_DIR / "flaky" / "flaky.mnd").read())
    env = RuntimeEnv(config={"retries": 3}, jitter_seed=11)
    assert run_tests(p, env) == run_tests(p, env)


def test_step_limit_exact():
    p = parse("fn f(){ while true { } }")
    out = execute(p, "f", [], RuntimeEnv(step_limit=500))
    assert out.status.code == "E_STEP_LIMIT"
    assert out.step_count == 500


def test_integer_overflow_wraps():
    p = parse("fn f(){ return 9223372036854775807 + 1; }")
    assert execute(p, "f", [], RuntimeEnv()).status.value == -(2 ** 63)


def test_missing_config_key_is_undefined():
    p = parse('fn f(){ return config("nope"); }')
    out = execute(p, "f", [], RuntimeEnv())
    assert out.status.code == "E_UNDEFINED"


def test_half_open_range():
    p = parse("fn f(){ let s = 0; for i in 2..5 { s = s + i; } return s; }")
    assert execute(p, "f", [], RuntimeEnv()).status.value == 2 + 3 + 4


def test_run_tests_pass_and_snapshot_actual():
    p = parse('fn test_ok(){ assert true; }\nfn test_snap(){ assert_snapshot(str(2+2), "5"); }')
    report = run_tests(p, RuntimeEnv())
    assert report.result("test_ok").status == "pass"
    snap = report.result("test_snap")
    assert snap.error_code == "E_SNAPSHOT_MISMATCH"
    assert snap.detail["actual"] == "4"


def test_no_tests_is_vacuous_pass():
    report = run_tests(parse("fn helper(){ return 1; }"), RuntimeEnv())
    assert report.results == () and report.passed


def test_tests_are_zero_param_test_functions():
    p = parse("fn test_a(){ }\nfn test_b(x){ }\nfn c(){ }")
    assert [r.test_name for r in run_tests(p, RuntimeEnv()).results] == ["test_a"]


@pytest.mark.parametrize("name", FIXTURES)
def test_corpus_format_is_fixed_point(name):
    text = (CORPUS_DIR / name / f"{name}.mnd").read_text()
    once = format_program(parse(text))
    assert format_program(parse(once)) == once
    assert once == text


@pytest.mark.parametrize("name", FIXTURES)
def test_every_path_resolves(name):
    p = parse((CORPUS_DIR / name / f"{name}.mnd").read_text())
    for path, node in walk(p):
        assert resolve(p, path) is node


@settings(max_examples=300, deadline=None)
@given(programs)
def test_round_trip_property(program):
    assert parse(format_program(program)) == program


@settings(max_examples=100, deadline=None)
@given(programs)
def test_equal_programs_format_identically(program):
    assert format_program(program) == format_program(parse(format_program(program)))
