"""Seeded, ground-truth-labelled fault injection.

Draw order: the candidate sites for a class are shuffled with
``SplitMix64(derive_seed(seed, class_ordinal))``; each site's variants are
then tried in the fixed order listed in ``_variants``. At most
``MAX_DRAWS`` (site, variant) pairs are tried before CannotFalsify.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, Iterator, List, Optional, Tuple

from ..minilang.analysis import derefs_of, iter_nodes, reachable_functions, calls_in
from ..minilang.edits import fragment_of
from ..minilang.formatter import format_statements
from ..minilang.interpreter import RuntimeEnv, TestReport, run_test, run_tests
from ..minilang.nodes import (
    Assert, AssertEq, AssertSnapshot, Binary, Call, For, IntLit, NodePath, Program,
    Stmt, Var, While,
)
from ..minilang.paths import enclosing_statement, replace_at, resolve, walk
from ..rng import SplitMix64, derive_seed
from .mutate import CMP_CYCLE, config_comparison, cycle_step, is_null_guard, within_assert
from .taxonomy import BugClass, CannotFalsify, GroundTruth, NoInjectableSite

MAX_DRAWS = 32
BOUNDARY_FLIP = {"<": "<=", "<=": "<", ">": ">=", ">=": ">"}
LOWER_BOUND_OPS = {("left", ">="), ("left", ">"), ("right", "<="), ("right", "<")}


def combine(program: Program, extra: Optional[Program]) -> Program:
    """Append the functions of ``extra`` (e.g. held-out tests) to ``program``."""
    if extra is None:
        return program
    names = {fn.name for fn in program.functions}
    return Program(program.functions + tuple(fn for fn in extra.functions if fn.name not in names))


def bounded_env(env: RuntimeEnv, report: TestReport, factor: int = 20, floor: int = 20_000) -> RuntimeEnv:
    """Step budget proportional to the clean suite; mutants that loop are cut off early."""
    worst = max((r.step_count for r in report.results), default=0)
    return env.with_step_limit(min(env.step_limit, max(floor, worst * factor)))


def _code_functions(program: Program) -> List[int]:
    return [i for i, fn in enumerate(program.functions) if not fn.is_test]


def _test_functions(program: Program) -> List[int]:
    return [i for i, fn in enumerate(program.functions) if fn.is_test]


def adjust_range_end(end, delta: int):
    """``end + delta`` folded into an existing ``x + c`` / ``x - c`` tail."""
    if isinstance(end, Binary) and end.op in ("+", "-") and isinstance(end.right, IntLit):
        c = end.right.value if end.op == "+" else -end.right.value
        c += delta
        if c == 0:
            return end.left
        return Binary("+" if c > 0 else "-", end.left, IntLit(abs(c)))
    if isinstance(end, IntLit):
        return IntLit(end.value + delta)
    return Binary("+" if delta > 0 else "-", end, IntLit(abs(delta)))


def _is_range_assert(stmt) -> Optional[Tuple[Any, int, int]]:
    if not isinstance(stmt, Assert) or not isinstance(stmt.expr, Binary) or stmt.expr.op != "&&":
        return None
    lo_cmp, hi_cmp = stmt.expr.left, stmt.expr.right
    if not (isinstance(lo_cmp, Binary) and isinstance(hi_cmp, Binary)):
        return None
    if lo_cmp.op not in (">=", ">") or hi_cmp.op not in ("<=", "<"):
        return None
    if lo_cmp.left != hi_cmp.left:
        return None
    if not (isinstance(lo_cmp.right, IntLit) and isinstance(hi_cmp.right, IntLit)):
        return None
    lo = lo_cmp.right.value + (1 if lo_cmp.op == ">" else 0)
    hi = hi_cmp.right.value - (1 if hi_cmp.op == "<" else 0)
    return lo_cmp.left, lo, hi


def _loop_heads(program: Program) -> set:
    heads = set()
    for fi in range(len(program.functions)):
        for path, node in walk(program.functions[fi], (fi,)):
            if isinstance(node, While):
                heads.add(path + (0,))
            elif isinstance(node, For):
                heads.add(path + (0,))
                heads.add(path + (1,))
    return heads


# ----------------------------------------------------------------- site lists


def enumerate_sites(program: Program, bug_class: BugClass, config: Optional[Dict[str, Any]] = None
                    ) -> List[NodePath]:
    """Source-order list of nodes where ``bug_class`` can be injected."""
    bug_class = BugClass(bug_class)
    out: List[NodePath] = []
    if bug_class is BugClass.OffByOne:
        for fi in _code_functions(program):
            for path, node in walk(program.functions[fi], (fi,)):
                if isinstance(node, While) and isinstance(node.cond, Binary) and node.cond.op in BOUNDARY_FLIP:
                    out.append(path + (0,))
                elif isinstance(node, For):
                    out.append(path + (1,))
    elif bug_class is BugClass.MissingNullCheck:
        for fi in _code_functions(program):
            for path, node in walk(program.functions[fi], (fi,)):
                var = is_null_guard(node)
                if var is not None and _derefs_or_passes(node.then, var):
                    out.append(path)
    elif bug_class is BugClass.WrongOperator:
        heads = _loop_heads(program)
        for fi in _code_functions(program):
            for path, node in walk(program.functions[fi], (fi,)):
                if (isinstance(node, Binary) and node.op in CMP_CYCLE and path not in heads
                        and config_comparison(node) is None and not _is_null_check(node)
                        and not within_assert(program, path)):
                    out.append(path)
    elif bug_class is BugClass.StaleSnapshot:
        for fi in _test_functions(program):
            for path, node in walk(program.functions[fi], (fi,)):
                if isinstance(node, AssertSnapshot):
                    out.append(path)
    elif bug_class is BugClass.BrittleAssertion:
        for fi in _test_functions(program):
            for path, node in walk(program.functions[fi], (fi,)):
                if _is_range_assert(node) is not None:
                    out.append(path)
    elif bug_class is BugClass.FlakySeedDependence:
        for fi in _test_functions(program):
            for path, node in walk(program.functions[fi], (fi,)):
                if isinstance(node, AssertEq):
                    out.append(path)
    elif bug_class is BugClass.Misconfiguration:
        cfg = config or {}
        for fi in range(len(program.functions)):
            for path, node in walk(program.functions[fi], (fi,)):
                info = config_comparison(node)
                if info is None:
                    continue
                key, lit_side, _ = info
                cfg_side = "right" if lit_side == "left" else "left"
                if (cfg_side, node.op) in LOWER_BOUND_OPS and isinstance(cfg.get(key), int) \
                        and not isinstance(cfg.get(key), bool):
                    out.append(path)
    return out


def _is_null_check(node) -> bool:
    return isinstance(node, Binary) and node.op in ("==", "!=") and (
        type(node.left).__name__ == "NullLit" or type(node.right).__name__ == "NullLit")


def _derefs_or_passes(node, var: str) -> bool:
    if derefs_of(node, var):
        return True
    for n in iter_nodes(node):
        if isinstance(n, Call) and n.name not in ("len", "str", "print") and any(
                isinstance(a, Var) and a.name == var for a in n.args):
            return True
    return False


# ------------------------------------------------------------------- variants


@dataclass
class _Variant:
    mutant: Program
    truth: Dict[str, Any]
    config: Optional[Dict[str, Any]] = None


def _variants(program: Program, bug_class: BugClass, site: NodePath, config: Dict[str, Any],
              env: RuntimeEnv) -> Iterator[_Variant]:
    node = resolve(program, site)
    if bug_class is BugClass.OffByOne:
        if isinstance(node, Binary) and site[-1] == 0 and node.op in BOUNDARY_FLIP:
            new = Binary(BOUNDARY_FLIP[node.op], node.left, node.right)
            yield _expr_variant(program, site, new)
        else:
            for delta in (1, -1):
                yield _expr_variant(program, site, adjust_range_end(node, delta))
    elif bug_class is BugClass.WrongOperator:
        for steps in range(1, len(CMP_CYCLE)):
            yield _expr_variant(program, site, Binary(cycle_step(CMP_CYCLE, node.op, steps), node.left, node.right))
    elif bug_class is BugClass.MissingNullCheck:
        var = is_null_guard(node)
        body = list(node.then.stmts)
        mutant = replace_at(program, site, body)
        yield _Variant(mutant, {
            "site": _first_deref_site(mutant, site, len(body), var),
            "edit_site": site,
            "original_fragment": fragment_of(program, site),
            "mutated_fragment": format_statements(body).rstrip("\n"),
        })
    elif bug_class is BugClass.StaleSnapshot:
        fi = site[0]
        roots = calls_in(node)
        targets = reachable_functions(program, roots)
        for ci in _code_functions(program):
            if program.functions[ci].name not in targets:
                continue
            for path, lit in walk(program.functions[ci], (ci,)):
                if not isinstance(lit, IntLit):
                    continue
                for delta in (1, -1):
                    v = _expr_variant(program, path, IntLit(lit.value + delta))
                    v.truth["site"] = site + (1,)
                    v.truth["test_name"] = program.functions[fi].name
                    yield v
    elif bug_class is BugClass.BrittleAssertion:
        subject, lo, hi = _is_range_assert(node)
        for exact in dict.fromkeys((hi, lo, (lo + hi) // 2)):
            yield _stmt_variant(program, site, AssertEq(subject, IntLit(exact)))
    elif bug_class is BugClass.FlakySeedDependence:
        for op, modulus in (("+", 2), ("+", 3), ("-", 2)):
            noisy = Binary(op, node.left, Binary("%", Call("jitter", ()), IntLit(modulus)))
            yield _stmt_variant(program, site, AssertEq(noisy, node.right))
    elif bug_class is BugClass.Misconfiguration:
        key, lit_side, threshold = config_comparison(node)
        current = config[key]
        strict = node.op in (">", "<")
        candidates = [threshold if strict else threshold - 1, threshold // 2, 0]
        for value in dict.fromkeys(candidates):
            if value >= current:
                continue
            new_cfg = dict(config)
            new_cfg[key] = value
            yield _Variant(program, {
                "site": site,
                "edit_site": None,
                "original_fragment": f"{key} = {current}",
                "mutated_fragment": f"{key} = {value}",
                "config_change": {"key": key, "old": current, "new": value},
            }, new_cfg)


def _expr_variant(program: Program, site: NodePath, new) -> _Variant:
    mutant = replace_at(program, site, [new])
    return _Variant(mutant, {
        "site": site,
        "edit_site": site,
        "original_fragment": fragment_of(program, site),
        "mutated_fragment": fragment_of(mutant, site),
    })


def _stmt_variant(program: Program, site: NodePath, new: Stmt) -> _Variant:
    return _expr_variant(program, site, new)


def _first_deref_site(mutant: Program, site: NodePath, count: int, var: str) -> NodePath:
    parent = site[:-1]
    for j in range(count):
        stmt_path = parent + (site[-1] + j,)
        stmt = resolve(mutant, stmt_path)
        for sub, node in [(stmt_path, stmt)] + list(walk(stmt, stmt_path)):
            hit = False
            if hasattr(node, "base") and isinstance(getattr(node, "base"), Var) and node.base.name == var:
                hit = True
            elif isinstance(node, Call) and any(isinstance(a, Var) and a.name == var for a in node.args) \
                    and node.name not in ("str", "print"):
                hit = True
            if hit:
                return enclosing_statement(mutant, sub)
    return site


# ------------------------------------------------------------------ injection


def _falsifies(clean: TestReport, mutant: TestReport) -> bool:
    for r in mutant.results:
        before = clean.result(r.test_name)
        if r.status != "pass" and before is not None and before.status == "pass":
            return True
    return False


def _stale_only(variant: _Variant, site: NodePath, env: RuntimeEnv, hidden: Optional[Program]) -> bool:
    report = run_tests(combine(variant.mutant, hidden), env)
    failing = report.failing
    if not failing:
        return False
    if any(r.error_code != "E_SNAPSHOT_MISMATCH" for r in failing):
        return False
    return any(r.trace and r.trace[-1][1] == site for r in failing)


def _seed_dependent(variant: _Variant, clean: TestReport, env: RuntimeEnv, probes: int = 8) -> bool:
    """Every new failure is an assertion failure that some other jitter seed avoids."""
    mutant_report = run_tests(variant.mutant, env)
    for r in mutant_report.failing:
        before = clean.result(r.test_name)
        if before is None or before.status != "pass":
            continue
        if r.error_code != "E_ASSERT_FAIL":
            return False
        if not any(run_test(variant.mutant, r.test_name, env.with_seed(env.jitter_seed + k)).status == "pass"
                   for k in range(1, probes + 1)):
            return False
    return True


def inject_bug(program: Program, bug_class: BugClass, seed: int, env: Optional[RuntimeEnv] = None,
               hidden: Optional[Program] = None) -> Tuple[Program, GroundTruth]:
    """Inject one labelled fault of ``bug_class`` chosen by ``seed``.

    For Misconfiguration the program is returned unchanged and the lowered
    config value is described by ``GroundTruth.config_change``.
    """
    bug_class = BugClass(bug_class)
    env = env or RuntimeEnv()
    config = dict(env.config)
    sites = enumerate_sites(program, bug_class, config)
    if not sites:
        raise NoInjectableSite(f"no {bug_class.value} site in program")
    clean_report = run_tests(program, env)
    check_env = bounded_env(env, clean_report)
    ordinal = list(BugClass).index(bug_class)
    rng = SplitMix64(derive_seed(seed, ordinal))
    draws = 0
    for site in rng.shuffled(sites):
        for variant in _variants(program, bug_class, site, config, env):
            draws += 1
            if draws > MAX_DRAWS:
                raise CannotFalsify(f"no {bug_class.value} variant failed a test within {MAX_DRAWS} draws")
            run_env = check_env if variant.config is None else check_env.with_config(variant.config)
            mutant_report = run_tests(variant.mutant, run_env)
            if not _falsifies(clean_report, mutant_report):
                continue
            if bug_class is BugClass.StaleSnapshot and not _stale_only(variant, site, check_env, hidden):
                continue
            if bug_class is BugClass.FlakySeedDependence and not _seed_dependent(variant, clean_report, check_env):
                continue
            truth = GroundTruth(bug_class=bug_class, seed=seed, **variant.truth)
            return variant.mutant, truth
    raise CannotFalsify(f"no {bug_class.value} variant failed a test")
