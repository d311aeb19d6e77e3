"""AST anti-pattern detectors D1-D5."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, Iterator, List, Mapping, Optional, Set, Tuple

from ..faults.mutate import config_comparison
from ..faults.taxonomy import BugClass
from ..minilang.analysis import iter_nodes, reaches_builtin
from ..minilang.interpreter import Ok, RuntimeEnv, execute, render
from ..minilang.nodes import (
    Assert, AssertEq, AssertSnapshot, Assign, Binary, Call, For, Function, If, Index,
    IndexAssign, IntLit, Let, Node, NodePath, NullLit, Program, Return, Var, While,
)
from ..minilang.paths import enclosing_statement, walk

DEFAULT_STRENGTHS = {"D1": 0.9, "D2": 0.8, "D3": 0.9, "D4": 1.0, "D5": 0.8}
FOLD_STEP_LIMIT = 100_000


@dataclass(frozen=True)
class PatternFinding:
    detector_id: str
    site: NodePath
    suspected_class: BugClass
    strength: float
    detail: str = ""


def _walk_with_parents(node: Node, path: NodePath, parents: Tuple = ()) -> Iterator[Tuple[NodePath, Node, Tuple]]:
    """Pre-order ``(path, node, ((ancestor_path, ancestor), ...))``."""
    for i, child in enumerate(node.children()):
        p = path + (i,)
        yield p, child, parents
        yield from _walk_with_parents(child, p, parents + ((p, child),))


def _null_test(cond: Node, var: str, op: str) -> bool:
    if not isinstance(cond, Binary) or cond.op != op:
        return False
    sides = (cond.left, cond.right)
    return any(isinstance(a, Var) and a.name == var for a in sides) and any(isinstance(b, NullLit) for b in sides)


def _guarded(var: str, path: NodePath, parents: Tuple) -> bool:
    """Whether ``path`` only runs when ``var`` is known non-null."""
    for ppath, node in parents:
        rel = path[len(ppath)] if len(path) > len(ppath) else None
        if isinstance(node, If):
            if rel == 1 and _conj_has(node.cond, var, "!="):
                return True
            if rel == 2 and _null_test(node.cond, var, "=="):
                return True
        if isinstance(node, While) and rel == 1 and _conj_has(node.cond, var, "!="):
            return True
        if isinstance(node, Binary) and node.op == "&&" and rel == 1 and _conj_has(node.left, var, "!="):
            return True
    return False


def _conj_has(cond: Node, var: str, op: str) -> bool:
    if _null_test(cond, var, op):
        return True
    return isinstance(cond, Binary) and cond.op == "&&" and (_conj_has(cond.left, var, op) or _conj_has(cond.right, var, op))


# ----------------------------------------------------------------------- D1


def _indexes_var(node: Node, array: str, index: Optional[str]) -> bool:
    for n in iter_nodes(node):
        if isinstance(n, Index) and isinstance(n.base, Var) and n.base.name == array:
            if index is None or index in {v.name for v in iter_nodes(n.index) if isinstance(v, Var)}:
                return True
    return False


def _len_of(node: Node) -> Optional[str]:
    if isinstance(node, Call) and node.name == "len" and len(node.args) == 1 and isinstance(node.args[0], Var):
        return node.args[0].name
    return None


def detect_d1(program: Program) -> List[PatternFinding]:
    out = []
    for fi, fn in enumerate(program.functions):
        for path, node in walk(fn, (fi,)):
            if isinstance(node, While) and isinstance(node.cond, Binary):
                c = node.cond
                pair = None
                if c.op == "<=" and isinstance(c.left, Var) and _len_of(c.right):
                    pair = (_len_of(c.right), c.left.name)
                elif c.op == ">=" and isinstance(c.right, Var) and _len_of(c.left):
                    pair = (_len_of(c.left), c.right.name)
                if pair and _indexes_var(node.body, pair[0], pair[1]):
                    out.append(PatternFinding("D1", path + (0,), BugClass.OffByOne, DEFAULT_STRENGTHS["D1"],
                                              f"loop bound admits index len({pair[0]})"))
            elif isinstance(node, For):
                end = node.end
                if (isinstance(end, Binary) and end.op == "+" and isinstance(end.right, IntLit)
                        and end.right.value > 0 and _len_of(end.left)
                        and _indexes_var(node.body, _len_of(end.left), node.var)):
                    out.append(PatternFinding("D1", path + (1,), BugClass.OffByOne, DEFAULT_STRENGTHS["D1"],
                                              f"range runs past len({_len_of(end.left)})"))
    return out


# ----------------------------------------------------------------------- D2


def _nullable_sets(program: Program) -> Tuple[Dict[str, Set[str]], Set[str]]:
    """Per-function nullable variable names and the set of functions that may return null."""
    nullable: Dict[str, Set[str]] = {fn.name: set() for fn in program.functions}
    returns_null: Set[str] = set()
    params = {fn.name: fn.params for fn in program.functions}

    def maybe_null(expr: Node, fn_name: str) -> bool:
        if isinstance(expr, NullLit):
            return True
        if isinstance(expr, Var):
            return expr.name in nullable[fn_name]
        if isinstance(expr, Call):
            return expr.name in returns_null
        return False

    changed = True
    while changed:
        changed = False
        for fi, fn in enumerate(program.functions):
            mine = nullable[fn.name]
            for path, node, parents in _walk_with_parents(fn, (fi,)):
                if isinstance(node, (Let, Assign)) and node.name not in mine and maybe_null(node.value, fn.name):
                    mine.add(node.name)
                    changed = True
                elif isinstance(node, Return) and node.value is not None and fn.name not in returns_null \
                        and maybe_null(node.value, fn.name):
                    returns_null.add(fn.name)
                    changed = True
                elif isinstance(node, Call) and node.name in params:
                    for pname, arg in zip(params[node.name], node.args):
                        if pname in nullable[node.name] or not maybe_null(arg, fn.name):
                            continue
                        if isinstance(arg, Var) and _guarded(arg.name, path, parents):
                            continue
                        nullable[node.name].add(pname)
                        changed = True
    return nullable, returns_null


def detect_d2(program: Program) -> List[PatternFinding]:
    nullable, _ = _nullable_sets(program)
    seen = set()
    out = []
    for fi, fn in enumerate(program.functions):
        names = nullable[fn.name]
        if not names:
            continue
        for path, node, parents in _walk_with_parents(fn, (fi,)):
            var = None
            if isinstance(node, Index) and isinstance(node.base, Var) and node.base.name in names:
                var = node.base.name
            elif _len_of(node) in names:
                var = _len_of(node)
            elif isinstance(node, IndexAssign) and node.name in names:
                var = node.name
            if var is None or _guarded(var, path, parents):
                continue
            site = enclosing_statement(program, path)
            if site is None or site in seen:
                continue
            seen.add(site)
            out.append(PatternFinding("D2", site, BugClass.MissingNullCheck, DEFAULT_STRENGTHS["D2"],
                                      f"{var} may be null here"))
    return out


# ----------------------------------------------------------------------- D3


def detect_d3(program: Program) -> List[PatternFinding]:
    tainted_fns: Set[str] = set()
    tainted_vars: Dict[str, Set[str]] = {fn.name: set() for fn in program.functions}

    def tainted(expr: Node, fn_name: str) -> bool:
        for n in iter_nodes(expr):
            if isinstance(n, Call) and (n.name == "jitter" or n.name in tainted_fns):
                return True
            if isinstance(n, Var) and n.name in tainted_vars[fn_name]:
                return True
        return False

    changed = True
    while changed:
        changed = False
        for fi, fn in enumerate(program.functions):
            for path, node in walk(fn, (fi,)):
                if isinstance(node, (Let, Assign)) and node.name not in tainted_vars[fn.name] \
                        and tainted(node.value, fn.name):
                    tainted_vars[fn.name].add(node.name)
                    changed = True
                elif isinstance(node, Return) and node.value is not None and fn.name not in tainted_fns \
                        and tainted(node.value, fn.name):
                    tainted_fns.add(fn.name)
                    changed = True
    out = []
    for fi, fn in enumerate(program.functions):
        for path, node in walk(fn, (fi,)):
            if isinstance(node, (Assert, AssertEq, AssertSnapshot)) and tainted(node, fn.name):
                out.append(PatternFinding("D3", path, BugClass.FlakySeedDependence, DEFAULT_STRENGTHS["D3"],
                                          "asserted value depends on jitter()"))
    return out


# ----------------------------------------------------------------------- D4


def fold_snapshot(program: Program, path: NodePath, env: Optional[RuntimeEnv] = None) -> Optional[str]:
    """Actual string of a top-level snapshot in a test, or None if not foldable."""
    fi, idx = path[0], path[1]
    fn = program.functions[fi]
    stmt = fn.body[idx]
    if reaches_builtin(program, fn, "jitter") or reaches_builtin(program, fn, "config"):
        return None
    probe = Function("__fold__", (), tuple(fn.body[:idx]) + (Return(stmt.expr),))
    folded = Program(program.functions + (probe,))
    env = (env or RuntimeEnv()).with_step_limit(FOLD_STEP_LIMIT)
    outcome = execute(folded, "__fold__", [], env)
    if not isinstance(outcome.status, Ok):
        return None
    v = outcome.status.value
    return v if isinstance(v, str) else render(v)


def detect_d4(program: Program) -> List[PatternFinding]:
    out = []
    for fi, fn in enumerate(program.functions):
        if not fn.is_test:
            continue
        for idx, stmt in enumerate(fn.body):
            if not isinstance(stmt, AssertSnapshot):
                continue
            actual = fold_snapshot(program, (fi, idx))
            if actual is not None and actual != stmt.literal.value:
                out.append(PatternFinding("D4", (fi, idx, 1), BugClass.StaleSnapshot, DEFAULT_STRENGTHS["D4"],
                                          f"actual={actual}"))
    return out


# ----------------------------------------------------------------------- D5


_CMP = {"<": lambda a, b: a < b, "<=": lambda a, b: a <= b, ">": lambda a, b: a > b,
        ">=": lambda a, b: a >= b, "==": lambda a, b: a == b, "!=": lambda a, b: a != b}


def detect_d5(program: Program, config: Mapping[str, Any]) -> List[PatternFinding]:
    out = []
    for fi, fn in enumerate(program.functions):
        for path, node in walk(fn, (fi,)):
            info = config_comparison(node)
            if info is None:
                continue
            key, lit_side, lit = info
            if key not in config:
                out.append(PatternFinding("D5", path, BugClass.Misconfiguration, DEFAULT_STRENGTHS["D5"],
                                          f"key={key} missing"))
                continue
            value = config[key]
            if type(value) is not int:
                continue
            a, b = (lit, value) if lit_side == "left" else (value, lit)
            if not _CMP[node.op](a, b):
                out.append(PatternFinding("D5", path, BugClass.Misconfiguration, DEFAULT_STRENGTHS["D5"],
                                          f"key={key} value={value} fails {node.op} {lit}"))
    return out


def run_detectors(program: Program, config: Optional[Mapping[str, Any]] = None,
                  strengths: Optional[Mapping[str, float]] = None) -> List[PatternFinding]:
    """All detector findings, ordered by site then detector id."""
    findings = detect_d1(program) + detect_d2(program) + detect_d3(program) + detect_d4(program)
    findings += detect_d5(program, config or {})
    if strengths:
        findings = [PatternFinding(f.detector_id, f.site, f.suspected_class,
                                   strengths.get(f.detector_id, f.strength), f.detail) for f in findings]
    return sorted(findings, key=lambda f: (f.site, f.detector_id))
