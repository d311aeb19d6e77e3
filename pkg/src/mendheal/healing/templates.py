"""Class-specific repair templates."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, List, Mapping, Optional, Sequence

from ..diagnosis.rank import FaultHypothesis
from ..faults.inject import BOUNDARY_FLIP, adjust_range_end
from ..faults.mutate import CMP_CYCLE, config_comparison, cycle_step, within_assert
from ..faults.taxonomy import BugClass
from ..minilang.analysis import iter_nodes
from ..minilang.formatter import format_expr, format_node
from ..minilang.interpreter import RuntimeEnv, execute, run_tests
from ..minilang.nodes import (
    AssertEq, Binary, Call, For, Index, IndexAssign, Node, NodePath, Program, Stmt, StrLit, Var, While, Block,
)
from ..minilang.paths import enclosing_statement, resolve, try_resolve, walk
from .candidate import ConfigChange, Edit, Origin, PatchCandidate, TestPolicyChange

TIGHTEN = {"<=": "<", ">=": ">"}
LOOSEN = {"<": "<=", ">": ">="}
CONFIG_CAP = 2 ** 20


class NoTemplate(Exception):
    pass


@dataclass
class WorkloadCall:
    entry: str
    args: list
    jitter_seed: int = 0

    def to_record(self) -> dict:
        return {"entry": self.entry, "args": self.args, "jitter_seed": self.jitter_seed}


@dataclass
class RepairContext:
    """What templates may consult beyond the hypothesis and program."""

    env: RuntimeEnv = field(default_factory=RuntimeEnv)
    workload: Sequence[WorkloadCall] = ()
    flaky_rerun_count: int = 3
    failing: Mapping[str, Any] = field(default_factory=dict)  # test name -> TestResult


def _in_test(program: Program, path: NodePath) -> bool:
    return program.functions[path[0]].is_test


def _candidate(hyp: FaultHypothesis, edits, rationale: str, cls: BugClass, **extra) -> PatchCandidate:
    return PatchCandidate(0, tuple(edits), Origin.template, rationale, cls, confidence=hyp.confidence, **extra)


# ----------------------------------------------------------------- OffByOne


def _loops_for(program: Program, site: NodePath) -> List[NodePath]:
    """Loop statements relevant to ``site``: the one it heads, then enclosing ones innermost first."""
    out = []
    node = try_resolve(program, site)
    parent = try_resolve(program, site[:-1]) if len(site) > 1 else None
    if isinstance(parent, While) and site[-1] == 0 or isinstance(parent, For) and site[-1] == 1:
        out.append(site[:-1])
    for k in range(len(site) - 1, 0, -1):
        anc = site[:k]
        n = resolve(program, anc)
        if isinstance(n, (While, For)) and anc not in out:
            out.append(anc)
    if isinstance(node, (While, For)) and site not in out:
        out.insert(0, site)
    return out


def off_by_one(hyp: FaultHypothesis, program: Program, ctx: RepairContext) -> List[PatchCandidate]:
    tighten, loosen = [], []
    for loop_path in _loops_for(program, hyp.site):
        if _in_test(program, loop_path):
            continue
        loop = resolve(program, loop_path)
        if isinstance(loop, While):
            c = loop.cond
            if isinstance(c, Binary) and c.op in BOUNDARY_FLIP:
                new = format_expr(Binary(BOUNDARY_FLIP[c.op], c.left, c.right))
                group = tighten if c.op in TIGHTEN else loosen
                group.append(_candidate(hyp, [Edit(loop_path + (0,), new)],
                                        f"loop bound {c.op} -> {BOUNDARY_FLIP[c.op]}", BugClass.OffByOne))
        else:
            for delta, group in ((-1, tighten), (1, loosen)):
                new = format_expr(adjust_range_end(loop.end, delta))
                group.append(_candidate(hyp, [Edit(loop_path + (1,), new)],
                                        f"range end {delta:+d}", BugClass.OffByOne))
    if not tighten and not loosen:
        raise NoTemplate("no loop at or around the site")
    return tighten + loosen


# --------------------------------------------------------- MissingNullCheck


def _deref_vars(stmt: Node) -> List[str]:
    out: List[str] = []
    nodes = list(iter_nodes(stmt))
    if isinstance(stmt, IndexAssign):
        out.append(stmt.name)
    for n in nodes:
        name = None
        if isinstance(n, Index) and isinstance(n.base, Var):
            name = n.base.name
        elif isinstance(n, Call) and n.name == "len" and n.args and isinstance(n.args[0], Var):
            name = n.args[0].name
        if name and name not in out:
            out.append(name)
    return out


def missing_null_check(hyp: FaultHypothesis, program: Program, ctx: RepairContext) -> List[PatchCandidate]:
    stmt_path = enclosing_statement(program, hyp.site)
    if stmt_path is None or _in_test(program, stmt_path):
        raise NoTemplate("null guard needs a statement outside tests")
    stmt = resolve(program, stmt_path)
    names = _deref_vars(stmt)
    if not names:
        raise NoTemplate("statement dereferences no variable")
    body = format_node(stmt).rstrip("\n")
    out = []
    for name in names:
        guarded = "if " + name + " != null {\n" + "\n".join("  " + ln for ln in body.splitlines()) + "\n}"
        out.append(_candidate(hyp, [Edit(stmt_path, guarded)], f"guard {name} against null",
                              BugClass.MissingNullCheck))
    return out


# ------------------------------------------------------------ WrongOperator


def _comparison_at(program: Program, site: NodePath) -> Optional[NodePath]:
    node = resolve(program, site)
    if isinstance(node, Binary) and node.op in CMP_CYCLE:
        return site
    if isinstance(node, Stmt):
        # the statement's own expressions, not nested blocks
        for path, sub in walk(node, site):
            if isinstance(sub, Block):
                continue
            if any(isinstance(a, Block) for a in _ancestors_between(program, site, path)):
                continue
            if isinstance(sub, Binary) and sub.op in CMP_CYCLE:
                return path
    return None


def _ancestors_between(program: Program, top: NodePath, path: NodePath):
    return [resolve(program, path[:k]) for k in range(len(top) + 1, len(path))]


def wrong_operator(hyp: FaultHypothesis, program: Program, ctx: RepairContext) -> List[PatchCandidate]:
    path = _comparison_at(program, hyp.site)
    if path is None or _in_test(program, path) or within_assert(program, path):
        raise NoTemplate("no repairable comparison at site")
    node = resolve(program, path)
    if config_comparison(node) is not None:
        raise NoTemplate("config comparisons are repaired through the config table")
    out = []
    for k in range(1, len(CMP_CYCLE)):
        op = cycle_step(CMP_CYCLE, node.op, -k)
        out.append(_candidate(hyp, [Edit(path, format_expr(Binary(op, node.left, node.right)))],
                              f"operator {node.op} -> {op}", BugClass.WrongOperator))
    return out


# --------------------------------------------------------- BrittleAssertion


def brittle_assertion(hyp: FaultHypothesis, program: Program, ctx: RepairContext) -> List[PatchCandidate]:
    stmt_path = enclosing_statement(program, hyp.site)
    stmt = resolve(program, stmt_path) if stmt_path else None
    if not isinstance(stmt, AssertEq) or not _in_test(program, stmt_path):
        raise NoTemplate("brittle-assertion template needs an assert_eq in a test")
    test = program.functions[stmt_path[0]].name
    result = ctx.failing.get(test)
    actual = None if result is None else result.detail.get("actual")
    try:
        value = int(actual)
    except (TypeError, ValueError):
        raise NoTemplate("no integer actual value recorded for the assertion") from None
    subject = format_expr(stmt.left)
    text = f"assert {subject} >= {value - 1} && {subject} <= {value + 1};"
    return [_candidate(hyp, [Edit(stmt_path, text)], f"widen exact check to {value}±1", BugClass.BrittleAssertion)]


# -------------------------------------------------------- Misconfiguration


def _config_keys(program: Program, site: NodePath, ctx: RepairContext) -> List[str]:
    keys: List[str] = []
    stmt_path = enclosing_statement(program, site) or site
    for n in iter_nodes(resolve(program, stmt_path)):
        if isinstance(n, Call) and n.name == "config" and n.args and isinstance(n.args[0], StrLit):
            if n.args[0].value not in keys:
                keys.append(n.args[0].value)
    return keys


def workload_passes(program: Program, env: RuntimeEnv, workload: Sequence[WorkloadCall]) -> bool:
    import copy

    for call in workload:
        try:
            outcome = execute(program, call.entry, copy.deepcopy(call.args), env.with_seed(call.jitter_seed))
        except LookupError:
            return False
        if not outcome.ok:
            return False
    return True


def smallest_passing_value(program: Program, key: str, ctx: RepairContext) -> Optional[int]:
    """Doubling search from 1 for a value that runs the workload and suite cleanly."""
    value = 1
    while value <= CONFIG_CAP:
        env = ctx.env.with_config({**ctx.env.config, key: value})
        if workload_passes(program, env, ctx.workload) and run_tests(program, env).passed:
            return value
        value *= 2
    return None


def misconfiguration(hyp: FaultHypothesis, program: Program, ctx: RepairContext) -> List[PatchCandidate]:
    keys = _config_keys(program, hyp.site, ctx)
    if not keys:
        raise NoTemplate("no config key at site")
    out = []
    for key in keys:
        value = smallest_passing_value(program, key, ctx)
        if value is not None:
            out.append(_candidate(hyp, [], f"set {key} = {value}", BugClass.Misconfiguration,
                                  config_change=ConfigChange(key, value)))
    if not out:
        raise NoTemplate("no config value up to the cap passes the workload")
    return out


# ------------------------------------------------------------------- Flaky


def flaky(hyp: FaultHypothesis, program: Program, ctx: RepairContext) -> List[PatchCandidate]:
    if not _in_test(program, hyp.site):
        raise NoTemplate("quarantine applies to tests only")
    test = program.functions[hyp.site[0]].name
    return [_candidate(hyp, [], f"quarantine {test} with {ctx.flaky_rerun_count} reruns",
                       BugClass.FlakySeedDependence,
                       test_policy_change=TestPolicyChange(test, ctx.flaky_rerun_count))]


TEMPLATES = {
    BugClass.OffByOne: off_by_one,
    BugClass.MissingNullCheck: missing_null_check,
    BugClass.WrongOperator: wrong_operator,
    BugClass.BrittleAssertion: brittle_assertion,
    BugClass.Misconfiguration: misconfiguration,
    BugClass.FlakySeedDependence: flaky,
}


def template_repair(hypothesis: FaultHypothesis, program: Program,
                    ctx: Optional[RepairContext] = None) -> List[PatchCandidate]:
    """Ranked template candidates for the hypothesis; NoTemplate if the class has none here."""
    fn = TEMPLATES.get(hypothesis.suspected_class)
    if fn is None:
        raise NoTemplate(f"no template for {hypothesis.suspected_class.value}")
    return fn(hypothesis, program, ctx or RepairContext())
