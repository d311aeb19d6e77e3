"""Mutation-based spectrum localization.

Each comparison and range end in code exercised by a failing test is
perturbed (other comparison operators; range end +/-1). A site scores
``fixed/F * (1 - broken/P)`` for its best perturbation, where ``fixed``
counts failing tests that then pass and ``broken`` counts passing tests that
then fail.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

from ..faults.inject import adjust_range_end, bounded_env
from ..faults.mutate import CMP_CYCLE
from ..faults.taxonomy import BugClass
from ..minilang.formatter import format_expr
from ..minilang.interpreter import RuntimeEnv, TestReport, run_tests
from ..minilang.nodes import Binary, For, NodePath, Program, While
from ..minilang.paths import replace_at, walk


@dataclass(frozen=True)
class SpectrumScore:
    site: NodePath
    score: float
    suspected_class: BugClass
    detail: str


def _points(program: Program, functions):
    for fi, fn in enumerate(program.functions):
        if fn.is_test or fn.name not in functions:
            continue
        heads = set()
        for path, node in walk(fn, (fi,)):
            if isinstance(node, While) and isinstance(node.cond, Binary) and node.cond.op in CMP_CYCLE:
                heads.add(path + (0,))
                yield path + (0,), node.cond, True
            elif isinstance(node, For):
                heads.add(path + (1,))
                yield path + (1,), node.end, True
            elif isinstance(node, Binary) and node.op in CMP_CYCLE and path not in heads:
                # a loop condition was already scored as a loop head
                yield path, node, False


def _alternatives(node):
    if isinstance(node, Binary) and node.op in CMP_CYCLE:
        for op in CMP_CYCLE:
            if op != node.op:
                yield Binary(op, node.left, node.right)
    else:
        for delta in (-1, 1):
            yield adjust_range_end(node, delta)


def spectrum_localize(program: Program, report: TestReport, env: RuntimeEnv) -> List[SpectrumScore]:
    failing = [r.test_name for r in report.failing]
    passing = [r.test_name for r in report.results if r.status == "pass"]
    if not failing:
        return []
    covered = set()
    for r in report.failing:
        covered.update(r.covered)
    run_env = bounded_env(env, report)
    out = []
    for path, node, loop_head in _points(program, covered):
        best, best_detail = 0.0, ""
        for alt in _alternatives(node):
            mutant = replace_at(program, path, [alt])
            fixed = sum(1 for r in run_tests(mutant, run_env, only=failing).results if r.status == "pass")
            if fixed == 0:
                continue
            broken = 0
            if passing:
                broken = sum(1 for r in run_tests(mutant, run_env, only=passing).results if r.status != "pass")
            score = (fixed / len(failing)) * (1.0 - broken / len(passing) if passing else 1.0)
            if score > best:
                best, best_detail = score, f"spectrum: {format_expr(alt)} fixes {fixed}/{len(failing)}, breaks {broken}/{len(passing)}"
        if best > 0.0:
            cls = BugClass.OffByOne if loop_head else BugClass.WrongOperator
            out.append(SpectrumScore(path, best, cls, best_detail))
    return out
