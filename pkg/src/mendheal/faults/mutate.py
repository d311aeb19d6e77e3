"""Shared AST mutation operators.

Seed-to-choice mapping (fixed so campaigns replay identically):

* SwapComparisonOp advances ``< <= > >= == !=`` (cyclic) by ``1 + seed % 5``.
* SwapArithmeticOp advances ``+ - * / %`` (cyclic) by ``1 + seed % 4``.
* IntLiteralDelta adds +1 for even seeds, -1 for odd seeds.
* ReplaceConfigValue doubles the threshold compared against ``config(k)`` for
  even seeds and halves it for odd seeds.
* ReplaceSnapshotLiteral appends ``"~<seed % 97>"`` to the expected literal.
"""

from __future__ import annotations

from typing import Iterable, List, Optional, Sequence

from ..minilang.nodes import (
    ASSERT_TYPES, Binary, Call, Function, If, IntLit, Node, NodePath, NullLit,
    Program, Stmt, StrLit, Var, AssertSnapshot, COMPARISON_OPS, ARITHMETIC_OPS,
)
from ..minilang.parser import wrap64
from ..minilang.paths import replace_at, resolve, walk
from .taxonomy import ForbiddenAssertTarget, InapplicableOperator, MutationOperator

CMP_CYCLE = COMPARISON_OPS  # < <= > >= == != (then back to <)
ARITH_CYCLE = ARITHMETIC_OPS


def cycle_step(cycle: Sequence[str], op: str, steps: int) -> str:
    return cycle[(cycle.index(op) + steps) % len(cycle)]


def contains_assert(node: Node) -> bool:
    if isinstance(node, ASSERT_TYPES):
        return True
    return any(contains_assert(c) for c in node.children() if isinstance(c, Stmt) or hasattr(c, "stmts"))


def within_assert(program: Program, path: Sequence[int]) -> bool:
    """True if ``path`` is an assert statement or lies inside one."""
    node: Node = program
    for idx in path:
        node = node.children()[idx]
        if isinstance(node, ASSERT_TYPES):
            return True
    return False


def is_null_guard(node: Node) -> Optional[str]:
    """Variable name if ``node`` is ``if x != null { ... }`` without else."""
    if not isinstance(node, If) or node.orelse is not None:
        return None
    c = node.cond
    if isinstance(c, Binary) and c.op == "!=":
        if isinstance(c.left, Var) and isinstance(c.right, NullLit):
            return c.left.name
        if isinstance(c.right, Var) and isinstance(c.left, NullLit):
            return c.right.name
    return None


def config_comparison(node: Node):
    """``(key, literal_side, literal_value)`` for ``config("k") OP int`` comparisons."""
    if not isinstance(node, Binary) or node.op not in CMP_CYCLE:
        return None
    for cfg_side, lit_side in (("left", "right"), ("right", "left")):
        cfg = getattr(node, cfg_side)
        lit = getattr(node, lit_side)
        if (isinstance(cfg, Call) and cfg.name == "config" and len(cfg.args) == 1
                and isinstance(cfg.args[0], StrLit) and isinstance(lit, IntLit)):
            return cfg.args[0].value, lit_side, lit.value
    return None


def _applicable(op: MutationOperator, node: Node) -> bool:
    if op is MutationOperator.SwapComparisonOp:
        return isinstance(node, Binary) and node.op in CMP_CYCLE
    if op is MutationOperator.SwapArithmeticOp:
        return isinstance(node, Binary) and node.op in ARITH_CYCLE
    if op is MutationOperator.IntLiteralDelta:
        return isinstance(node, IntLit)
    if op in (MutationOperator.DeleteStmt, MutationOperator.DuplicateStmt):
        return isinstance(node, Stmt)
    if op is MutationOperator.RemoveNullGuard:
        return is_null_guard(node) is not None
    if op is MutationOperator.ReplaceSnapshotLiteral:
        return isinstance(node, AssertSnapshot)
    if op is MutationOperator.ReplaceConfigValue:
        return config_comparison(node) is not None
    return False


def operator_sites(program: Program, op: MutationOperator, fn_indices: Optional[Iterable[int]] = None,
                   forbid_asserts: bool = True) -> List[NodePath]:
    """Source-order paths where ``op`` applies, optionally limited to some functions."""
    indices = range(len(program.functions)) if fn_indices is None else fn_indices
    out = []
    for fi in indices:
        fn = program.functions[fi]
        for path, node in walk(fn, (fi,)):
            if not _applicable(op, node):
                continue
            if forbid_asserts and (within_assert(program, path) or
                                   (isinstance(node, Stmt) and contains_assert(node))):
                continue
            out.append(path)
    return out


def mutate(program: Program, op: MutationOperator, site: Sequence[int], seed: int,
           forbid_asserts: bool = True) -> Program:
    """Apply one mutation operator at ``site``; the result always parses."""
    op = MutationOperator(op)
    try:
        node = resolve(program, site)
    except LookupError as exc:
        raise InapplicableOperator(str(exc)) from None
    if not _applicable(op, node):
        raise InapplicableOperator(f"{op.value} does not apply to {type(node).__name__}")
    if forbid_asserts and (within_assert(program, site) or (isinstance(node, Stmt) and contains_assert(node))):
        raise ForbiddenAssertTarget(f"{op.value} may not touch assertions")

    if op is MutationOperator.SwapComparisonOp:
        new = [Binary(cycle_step(CMP_CYCLE, node.op, 1 + seed % 5), node.left, node.right)]
    elif op is MutationOperator.SwapArithmeticOp:
        new = [Binary(cycle_step(ARITH_CYCLE, node.op, 1 + seed % 4), node.left, node.right)]
    elif op is MutationOperator.IntLiteralDelta:
        new = [IntLit(wrap64(node.value + (1 if seed % 2 == 0 else -1)))]
    elif op is MutationOperator.DeleteStmt:
        new = []
    elif op is MutationOperator.DuplicateStmt:
        new = [node, node]
    elif op is MutationOperator.RemoveNullGuard:
        new = list(node.then.stmts)
    elif op is MutationOperator.ReplaceSnapshotLiteral:
        new = [AssertSnapshot(node.expr, StrLit(node.literal.value + f"~{seed % 97}"))]
    else:  # ReplaceConfigValue
        _key, lit_side, value = config_comparison(node)
        changed = value * 2 if seed % 2 == 0 else value // 2
        if changed == value:
            changed = value + 1
        lit = IntLit(wrap64(changed))
        new = [Binary(node.op, lit, node.right) if lit_side == "left" else Binary(node.op, node.left, lit)]
    return replace_at(program, site, new)


def region_functions(program: Program, region: Sequence[int]) -> List[int]:
    return [region[0]] if region else []


def enumerate_mutations(program: Program, fn_indices: Iterable[int], ops=None) -> List[tuple]:
    """Every ``(op, site, seed)`` triple yielding a distinct mutation in the given functions.

    Non-test functions only; asserts are never targeted.
    """
    from .taxonomy import REPAIR_OPERATORS

    ops = REPAIR_OPERATORS if ops is None else ops
    out = []
    for fi in fn_indices:
        if isinstance(program.functions[fi], Function) and program.functions[fi].is_test:
            continue
        for op in ops:
            for site in operator_sites(program, op, [fi]):
                if op is MutationOperator.SwapComparisonOp:
                    seeds = range(5)
                elif op is MutationOperator.SwapArithmeticOp:
                    seeds = range(4)
                elif op in (MutationOperator.IntLiteralDelta, MutationOperator.ReplaceConfigValue):
                    seeds = range(2)
                else:
                    seeds = range(1)
                for s in seeds:
                    out.append((op, site, s))
    return out
