"""Canonical MendLang printer: 2-space indent, one statement per line,
minimal parentheses. ``parse(format(p)) == p`` for every well-formed tree."""

from __future__ import annotations

from typing import List

from .nodes import (
    ArrayLit, Assert, AssertEq, AssertSnapshot, Assign, Binary, Block, BoolLit,
    Call, Expr, ExprStmt, For, Function, If, Index, IndexAssign, IntLit, Let,
    Node, NullLit, Program, Return, Stmt, StrLit, Unary, Var, While,
)
from .parser import BINARY_PRECEDENCE, POSTFIX_PRECEDENCE, UNARY_PRECEDENCE

INDENT = "  "


def quote(value: str) -> str:
    out = value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
    return f'"{out}"'


def precedence(e: Expr) -> int:
    if isinstance(e, Binary):
        return BINARY_PRECEDENCE[e.op]
    if isinstance(e, Unary):
        return UNARY_PRECEDENCE
    if isinstance(e, IntLit) and e.value < 0:
        return UNARY_PRECEDENCE
    return POSTFIX_PRECEDENCE


def format_expr(e: Expr) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, StrLit):
        return quote(e.value)
    if isinstance(e, NullLit):
        return "null"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, ArrayLit):
        return "[" + ", ".join(format_expr(x) for x in e.items) + "]"
    if isinstance(e, Call):
        return e.name + "(" + ", ".join(format_expr(x) for x in e.args) + ")"
    if isinstance(e, Index):
        base = format_expr(e.base)
        if precedence(e.base) < POSTFIX_PRECEDENCE:
            base = f"({base})"
        return f"{base}[{format_expr(e.index)}]"
    if isinstance(e, Unary):
        inner = format_expr(e.operand)
        # "-(1)" keeps a unary minus on a literal from re-folding into IntLit(-1)
        if precedence(e.operand) < UNARY_PRECEDENCE or (e.op == "-" and inner[:1].isdigit()):
            inner = f"({inner})"
        return e.op + inner
    if isinstance(e, Binary):
        p = BINARY_PRECEDENCE[e.op]
        left = format_expr(e.left)
        right = format_expr(e.right)
        if precedence(e.left) < p:
            left = f"({left})"
        if precedence(e.right) <= p:
            right = f"({right})"
        return f"{left} {e.op} {right}"
    raise TypeError(f"not an expression: {type(e).__name__}")


def _block_lines(stmts, depth: int) -> List[str]:
    lines: List[str] = []
    for s in stmts:
        lines.extend(_stmt_lines(s, depth))
    return lines


def _stmt_lines(s: Stmt, depth: int) -> List[str]:
    pad = INDENT * depth
    if isinstance(s, Let):
        return [f"{pad}let {s.name} = {format_expr(s.value)};"]
    if isinstance(s, Assign):
        return [f"{pad}{s.name} = {format_expr(s.value)};"]
    if isinstance(s, IndexAssign):
        return [f"{pad}{s.name}[{format_expr(s.index)}] = {format_expr(s.value)};"]
    if isinstance(s, If):
        lines = [f"{pad}if {format_expr(s.cond)} {{"]
        lines += _block_lines(s.then.stmts, depth + 1)
        if s.orelse is not None:
            lines.append(f"{pad}}} else {{")
            lines += _block_lines(s.orelse.stmts, depth + 1)
        lines.append(f"{pad}}}")
        return lines
    if isinstance(s, While):
        return ([f"{pad}while {format_expr(s.cond)} {{"]
                + _block_lines(s.body.stmts, depth + 1) + [f"{pad}}}"])
    if isinstance(s, For):
        head = f"{pad}for {s.var} in {format_expr(s.start)}..{format_expr(s.end)} {{"
        return [head] + _block_lines(s.body.stmts, depth + 1) + [f"{pad}}}"]
    if isinstance(s, Return):
        if s.value is None:
            return [f"{pad}return;"]
        return [f"{pad}return {format_expr(s.value)};"]
    if isinstance(s, ExprStmt):
        return [f"{pad}{format_expr(s.expr)};"]
    if isinstance(s, Assert):
        return [f"{pad}assert {format_expr(s.expr)};"]
    if isinstance(s, AssertEq):
        return [f"{pad}assert_eq({format_expr(s.left)}, {format_expr(s.right)});"]
    if isinstance(s, AssertSnapshot):
        return [f"{pad}assert_snapshot({format_expr(s.expr)}, {quote(s.literal.value)});"]
    raise TypeError(f"not a statement: {type(s).__name__}")


def format_function(fn: Function, depth: int = 0) -> str:
    pad = INDENT * depth
    head = f"{pad}fn {fn.name}({', '.join(fn.params)}) {{"
    return "\n".join([head] + _block_lines(fn.body, depth + 1) + [f"{pad}}}"]) + "\n"


def format_program(program: Program) -> str:
    return "\n".join(format_function(fn) for fn in program.functions)


def format_statements(stmts) -> str:
    lines = _block_lines(stmts, 0)
    return "\n".join(lines) + ("\n" if lines else "")


def format_node(node: Node) -> str:
    """Canonical text of any node; used for edit fragments and diffs."""
    if isinstance(node, Program):
        return format_program(node)
    if isinstance(node, Function):
        return format_function(node)
    if isinstance(node, Block):
        return format_statements(node.stmts)
    if isinstance(node, Stmt):
        return format_statements([node])
    return format_expr(node)
