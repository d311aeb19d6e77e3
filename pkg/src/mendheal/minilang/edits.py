"""Text-fragment edits addressed by NodePath."""

from __future__ import annotations

from typing import Sequence

from .formatter import format_node
from .nodes import Function, Node, Program, Stmt
from .parser import parse_expr, parse_function, parse_statements
from .paths import replace_at, resolve


def fragment_of(program: Program, path: Sequence[int]) -> str:
    return format_node(resolve(program, path)).rstrip("\n")


def parse_fragment_like(target: Node, text: str) -> list:
    """Parse ``text`` as whatever kind of node ``target`` is."""
    if isinstance(target, Function):
        return [parse_function(text)]
    if isinstance(target, Stmt):
        return parse_statements(text)
    return [parse_expr(text)]


def apply_fragment(program: Program, path: Sequence[int], text: str) -> Program:
    """Replace the node at ``path`` with the parsed fragment ``text``.

    Statement sites accept zero or more statements; expression and function
    sites accept exactly one node. Raises ParseError on malformed text.
    """
    target = resolve(program, path)
    return replace_at(program, path, parse_fragment_like(target, text))
