"""Minimal NodePath edits turning one program into another."""

from __future__ import annotations

from dataclasses import fields
from typing import List, Optional

from ..minilang.formatter import format_node, format_statements
from ..minilang.nodes import Block, Node, NodePath, Program
from .candidate import Edit


def _scalars(node: Node) -> tuple:
    skip = set(node._child_fields) | {"span"}
    return tuple(getattr(node, f.name) for f in fields(node) if f.name not in skip)


def _whole(node: Node, path: NodePath) -> Optional[List[Edit]]:
    if isinstance(node, (Block, Program)):
        return None  # no fragment syntax for these; the parent must absorb the change
    return [Edit(path, format_node(node).rstrip("\n"))]


def _splice(a: list, b: list, path: NodePath) -> Optional[List[Edit]]:
    p = 0
    while p < min(len(a), len(b)) and a[p] == b[p]:
        p += 1
    s = 0
    while s < min(len(a), len(b)) - p and a[len(a) - 1 - s] == b[len(b) - 1 - s]:
        s += 1
    old_mid, new_mid = a[p:len(a) - s], list(b[p:len(b) - s])
    if len(old_mid) == 1:
        return [Edit(path + (p,), format_statements(new_mid).rstrip("\n"))]
    if not old_mid and p > 0:
        return [Edit(path + (p - 1,), format_statements([a[p - 1]] + new_mid).rstrip("\n"))]
    if not old_mid and s > 0:
        return [Edit(path + (p,), format_statements(new_mid + [a[p]]).rstrip("\n"))]
    return None


def _diff(old: Node, new: Node, path: NodePath) -> Optional[List[Edit]]:
    if old == new:
        return []
    if type(old) is not type(new) or _scalars(old) != _scalars(new):
        return _whole(new, path)
    a, b = old.children(), new.children()
    if len(a) != len(b):
        edits = _splice(a, b, path) if path and not isinstance(old, Program) else None
        return edits if edits is not None else _whole(new, path)
    out: List[Edit] = []
    for i, (x, y) in enumerate(zip(a, b)):
        sub = _diff(x, y, path + (i,))
        if sub is None:
            return _whole(new, path)
        out.extend(sub)
    return out


def tree_edits(old: Program, new: Program) -> List[Edit]:
    """Edits that turn ``old`` into ``new`` when applied deepest-first.

    Statement-list changes are expressed on one neighbouring statement where
    possible, otherwise the enclosing statement or function is replaced.
    """
    if len(old.functions) != len(new.functions):
        raise ValueError("programs must have the same functions")
    out: List[Edit] = []
    for i, (x, y) in enumerate(zip(old.functions, new.functions)):
        sub = _diff(x, y, (i,))
        out.extend(sub if sub is not None else _whole(y, (i,)))
    return out
