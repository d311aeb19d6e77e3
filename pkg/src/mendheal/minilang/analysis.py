"""Small static helpers over MendLang trees (call graph, variable uses)."""

from __future__ import annotations

from typing import Iterable, Iterator, Set

from .nodes import Call, Index, Node, Program, Stmt, Var
from .paths import walk


def iter_nodes(node: Node) -> Iterator[Node]:
    yield node
    for c in node.children():
        yield from iter_nodes(c)


def calls_in(node: Node) -> Set[str]:
    return {n.name for n in iter_nodes(node) if isinstance(n, Call)}


def vars_in(node: Node) -> Set[str]:
    return {n.name for n in iter_nodes(node) if isinstance(n, Var)}


def reachable_functions(program: Program, roots: Iterable[str]) -> Set[str]:
    """User-defined functions transitively called from ``roots`` (roots included)."""
    defined = {fn.name: fn for fn in program.functions}
    seen: Set[str] = set()
    todo = [r for r in roots if r in defined]
    while todo:
        name = todo.pop()
        if name in seen:
            continue
        seen.add(name)
        for callee in calls_in(defined[name]):
            if callee in defined and callee not in seen:
                todo.append(callee)
    return seen


def reaches_builtin(program: Program, node: Node, builtin: str) -> bool:
    """Whether evaluating ``node`` may call ``builtin`` directly or transitively."""
    direct = calls_in(node)
    if builtin in direct:
        return True
    for name in reachable_functions(program, direct):
        if builtin in calls_in(program.function(name)):
            return True
    return False


def derefs_of(node: Node, var: str) -> bool:
    """``var[...]`` or ``len(var)`` anywhere inside ``node``."""
    for n in iter_nodes(node):
        if isinstance(n, Index) and isinstance(n.base, Var) and n.base.name == var:
            return True
        if isinstance(n, Call) and n.name == "len" and n.args and isinstance(n.args[0], Var) \
                and n.args[0].name == var:
            return True
    return False


def innermost_statements(program: Program, fn_index: int):
    """``(path, stmt)`` for every statement of a function, pre-order."""
    for path, node in walk(program.functions[fn_index], (fn_index,)):
        if isinstance(node, Stmt):
            yield path, node
