"""NodePath addressing: resolve, walk, and splice by integer child indices."""

from __future__ import annotations

from typing import Iterator, Optional, Sequence, Tuple

from .nodes import Block, Function, Node, NodePath, Program, Stmt


class PathError(LookupError):
    pass


def resolve(program: Program, path: Sequence[int]) -> Node:
    if not path:
        raise PathError("empty NodePath")
    node: Node = program
    for depth, idx in enumerate(path):
        kids = node.children()
        if idx < 0 or idx >= len(kids):
            raise PathError(f"segment {idx} out of range at depth {depth} of {tuple(path)}")
        node = kids[idx]
    return node


def try_resolve(program: Program, path: Sequence[int]) -> Optional[Node]:
    try:
        return resolve(program, path)
    except PathError:
        return None


def walk(node: Node, prefix: NodePath = ()) -> Iterator[Tuple[NodePath, Node]]:
    """Pre-order walk yielding ``(path, node)``; the root itself is not yielded."""
    for i, child in enumerate(node.children()):
        path = prefix + (i,)
        yield path, child
        yield from walk(child, path)


def walk_function(program: Program, fn_index: int) -> Iterator[Tuple[NodePath, Node]]:
    fn = program.functions[fn_index]
    yield (fn_index,), fn
    yield from walk(fn, (fn_index,))


def is_splice_parent(node: Node) -> bool:
    return isinstance(node, (Program, Function, Block))


def replace_at(program: Program, path: Sequence[int], replacement: Sequence[Node]) -> Program:
    """Return a copy of ``program`` with the node at ``path`` replaced.

    ``replacement`` may hold any number of nodes when the parent is a statement
    list (function body, block) or the function list; otherwise exactly one.
    """
    if not path:
        raise PathError("cannot replace the program root")
    return _replace(program, tuple(path), list(replacement))


def _replace(node: Node, path: NodePath, replacement: list) -> Node:
    kids = node.children()
    idx = path[0]
    if idx < 0 or idx >= len(kids):
        raise PathError(f"segment {idx} out of range")
    if len(path) == 1:
        if len(replacement) != 1 and not is_splice_parent(node):
            raise PathError(f"{type(node).__name__} child needs exactly one replacement node")
        new_kids = kids[:idx] + replacement + kids[idx + 1:]
    else:
        new_kids = list(kids)
        new_kids[idx] = _replace(kids[idx], path[1:], replacement)
    return node.with_children(new_kids)


def enclosing_statement(program: Program, path: Sequence[int]) -> Optional[NodePath]:
    """Longest prefix of ``path`` (itself included) that addresses a statement."""
    best = None
    node: Node = program
    for depth, idx in enumerate(path):
        kids = node.children()
        if idx >= len(kids):
            break
        node = kids[idx]
        if isinstance(node, Stmt):
            best = tuple(path[: depth + 1])
    return best


def is_prefix(prefix: Sequence[int], path: Sequence[int]) -> bool:
    return len(prefix) <= len(path) and tuple(path[: len(prefix)]) == tuple(prefix)


def ancestors(program: Program, path: Sequence[int]) -> list:
    """Nodes from the function down to (excluding) the node at ``path``."""
    out = []
    node: Node = program
    for idx in path[:-1]:
        node = node.children()[idx]
        out.append(node)
    return out


def dotted(path: Sequence[int]) -> str:
    return ".".join(str(i) for i in path)


def undotted(text: str) -> NodePath:
    return tuple(int(p) for p in text.split(".")) if text else ()
