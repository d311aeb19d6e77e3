"""MendLang syntax tree.

All nodes are frozen dataclasses; child lists are tuples so programs are
hashable and compare structurally. Source spans are carried on every node but
excluded from equality, so ``parse(format(p)) == p`` is a structural check.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import ClassVar, Optional, Tuple

NodePath = Tuple[int, ...]


@dataclass(frozen=True)
class Span:
    line: int
    col: int
    end_line: int
    end_col: int


@dataclass(frozen=True)
class Node:
    span: Optional[Span] = field(default=None, compare=False, repr=False, kw_only=True)

    # names of fields holding child nodes, in child-index order
    _child_fields: ClassVar[Tuple[str, ...]] = ()

    def children(self) -> list:
        out = []
        for name in self._child_fields:
            value = getattr(self, name)
            if isinstance(value, tuple):
                out.extend(value)
            elif value is not None:
                out.append(value)
        return out

    def with_children(self, new: list) -> "Node":
        """Rebuild this node around a new child list.

        Nodes with a single tuple-valued child field (blocks, function bodies,
        the program) accept a child list of any length; all other nodes need
        the same arity they already have.
        """
        if len(self._child_fields) == 1 and isinstance(getattr(self, self._child_fields[0]), tuple):
            return _replace(self, **{self._child_fields[0]: tuple(new)})
        updates = {}
        pos = 0
        for name in self._child_fields:
            value = getattr(self, name)
            if isinstance(value, tuple):
                updates[name] = tuple(new[pos:pos + len(value)])
                pos += len(value)
            elif value is not None:
                updates[name] = new[pos]
                pos += 1
        if pos != len(new):
            raise ValueError(f"{type(self).__name__} expects {pos} children, got {len(new)}")
        return _replace(self, **updates)


def _replace(node: Node, **changes) -> Node:
    kwargs = {f.name: getattr(node, f.name) for f in fields(node) if f.init}
    kwargs.update(changes)
    return type(node)(**kwargs)


# ---------------------------------------------------------------- expressions


class Expr(Node):
    pass


@dataclass(frozen=True)
class IntLit(Expr):
    value: int


@dataclass(frozen=True)
class BoolLit(Expr):
    value: bool


@dataclass(frozen=True)
class StrLit(Expr):
    value: str


@dataclass(frozen=True)
class NullLit(Expr):
    pass


@dataclass(frozen=True)
class ArrayLit(Expr):
    items: Tuple[Expr, ...]
    _child_fields = ("items",)


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Index(Expr):
    base: Expr
    index: Expr
    _child_fields = ("base", "index")


@dataclass(frozen=True)
class Call(Expr):
    name: str
    args: Tuple[Expr, ...]
    _child_fields = ("args",)


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr
    _child_fields = ("left", "right")


@dataclass(frozen=True)
class Unary(Expr):
    op: str
    operand: Expr
    _child_fields = ("operand",)


# ----------------------------------------------------------------- statements


class Stmt(Node):
    pass


@dataclass(frozen=True)
class Block(Node):
    stmts: Tuple[Stmt, ...]
    _child_fields = ("stmts",)


@dataclass(frozen=True)
class Let(Stmt):
    name: str
    value: Expr
    _child_fields = ("value",)


@dataclass(frozen=True)
class Assign(Stmt):
    name: str
    value: Expr
    _child_fields = ("value",)


@dataclass(frozen=True)
class IndexAssign(Stmt):
    name: str
    index: Expr
    value: Expr
    _child_fields = ("index", "value")


@dataclass(frozen=True)
class If(Stmt):
    cond: Expr
    then: Block
    orelse: Optional[Block] = None
    _child_fields = ("cond", "then", "orelse")


@dataclass(frozen=True)
class While(Stmt):
    cond: Expr
    body: Block
    _child_fields = ("cond", "body")


@dataclass(frozen=True)
class For(Stmt):
    var: str
    start: Expr
    end: Expr
    body: Block
    _child_fields = ("start", "end", "body")


@dataclass(frozen=True)
class Return(Stmt):
    value: Optional[Expr] = None
    _child_fields = ("value",)


@dataclass(frozen=True)
class ExprStmt(Stmt):
    expr: Expr
    _child_fields = ("expr",)


@dataclass(frozen=True)
class Assert(Stmt):
    expr: Expr
    _child_fields = ("expr",)


@dataclass(frozen=True)
class AssertEq(Stmt):
    left: Expr
    right: Expr
    _child_fields = ("left", "right")


@dataclass(frozen=True)
class AssertSnapshot(Stmt):
    expr: Expr
    literal: StrLit
    _child_fields = ("expr", "literal")


ASSERT_TYPES = (Assert, AssertEq, AssertSnapshot)


# ------------------------------------------------------------------ top level


@dataclass(frozen=True)
class Function(Node):
    name: str
    params: Tuple[str, ...]
    body: Tuple[Stmt, ...]
    _child_fields = ("body",)

    @property
    def is_test(self) -> bool:
        return self.name.startswith("test_") and not self.params


@dataclass(frozen=True)
class Program(Node):
    functions: Tuple[Function, ...]
    _child_fields = ("functions",)

    def function(self, name: str) -> Optional[Function]:
        for fn in self.functions:
            if fn.name == name:
                return fn
        return None

    def function_index(self, name: str) -> int:
        for i, fn in enumerate(self.functions):
            if fn.name == name:
                return i
        raise KeyError(name)

    @property
    def tests(self) -> list:
        return [fn for fn in self.functions if fn.is_test]


COMPARISON_OPS = ("<", "<=", ">", ">=", "==", "!=")
ARITHMETIC_OPS = ("+", "-", "*", "/", "%")
