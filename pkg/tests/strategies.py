"""Hypothesis strategies for random MendLang trees."""

from hypothesis import strategies as st

from mendheal.minilang.nodes import (
    ArrayLit, Assert, AssertEq, AssertSnapshot, Assign, Binary, Block, BoolLit, Call, ExprStmt, For, Function,
    If, Index, IndexAssign, IntLit, Let, NullLit, Program, Return, StrLit, Unary, Var, While,
)
from mendheal.minilang.parser import KEYWORDS

OPS = ["+", "-", "*", "/", "%", "==", "!=", "<", "<=", ">", ">=", "&&", "||"]
names = st.from_regex(r"[a-z][a-z0-9_]{0,5}", fullmatch=True).filter(
    lambda s: s not in KEYWORDS and s not in ("len", "str", "print", "jitter", "config"))
ints = st.integers(min_value=-(2 ** 63), max_value=2 ** 63 - 1)
strings = st.text(alphabet=st.characters(min_codepoint=32, max_codepoint=126) | st.sampled_from("\n\t"),
                  max_size=8)

leaves = st.one_of(ints.map(IntLit), st.booleans().map(BoolLit), strings.map(StrLit), st.just(NullLit()),
                   names.map(Var))


def _extend(children):
    return st.one_of(
        st.tuples(st.sampled_from(OPS), children, children).map(lambda t: Binary(*t)),
        st.tuples(st.sampled_from(["-", "!"]), children).map(lambda t: Unary(*t)),
        st.lists(children, max_size=3).map(lambda xs: ArrayLit(tuple(xs))),
        st.tuples(children, children).map(lambda t: Index(*t)),
        st.tuples(names, st.lists(children, max_size=2)).map(lambda t: Call(t[0], tuple(t[1]))),
    )


exprs = st.recursive(leaves, _extend, max_leaves=6)


def _stmts(depth):
    simple = st.one_of(
        st.tuples(names, exprs).map(lambda t: Let(*t)),
        st.tuples(names, exprs).map(lambda t: Assign(*t)),
        st.tuples(names, exprs, exprs).map(lambda t: IndexAssign(*t)),
        st.one_of(st.none(), exprs).map(Return),
        exprs.map(ExprStmt),
        exprs.map(Assert),
        st.tuples(exprs, exprs).map(lambda t: AssertEq(*t)),
        st.tuples(exprs, strings.map(StrLit)).map(lambda t: AssertSnapshot(*t)),
    )
    if depth == 0:
        return simple
    block = st.lists(_stmts(depth - 1), max_size=3).map(lambda xs: Block(tuple(xs)))
    return st.one_of(
        simple,
        st.tuples(exprs, block, st.one_of(st.none(), block)).map(lambda t: If(*t)),
        st.tuples(exprs, block).map(lambda t: While(*t)),
        st.tuples(names, exprs, exprs, block).map(lambda t: For(*t)),
    )


statements = _stmts(2)

functions = st.tuples(names, st.lists(names, max_size=3, unique=True), st.lists(statements, max_size=4)).map(
    lambda t: Function(t[0], tuple(t[1]), tuple(t[2])))

programs = st.lists(functions, max_size=4, unique_by=lambda f: f.name).map(lambda fs: Program(tuple(fs)))
