"""Recursive-descent parser for MendLang source (``.mnd``)."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Optional

from .nodes import (
    ArrayLit, Assert, AssertEq, AssertSnapshot, Assign, Binary, Block, BoolLit,
    Call, Expr, ExprStmt, For, Function, If, Index, IndexAssign, IntLit, Let,
    NullLit, Program, Return, Span, Stmt, StrLit, Unary, Var, While,
)

KEYWORDS = {
    "fn", "let", "if", "else", "while", "for", "in", "return", "assert",
    "assert_eq", "assert_snapshot", "true", "false", "null",
}

INT_MIN = -(1 << 63)
_MASK = (1 << 64) - 1


def wrap64(value: int) -> int:
    value &= _MASK
    return value - (1 << 64) if value >> 63 else value


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int, expected: Optional[str] = None):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col
        self.expected = expected


class DuplicateFunction(ParseError):
    pass


@dataclass
class Token:
    kind: str  # INT, STR, IDENT, KW, OP, EOF
    text: str
    value: object
    line: int
    col: int
    end_line: int
    end_col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*)
  | (?P<int>[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<str>"(?:[^"\\\n]|\\.)*")
  | (?P<op>\.\.|==|!=|<=|>=|&&|\|\||[-+*/%<>=!(){}\[\],;])
    """,
    re.VERBOSE,
)

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


def _unescape(body: str, line: int, col: int) -> str:
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            nxt = body[i + 1]
            if nxt not in _ESCAPES:
                raise ParseError(f"unknown escape \\{nxt}", line, col + i + 1)
            out.append(_ESCAPES[nxt])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def tokenize(source: str) -> List[Token]:
    tokens = []
    pos = 0
    line, col = 1, 1
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        if not m:
            raise ParseError(f"unexpected character {source[pos]!r}", line, col)
        text = m.group()
        kind = m.lastgroup
        start_line, start_col = line, col
        newlines = text.count("\n")
        if newlines:
            line += newlines
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
        if kind in ("ws", "comment"):
            continue
        if kind == "int":
            tok = Token("INT", text, int(text), start_line, start_col, line, col)
        elif kind == "ident":
            tok = Token("KW" if text in KEYWORDS else "IDENT", text, text, start_line, start_col, line, col)
        elif kind == "str":
            tok = Token("STR", text, _unescape(text[1:-1], start_line, start_col), start_line, start_col, line, col)
        else:
            tok = Token("OP", text, text, start_line, start_col, line, col)
        tokens.append(tok)
    tokens.append(Token("EOF", "<eof>", None, line, col, line, col))
    return tokens


# binary operator precedence; higher binds tighter
BINARY_PRECEDENCE = {
    "||": 1,
    "&&": 2,
    "==": 3, "!=": 3,
    "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5,
    "*": 6, "/": 6, "%": 6,
}
UNARY_PRECEDENCE = 7
POSTFIX_PRECEDENCE = 8


class _Parser:
    def __init__(self, tokens: List[Token]):
        self.toks = tokens
        self.i = 0

    # -- token helpers

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("OP", "KW") and t.text == text

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            t = self.tok
            raise ParseError(f"expected {text!r}, found {t.text!r}", t.line, t.col, expected=text)
        return self.advance()

    def expect_ident(self) -> Token:
        t = self.tok
        if t.kind != "IDENT":
            raise ParseError(f"expected identifier, found {t.text!r}", t.line, t.col, expected="identifier")
        return self.advance()

    def span_from(self, start: Token) -> Span:
        prev = self.toks[self.i - 1]
        return Span(start.line, start.col, prev.end_line, prev.end_col)

    # -- grammar

    def program(self) -> Program:
        start = self.tok
        fns = []
        seen = set()
        while self.tok.kind != "EOF":
            fn = self.function()
            if fn.name in seen:
                raise DuplicateFunction(f"duplicate function {fn.name!r}", fn.span.line, fn.span.col)
            seen.add(fn.name)
            fns.append(fn)
        return Program(tuple(fns), span=Span(start.line, start.col, self.tok.line, self.tok.col))

    def function(self) -> Function:
        start = self.expect("fn")
        name = self.expect_ident().text
        self.expect("(")
        params = []
        if not self.at(")"):
            params.append(self.expect_ident().text)
            while self.at(","):
                self.advance()
                params.append(self.expect_ident().text)
        self.expect(")")
        body = self.block().stmts
        return Function(name, tuple(params), body, span=self.span_from(start))

    def block(self) -> Block:
        start = self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.tok.kind == "EOF":
                raise ParseError("unterminated block", self.tok.line, self.tok.col, expected="}")
            stmts.append(self.statement())
        self.expect("}")
        return Block(tuple(stmts), span=self.span_from(start))

    def statement(self) -> Stmt:
        start = self.tok
        if self.at("let"):
            self.advance()
            name = self.expect_ident().text
            self.expect("=")
            value = self.expr()
            self.expect(";")
            return Let(name, value, span=self.span_from(start))
        if self.at("if"):
            self.advance()
            cond = self.expr()
            then = self.block()
            orelse = None
            if self.at("else"):
                self.advance()
                orelse = self.block()
            return If(cond, then, orelse, span=self.span_from(start))
        if self.at("while"):
            self.advance()
            cond = self.expr()
            body = self.block()
            return While(cond, body, span=self.span_from(start))
        if self.at("for"):
            self.advance()
            var = self.expect_ident().text
            self.expect("in")
            lo = self.expr()
            self.expect("..")
            hi = self.expr()
            body = self.block()
            return For(var, lo, hi, body, span=self.span_from(start))
        if self.at("return"):
            self.advance()
            value = None
            if not self.at(";"):
                value = self.expr()
            self.expect(";")
            return Return(value, span=self.span_from(start))
        if self.at("assert"):
            self.advance()
            e = self.expr()
            self.expect(";")
            return Assert(e, span=self.span_from(start))
        if self.at("assert_eq"):
            self.advance()
            self.expect("(")
            a = self.expr()
            self.expect(",")
            b = self.expr()
            self.expect(")")
            self.expect(";")
            return AssertEq(a, b, span=self.span_from(start))
        if self.at("assert_snapshot"):
            self.advance()
            self.expect("(")
            e = self.expr()
            self.expect(",")
            lit_tok = self.tok
            if lit_tok.kind != "STR":
                raise ParseError("assert_snapshot expects a string literal", lit_tok.line, lit_tok.col,
                                 expected="string literal")
            self.advance()
            lit = StrLit(lit_tok.value, span=self.span_from(lit_tok))
            self.expect(")")
            self.expect(";")
            return AssertSnapshot(e, lit, span=self.span_from(start))

        e = self.expr()
        if self.at("="):
            eq = self.advance()
            value = self.expr()
            self.expect(";")
            if isinstance(e, Var):
                return Assign(e.name, value, span=self.span_from(start))
            if isinstance(e, Index) and isinstance(e.base, Var):
                return IndexAssign(e.base.name, e.index, value, span=self.span_from(start))
            raise ParseError("invalid assignment target", eq.line, eq.col)
        self.expect(";")
        return ExprStmt(e, span=self.span_from(start))

    def expr(self, min_prec: int = 1) -> Expr:
        start = self.tok
        left = self.unary()
        while True:
            t = self.tok
            prec = BINARY_PRECEDENCE.get(t.text) if t.kind == "OP" else None
            if prec is None or prec < min_prec:
                return left
            self.advance()
            right = self.expr(prec + 1)
            left = Binary(t.text, left, right, span=self.span_from(start))

    def unary(self) -> Expr:
        start = self.tok
        if self.at("-"):
            self.advance()
            if self.tok.kind == "INT":
                # negative literals fold at parse time so "-1" is one node
                lit = self.advance()
                return self.postfix(IntLit(wrap64(-lit.value), span=self.span_from(start)), start)
            return Unary("-", self.unary(), span=self.span_from(start))
        if self.at("!"):
            self.advance()
            return Unary("!", self.unary(), span=self.span_from(start))
        return self.postfix(self.primary(), start)

    def postfix(self, e: Expr, start: Token) -> Expr:
        while self.at("["):
            self.advance()
            idx = self.expr()
            self.expect("]")
            e = Index(e, idx, span=self.span_from(start))
        return e

    def primary(self) -> Expr:
        t = self.tok
        if t.kind == "INT":
            self.advance()
            return IntLit(wrap64(t.value), span=self.span_from(t))
        if t.kind == "STR":
            self.advance()
            return StrLit(t.value, span=self.span_from(t))
        if self.at("true") or self.at("false"):
            self.advance()
            return BoolLit(t.text == "true", span=self.span_from(t))
        if self.at("null"):
            self.advance()
            return NullLit(span=self.span_from(t))
        if self.at("["):
            self.advance()
            items = []
            if not self.at("]"):
                items.append(self.expr())
                while self.at(","):
                    self.advance()
                    items.append(self.expr())
            self.expect("]")
            return ArrayLit(tuple(items), span=self.span_from(t))
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "IDENT":
            self.advance()
            if self.at("("):
                self.advance()
                args = []
                if not self.at(")"):
                    args.append(self.expr())
                    while self.at(","):
                        self.advance()
                        args.append(self.expr())
                self.expect(")")
                return Call(t.text, tuple(args), span=self.span_from(t))
            return Var(t.text, span=self.span_from(t))
        raise ParseError(f"expected expression, found {t.text!r}", t.line, t.col, expected="expression")


def parse(source: str) -> Program:
    return _Parser(tokenize(source)).program()


def _parse_fragment(source: str, rule: str):
    p = _Parser(tokenize(source))
    if rule == "stmts":
        out = []
        while p.tok.kind != "EOF":
            out.append(p.statement())
        return out
    result = getattr(p, rule)()
    if p.tok.kind != "EOF":
        raise ParseError(f"trailing input {p.tok.text!r}", p.tok.line, p.tok.col, expected="<eof>")
    return result


def parse_expr(source: str) -> Expr:
    return _parse_fragment(source, "expr")


def parse_statements(source: str) -> List[Stmt]:
    return _parse_fragment(source, "stmts")


def parse_function(source: str) -> Function:
    return _parse_fragment(source, "function")
