"""Deterministic tree-walking interpreter and test runner for MendLang."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

from ..fnv import fnv1a64
from ..rng import SplitMix64, derive_seed
from .nodes import (
    ArrayLit, Assert, AssertEq, AssertSnapshot, Assign, Binary, BoolLit, Call,
    ExprStmt, For, Function, If, Index, IndexAssign, IntLit, Let, NodePath,
    NullLit, Program, Return, StrLit, Unary, Var, While,
)
from .parser import wrap64

DEFAULT_STEP_LIMIT = 1_000_000
DEFAULT_CALL_DEPTH = 200
JITTER_RANGE = 1000

ERROR_CODES = (
    "E_NULL_DEREF", "E_INDEX_OOB", "E_DIV_ZERO", "E_ASSERT_FAIL",
    "E_SNAPSHOT_MISMATCH", "E_TYPE", "E_UNDEFINED", "E_STEP_LIMIT",
)
ASSERTION_CODES = ("E_ASSERT_FAIL", "E_SNAPSHOT_MISMATCH")
BUILTINS = ("len", "str", "print", "jitter", "config")

Frame = Tuple[str, NodePath]


class UnknownEntry(LookupError):
    pass


class MendError(Exception):
    """A MendLang runtime error; converted into a RuntimeError outcome."""

    def __init__(self, code: str, message: str, detail: Optional[dict] = None):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message
        self.detail = detail or {}


@dataclass(frozen=True)
class RuntimeEnv:
    step_limit: int = DEFAULT_STEP_LIMIT
    config: Mapping[str, Any] = field(default_factory=dict)
    jitter_seed: int = 0
    call_depth_limit: int = DEFAULT_CALL_DEPTH

    def with_seed(self, seed: int) -> "RuntimeEnv":
        return RuntimeEnv(self.step_limit, self.config, seed, self.call_depth_limit)

    def with_step_limit(self, limit: int) -> "RuntimeEnv":
        return RuntimeEnv(limit, self.config, self.jitter_seed, self.call_depth_limit)

    def with_config(self, config: Mapping[str, Any]) -> "RuntimeEnv":
        return RuntimeEnv(self.step_limit, dict(config), self.jitter_seed, self.call_depth_limit)


@dataclass(frozen=True)
class LogRecord:
    level: str  # "info" | "error"
    error_code: Optional[str]
    function: str
    statement_path: NodePath
    message: str


@dataclass(frozen=True)
class RuntimeErrorStatus:
    code: str
    trace: Tuple[Frame, ...]
    message: str = ""
    detail: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Ok:
    value: Any


@dataclass(frozen=True)
class ExecutionOutcome:
    status: Any  # Ok | RuntimeErrorStatus
    logs: Tuple[LogRecord, ...]
    step_count: int

    @property
    def ok(self) -> bool:
        return isinstance(self.status, Ok)


# ---------------------------------------------------------------- value model


def values_equal(a, b) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, list):
        return len(a) == len(b) and all(values_equal(x, y) for x, y in zip(a, b))
    return a == b


def render(v) -> str:
    """The ``str()`` builtin."""
    if v is None:
        return "null"
    if v is True:
        return "true"
    if v is False:
        return "false"
    if isinstance(v, str):
        return v
    if isinstance(v, int):
        return str(v)
    if isinstance(v, list):
        parts = []
        for x in v:
            parts.append('"' + x + '"' if isinstance(x, str) else render(x))
        return "[" + ", ".join(parts) + "]"
    raise TypeError(v)


def type_name(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "bool"
    if isinstance(v, int):
        return "int"
    if isinstance(v, str):
        return "str"
    return "array"


def _is_int(v) -> bool:
    return type(v) is int


class _Return:
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value


class Interpreter:
    """One execution context. Not safe for concurrent use; make one per run."""

    def __init__(self, program: Program, env: RuntimeEnv):
        self.program = program
        self.env = env
        self.functions: Dict[str, Tuple[int, Function]] = {
            fn.name: (i, fn) for i, fn in enumerate(program.functions)
        }
        self.steps = 0
        self.limit = env.step_limit
        self.frames: List[list] = []
        self.logs: List[LogRecord] = []
        self.rng = SplitMix64(env.jitter_seed)
        self.covered: set = set()
        self._stmt = {
            Let: self._let, Assign: self._assign, IndexAssign: self._index_assign,
            If: self._if, While: self._while, For: self._for, Return: self._return,
            ExprStmt: self._expr_stmt, Assert: self._assert, AssertEq: self._assert_eq,
            AssertSnapshot: self._assert_snapshot,
        }
        self._eval = {
            IntLit: self._lit, StrLit: self._lit, BoolLit: self._lit,
            NullLit: lambda e, scope: None, ArrayLit: self._array, Var: self._var,
            Index: self._index, Call: self._call, Binary: self._binary, Unary: self._unary,
        }

    # ---------------------------------------------------------- public entry

    def run(self, entry: str, args: Sequence[Any]) -> ExecutionOutcome:
        if entry not in self.functions:
            raise UnknownEntry(f"no function named {entry!r}")
        fn = self.functions[entry][1]
        if len(fn.params) != len(args):
            raise UnknownEntry(f"{entry!r} takes {len(fn.params)} arguments, got {len(args)}")
        old_limit = sys.getrecursionlimit()
        want = 200 + self.env.call_depth_limit * 40
        if old_limit < want:
            sys.setrecursionlimit(want)
        try:
            value = self.invoke(entry, list(args))
            status = Ok(value)
        except MendError as err:
            trace = tuple((f[0], f[1]) for f in self.frames)
            status = RuntimeErrorStatus(err.code, trace, err.message, dict(err.detail))
        return ExecutionOutcome(status, tuple(self.logs), self.steps)

    # ------------------------------------------------------------- plumbing

    def tick(self):
        if self.steps >= self.limit:
            raise MendError("E_STEP_LIMIT", f"step limit {self.limit} reached")
        self.steps += 1

    def invoke(self, name: str, args: list):
        fn_index, fn = self.functions[name]
        if len(self.frames) >= self.env.call_depth_limit:
            raise MendError("E_STEP_LIMIT", f"call depth limit {self.env.call_depth_limit} reached")
        scope = dict(zip(fn.params, args))
        self.frames.append([name, (fn_index,)])
        self.covered.add(name)
        result = self.exec_stmts(fn.body, (fn_index,), scope)
        self.frames.pop()
        return result.value if result is not None else None

    def exec_stmts(self, stmts, base: NodePath, scope: dict):
        frame = self.frames[-1]
        handlers = self._stmt
        for i, s in enumerate(stmts):
            path = base + (i,)
            frame[1] = path
            self.tick()
            result = handlers[type(s)](s, path, scope)
            if result is not None:
                return result
        return None

    def eval(self, e, scope):
        return self._eval[type(e)](e, scope)

    # ----------------------------------------------------------- statements

    def _let(self, s, path, scope):
        scope[s.name] = self.eval(s.value, scope)

    def _assign(self, s, path, scope):
        if s.name not in scope:
            raise MendError("E_UNDEFINED", f"assignment to undeclared variable {s.name!r}")
        scope[s.name] = self.eval(s.value, scope)

    def _index_assign(self, s, path, scope):
        if s.name not in scope:
            raise MendError("E_UNDEFINED", f"undefined variable {s.name!r}")
        target = scope[s.name]
        idx = self.eval(s.index, scope)
        value = self.eval(s.value, scope)
        if target is None:
            raise MendError("E_NULL_DEREF", f"index assignment into null {s.name!r}")
        if not isinstance(target, list):
            raise MendError("E_TYPE", f"cannot index-assign into {type_name(target)}")
        if not _is_int(idx):
            raise MendError("E_TYPE", f"array index must be int, got {type_name(idx)}")
        if idx < 0 or idx >= len(target):
            raise MendError("E_INDEX_OOB", f"index {idx} out of bounds for length {len(target)}")
        target[idx] = value

    def _cond(self, e, scope) -> bool:
        v = self.eval(e, scope)
        if type(v) is not bool:
            raise MendError("E_TYPE", f"condition must be bool, got {type_name(v)}")
        return v

    def _if(self, s, path, scope):
        if self._cond(s.cond, scope):
            return self.exec_stmts(s.then.stmts, path + (1,), scope)
        if s.orelse is not None:
            return self.exec_stmts(s.orelse.stmts, path + (2,), scope)
        return None

    def _while(self, s, path, scope):
        frame = self.frames[-1]
        body = s.body.stmts
        body_path = path + (1,)
        while True:
            frame[1] = path
            if not self._cond(s.cond, scope):
                return None
            result = self.exec_stmts(body, body_path, scope)
            if result is not None:
                return result
            self.tick()

    def _for(self, s, path, scope):
        frame = self.frames[-1]
        lo = self.eval(s.start, scope)
        hi = self.eval(s.end, scope)
        if not _is_int(lo) or not _is_int(hi):
            raise MendError("E_TYPE", "range bounds must be int")
        body = s.body.stmts
        body_path = path + (2,)
        i = lo
        while i < hi:
            scope[s.var] = i
            result = self.exec_stmts(body, body_path, scope)
            if result is not None:
                return result
            i += 1
            frame[1] = path
            self.tick()
        return None

    def _return(self, s, path, scope):
        return _Return(None if s.value is None else self.eval(s.value, scope))

    def _expr_stmt(self, s, path, scope):
        self.eval(s.expr, scope)

    def _assert(self, s, path, scope):
        v = self.eval(s.expr, scope)
        if v is not True:
            if type(v) is not bool:
                raise MendError("E_TYPE", f"assert needs bool, got {type_name(v)}")
            raise MendError("E_ASSERT_FAIL", "assertion failed")

    def _assert_eq(self, s, path, scope):
        a = self.eval(s.left, scope)
        b = self.eval(s.right, scope)
        if not values_equal(a, b):
            raise MendError("E_ASSERT_FAIL", f"assert_eq failed: {render(a)} != {render(b)}",
                            {"actual": render(a), "expected": render(b)})

    def _assert_snapshot(self, s, path, scope):
        v = self.eval(s.expr, scope)
        actual = v if isinstance(v, str) else render(v)
        if actual != s.literal.value:
            raise MendError("E_SNAPSHOT_MISMATCH", f"snapshot mismatch: actual {actual!r}",
                            {"actual": actual, "expected": s.literal.value})

    # ---------------------------------------------------------- expressions

    def _lit(self, e, scope):
        return e.value

    def _array(self, e, scope):
        return [self.eval(x, scope) for x in e.items]

    def _var(self, e, scope):
        try:
            return scope[e.name]
        except KeyError:
            raise MendError("E_UNDEFINED", f"undefined variable {e.name!r}") from None

    def _index(self, e, scope):
        base = self.eval(e.base, scope)
        idx = self.eval(e.index, scope)
        if base is None:
            raise MendError("E_NULL_DEREF", "index into null")
        if not isinstance(base, (list, str)):
            raise MendError("E_TYPE", f"cannot index {type_name(base)}")
        if not _is_int(idx):
            raise MendError("E_TYPE", f"index must be int, got {type_name(idx)}")
        if idx < 0 or idx >= len(base):
            raise MendError("E_INDEX_OOB", f"index {idx} out of bounds for length {len(base)}")
        return base[idx]

    def _call(self, e, scope):
        name = e.name
        args = [self.eval(a, scope) for a in e.args]
        if name in BUILTINS:
            return self._builtin(name, args)
        if name not in self.functions:
            raise MendError("E_UNDEFINED", f"undefined function {name!r}")
        fn = self.functions[name][1]
        if len(fn.params) != len(args):
            raise MendError("E_TYPE", f"{name} takes {len(fn.params)} arguments, got {len(args)}")
        return self.invoke(name, args)

    def _builtin(self, name, args):
        if name == "len":
            self._arity(name, args, 1)
            v = args[0]
            if v is None:
                raise MendError("E_NULL_DEREF", "len of null")
            if not isinstance(v, (list, str)):
                raise MendError("E_TYPE", f"len of {type_name(v)}")
            return len(v)
        if name == "str":
            self._arity(name, args, 1)
            return render(args[0])
        if name == "print":
            self._arity(name, args, 1)
            frame = self.frames[-1]
            self.logs.append(LogRecord("info", None, frame[0], frame[1], render(args[0])))
            return None
        if name == "jitter":
            self._arity(name, args, 0)
            return self.rng.next_u64() % JITTER_RANGE
        # config
        self._arity(name, args, 1)
        key = args[0]
        if not isinstance(key, str):
            raise MendError("E_TYPE", "config key must be str")
        if key not in self.env.config:
            raise MendError("E_UNDEFINED", f"config key {key!r} is not set", {"config_key": key})
        return self.env.config[key]

    @staticmethod
    def _arity(name, args, n):
        if len(args) != n:
            raise MendError("E_TYPE", f"{name} takes {n} arguments, got {len(args)}")

    def _unary(self, e, scope):
        v = self.eval(e.operand, scope)
        if e.op == "-":
            if not _is_int(v):
                raise MendError("E_TYPE", f"cannot negate {type_name(v)}")
            return wrap64(-v)
        if type(v) is not bool:
            raise MendError("E_TYPE", f"cannot apply ! to {type_name(v)}")
        return not v

    def _binary(self, e, scope):
        op = e.op
        if op == "&&" or op == "||":
            a = self.eval(e.left, scope)
            if type(a) is not bool:
                raise MendError("E_TYPE", f"{op} needs bool operands")
            if (op == "&&" and not a) or (op == "||" and a):
                return a
            b = self.eval(e.right, scope)
            if type(b) is not bool:
                raise MendError("E_TYPE", f"{op} needs bool operands")
            return b
        a = self.eval(e.left, scope)
        b = self.eval(e.right, scope)
        if op == "==":
            return values_equal(a, b)
        if op == "!=":
            return not values_equal(a, b)
        if _is_int(a) and _is_int(b):
            if op == "+":
                return wrap64(a + b)
            if op == "-":
                return wrap64(a - b)
            if op == "*":
                return wrap64(a * b)
            if op == "/" or op == "%":
                if b == 0:
                    raise MendError("E_DIV_ZERO", "division by zero")
                q = abs(a) // abs(b)
                if (a < 0) != (b < 0):
                    q = -q
                if op == "/":
                    return wrap64(q)
                return wrap64(a - b * q)
            if op == "<":
                return a < b
            if op == "<=":
                return a <= b
            if op == ">":
                return a > b
            if op == ">=":
                return a >= b
        if isinstance(a, str) and isinstance(b, str):
            if op == "+":
                return a + b
            if op in ("<", "<=", ">", ">="):
                return {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[op]
        if op == "+" and isinstance(a, list) and isinstance(b, list):
            return a + b
        raise MendError("E_TYPE", f"unsupported operands for {op}: {type_name(a)}, {type_name(b)}")


def execute(program: Program, entry: str, args: Sequence[Any], env: RuntimeEnv) -> ExecutionOutcome:
    return Interpreter(program, env).run(entry, args)


# ------------------------------------------------------------------ test runs


@dataclass(frozen=True)
class TestResult:
    test_name: str
    status: str  # pass | fail | error
    error_code: Optional[str]
    trace: Tuple[Frame, ...]
    step_count: int
    message: str = ""
    detail: Mapping[str, Any] = field(default_factory=dict)
    covered: Tuple[str, ...] = ()

    __test__ = False


@dataclass(frozen=True)
class TestReport:
    results: Tuple[TestResult, ...]

    __test__ = False

    @property
    def passed(self) -> bool:
        return all(r.status == "pass" for r in self.results)

    @property
    def failing(self) -> List[TestResult]:
        return [r for r in self.results if r.status != "pass"]

    def result(self, name: str) -> Optional[TestResult]:
        for r in self.results:
            if r.test_name == name:
                return r
        return None

    def counts(self) -> Tuple[int, int]:
        failed = sum(1 for r in self.results if r.status != "pass")
        return len(self.results) - failed, failed


def test_seed(base_seed: int, test_name: str) -> int:
    """Per-test jitter seed so tests draw independent sequences."""
    return derive_seed(base_seed, fnv1a64(test_name))


def run_test(program: Program, name: str, env: RuntimeEnv) -> TestResult:
    interp = Interpreter(program, env.with_seed(test_seed(env.jitter_seed, name)))
    outcome = interp.run(name, [])
    covered = tuple(sorted(interp.covered))
    if outcome.ok:
        return TestResult(name, "pass", None, (), outcome.step_count, covered=covered)
    st = outcome.status
    status = "fail" if st.code in ASSERTION_CODES else "error"
    return TestResult(name, status, st.code, st.trace, outcome.step_count, st.message,
                      dict(st.detail), covered)


def run_tests(program: Program, env: RuntimeEnv, only: Optional[Sequence[str]] = None) -> TestReport:
    """Run every ``test_`` function in declaration order, each in a fresh interpreter."""
    results = []
    for fn in program.functions:
        if not fn.is_test or (only is not None and fn.name not in only):
            continue
        results.append(run_test(program, fn.name, env))
    return TestReport(tuple(results))
