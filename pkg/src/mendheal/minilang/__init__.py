"""MendLang: the small imperative language the healing pipeline works on."""

from .formatter import format_expr, format_function, format_node, format_program, format_statements
from .interpreter import (
    ERROR_CODES, ExecutionOutcome, LogRecord, MendError, Ok, RuntimeEnv, RuntimeErrorStatus,
    TestReport, TestResult, UnknownEntry, execute, render, run_test, run_tests, values_equal,
)
from .nodes import NodePath, Program
from .parser import DuplicateFunction, ParseError, parse, parse_expr, parse_function, parse_statements
from .paths import PathError, dotted, enclosing_statement, replace_at, resolve, walk

format = format_program  # noqa: A001  (module-level alias mirroring parse)

__all__ = [
    "ERROR_CODES", "DuplicateFunction", "ExecutionOutcome", "LogRecord", "MendError", "NodePath",
    "Ok", "ParseError", "PathError", "Program", "RuntimeEnv", "RuntimeErrorStatus", "TestReport",
    "TestResult", "UnknownEntry", "dotted", "enclosing_statement", "execute", "format",
    "format_expr", "format_function", "format_node", "format_program", "format_statements",
    "parse", "parse_expr", "parse_function", "parse_statements", "render", "replace_at",
    "resolve", "run_test", "run_tests", "values_equal", "walk",
]
