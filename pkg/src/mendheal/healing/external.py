"""Optional adapter to an external text model over plain HTTP."""

from __future__ import annotations

import os
import re
import urllib.error
import urllib.request
from dataclasses import dataclass
from typing import Callable, Optional

from ..faults.taxonomy import BugClass
from ..minilang.formatter import format_function
from ..minilang.nodes import Program
from ..minilang.parser import ParseError, parse_function
from ..minilang.paths import dotted
from ..signals import FailureEvent, LogRecord, TraceEvent, render_error
from .candidate import Edit, Origin, PatchCandidate

PROMPT_TEMPLATE = "Given error log {log} and code {snippet}, suggest a fix."
ENDPOINT_ENV = "HEAL_ADAPTER_ENDPOINT"
_FENCE = re.compile(r"```[A-Za-z]*\n(.*?)```", re.S)


class AdapterDisabled(Exception):
    pass


class UnparseableReply(Exception):
    pass


class EndpointFailure(Exception):
    pass


def render_trace(event: FailureEvent) -> str:
    parts = []
    primary = event.primary_signal
    if isinstance(primary, LogRecord):
        parts.append(render_error(primary.error_code, primary.function, primary.statement_path, primary.message))
    for sig in event.all_signals:
        if isinstance(sig, TraceEvent) and sig.frames:
            parts.append(" > ".join(f"{fn}@{dotted(p)}" for fn, p in sig.frames))
            break
    if not parts:
        parts.append(f"{primary.name}={primary.value:g} (baseline {primary.baseline})")
    return "[" + " | ".join(parts) + "]"


@dataclass
class ExternalAdapter:
    endpoint: Optional[str] = None
    timeout: float = 10.0
    transport: Optional[Callable[[str], str]] = None

    @classmethod
    def from_env(cls, environ=None) -> "ExternalAdapter":
        environ = os.environ if environ is None else environ
        return cls(environ.get(ENDPOINT_ENV) or None)

    @property
    def enabled(self) -> bool:
        return bool(self.endpoint) or self.transport is not None

    def render(self, event: FailureEvent, snippet: str) -> str:
        return PROMPT_TEMPLATE.format(log=render_trace(event), snippet="[" + snippet + "]")

    def request(self, prompt: str) -> str:
        if not self.enabled:
            raise AdapterDisabled(f"set {ENDPOINT_ENV} to enable the external adapter")
        if self.transport is not None:
            return self.transport(prompt)
        req = urllib.request.Request(self.endpoint, data=prompt.encode("utf-8"), method="POST",
                                     headers={"Content-Type": "text/plain; charset=utf-8"})
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                return resp.read().decode("utf-8", errors="replace")
        except (urllib.error.URLError, OSError, ValueError) as exc:
            raise EndpointFailure(str(exc)) from None

    def parse(self, reply: str, program: Program, predicted_class: BugClass = BugClass.WrongOperator
              ) -> PatchCandidate:
        """Wrap the reply's fenced replacement function as a candidate."""
        m = _FENCE.search(reply)
        if m is None:
            raise UnparseableReply("reply has no fenced code block")
        try:
            fn = parse_function(m.group(1))
        except ParseError as exc:
            raise UnparseableReply(f"fenced block does not parse: {exc}") from None
        target = program.function(fn.name)
        if target is None:
            raise UnparseableReply(f"reply names unknown function {fn.name!r}")
        if target.is_test:
            raise UnparseableReply("replies may not rewrite test functions")
        index = program.function_index(fn.name)
        return PatchCandidate(0, (Edit((index,), format_function(fn).rstrip("\n")),), Origin.external,
                              f"external model rewrite of {fn.name}", predicted_class)

    def propose(self, event: FailureEvent, program: Program, function_index: int,
                predicted_class: BugClass = BugClass.WrongOperator) -> PatchCandidate:
        snippet = format_function(program.functions[function_index]).rstrip("\n")
        return self.parse(self.request(self.render(event, snippet)), program, predicted_class)
