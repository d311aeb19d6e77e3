"""Signal capture, failure fingerprints, and step-count anomaly detection."""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Deque, Dict, List, Optional, Sequence, Tuple, Union

from ..clock import SystemClock
from ..fnv import fnv1a64, hex64
from ..minilang.interpreter import ExecutionOutcome, LogRecord, TestReport, TestResult
from ..minilang.nodes import NodePath
from ..minilang.paths import dotted, undotted

DEFAULT_WINDOW = 5
DEFAULT_ANOMALY_FACTOR = 3.0

_ERROR_LINE = re.compile(r"^ERROR (?P<code>E_[A-Z_]+) at (?P<fn>\w+)@(?P<path>[\d.]*): (?P<msg>.*)$", re.S)
_CONFIG_KEY = re.compile(r"config key '(?P<key>[^']*)'")


@dataclass(frozen=True)
class TraceEvent:
    frames: Tuple[Tuple[str, NodePath], ...]

    @property
    def innermost(self) -> Optional[Tuple[str, NodePath]]:
        return self.frames[-1] if self.frames else None


@dataclass(frozen=True)
class MetricSample:
    name: str
    value: float
    unit: str = "steps"
    test_name: Optional[str] = None
    baseline: Optional[float] = None


Signal = Union[LogRecord, TraceEvent, MetricSample]


@dataclass(frozen=True)
class Fingerprint:
    """FNV-1a 64 over a canonical ``a|b|c`` string."""

    id: int
    canonical: str

    @classmethod
    def of(cls, code: str, function: str, path: Sequence[int]) -> "Fingerprint":
        canonical = f"{code}|{function}|{dotted(path)}"
        return cls(fnv1a64(canonical), canonical)

    @classmethod
    def anomaly(cls, test_name: str, metric: str = "steps") -> "Fingerprint":
        canonical = f"E_ANOMALY|{test_name}|{metric}"
        return cls(fnv1a64(canonical), canonical)

    @property
    def hex(self) -> str:
        return hex64(self.id)


@dataclass(frozen=True)
class FailureEvent:
    fingerprint: Fingerprint
    failing_tests: Tuple[str, ...]
    primary_signal: Signal
    all_signals: Tuple[Signal, ...]
    detected_at: float
    report: Optional[TestReport] = field(default=None, compare=False, repr=False)

    @property
    def traces(self) -> List[TraceEvent]:
        return [s for s in self.all_signals if isinstance(s, TraceEvent)]

    @property
    def error_logs(self) -> List[LogRecord]:
        return [s for s in self.all_signals if isinstance(s, LogRecord) and s.level == "error"]

    @property
    def is_anomaly(self) -> bool:
        return isinstance(self.primary_signal, MetricSample)


def render_error(code: str, function: str, path: Sequence[int], message: str) -> str:
    return f"ERROR {code} at {function}@{dotted(path)}: {message}"


def parse_error(line: str) -> Optional[Dict[str, Any]]:
    """Recover ``code``/``function``/``path``/``message`` from a rendered error line."""
    m = _ERROR_LINE.match(line)
    if m is None:
        return None
    return {"code": m["code"], "function": m["fn"], "path": undotted(m["path"]), "message": m["msg"]}


def config_key_of(message: str) -> Optional[str]:
    m = _CONFIG_KEY.search(message)
    return m["key"] if m else None


def capture(outcome: Union[ExecutionOutcome, TestResult], test_name: str) -> List[Signal]:
    """Signals for one execution: error log and trace on failure, plus a steps sample."""
    if isinstance(outcome, TestResult):
        failed = outcome.status != "pass"
        code, trace, message, steps = outcome.error_code, outcome.trace, outcome.message, outcome.step_count
    else:
        failed = not outcome.ok
        st = outcome.status
        code = getattr(st, "code", None)
        trace = getattr(st, "trace", ())
        message = getattr(st, "message", "")
        steps = outcome.step_count
    signals: List[Signal] = []
    if failed:
        fn, path = trace[-1] if trace else (test_name, ())
        parsed = parse_error(render_error(code, fn, path, message))
        signals.append(LogRecord("error", parsed["code"], parsed["function"], tuple(parsed["path"]),
                                 parsed["message"]))
        signals.append(TraceEvent(tuple(trace)))
    signals.append(MetricSample("steps", float(steps), "steps", test_name))
    return signals


def fingerprint_of(log: LogRecord) -> Fingerprint:
    return Fingerprint.of(log.error_code, log.function, log.statement_path)


class MetricWindow:
    """Per-test step counts from the last ``k`` green runs."""

    def __init__(self, k: int = DEFAULT_WINDOW, history: Optional[Dict[str, Sequence[float]]] = None):
        self.k = k
        self.history: Dict[str, Deque[float]] = {}
        for name, values in (history or {}).items():
            self.history[name] = deque(values, maxlen=k)

    def mean(self, test_name: str) -> Optional[float]:
        values = self.history.get(test_name)
        if not values:
            return None
        return sum(values) / len(values)

    def observe(self, report: TestReport) -> bool:
        """Record a green run's step counts; non-green reports are ignored."""
        if not report.passed:
            return False
        for r in report.results:
            self.history.setdefault(r.test_name, deque(maxlen=self.k)).append(float(r.step_count))
        return True

    def to_dict(self) -> dict:
        return {"k": self.k, "history": {n: list(v) for n, v in sorted(self.history.items())}}

    @classmethod
    def from_dict(cls, data: Optional[dict]) -> "MetricWindow":
        data = data or {}
        return cls(data.get("k", DEFAULT_WINDOW), data.get("history", {}))


def detect_failure(report: TestReport, metric_baseline: Optional[MetricWindow] = None,
                   anomaly_factor: float = DEFAULT_ANOMALY_FACTOR, clock=None) -> Optional[FailureEvent]:
    """A FailureEvent for any failing test, else for the first step-count anomaly, else None."""
    clock = clock or SystemClock()
    all_signals: List[Signal] = []
    for r in report.results:
        all_signals.extend(capture(r, r.test_name))
    failing = tuple(r.test_name for r in report.failing)
    if failing:
        primary = next(s for s in all_signals if isinstance(s, LogRecord) and s.level == "error")
        return FailureEvent(fingerprint_of(primary), failing, primary, tuple(all_signals), clock.now_ms(), report)
    if metric_baseline is None:
        return None
    for sample in all_signals:
        if not isinstance(sample, MetricSample):
            continue
        mean = metric_baseline.mean(sample.test_name)
        if mean is not None and sample.value > anomaly_factor * mean:
            primary = MetricSample(sample.name, sample.value, sample.unit, sample.test_name, mean)
            return FailureEvent(Fingerprint.anomaly(sample.test_name), (), primary, tuple(all_signals),
                                clock.now_ms(), report)
    return None


def signal_record(sig: Signal) -> dict:
    """JSON-friendly form used inside incident records and alert bundles."""
    if isinstance(sig, LogRecord):
        return {"kind": "log", "level": sig.level, "error_code": sig.error_code, "function": sig.function,
                "statement_path": dotted(sig.statement_path), "message": sig.message}
    if isinstance(sig, TraceEvent):
        return {"kind": "trace", "frames": [[f, dotted(p)] for f, p in sig.frames]}
    return {"kind": "metric", "name": sig.name, "value": sig.value, "unit": sig.unit,
            "test_name": sig.test_name, "baseline": sig.baseline}


__all__ = [
    "DEFAULT_ANOMALY_FACTOR", "DEFAULT_WINDOW", "FailureEvent", "Fingerprint", "LogRecord",
    "MetricSample", "MetricWindow", "Signal", "TraceEvent", "capture", "config_key_of",
    "detect_failure", "fingerprint_of", "parse_error", "render_error", "signal_record",
]
