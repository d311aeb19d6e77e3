"""Canary replay of the recorded workload."""

from __future__ import annotations

import copy
from dataclasses import dataclass
from typing import Sequence

from ..minilang.interpreter import RuntimeEnv, UnknownEntry, execute
from ..minilang.nodes import Program

DEFAULT_WINDOW = 100
DEFAULT_EPSILON = 0.01


class EmptyWorkload(Exception):
    pass


@dataclass(frozen=True)
class CanaryResult:
    error_rate: float
    baseline_error_rate: float
    errors: int
    calls: int

    def passes(self, epsilon: float = DEFAULT_EPSILON) -> bool:
        return self.error_rate <= self.baseline_error_rate + epsilon


def canary(patched: Program, workload: Sequence, window: int = DEFAULT_WINDOW, env: RuntimeEnv = RuntimeEnv(),
           baseline_error_rate: float = 0.0) -> CanaryResult:
    """Replay ``window`` workload calls round-robin and count erroring calls."""
    if not workload:
        raise EmptyWorkload("workload.jsonl has no calls")
    if window <= 0:
        raise ValueError("canary window must be positive")
    outcomes = {}
    errors = 0
    for i in range(window):
        k = i % len(workload)
        if k not in outcomes:
            call = workload[k]
            try:
                outcome = execute(patched, call.entry, copy.deepcopy(call.args), env.with_seed(call.jitter_seed))
                outcomes[k] = not outcome.ok
            except UnknownEntry:
                outcomes[k] = True
        errors += outcomes[k]
    return CanaryResult(errors / window, baseline_error_rate, errors, window)
