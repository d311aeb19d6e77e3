"""Sandboxed test runs with quarantine reruns, and the flaky-test classifier."""

from __future__ import annotations

from typing import Mapping, Optional

from ..minilang.interpreter import RuntimeEnv, TestReport, run_test
from ..minilang.nodes import Program
from ..rng import derive_seed

# A test passing on a quarter of seeds is missed with probability 0.75**16, about 1%.
DEFAULT_CLASSIFY_RERUNS = 16


def rerun_seed(base_seed: int, attempt: int) -> int:
    """Jitter seed of the ``attempt``-th execution; attempt 0 is the ordinary run."""
    return base_seed if attempt == 0 else derive_seed(base_seed, attempt)


def sandbox_run(program: Program, env: RuntimeEnv, quarantine: Optional[Mapping[str, int]] = None) -> TestReport:
    """Full-suite report; a quarantined test passes if any of its reruns passes."""
    quarantine = quarantine or {}
    results = []
    for fn in program.functions:
        if not fn.is_test:
            continue
        result = run_test(program, fn.name, env)
        reruns = quarantine.get(fn.name, 1)
        attempt = 1
        while result.status != "pass" and attempt < reruns:
            again = run_test(program, fn.name, env.with_seed(rerun_seed(env.jitter_seed, attempt)))
            if again.status == "pass":
                result = again
            attempt += 1
        results.append(result)
    return TestReport(tuple(results))


def classify_flaky(program: Program, test_name: str, env: RuntimeEnv,
                   reruns: int = DEFAULT_CLASSIFY_RERUNS) -> str:
    """``passing``, ``flaky`` (outcome varies with the jitter seed) or ``deterministic`` failure."""
    statuses = set()
    for k in range(max(1, reruns)):
        statuses.add(run_test(program, test_name, env.with_seed(rerun_seed(env.jitter_seed, k))).status == "pass")
        if len(statuses) == 2:
            break
    if statuses == {True}:
        return "passing"
    if statuses == {False}:
        return "deterministic"
    return "flaky"
