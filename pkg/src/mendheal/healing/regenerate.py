"""Snapshot regeneration: rewrite an expected literal from observed behaviour."""

from __future__ import annotations

from ..faults.taxonomy import BugClass
from ..minilang.analysis import reaches_builtin
from ..minilang.formatter import quote
from ..minilang.interpreter import RuntimeEnv, run_test
from ..minilang.nodes import AssertSnapshot, Program, StrLit
from ..minilang.paths import replace_at, walk
from .candidate import Edit, Origin, PatchCandidate

MAX_SNAPSHOTS = 16
PROBE_SEEDS = (1, 2)


class NoSnapshotInTest(Exception):
    pass


class NondeterministicActual(Exception):
    pass


class RedundantRegeneration(Exception):
    pass


def regenerate_snapshot(program: Program, test_name: str, env: RuntimeEnv) -> PatchCandidate:
    """Replace every mismatching snapshot literal in ``test_name`` with its actual value."""
    fn_index = program.function_index(test_name)
    fn = program.functions[fn_index]
    if not any(isinstance(n, AssertSnapshot) for _, n in walk(fn)):
        raise NoSnapshotInTest(test_name)
    if reaches_builtin(program, fn, "jitter"):
        raise NondeterministicActual(f"{test_name} depends on jitter()")
    current = program
    edits = []
    for _ in range(MAX_SNAPSHOTS):
        result = run_test(current, test_name, env)
        if result.error_code != "E_SNAPSHOT_MISMATCH":
            break
        actual = result.detail["actual"]
        for seed in PROBE_SEEDS:
            again = run_test(current, test_name, env.with_seed(env.jitter_seed + seed))
            if again.error_code != "E_SNAPSHOT_MISMATCH" or again.detail.get("actual") != actual:
                raise NondeterministicActual(f"{test_name} snapshot actual varies with the seed")
        site = result.trace[-1][1] + (1,)
        edits.append(Edit(site, quote(actual)))
        current = replace_at(current, site, [StrLit(actual)])
    if not edits:
        raise RedundantRegeneration(f"snapshots in {test_name} already match")
    return PatchCandidate(0, tuple(edits), Origin.regeneration, f"regenerate snapshot literal(s) in {test_name}",
                          BugClass.StaleSnapshot)
