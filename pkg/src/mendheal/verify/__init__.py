"""Candidate verification: sandboxed tests, mutation testing, canary replay, snapshots."""

from .canary import DEFAULT_EPSILON, DEFAULT_WINDOW, CanaryResult, EmptyWorkload, canary
from .mutation import DEFAULT_KILL_THRESHOLD, DEFAULT_N_MUTANTS, mutation_score
from .sandbox import DEFAULT_CLASSIFY_RERUNS, classify_flaky, rerun_seed, sandbox_run
from .snapshot import (
    HashMismatchAfterRestore, SnapshotMissing, WorkspaceSnapshot, discard_snapshot, load_snapshot,
    rollback, take_snapshot,
)
from .verdict import (
    ACCEPT, Verification, VerificationVerdict, VerifySettings, mutation_region, step_budget, verify_candidate,
)

__all__ = [
    "ACCEPT", "CanaryResult", "DEFAULT_CLASSIFY_RERUNS", "DEFAULT_EPSILON", "DEFAULT_KILL_THRESHOLD",
    "DEFAULT_N_MUTANTS", "DEFAULT_WINDOW", "EmptyWorkload", "HashMismatchAfterRestore", "SnapshotMissing",
    "Verification", "VerificationVerdict", "VerifySettings", "WorkspaceSnapshot", "canary", "classify_flaky",
    "discard_snapshot", "load_snapshot", "mutation_region", "mutation_score", "rerun_seed", "rollback",
    "sandbox_run", "step_budget", "take_snapshot", "verify_candidate",
]
