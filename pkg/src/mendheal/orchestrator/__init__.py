"""Policy-gated healing cycles, review approval and incident recording."""

from .alert import APPROVED_MARKER, PENDING_MARKER, AttemptRecord, BundleContent, unified_diff, write_bundle
from .cycle import (
    ApprovalError, CycleOutcome, CycleState, FatalRollbackFailure, approve_bundle, heal_cycle, inject_workspace,
)
from .policy import Action, PipelineMode, Policy, PolicyError, decide, load_policy, parse_policy, sample_policy

__all__ = [
    "APPROVED_MARKER", "Action", "ApprovalError", "AttemptRecord", "BundleContent", "CycleOutcome", "CycleState",
    "FatalRollbackFailure", "PENDING_MARKER", "PipelineMode", "Policy", "PolicyError", "approve_bundle", "decide",
    "heal_cycle", "inject_workspace", "load_policy", "parse_policy", "sample_policy", "unified_diff",
    "write_bundle",
]
