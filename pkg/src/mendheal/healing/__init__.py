"""Repair models: templates, snapshot regeneration, evolutionary search, and an external adapter."""

from .candidate import (
    ConfigChange, Edit, InvalidCandidate, Origin, PatchCandidate, TestPolicyChange, apply_candidate,
    apply_edits, parse_gate,
)
from .dispatch import ModelSelection, candidate_queue, choose_region
from .external import (
    ENDPOINT_ENV, PROMPT_TEMPLATE, AdapterDisabled, EndpointFailure, ExternalAdapter, UnparseableReply,
)
from .regenerate import NondeterministicActual, NoSnapshotInTest, RedundantRegeneration, regenerate_snapshot
from .search import BudgetExhausted, SearchBudget, search_repair
from .templates import (
    CONFIG_CAP, NoTemplate, RepairContext, WorkloadCall, smallest_passing_value, template_repair,
    workload_passes,
)
from .treediff import tree_edits

__all__ = [
    "CONFIG_CAP", "ENDPOINT_ENV", "PROMPT_TEMPLATE", "AdapterDisabled", "BudgetExhausted", "ConfigChange",
    "Edit", "EndpointFailure", "ExternalAdapter", "InvalidCandidate", "ModelSelection", "NoSnapshotInTest",
    "NoTemplate", "NondeterministicActual", "Origin", "PatchCandidate", "RedundantRegeneration",
    "RepairContext", "SearchBudget", "TestPolicyChange", "UnparseableReply", "WorkloadCall",
    "apply_candidate", "apply_edits", "candidate_queue", "choose_region", "parse_gate",
    "regenerate_snapshot", "search_repair", "smallest_passing_value", "template_repair", "tree_edits",
    "workload_passes",
]
