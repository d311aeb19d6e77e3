"""Candidate queue: templates and regeneration, then search, then the external adapter."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence

from ..diagnosis.rank import FaultHypothesis
from ..faults.taxonomy import BugClass
from ..minilang.nodes import Program
from ..signals import FailureEvent
from .candidate import PatchCandidate
from .external import AdapterDisabled, EndpointFailure, ExternalAdapter, UnparseableReply
from .regenerate import NondeterministicActual, NoSnapshotInTest, RedundantRegeneration, regenerate_snapshot
from .search import BudgetExhausted, SearchBudget, search_repair
from .templates import NoTemplate, RepairContext, template_repair

SNAPSHOT_CODE = "E_SNAPSHOT_MISMATCH"


@dataclass(frozen=True)
class ModelSelection:
    templates: bool = True
    regeneration: bool = True
    search: bool = True
    external: bool = True


def choose_region(hypotheses: Sequence[FaultHypothesis], program: Program,
                  event: Optional[FailureEvent]) -> Optional[FaultHypothesis]:
    """The hypothesis whose function search repair should work in."""
    for h in hypotheses:
        if not program.functions[h.site[0]].is_test:
            return h
    if event is not None and event.report is not None:
        for r in event.report.failing:
            for i, fn in enumerate(program.functions):
                if not fn.is_test and fn.name in r.covered:
                    return FaultHypothesis((i,), BugClass.WrongOperator, 0.0)
    return None


def _from_hypothesis(hyp: FaultHypothesis, program: Program, ctx: RepairContext,
                     selection: ModelSelection) -> List[PatchCandidate]:
    if hyp.suspected_class is BugClass.StaleSnapshot:
        if not selection.regeneration or not program.functions[hyp.site[0]].is_test:
            return []
        # Other failures mean the code is broken; re-recording the snapshot would hide it.
        if any(r.error_code != SNAPSHOT_CODE for r in ctx.failing.values()):
            return []
        try:
            cand = regenerate_snapshot(program, program.functions[hyp.site[0]].name, ctx.env)
        except (NoSnapshotInTest, NondeterministicActual, RedundantRegeneration):
            return []
        cand.confidence = hyp.confidence
        return [cand]
    if not selection.templates:
        return []
    try:
        return template_repair(hyp, program, ctx)
    except NoTemplate:
        return []


def candidate_queue(event: Optional[FailureEvent], hypotheses: Sequence[FaultHypothesis], program: Program,
                    ctx: RepairContext, selection: ModelSelection = ModelSelection(),
                    adapter: Optional[ExternalAdapter] = None, budget: SearchBudget = SearchBudget(),
                    seed: int = 0, search_env=None) -> Iterator[PatchCandidate]:
    """Lazily yield candidates in dispatch order, deduplicated by edit digest, numbered from 1."""
    seen = set()
    counter = [0]

    def fresh(cands):
        for c in cands:
            if c.digest in seen:
                continue
            seen.add(c.digest)
            counter[0] += 1
            c.id = counter[0]
            yield c

    for hyp in hypotheses:
        yield from fresh(_from_hypothesis(hyp, program, ctx, selection))

    region = choose_region(hypotheses, program, event)
    if selection.search and region is not None:
        failing = [] if event is None else list(event.failing_tests)
        try:
            found = search_repair(program, failing, region.site, budget, seed, search_env or ctx.env,
                                  region.suspected_class)
        except BudgetExhausted:
            found = []
        for c in found:
            c.confidence = region.confidence
        yield from fresh(found)

    if selection.external and adapter is not None and adapter.enabled and region is not None and event is not None:
        try:
            cand = adapter.propose(event, program, region.site[0], region.suspected_class)
        except (AdapterDisabled, EndpointFailure, UnparseableReply):
            return
        cand.confidence = region.confidence
        yield from fresh([cand])
