"""Seeded fault-injection campaigns over the fixture corpus."""

from __future__ import annotations

import json
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Tuple

from ..clock import SystemClock
from ..faults.inject import combine
from ..faults.taxonomy import BugClass, FaultError, SYNTACTIC_CLASSES
from ..fnv import fnv1a64
from ..incidents import MemoryStore
from ..minilang.interpreter import RuntimeEnv
from ..minilang.paths import dotted
from ..orchestrator.cycle import CycleState, heal_cycle, inject_workspace
from ..orchestrator.policy import Action, PipelineMode, Policy
from ..rng import derive_seed
from ..verify.sandbox import sandbox_run
from ..workspace import Workspace, WorkspaceError

CORPUS_DIR = Path(__file__).resolve().parent.parent / "corpus"
CAMPAIGNS_DIR = Path(".heal") / "campaigns"
TOP_K = 3


class CorpusNotGreen(Exception):
    pass


def shipped_fixtures() -> List[str]:
    return sorted(p.name for p in CORPUS_DIR.iterdir() if p.is_dir() and not p.name.startswith(("_", ".")))


def fixture_path(name_or_path: str) -> Path:
    shipped = CORPUS_DIR / name_or_path
    if shipped.is_dir():
        return shipped
    path = Path(name_or_path)
    if path.is_dir():
        return path
    raise WorkspaceError(f"unknown fixture {name_or_path!r}")


def campaign_policy() -> Policy:
    """Campaigns measure repair, so every accepted candidate is applied without review."""
    return Policy(per_class_action={c: Action.auto_apply for c in BugClass})


@dataclass(frozen=True)
class Campaign:
    name: str
    corpus: Tuple[str, ...]
    classes: Tuple[BugClass, ...] = SYNTACTIC_CLASSES
    n_per_class: int = 4  # per fixture
    seed: int = 0
    pipeline_config: PipelineMode = PipelineMode.full

    def __post_init__(self):
        if self.n_per_class < 1:
            raise ValueError("n_per_class must be >= 1")
        if not self.corpus:
            raise ValueError("campaign corpus is empty")

    def with_config(self, mode: PipelineMode) -> "Campaign":
        return Campaign(f"{self.name}-{PipelineMode(mode).value}" if PipelineMode(mode) is not self.pipeline_config
                        else self.name, self.corpus, self.classes, self.n_per_class, self.seed, PipelineMode(mode))

    def to_record(self) -> dict:
        return {"name": self.name, "corpus": list(self.corpus), "classes": [c.value for c in self.classes],
                "n_per_class": self.n_per_class, "seed": self.seed, "pipeline_config": self.pipeline_config.value}

    def trial_keys(self) -> List[Tuple[str, BugClass, int]]:
        return [(fx, cls, i) for fx in self.corpus for cls in self.classes for i in range(self.n_per_class)]


def trial_seed(campaign_seed: int, fixture: str, bug_class: BugClass, index: int) -> int:
    """Depends only on the trial key, so every pipeline config sees the same injected fault."""
    return derive_seed(campaign_seed, fnv1a64(Path(fixture).name), list(BugClass).index(bug_class), index)


@dataclass
class TrialRecord:
    fixture: str
    bug_class: str
    index: int
    seed: int
    config: str
    injected: bool
    excluded_reason: Optional[str] = None
    ground_truth: Optional[dict] = None
    top_sites: List[str] = field(default_factory=list)
    detection: Optional[str] = None  # tp | fp | fn
    state: Optional[str] = None
    healed: bool = False
    repaired: bool = False
    attempts: int = 0
    invalid_candidates: int = 0
    healed_origin: Optional[str] = None
    top_confidence: Optional[float] = None
    mttr_ms: Optional[float] = None

    @property
    def key(self) -> Tuple[str, str, int]:
        return (self.fixture, self.bug_class, self.index)

    def to_record(self, normalize: bool = False) -> dict:
        rec = dict(self.__dict__)
        if normalize:
            rec["mttr_ms"] = None
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "TrialRecord":
        return cls(**{k: rec[k] for k in cls.__dataclass_fields__ if k in rec})


@dataclass
class CampaignResult:
    campaign: Campaign
    trials: List[TrialRecord]

    @property
    def injected(self) -> List[TrialRecord]:
        return [t for t in self.trials if t.injected]

    @property
    def excluded(self) -> List[TrialRecord]:
        return [t for t in self.trials if not t.injected]


def check_green(fixture: Path) -> None:
    ws = Workspace.open(fixture)
    env = RuntimeEnv(config=ws.read_config())
    program = combine(ws.read_program(), ws.read_hidden())
    if not sandbox_run(program, env, ws.read_quarantine()).passed:
        raise CorpusNotGreen(f"fixture {fixture.name} fails its own tests")


def run_trial(campaign: Campaign, fixture: str, bug_class: BugClass, index: int, clock=None) -> TrialRecord:
    seed = trial_seed(campaign.seed, fixture, bug_class, index)
    rec = TrialRecord(Path(fixture).name, bug_class.value, index, seed, campaign.pipeline_config.value, False)
    with tempfile.TemporaryDirectory(prefix="heal-trial-") as tmp:
        ws = Workspace.open(fixture_path(fixture)).copy_to(Path(tmp) / "ws")
        try:
            truth = inject_workspace(ws, bug_class, seed)
        except FaultError as exc:
            rec.excluded_reason = type(exc).__name__
            return rec
        rec.injected = True
        rec.ground_truth = truth.to_record()
        outcome = heal_cycle(ws, campaign_policy(), MemoryStore(), seed, campaign.pipeline_config,
                             clock or SystemClock())
        top = [h.site for h in outcome.hypotheses[:TOP_K]]
        rec.top_sites = [dotted(s) for s in top]
        rec.detection = "tp" if truth.site in top else ("fp" if top else "fn")
        rec.top_confidence = round(outcome.hypotheses[0].confidence, 6) if outcome.hypotheses else None
        rec.state = outcome.state.value
        rec.attempts = outcome.attempts
        rec.invalid_candidates = outcome.invalid_candidates
        rec.healed = outcome.state is CycleState.Healed
        if rec.healed:
            rec.healed_origin = outcome.accepted.origin.value
            rec.mttr_ms = outcome.incident.timings.get("mttr_ms")
            env = RuntimeEnv(config=ws.read_config())
            program, quarantine = ws.read_program(), ws.read_quarantine()
            visible = sandbox_run(program, env, quarantine).passed
            hidden = ws.read_hidden()
            held_out = hidden is None or sandbox_run(combine(program, hidden), env, quarantine).passed
            rec.repaired = visible and held_out
    return rec


def run_campaign(campaign: Campaign, out_root=None, clock_factory: Callable = SystemClock,
                 progress: Optional[Callable[[TrialRecord], None]] = None) -> CampaignResult:
    """Run every trial; with ``out_root`` also write the manifest and per-trial records."""
    for fx in dict.fromkeys(campaign.corpus):
        check_green(fixture_path(fx))
    trials = []
    for fx, cls, i in campaign.trial_keys():
        rec = run_trial(campaign, fx, cls, i, clock_factory())
        trials.append(rec)
        if progress is not None:
            progress(rec)
    trials.sort(key=lambda t: t.key)
    result = CampaignResult(campaign, trials)
    if out_root is not None:
        write_campaign(result, out_root)
    return result


def campaign_dir(out_root, name: str) -> Path:
    return Path(out_root) / CAMPAIGNS_DIR / name


def write_campaign(result: CampaignResult, out_root, normalize: bool = False) -> Path:
    root = campaign_dir(out_root, result.campaign.name)
    root.mkdir(parents=True, exist_ok=True)
    (root / "manifest.json").write_text(json.dumps(result.campaign.to_record(), sort_keys=True, indent=1) + "\n",
                                        encoding="utf-8")
    lines = [json.dumps(t.to_record(normalize), sort_keys=True) for t in result.trials]
    (root / "trials.jsonl").write_text("".join(l + "\n" for l in lines), encoding="utf-8")
    return root


def read_campaign(root) -> CampaignResult:
    root = Path(root)
    try:
        manifest = json.loads((root / "manifest.json").read_text(encoding="utf-8"))
        lines = (root / "trials.jsonl").read_text(encoding="utf-8").splitlines()
    except (OSError, ValueError) as exc:
        raise WorkspaceError(f"{root} is not a campaign directory: {exc}") from None
    campaign = Campaign(manifest["name"], tuple(manifest["corpus"]), tuple(BugClass(c) for c in manifest["classes"]),
                        manifest["n_per_class"], manifest["seed"], PipelineMode(manifest["pipeline_config"]))
    return CampaignResult(campaign, [TrialRecord.from_record(json.loads(l)) for l in lines if l.strip()])
