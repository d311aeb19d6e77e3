"""Detection and repair metrics, baseline comparisons and report emission."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from statistics import mean
from typing import Dict, List, Optional, Sequence, Tuple

from ..faults.taxonomy import BugClass
from ..orchestrator.policy import PipelineMode
from .campaign import Campaign, CampaignResult, TrialRecord, run_campaign

ALL = "ALL"
F1_TARGET = 0.85
F1_TOLERANCE = 0.05
METRIC_NAMES = ("trials", "precision", "recall", "f1", "repair_success_rate", "mean_mttr_ms", "mean_attempts",
                "escalation_rate", "invalid_candidates")


def f1_score(precision: float, recall: float) -> float:
    return 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class MetricsRow:
    bug_class: str
    config: str
    trials: int
    precision: float
    recall: float
    f1: float
    repair_success_rate: float
    mean_mttr_ms: Optional[float]
    mean_attempts: Optional[float]  # over healed trials
    escalation_rate: float
    invalid_candidates: int

    def value(self, name: str):
        return getattr(self, name)


def row_for(bug_class: str, config: str, trials: Sequence[TrialRecord]) -> MetricsRow:
    """Metrics over injected trials only; excluded trials never reach a denominator."""
    n = len(trials)
    tp = sum(t.detection == "tp" for t in trials)
    fp = sum(t.detection == "fp" for t in trials)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / n if n else 0.0
    healed = [t for t in trials if t.healed]
    mttrs = [t.mttr_ms for t in healed if t.mttr_ms is not None]
    return MetricsRow(
        bug_class, config, n, precision, recall, f1_score(precision, recall),
        sum(t.repaired for t in trials) / n if n else 0.0,
        float(mean(mttrs)) if mttrs else None,
        float(mean(t.attempts for t in healed)) if healed else None,
        sum(t.state == "Escalated" for t in trials) / n if n else 0.0,
        sum(t.invalid_candidates for t in trials),
    )


@dataclass
class MetricsTable:
    rows: List[MetricsRow]
    excluded: Dict[str, int] = field(default_factory=dict)  # reason -> count

    def row(self, bug_class: str, config: Optional[str] = None) -> MetricsRow:
        for r in self.rows:
            if r.bug_class == bug_class and (config is None or r.config == config):
                return r
        raise KeyError((bug_class, config))

    @property
    def excluded_total(self) -> int:
        return sum(self.excluded.values())


def metrics(result: CampaignResult) -> MetricsTable:
    config = result.campaign.pipeline_config.value
    injected = result.injected
    if not result.trials:
        raise ValueError("campaign result has no trials")
    rows = [row_for(c.value, config, [t for t in injected if t.bug_class == c.value])
            for c in result.campaign.classes]
    rows.append(row_for(ALL, config, injected))
    excluded: Dict[str, int] = {}
    for t in result.excluded:
        excluded[t.excluded_reason] = excluded.get(t.excluded_reason, 0) + 1
    return MetricsTable(rows, dict(sorted(excluded.items())))


def _delta(a, b):
    return None if a is None or b is None else a - b


@dataclass
class ComparisonReport:
    tables: Dict[str, MetricsTable]
    results: Dict[str, CampaignResult]
    reference: str = PipelineMode.full.value

    def deltas(self, config: str) -> List[dict]:
        """Per-class ``reference - config`` differences."""
        out = []
        ref = self.tables[self.reference]
        other = self.tables[config]
        for row in ref.rows:
            o = other.row(row.bug_class)
            out.append({"class": row.bug_class, "config": config,
                        "f1": row.f1 - o.f1,
                        "repair_success_rate": row.repair_success_rate - o.repair_success_rate,
                        "mean_attempts": _delta(row.mean_attempts, o.mean_attempts),
                        "invalid_candidates": row.invalid_candidates - o.invalid_candidates})
        return out

    def paired_attempts(self, a: str, b: str, bug_class: str) -> Tuple[Optional[float], Optional[float], int]:
        """Mean attempts of configs ``a`` and ``b`` over trials of the class that both healed."""
        ta = {t.key: t for t in self.results[a].injected if t.bug_class == bug_class and t.healed}
        tb = {t.key: t for t in self.results[b].injected if t.bug_class == bug_class and t.healed}
        both = sorted(set(ta) & set(tb))
        if not both:
            return None, None, 0
        return (float(mean(ta[k].attempts for k in both)), float(mean(tb[k].attempts for k in both)), len(both))


def compare_baselines(corpus: Sequence[str], classes: Sequence[BugClass], n: int, seed: int,
                      configs: Sequence[PipelineMode] = tuple(PipelineMode), name: str = "compare",
                      out_root=None, clock_factory=None) -> ComparisonReport:
    """Run each config on the identical (fixture, class, index) trials."""
    base = Campaign(name, tuple(corpus), tuple(BugClass(c) for c in classes), n, seed, PipelineMode.full)
    results, tables = {}, {}
    kwargs = {} if clock_factory is None else {"clock_factory": clock_factory}
    for mode in configs:
        mode = PipelineMode(mode)
        campaign = Campaign(f"{name}-{mode.value}", base.corpus, base.classes, n, seed, mode)
        results[mode.value] = run_campaign(campaign, out_root, **kwargs)
        tables[mode.value] = metrics(results[mode.value])
    reference = PipelineMode.full.value if PipelineMode.full.value in tables else next(iter(tables))
    return ComparisonReport(tables, results, reference)


def _fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def _table_lines(table: MetricsTable, normalize: bool) -> List[str]:
    lines = []
    for name in METRIC_NAMES:
        if normalize and name == "mean_mttr_ms":
            continue
        for row in table.rows:
            lines.append(f"{row.bug_class} | {name} | {_fmt(row.value(name))}")
    return lines


def _row_record(row: MetricsRow, normalize: bool) -> dict:
    rec = dict(row.__dict__)
    if normalize:
        rec.pop("mean_mttr_ms")
    rec["kind"] = "metrics"
    return rec


def emit_report(table: MetricsTable, comparison: Optional[ComparisonReport], out_dir,
                normalize: bool = False) -> Tuple[Path, Path]:
    """Write ``report.txt`` (class | metric | value) and ``report.jsonl``.

    ``normalize`` drops wall-clock MTTR so equal seeds give identical bytes.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = table.rows[0].config if table.rows else "-"
    f1 = table.row(ALL).f1 if any(r.bug_class == ALL for r in table.rows) else 0.0
    verdict = "meets" if f1 >= F1_TARGET - F1_TOLERANCE else "misses"
    text = [f"# pipeline config: {config}",
            f"# detection: true positive iff the injected site is among the top-{3} hypotheses",
            f"# detection F1 target {F1_TARGET:.2f}, tolerance +/-{F1_TOLERANCE:.2f}: "
            f"overall F1 {f1:.4f} {verdict} the tolerance band",
            f"# excluded trials (not injectable): {table.excluded_total}"
            + "".join(f", {k}={v}" for k, v in table.excluded.items()),
            "class | metric | value"]
    text += _table_lines(table, normalize)
    records = [_row_record(r, normalize) for r in table.rows]
    records.append({"kind": "excluded", "total": table.excluded_total, "by_reason": table.excluded})
    records.append({"kind": "tolerance", "metric": "f1", "target": F1_TARGET, "tolerance": F1_TOLERANCE,
                    "value": f1})
    if comparison is not None:
        for cfg in sorted(comparison.tables):
            if cfg == comparison.reference:
                continue
            text.append(f"# delta {comparison.reference} - {cfg}")
            text.append("class | metric | value")
            for d in comparison.deltas(cfg):
                for name in ("f1", "repair_success_rate", "mean_attempts", "invalid_candidates"):
                    text.append(f"{d['class']} | delta_{name}_vs_{cfg} | {_fmt(d[name])}")
                records.append({"kind": "delta", **d})
        if {"template_only", "search_only"} <= set(comparison.tables):
            text.append("# mean attempts on trials healed by both template_only and search_only")
            text.append("class | metric | value")
            for row in comparison.tables["template_only"].rows:
                if row.bug_class == ALL:
                    continue
                t, s, k = comparison.paired_attempts("template_only", "search_only", row.bug_class)
                text.append(f"{row.bug_class} | template_vs_search_attempts | {_fmt(t)} vs {_fmt(s)} (n={k})")
                records.append({"kind": "paired_attempts", "class": row.bug_class, "template_only": t,
                                "search_only": s, "n": k})
    txt_path, jsonl_path = out_dir / "report.txt", out_dir / "report.jsonl"
    txt_path.write_text("\n".join(text) + "\n", encoding="utf-8")
    jsonl_path.write_text("".join(json.dumps(r, sort_keys=True) + "\n" for r in records), encoding="utf-8")
    return txt_path, jsonl_path
