"""Alert and review bundles under ``.heal/reports/``."""

from __future__ import annotations

import difflib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence

from ..minilang.formatter import format_program
from ..minilang.nodes import Program
from ..workspace import CONFIG_FILE, QUARANTINE_FILE, Workspace, format_table

REPORTS_DIR = "reports"
PENDING_MARKER = "PENDING_APPROVAL"
APPROVED_MARKER = "APPROVED"
CANDIDATE_FILE = "candidate.json"


@dataclass
class AttemptRecord:
    """One verified candidate: what it changed and how verification judged it."""

    number: int
    candidate: Dict[str, Any]
    verdict: Dict[str, Any]
    diff: str


@dataclass
class BundleContent:
    fingerprint: str
    fingerprint_key: str
    outcome: str
    signals: List[Dict[str, Any]] = field(default_factory=list)
    hypotheses: List[Dict[str, Any]] = field(default_factory=list)
    attempts: List[AttemptRecord] = field(default_factory=list)
    note: str = ""
    review: Optional[Dict[str, Any]] = None  # candidate.json content for review bundles


def _sorted_table(table: Mapping[str, Any]) -> str:
    return format_table(dict(sorted(table.items())))


def unified_diff(workspace_name: str, before: Program, after: Optional[Program],
                 config_before: Mapping[str, Any], config_after: Mapping[str, Any],
                 quarantine_before: Mapping[str, int], quarantine_after: Mapping[str, int]) -> str:
    """Unified diff over canonical program text and the config and quarantine tables."""
    chunks = []
    pairs = [
        (f"{workspace_name}.mnd", format_program(before), format_program(after if after is not None else before)),
        (CONFIG_FILE, _sorted_table(config_before), _sorted_table(config_after)),
        (QUARANTINE_FILE, _sorted_table(quarantine_before), _sorted_table(quarantine_after)),
    ]
    for name, old, new in pairs:
        if old == new:
            continue
        chunks.extend(difflib.unified_diff(old.splitlines(keepends=True), new.splitlines(keepends=True),
                                           f"a/{name}", f"b/{name}"))
    return "".join(chunks)


def _summary(content: BundleContent) -> str:
    lines = [f"fingerprint: {content.fingerprint} ({content.fingerprint_key})",
             f"outcome: {content.outcome}"]
    if content.note:
        lines.append(f"note: {content.note}")
    if content.hypotheses:
        top = content.hypotheses[0]
        kinds = sorted({e["kind"] for e in top["evidence"]})
        lines.append(f"top hypothesis: {top['class']} at {top['site']} confidence {top['confidence']:.3f}")
        lines.append(f"evidence kinds: {', '.join(kinds) if kinds else 'none'}")
        for e in top["evidence"]:
            lines.append(f"  - {e['kind']} {e['score']:.3f} {e['detail']}")
    else:
        lines.append("top hypothesis: none")
    lines.append(f"attempts: {len(content.attempts)}")
    for a in content.attempts:
        c = a.candidate
        lines.append(f"  attempt {a.number}: candidate {c['id']} ({c['origin']}) {c['rationale']} -> "
                     f"{a.verdict['decision']}")
    if content.review is not None:
        lines.append("pending approval: heal apply <workspace> --approve <bundle-id>")
    return "\n".join(lines) + "\n"


def _jsonl(records: Sequence[Mapping[str, Any]]) -> str:
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)


def write_bundle(ws: Workspace, content: BundleContent, timestamp: int) -> Path:
    """Write the bundle directory and return its path."""
    base = ws.heal_dir / REPORTS_DIR
    name = f"{content.fingerprint}-{timestamp}"
    root = base / name
    suffix = 2
    while root.exists():
        root = base / f"{name}-{suffix}"
        suffix += 1
    root.mkdir(parents=True)
    (root / "signals.jsonl").write_text(_jsonl(content.signals), encoding="utf-8")
    (root / "hypotheses.jsonl").write_text(_jsonl(content.hypotheses), encoding="utf-8")
    verdicts = []
    for a in content.attempts:
        (root / f"attempt-{a.number}.diff").write_text(a.diff, encoding="utf-8")
        verdicts.append({"attempt": a.number, "candidate": a.candidate["id"], **a.verdict})
    (root / "verdicts.jsonl").write_text(_jsonl(verdicts), encoding="utf-8")
    (root / "summary.txt").write_text(_summary(content), encoding="utf-8")
    if content.review is not None:
        (root / CANDIDATE_FILE).write_text(json.dumps(content.review, sort_keys=True, indent=1), encoding="utf-8")
        (root / PENDING_MARKER).write_text("awaiting heal apply --approve\n", encoding="utf-8")
    return root
