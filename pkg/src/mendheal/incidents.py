"""Append-only incident memory (``.heal/incidents.jsonl``)."""

from __future__ import annotations

import fcntl
import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

HEALED_OUTCOMES = ("healed_auto", "healed_after_review")
OUTCOMES = HEALED_OUTCOMES + ("escalated", "pending_review")


class StoreUnreadable(Exception):
    pass


class StoreUnwritable(Exception):
    pass


@dataclass
class Incident:
    fingerprint: str
    fingerprint_key: str
    outcome: str
    event: Dict[str, Any] = field(default_factory=dict)
    hypotheses: List[Dict[str, Any]] = field(default_factory=list)
    attempts: List[Dict[str, Any]] = field(default_factory=list)
    healed_class: Optional[str] = None
    timings: Dict[str, Any] = field(default_factory=dict)
    bundle: Optional[str] = None
    note: str = ""

    def to_record(self) -> dict:
        return asdict(self)

    @classmethod
    def from_record(cls, rec: dict) -> "Incident":
        known = {k: rec[k] for k in cls.__dataclass_fields__ if k in rec}
        return cls(**known)


class IncidentStore:
    """One JSON record per line; appends are serialized with an exclusive flock."""

    def __init__(self, path):
        self.path = Path(path)

    def append(self, incident) -> None:
        record = incident.to_record() if isinstance(incident, Incident) else dict(incident)
        line = (json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            fd = os.open(self.path, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o644)
        except OSError as exc:
            raise StoreUnwritable(str(exc)) from None
        try:
            fcntl.flock(fd, fcntl.LOCK_EX)
            view = memoryview(line)
            while view:
                written = os.write(fd, view)
                view = view[written:]
        except OSError as exc:
            raise StoreUnwritable(str(exc)) from None
        finally:
            try:
                fcntl.flock(fd, fcntl.LOCK_UN)
            finally:
                os.close(fd)

    def read(self) -> List[Incident]:
        if not self.path.exists():
            return []
        try:
            with open(self.path, "rb") as fh:
                fcntl.flock(fh.fileno(), fcntl.LOCK_SH)
                try:
                    data = fh.read()
                finally:
                    fcntl.flock(fh.fileno(), fcntl.LOCK_UN)
        except OSError as exc:
            raise StoreUnreadable(str(exc)) from None
        out = []
        for lineno, raw in enumerate(data.decode("utf-8").splitlines(), 1):
            if not raw.strip():
                continue
            try:
                out.append(Incident.from_record(json.loads(raw)))
            except (ValueError, TypeError) as exc:
                raise StoreUnreadable(f"{self.path}:{lineno}: {exc}") from None
        return out


class MemoryStore(IncidentStore):
    """In-process store for campaigns and tests."""

    def __init__(self):
        super().__init__(os.devnull)
        self.records: List[Incident] = []

    def append(self, incident) -> None:
        rec = incident.to_record() if isinstance(incident, Incident) else dict(incident)
        self.records.append(Incident.from_record(json.loads(json.dumps(rec))))

    def read(self) -> List[Incident]:
        return list(self.records)
