"""Workspace snapshots and hash-checked rollback.

A snapshot lives in ``.heal/snapshots/<id>/``: verbatim copies of every
tracked file under ``files/`` plus a ``manifest`` of ``path<TAB>hash`` lines.
"""

from __future__ import annotations

import os
import shutil
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Tuple, Union

from ..workspace import Workspace, file_hash

SNAPSHOT_DIR = "snapshots"
MANIFEST = "manifest"


class SnapshotMissing(Exception):
    """The snapshot store is absent, incomplete or tampered with."""


class HashMismatchAfterRestore(Exception):
    pass


@dataclass(frozen=True)
class WorkspaceSnapshot:
    id: str
    files: Tuple[Tuple[str, str], ...]  # (relative path, hash) sorted by path

    @property
    def hashes(self) -> Dict[str, str]:
        return dict(self.files)


def snapshot_root(ws: Workspace, snapshot_id: str) -> Path:
    return ws.heal_dir / SNAPSHOT_DIR / snapshot_id


def take_snapshot(ws: Workspace, snapshot_id: str) -> WorkspaceSnapshot:
    root = snapshot_root(ws, snapshot_id)
    if root.exists():
        shutil.rmtree(root)
    (root / "files").mkdir(parents=True)
    entries = []
    for rel in ws.files():
        data = (ws.root / rel).read_bytes()
        target = root / "files" / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(data)
        entries.append((rel, file_hash(data)))
    (root / MANIFEST).write_text("".join(f"{p}\t{h}\n" for p, h in entries), encoding="utf-8")
    return WorkspaceSnapshot(snapshot_id, tuple(entries))


def load_snapshot(ws: Workspace, snapshot_id: str) -> WorkspaceSnapshot:
    manifest = snapshot_root(ws, snapshot_id) / MANIFEST
    if not manifest.is_file():
        raise SnapshotMissing(f"no manifest for snapshot {snapshot_id}")
    entries = []
    for lineno, line in enumerate(manifest.read_text(encoding="utf-8").splitlines(), 1):
        parts = line.split("\t")
        if len(parts) != 2 or len(parts[1]) != 16:
            raise SnapshotMissing(f"snapshot {snapshot_id} manifest line {lineno} is malformed")
        entries.append((parts[0], parts[1]))
    return WorkspaceSnapshot(snapshot_id, tuple(entries))


def rollback(ws: Workspace, snapshot: Union[WorkspaceSnapshot, str]) -> WorkspaceSnapshot:
    """Restore tracked files byte-for-byte; files created since the snapshot are removed."""
    snapshot_id = snapshot if isinstance(snapshot, str) else snapshot.id
    stored = load_snapshot(ws, snapshot_id)
    if not isinstance(snapshot, str) and stored.files != snapshot.files:
        raise SnapshotMissing(f"snapshot {snapshot_id} manifest differs from the one taken")
    copies: Dict[str, bytes] = {}
    for rel, expected in stored.files:
        copy = snapshot_root(ws, snapshot_id) / "files" / rel
        if not copy.is_file():
            raise SnapshotMissing(f"snapshot {snapshot_id} lacks {rel}")
        data = copy.read_bytes()
        if file_hash(data) != expected:
            raise SnapshotMissing(f"snapshot {snapshot_id} copy of {rel} was altered")
        copies[rel] = data
    # Every copy is validated above before the workspace is touched.
    current = ws.hashes()
    for rel in current:
        if rel not in copies:
            os.remove(ws.root / rel)
    for rel, data in copies.items():
        if current.get(rel) != file_hash(data):
            target = ws.root / rel
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_bytes(data)
    if ws.hashes() != stored.hashes:
        raise HashMismatchAfterRestore(f"workspace does not match snapshot {snapshot_id} after restore")
    return stored


def discard_snapshot(ws: Workspace, snapshot_id: str) -> None:
    shutil.rmtree(snapshot_root(ws, snapshot_id), ignore_errors=True)
