"""On-disk workspace layout.

A workspace directory holds exactly one ``<name>.mnd`` program, optional
``<name>.hidden.mnd`` held-out tests, ``app.config`` and ``heal.quarantine``
tables of ``key = value`` lines, ``workload.jsonl``, an optional
``heal.policy``, and the pipeline's own state under ``.heal/``.
"""

from __future__ import annotations

import json
import os
import shutil
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, List, Mapping, Optional

from .fnv import fnv1a64, hex64
from .healing.templates import WorkloadCall
from .minilang.formatter import format_expr, format_program
from .minilang.interpreter import RuntimeEnv
from .minilang.nodes import BoolLit, IntLit, NullLit, Program, StrLit
from .minilang.parser import ParseError, parse, parse_expr

CONFIG_FILE = "app.config"
WORKLOAD_FILE = "workload.jsonl"
POLICY_FILE = "heal.policy"
QUARANTINE_FILE = "heal.quarantine"
HEAL_DIR = ".heal"
LOCK_FILE = "lock"
STATE_FILE = "state.json"
INCIDENTS_FILE = "incidents.jsonl"


class WorkspaceError(Exception):
    """Missing or malformed workspace layout."""


class WorkspaceLockHeld(Exception):
    pass


def parse_table(text: str, source: str = "<table>") -> Dict[str, Any]:
    """``key = literal`` lines; lines starting with ``#`` are comments. Literals use MendLang syntax."""
    out: Dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise WorkspaceError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise WorkspaceError(f"{source}:{lineno}: empty key")
        try:
            node = parse_expr(value)
        except ParseError as exc:
            raise WorkspaceError(f"{source}:{lineno}: bad value: {exc}") from None
        if isinstance(node, (IntLit, StrLit, BoolLit)):
            out[key] = node.value
        elif isinstance(node, NullLit):
            out[key] = None
        else:
            raise WorkspaceError(f"{source}:{lineno}: value must be a literal")
    return out


def _literal(value: Any) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return format_expr(BoolLit(value))
    if isinstance(value, int):
        return format_expr(IntLit(value))
    return format_expr(StrLit(str(value)))


def format_table(table: Mapping[str, Any]) -> str:
    return "".join(f"{k} = {_literal(v)}\n" for k, v in table.items())


def file_hash(data: bytes) -> str:
    return hex64(fnv1a64(data))


class Workspace:
    def __init__(self, root, program_file: Path):
        self.root = Path(root)
        self.program_file = program_file

    @classmethod
    def open(cls, root) -> "Workspace":
        root = Path(root)
        if not root.is_dir():
            raise WorkspaceError(f"{root} is not a directory")
        programs = sorted(p for p in root.glob("*.mnd") if not p.name.endswith(".hidden.mnd"))
        if len(programs) != 1:
            raise WorkspaceError(f"{root} must contain exactly one .mnd program, found {len(programs)}")
        ws = cls(root, programs[0])
        ws.read_program()
        return ws

    # ------------------------------------------------------------- paths

    @property
    def name(self) -> str:
        return self.program_file.name[: -len(".mnd")]

    @property
    def hidden_file(self) -> Path:
        return self.root / f"{self.name}.hidden.mnd"

    @property
    def heal_dir(self) -> Path:
        return self.root / HEAL_DIR

    @property
    def policy_file(self) -> Path:
        return self.root / POLICY_FILE

    @property
    def incidents_file(self) -> Path:
        return self.heal_dir / INCIDENTS_FILE

    # ------------------------------------------------------------ reading

    def read_program(self) -> Program:
        try:
            return parse(self.program_file.read_text(encoding="utf-8"))
        except ParseError as exc:
            raise WorkspaceError(f"{self.program_file.name}: {exc}") from None

    def read_hidden(self) -> Optional[Program]:
        if not self.hidden_file.exists():
            return None
        try:
            return parse(self.hidden_file.read_text(encoding="utf-8"))
        except ParseError as exc:
            raise WorkspaceError(f"{self.hidden_file.name}: {exc}") from None

    def _table(self, name: str) -> Dict[str, Any]:
        path = self.root / name
        if not path.exists():
            return {}
        return parse_table(path.read_text(encoding="utf-8"), name)

    def read_config(self) -> Dict[str, Any]:
        return self._table(CONFIG_FILE)

    def read_quarantine(self) -> Dict[str, int]:
        table = self._table(QUARANTINE_FILE)
        bad = [k for k, v in table.items() if type(v) is not int or v < 1]
        if bad:
            raise WorkspaceError(f"{QUARANTINE_FILE}: rerun counts must be positive ints ({', '.join(bad)})")
        return table

    def read_workload(self) -> List[WorkloadCall]:
        path = self.root / WORKLOAD_FILE
        if not path.exists():
            return []
        calls = []
        for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
                calls.append(WorkloadCall(str(rec["entry"]), list(rec.get("args", [])), int(rec.get("jitter_seed", 0))))
            except (ValueError, KeyError, TypeError) as exc:
                raise WorkspaceError(f"{WORKLOAD_FILE}:{lineno}: {exc}") from None
        return calls

    def env(self, step_limit: Optional[int] = None) -> RuntimeEnv:
        env = RuntimeEnv(config=self.read_config())
        return env if step_limit is None else env.with_step_limit(step_limit)

    # ------------------------------------------------------------ writing

    def write_program(self, program: Program) -> None:
        self.program_file.write_text(format_program(program), encoding="utf-8")

    def write_config(self, config: Mapping[str, Any]) -> None:
        (self.root / CONFIG_FILE).write_text(format_table(config), encoding="utf-8")

    def write_quarantine(self, quarantine: Mapping[str, int]) -> None:
        path = self.root / QUARANTINE_FILE
        if quarantine:
            path.write_text(format_table(dict(sorted(quarantine.items()))), encoding="utf-8")
        elif path.exists():
            path.unlink()

    # -------------------------------------------------------------- state

    def load_state(self) -> dict:
        path = self.heal_dir / STATE_FILE
        if not path.exists():
            return {}
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except ValueError:
            return {}

    def save_state(self, state: dict) -> None:
        self.heal_dir.mkdir(parents=True, exist_ok=True)
        tmp = self.heal_dir / (STATE_FILE + ".tmp")
        tmp.write_text(json.dumps(state, sort_keys=True, indent=1), encoding="utf-8")
        os.replace(tmp, self.heal_dir / STATE_FILE)

    # ------------------------------------------------------------- files

    def files(self) -> List[str]:
        """Tracked files (relative, sorted): everything outside ``.heal/``."""
        out = []
        for path in self.root.rglob("*"):
            rel = path.relative_to(self.root)
            if rel.parts[0] == HEAL_DIR or not path.is_file():
                continue
            out.append(rel.as_posix())
        return sorted(out)

    def hashes(self) -> Dict[str, str]:
        return {rel: file_hash((self.root / rel).read_bytes()) for rel in self.files()}

    @contextmanager
    def lock(self) -> Iterator[None]:
        self.heal_dir.mkdir(parents=True, exist_ok=True)
        path = self.heal_dir / LOCK_FILE
        try:
            fd = os.open(path, os.O_CREAT | os.O_EXCL | os.O_WRONLY, 0o644)
        except FileExistsError:
            raise WorkspaceLockHeld(f"{path} exists; another cycle is running") from None
        try:
            os.write(fd, str(os.getpid()).encode())
            os.close(fd)
            yield
        finally:
            try:
                path.unlink()
            except FileNotFoundError:
                pass

    def copy_to(self, dest) -> "Workspace":
        """Copy tracked files (not ``.heal/``) into ``dest``."""
        dest = Path(dest)
        dest.mkdir(parents=True, exist_ok=True)
        for rel in self.files():
            target = dest / rel
            target.parent.mkdir(parents=True, exist_ok=True)
            shutil.copyfile(self.root / rel, target)
        return Workspace.open(dest)
