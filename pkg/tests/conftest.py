import shutil

import pytest

from mendheal.evalharness import CORPUS_DIR, shipped_fixtures
from mendheal.workspace import Workspace


@pytest.fixture
def make_ws(tmp_path):
    """Copy a shipped fixture into a scratch directory and open it."""

    def make(name="acct", dest=None):
        target = tmp_path / (dest or name)
        shutil.copytree(CORPUS_DIR / name, target)
        return Workspace.open(target)

    return make


@pytest.fixture
def source_ws(tmp_path):
    """Workspace built from inline source, config and workload text."""

    def make(source, config="", workload="", name="prog", hidden=None):
        root = tmp_path / name
        root.mkdir()
        (root / f"{name}.mnd").write_text(source, encoding="utf-8")
        (root / "app.config").write_text(config, encoding="utf-8")
        if workload:
            (root / "workload.jsonl").write_text(workload, encoding="utf-8")
        if hidden is not None:
            (root / f"{name}.hidden.mnd").write_text(hidden, encoding="utf-8")
        return Workspace.open(root)

    return make


FIXTURES = shipped_fixtures()


ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(n, ok, detail)``."""

    def record(number, ok, detail):
        ACCEPTANCE[number] = (bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
