import json
import re
import subprocess
import sys


from mendheal.cli import main

LINE = re.compile(r"^HEAL \S+ \S+ -?\d+$")

SWAPPED = """fn bigger(a, b) {
  if a < b {
    return a;
  }
  return b;
}

fn crash() {
  return 1 / 0;
}

fn test_bigger() {
  assert_eq(bigger(3, 5), 5);
}
"""

OOB = """fn total(a) {
  let s = 0;
  let i = 0;
  while i <= len(a) {
    s = s + a[i];
    i = i + 1;
  }
  return s;
}

fn test_total() {
  assert_eq(total([1, 2, 3]), 6);
}
"""


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    lines = out.out.splitlines()
    assert len(lines) == 1, out.out
    return code, lines[0], out.err


def test_green_run(capsys, make_ws):
    ws = make_ws("acct")
    code, line, _ = run(capsys, "run", str(ws.root))
    assert (code, line) == (0, "HEAL NoFailure - 0")


def test_inject_then_heal(capsys, make_ws):
    ws = make_ws("acct")
    code, line, _ = run(capsys, "inject", str(ws.root), "OffByOne", "42")
    assert code == 0 and LINE.match(line)
    code, line, _ = run(capsys, "run", str(ws.root), "--seed", "1")
    state, fp, attempts = line.split()[1:]
    assert (code, state, attempts) == (0, "Healed", "1") and re.fullmatch(r"[0-9a-f]{16}", fp)
    assert (ws.heal_dir / "injections.jsonl").exists()


def test_missing_workspace(capsys, tmp_path):
    code, line, err = run(capsys, "run", str(tmp_path / "nope"))
    assert code == 64 and LINE.match(line) and err


def test_usage_errors(capsys):
    assert main(["frobnicate"]) == 64
    assert main(["run"]) == 64
    assert main(["inject", ".", "NotAClass", "1"]) == 64
    assert main(["run", ".", "--seed", "abc"]) == 64
    capsys.readouterr()


def test_escalated_exit(capsys, source_ws):
    ws = source_ws(SWAPPED, workload='{"entry": "crash", "args": [], "jitter_seed": 0}\n')
    code, line, _ = run(capsys, "run", str(ws.root))
    assert code == 3 and line.split()[1] == "Escalated" and line.endswith(" 3")


def test_review_then_apply(capsys, source_ws):
    ws = source_ws(OOB)
    (ws.root / "heal.policy").write_text("auto_apply_min_confidence = 0.9\n")
    code, line, _ = run(capsys, "run", str(ws.root), "--json")
    rec = json.loads(line[len("HEAL "):]) if line.startswith("HEAL ") else json.loads(line)
    assert code == 2 and rec["state"] == "PendingReview"
    code, line, _ = run(capsys, "apply", str(ws.root), "--approve", rec["bundle"])
    assert code == 0 and line.split()[1] == "Healed"
    code, line, _ = run(capsys, "apply", str(ws.root), "--approve", rec["bundle"])
    assert code == 64


def test_lock_held_exit(capsys, source_ws):
    ws = source_ws(OOB)
    ws.heal_dir.mkdir(exist_ok=True)
    (ws.heal_dir / "lock").write_text("x")
    code, line, _ = run(capsys, "run", str(ws.root))
    assert code == 75 and LINE.match(line)


def test_bad_policy(capsys, source_ws):
    ws = source_ws(OOB)
    (ws.root / "heal.policy").write_text("max_retries = zero\n")
    code, line, _ = run(capsys, "run", str(ws.root))
    assert code == 64


def test_replay(capsys, make_ws):
    ws = make_ws("config")
    code, line, _ = run(capsys, "replay", str(ws.root), "--window", "14")
    assert code == 0 and line == "HEAL Replayed 0.0000 0"


def test_eval_and_report(capsys, tmp_path):
    spec = tmp_path / "mini.campaign"
    spec.write_text("name = mini\nfixtures = acct\nclasses = OffByOne\nn_per_class = 2\nseed = 3\n")
    code, line, _ = run(capsys, "eval", str(spec), "--normalize")
    assert (code, line) == (0, "HEAL ReportWritten mini 2")
    root = tmp_path / ".heal" / "campaigns" / "mini"
    first = (root / "report.txt").read_bytes()
    code, line, _ = run(capsys, "report", str(root), "--normalize")
    assert code == 0 and (root / "report.txt").read_bytes() == first


def test_console_script(tmp_path, make_ws):
    ws = make_ws("strings")
    proc = subprocess.run([sys.executable, "-m", "mendheal", "run", str(ws.root)], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "HEAL NoFailure - 0\n"
