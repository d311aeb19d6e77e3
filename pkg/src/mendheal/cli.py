"""Command-line entry point ``heal``.

Every command prints one ``HEAL <word> <token> <int>`` line on stdout (or a
JSON record with ``--json``); diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import secrets
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from .evalharness import (
    Campaign, CorpusNotGreen, campaign_dir, compare_baselines, emit_report, metrics, read_campaign, run_campaign,
    shipped_fixtures,
)
from .faults.taxonomy import SYNTACTIC_CLASSES, BugClass, FaultError
from .healing.external import ExternalAdapter
from .incidents import StoreUnreadable, StoreUnwritable
from .minilang.paths import dotted
from .orchestrator import (
    ApprovalError, CycleState, FatalRollbackFailure, PipelineMode, PolicyError, approve_bundle, heal_cycle,
    inject_workspace, load_policy,
)
from .verify import EmptyWorkload, canary
from .workspace import Workspace, WorkspaceError, WorkspaceLockHeld

EXIT_OK = 0
EXIT_PENDING = 2
EXIT_ESCALATED = 3
EXIT_USAGE = 64
EXIT_SOFTWARE = 70
EXIT_TEMPFAIL = 75

STATE_EXIT = {
    CycleState.NoFailure: EXIT_OK,
    CycleState.Healed: EXIT_OK,
    CycleState.PendingReview: EXIT_PENDING,
    CycleState.Escalated: EXIT_ESCALATED,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def parse_seed(text: str) -> int:
    if text == "entropy":
        return secrets.randbits(63)
    try:
        return int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer or 'entropy', got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="heal", description="Self-healing pipeline for MendLang workspaces.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p, seed=True):
        p.add_argument("--json", action="store_true", help="emit the outcome as one JSON record")
        if seed:
            p.add_argument("--seed", type=parse_seed, default=0, help="integer or 'entropy' (default 0)")

    p = sub.add_parser("run", help="run one heal cycle")
    p.add_argument("workspace")
    p.add_argument("--policy", help="policy file (default: <workspace>/heal.policy, else built-in)")
    p.add_argument("--mode", choices=[m.value for m in PipelineMode], default=PipelineMode.full.value)
    common(p)

    p = sub.add_parser("inject", help="inject a labelled fault into the workspace")
    p.add_argument("workspace")
    p.add_argument("bug_class", choices=[c.value for c in BugClass])
    p.add_argument("inject_seed", type=int)
    common(p, seed=False)

    p = sub.add_parser("eval", help="run the campaign described by a campaign file")
    p.add_argument("campaign_file")
    p.add_argument("--normalize", action="store_true", help="omit wall-clock MTTR from the report")
    common(p, seed=False)

    p = sub.add_parser("report", help="recompute report.txt/report.jsonl for a campaign directory")
    p.add_argument("campaign_dir")
    p.add_argument("--normalize", action="store_true")
    common(p, seed=False)

    p = sub.add_parser("apply", help="apply a reviewed candidate")
    p.add_argument("workspace")
    p.add_argument("--approve", required=True, metavar="BUNDLE_ID")
    common(p, seed=False)

    p = sub.add_parser("replay", help="replay the recorded workload against the current program")
    p.add_argument("workspace")
    p.add_argument("--window", type=int, default=100)
    common(p, seed=False)
    return parser


def _emit(args, word: str, token: Optional[str], count: int, record: Optional[dict] = None) -> None:
    if args.json:
        print(json.dumps(record if record is not None else {"state": word, "token": token, "count": count},
                         sort_keys=True))
    else:
        print(f"HEAL {word} {token or '-'} {count}")


def _open(path: str) -> Workspace:
    return Workspace.open(Path(path))


def cmd_run(args) -> int:
    ws = _open(args.workspace)
    policy = load_policy(args.policy if args.policy else ws.policy_file)
    if args.policy and not Path(args.policy).is_file():
        raise UsageError(f"policy file {args.policy} not found")
    outcome = heal_cycle(ws, policy, seed=args.seed, mode=PipelineMode(args.mode),
                         adapter=ExternalAdapter.from_env())
    if outcome.bundle is not None:
        print(f"bundle: {outcome.bundle}", file=sys.stderr)
    _emit(args, outcome.state.value, outcome.fingerprint, outcome.attempts, outcome.to_record())
    return STATE_EXIT[outcome.state]


def cmd_inject(args) -> int:
    ws = _open(args.workspace)
    truth = inject_workspace(ws, BugClass(args.bug_class), args.inject_seed)
    _emit(args, "Injected", dotted(truth.site), 0, truth.to_record())
    return EXIT_OK


def _csv(value, default):
    if value is None:
        return list(default)
    return [part.strip() for part in str(value).split(",") if part.strip()]


def load_campaign_file(path: Path):
    """``key = value`` table: name, fixtures, classes, n_per_class, seed, config (a mode or ``compare``)."""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read campaign file: {exc}") from None
    table = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path.name}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        # values may be bare words or quoted strings
        if len(value) >= 2 and value[0] == value[-1] == '"':
            value = value[1:-1]
        table[key] = value
    unknown = set(table) - {"name", "fixtures", "classes", "n_per_class", "seed", "config"}
    if unknown:
        raise UsageError(f"unknown campaign keys: {', '.join(sorted(unknown))}")
    try:
        classes = tuple(BugClass(c) for c in _csv(table.get("classes"), [c.value for c in SYNTACTIC_CLASSES]))
        campaign = Campaign(str(table.get("name", path.stem)), tuple(_csv(table.get("fixtures"), shipped_fixtures())),
                            classes, int(table.get("n_per_class", 4)), int(table.get("seed", 0)))
    except ValueError as exc:
        raise UsageError(f"bad campaign file: {exc}") from None
    config = str(table.get("config", "full"))
    if config != "compare" and config not in {m.value for m in PipelineMode}:
        raise UsageError(f"config must be a pipeline mode or 'compare', got {config!r}")
    return campaign, config


def cmd_eval(args) -> int:
    path = Path(args.campaign_file)
    campaign, config = load_campaign_file(path)
    out_root = path.resolve().parent
    if config == "compare":
        comparison = compare_baselines(campaign.corpus, campaign.classes, campaign.n_per_class, campaign.seed,
                                       name=campaign.name, out_root=out_root)
        table = comparison.tables[comparison.reference]
        trials = sum(len(r.trials) for r in comparison.results.values())
    else:
        campaign = campaign.with_config(PipelineMode(config))
        comparison = None
        result = run_campaign(campaign, out_root)
        table = metrics(result)
        trials = len(result.trials)
    out_dir = campaign_dir(out_root, campaign.name)
    emit_report(table, comparison, out_dir, args.normalize)
    print(f"report: {out_dir / 'report.txt'}", file=sys.stderr)
    _emit(args, "ReportWritten", campaign.name, trials)
    return EXIT_OK


def cmd_report(args) -> int:
    root = Path(args.campaign_dir)
    result = read_campaign(root)
    emit_report(metrics(result), None, root, args.normalize)
    _emit(args, "ReportWritten", result.campaign.name, len(result.trials))
    return EXIT_OK


def cmd_apply(args) -> int:
    ws = _open(args.workspace)
    outcome = approve_bundle(ws, args.approve)
    _emit(args, outcome.state.value, outcome.fingerprint, outcome.attempts, outcome.to_record())
    return EXIT_OK


def cmd_replay(args) -> int:
    ws = _open(args.workspace)
    if args.window <= 0:
        raise UsageError("--window must be positive")
    try:
        result = canary(ws.read_program(), ws.read_workload(), args.window, ws.env())
    except EmptyWorkload as exc:
        raise UsageError(str(exc)) from None
    _emit(args, "Replayed", f"{result.error_rate:.4f}", result.errors,
          {"error_rate": result.error_rate, "errors": result.errors, "calls": result.calls})
    return EXIT_OK


COMMANDS = {"run": cmd_run, "inject": cmd_inject, "eval": cmd_eval, "report": cmd_report, "apply": cmd_apply,
            "replay": cmd_replay}


def dispatch(argv: Sequence[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
        if args.command is None:
            raise UsageError(parser.format_usage().rstrip())
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(str(exc).rstrip(), file=sys.stderr)
        return _fail("UsageError", EXIT_USAGE)
    except (WorkspaceError, PolicyError, ApprovalError, FaultError, CorpusNotGreen, StoreUnreadable) as exc:
        print(f"heal: {exc}", file=sys.stderr)
        print(parser.format_usage().rstrip(), file=sys.stderr)
        return _fail(type(exc).__name__, EXIT_USAGE)
    except WorkspaceLockHeld as exc:
        print(f"heal: {exc}", file=sys.stderr)
        return _fail("WorkspaceLockHeld", EXIT_TEMPFAIL)
    except (FatalRollbackFailure, StoreUnwritable, OSError) as exc:
        print(f"heal: {exc}", file=sys.stderr)
        return _fail(type(exc).__name__, EXIT_SOFTWARE)


def _fail(word: str, code: int) -> int:
    """Error outcomes still print one HEAL line so callers can parse every run."""
    print(f"HEAL {word} - 0")
    return code


def main(argv: Optional[List[str]] = None) -> int:
    return dispatch(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
