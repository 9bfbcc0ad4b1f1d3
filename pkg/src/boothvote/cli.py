"""Command-line driver.

A state directory holds the scenario config and the last completed stage.
Every stage command replays the earlier stages from the seed (the run is
deterministic), executes its own stage, and refreshes the transcript and
contract dumps in the directory.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from .election import STAGES, SWEEP_AXES, Election, ScenarioConfig, ScenarioError, rows_to_csv, sweep
from .errors import ProtocolError
from .plotting import plot_phase_costs, plot_sweep
from .tally import TallyProblem, solve

CONFIG_FILE = "config.json"
STAGE_FILE = "stage"
EXIT_REJECTED = 1
EXIT_USAGE = 2


def _int_list(text: str) -> List[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text: str) -> List[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _stall_plan(text: str) -> List[List[int]]:
    """``"1,5;2"`` -> ``[[1, 5], [2]]``; rounds are separated by ``;``."""
    return [_int_list(rnd) for rnd in text.split(";")]


CONFIG_FLAGS = [
    ("--n-voters", "n_voters", int),
    ("--k-candidates", "k_candidates", int),
    ("--group-size", "group_size", int),
    ("--mpc-batch", "mpc_batch", int),
    ("--deposit-amount", "deposit_amount", int),
    ("--deposit-step", "deposit_step", int),
    ("--platform-profile", "platform_profile", str),
    ("--voting-period-seconds", "voting_period_seconds", int),
    ("--seed", "seed", str),
    ("--election-id", "election_id", str),
    ("--stall-plan", "stall_plan", _stall_plan),
    ("--absent", "absent", _int_list),
    ("--group-bits", "group_bits", int),
    ("--enroll-batch", "enroll_batch", int),
    ("--share-batch", "share_batch", int),
]


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="scenario JSON; flags override its fields")
    for flag, dest, conv in CONFIG_FLAGS:
        p.add_argument(flag, dest=dest, type=conv, default=None)
    dist = p.add_mutually_exclusive_group()
    dist.add_argument("--choices", type=_int_list, help="candidate per voter, e.g. 1,2,1")
    dist.add_argument("--weights", type=_float_list, help="weight per candidate, e.g. 0.7,0.3")


def _config_from_args(args) -> ScenarioConfig:
    data = json.loads(args.config.read_text()) if args.config else {}
    for _, dest, _ in CONFIG_FLAGS:
        value = getattr(args, dest)
        if value is not None:
            data[dest] = value
    if args.choices is not None:
        data["vote_distribution"] = {"choices": args.choices}
    elif args.weights is not None:
        data["vote_distribution"] = {"weights": args.weights}
    return ScenarioConfig.from_dict(data)


# -- state directory ------------------------------------------------------------


def _load_state(state: Path):
    config = ScenarioConfig.load(state / CONFIG_FILE)
    done = (state / STAGE_FILE).read_text().strip()
    return config, done


def _write_outputs(election: Election, out: Path) -> None:
    (out / "transcript.jsonl").write_text(election.ledger.transcript_jsonl())
    (out / "costs.csv").write_text(election.ledger.cost_csv())
    if election.main is not None:
        (out / "main.json").write_text(json.dumps(election.main.to_dict(), sort_keys=True, indent=2) + "\n")
    if election.booths:
        booth_dir = out / "booths"
        booth_dir.mkdir(exist_ok=True)
        for booth_id, booth in sorted(election.booths.items()):
            (booth_dir / f"booth-{booth_id}.json").write_text(
                json.dumps(booth.to_dict(), sort_keys=True, indent=2) + "\n"
            )


def _write_report(election: Election, out: Path) -> dict:
    report = election.report()
    (out / "report.json").write_text(report.to_json())
    plot_phase_costs(report.phase_totals, out / "phase_costs.png")
    return report.to_dict()


def _run_stage(args, stage: str) -> int:
    state: Path = args.state
    try:
        config, done = _load_state(state)
    except FileNotFoundError:
        print(f"error: {state} is not initialised; run 'boothvote init' first", file=sys.stderr)
        return EXIT_USAGE
    expected = STAGES[STAGES.index(stage) - 1]
    if done != expected:
        print(f"error: stage '{stage}' needs '{expected}' completed, state is at '{done}'", file=sys.stderr)
        return EXIT_USAGE
    election = Election(config)
    try:
        election.run(stage)
    except ScenarioError as exc:
        print(f"rejected: {exc}", file=sys.stderr)
        print(json.dumps(exc.receipt.to_dict(), sort_keys=True), file=sys.stderr)
        _write_outputs(election, state)
        return EXIT_REJECTED
    _write_outputs(election, state)
    (state / STAGE_FILE).write_text(stage + "\n")
    print(f"{stage}: ok ({len(election.ledger.entries)} transactions, {election.ledger.height + 1} blocks)")
    return 0


# -- commands ---------------------------------------------------------------


def cmd_init(args) -> int:
    config = _config_from_args(args)
    args.state.mkdir(parents=True, exist_ok=True)
    (args.state / CONFIG_FILE).write_text(json.dumps(config.to_dict(), sort_keys=True, indent=2) + "\n")
    election = Election(config).run("init")
    _write_outputs(election, args.state)
    (args.state / STAGE_FILE).write_text("init\n")
    print(f"init: scenario written to {args.state / CONFIG_FILE}")
    return 0


def cmd_tally(args) -> int:
    if args.booth_file is None:
        return _run_stage(args, "tally")
    snapshot = json.loads(args.booth_file.read_text())
    try:
        tally = solve(TallyProblem.from_booth_snapshot(snapshot))
    except ProtocolError as exc:
        print(f"rejected: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_REJECTED
    print(json.dumps(tally.to_dict(), sort_keys=True))
    return 0


def cmd_report(args) -> int:
    config, done = _load_state(args.state)
    election = Election(config)
    try:
        election.run(done)
    except ScenarioError as exc:
        print(f"rejected: {exc}", file=sys.stderr)
        return EXIT_REJECTED
    out = args.out or args.state
    out.mkdir(parents=True, exist_ok=True)
    _write_outputs(election, out)
    report = _write_report(election, out)
    print(json.dumps({"final_tally": report["final_tally"], "phase_totals": report["phase_totals"]}, sort_keys=True))
    return 0


def cmd_run(args) -> int:
    config = _config_from_args(args)
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    (out / CONFIG_FILE).write_text(json.dumps(config.to_dict(), sort_keys=True, indent=2) + "\n")
    election = Election(config)
    try:
        election.run()
    except ScenarioError as exc:
        print(f"rejected: {exc}", file=sys.stderr)
        _write_outputs(election, out)
        return EXIT_REJECTED
    (out / STAGE_FILE).write_text(STAGES[-1] + "\n")
    _write_outputs(election, out)
    report = _write_report(election, out)
    print(json.dumps({"final_tally": report["final_tally"], "phase_totals": report["phase_totals"]}, sort_keys=True))
    return 0


def cmd_sweep(args) -> int:
    if args.state is not None:
        config, _ = _load_state(args.state)
    else:
        config = _config_from_args(args)
    values = _int_list(args.values) if args.values else None
    rows = sweep(config, args.axis, values)
    text = rows_to_csv(rows)
    if args.out is None:
        sys.stdout.write(text)
        return 0
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / f"sweep_{args.axis}.csv").write_text(text)
    plot_sweep(rows, args.axis, args.out / f"sweep_{args.axis}.png")
    print(f"sweep: {len(rows)} points written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boothvote", description="Self-tallying booth voting simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="write a scenario into a state directory")
    p.add_argument("--state", type=Path, required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_init)

    for stage in STAGES[1:]:
        if stage == "tally":
            continue
        p = sub.add_parser(stage, help=f"run the {stage} stage")
        p.add_argument("--state", type=Path, required=True)
        p.set_defaults(func=lambda args, s=stage: _run_stage(args, s))

    p = sub.add_parser("tally", help="solve and submit booth tallies, or solve one booth file")
    p.add_argument("--state", type=Path)
    p.add_argument("--booth-file", type=Path, help="booth snapshot JSON; prints the tally JSON")
    p.set_defaults(func=cmd_tally)

    p = sub.add_parser("report", help="write report.json, costs.csv and figures")
    p.add_argument("--state", type=Path, required=True)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("run", help="run a whole scenario into an output directory")
    p.add_argument("--out", type=Path, required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="cost-model sweep as CSV (and PNG with --out)")
    p.add_argument("--axis", choices=SWEEP_AXES, required=True)
    p.add_argument("--values", help="comma-separated points; default depends on the axis")
    p.add_argument("--state", type=Path)
    p.add_argument("--out", type=Path)
    _add_config_flags(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "tally" and args.state is None and args.booth_file is None:
        parser.error("tally needs --state or --booth-file")
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
