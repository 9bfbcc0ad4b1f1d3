import json
import subprocess
import sys

from boothvote import election
from boothvote.cli import main

STAGES = ["enroll", "assign", "signup", "mpc", "vote", "recover", "tally", "aggregate"]


def _init(state, *extra):
    return main(["init", "--state", str(state), "--n-voters", "10", "--group-size", "4",
                 "--k-candidates", "3", "--seed", "cli-tests", *extra])


def test_stage_by_stage(tmp_path, capsys):
    state = tmp_path / "state"
    assert _init(state, "--stall-plan", "1;2", "--deposit-step", "3") == 0
    for stage in STAGES:
        assert main([stage, "--state", str(state)]) == 0, stage
    assert (state / "stage").read_text().strip() == "aggregate"
    assert main(["report", "--state", str(state)]) == 0
    report = json.loads((state / "report.json").read_text())
    assert report["final_tally"] == report["expected_tally"]
    forfeited = report["deposits"]["forfeited_voters"]
    assert "voter-00001" in forfeited
    assert sum(report["final_tally"]) == 10 - len(forfeited)
    for name in ("costs.csv", "transcript.jsonl", "phase_costs.png", "main.json"):
        assert (state / name).stat().st_size > 0
    assert (state / "costs.csv").read_text().startswith("phase,op,count,units")


def test_stage_order_enforced(tmp_path, capsys):
    state = tmp_path / "s"
    _init(state)
    assert main(["mpc", "--state", str(state)]) == 2
    assert "needs 'signup'" in capsys.readouterr().err
    assert main(["enroll", "--state", str(tmp_path / "missing")]) == 2


def test_standalone_booth_tally(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["run", "--out", str(out), "--n-voters", "9", "--choices", "1,1,2,1,1,2,2,2,2",
                 "--seed", "cli"]) == 0
    capsys.readouterr()
    totals = [0, 0]
    for booth_file in sorted((out / "booths").glob("*.json")):
        assert main(["tally", "--booth-file", str(booth_file)]) == 0
        counts = json.loads(capsys.readouterr().out)["counts"]
        totals = [a + b for a, b in zip(totals, counts)]
    assert totals == [4, 5]


def test_tampered_booth_file_is_rejected(tmp_path, capsys):
    out = tmp_path / "run"
    main(["run", "--out", str(out), "--n-voters", "9", "--seed", "cli"])
    path = out / "booths" / "booth-0.json"
    snapshot = json.loads(path.read_text())
    first = next(iter(snapshot["counted_votes"]))
    params_g = int(snapshot["params"]["g"])
    p = int(snapshot["params"]["p"])
    snapshot["counted_votes"][first] = str(int(snapshot["counted_votes"][first]) * params_g % p)
    path.write_text(json.dumps(snapshot))
    assert main(["tally", "--booth-file", str(path)]) == 1
    assert "NoSolution" in capsys.readouterr().err


def test_rejection_gives_nonzero_exit(tmp_path, capsys):
    config = tmp_path / "c.json"
    config.write_text(json.dumps({"n_voters": 9, "group_size": 3, "seed": "x"}))
    state = tmp_path / "s"
    assert main(["init", "--state", str(state), "--config", str(config)]) == 0
    for stage in ("enroll", "assign", "signup"):
        assert main([stage, "--state", str(state)]) == 0
    # drop a voter behind the driver's back so the booth refuses to start the MPC round
    original = election.Election.stage_mpc

    def corrupt(self):
        next(iter(self.booths.values())).state.signed_up.pop()
        original(self)

    election.Election.stage_mpc = corrupt
    try:
        assert main(["mpc", "--state", str(state)]) == 1
    finally:
        election.Election.stage_mpc = original
    assert "TooFewVoters" in capsys.readouterr().err


def test_invalid_config_flag(tmp_path, capsys):
    assert main(["init", "--state", str(tmp_path / "s"), "--group-size", "2"]) == 2


def test_sweep_outputs(tmp_path, capsys):
    assert main(["sweep", "--axis", "mpc_batch", "--group-size", "60", "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "sweep_mpc_batch.csv").read_text().splitlines()
    assert rows[0] == "mpc_batch,per_voter_cost" and len(rows) == 61
    assert (tmp_path / "sweep_mpc_batch.png").stat().st_size > 0
    capsys.readouterr()
    assert main(["sweep", "--axis", "period", "--values", "86400,172800"]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "period_seconds,max_voters"


def test_module_entry_point(tmp_path):
    result = subprocess.run(
        [sys.executable, "-m", "boothvote", "sweep", "--axis", "k", "--values", "1,2,3"],
        capture_output=True, text=True, check=True,
    )
    assert result.stdout.splitlines()[0] == "k,vote_cost,votes_per_block,max_voters"
