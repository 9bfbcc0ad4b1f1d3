import csv
import io

import pytest

from boothvote.booth import Phase
from boothvote.election import Election, ScenarioConfig, ScenarioError, rows_to_csv, run_scenario, sweep


def _config(**kw):
    base = dict(n_voters=9, k_candidates=2, group_size=3, mpc_batch=2, seed="election-tests")
    base.update(kw)
    return ScenarioConfig(**base)


def test_all_vote_for_first_candidate():
    report = run_scenario(_config(vote_distribution={"choices": [1] * 9}))
    assert report.final_tally == [9, 0]
    assert len(report.booths) == 3
    assert report.ledger["rejected"] == 0


def test_single_staller_forfeits():
    choices = [1, 2, 1, 2, 2, 1, 1, 1, 2]
    report = run_scenario(_config(vote_distribution={"choices": choices}, stall_plan=[[4]]))
    expected = [sum(1 for i, c in enumerate(choices) if c == cand and i != 4) for cand in (1, 2)]
    assert report.final_tally == expected == report.expected_tally
    assert sum(report.final_tally) == 8
    assert report.deposits["forfeited_voters"] == ["voter-00004"]
    assert report.deposits["Forfeit"] == 100


def test_stalling_one_by_one_takes_extra_rounds():
    config = _config(n_voters=12, group_size=6, mpc_batch=3, deposit_step=5)
    election = Election(config).run("assign")
    booth0 = election.main.state.booths[0].members
    stallers = [election.index_of[a] for a in booth0[:3]]
    config = _config(n_voters=12, group_size=6, mpc_batch=3, deposit_step=5,
                     stall_plan=[[stallers[0]], [stallers[1]], [stallers[2]]])
    report = run_scenario(config)
    rounds = {b["booth_id"]: b["rounds"] for b in report.booths}
    assert rounds == {0: len(stallers) + 1, 1: 1}
    assert report.deposits["forfeited_voters"] == sorted(f"voter-{i:05d}" for i in stallers)
    assert report.final_tally == report.expected_tally
    assert sum(report.final_tally) == 9


def test_absent_voters_void_small_booth():
    election = Election(_config(n_voters=9)).run("assign")
    members = election.main.state.booths[2].members
    absent = [election.index_of[a] for a in members[:2]]
    election = Election(_config(n_voters=9, absent=absent)).run()
    assert election.booths[2].state.phase is Phase.VOIDED
    report = election.report()
    assert sum(report.final_tally) == 6
    assert report.deposits["Refunded"] == 7 * 100


def test_weighted_distribution_is_reproducible():
    config = _config(n_voters=15, group_size=5, k_candidates=3, vote_distribution={"weights": [0.6, 0.3, 0.1]})
    a, b = run_scenario(config), run_scenario(config)
    assert a.to_json() == b.to_json()
    assert a.final_tally == a.expected_tally


def test_zero_weight_candidate_never_chosen():
    report = run_scenario(_config(vote_distribution={"weights": [0, 1]}))
    assert report.final_tally == [0, 9]


def test_report_fields():
    report = run_scenario(_config())
    assert set(report.phase_totals) == {"setup", "signup", "pre-voting", "voting", "fault-recovery",
                                        "tally", "final-tally"}
    assert sum(r["units"] for r in report.phase_costs) == sum(report.phase_totals.values())
    cap = report.capacity
    assert cap["headroom"] == cap["voting_units_available"] - cap["voting_units_used"]
    assert report.final_tally == [sum(x) for x in zip(*(b["tally"] for b in report.booths))]


@pytest.mark.parametrize(
    "bad",
    [dict(group_size=2), dict(stall_plan=[[9]]), dict(vote_distribution={"weights": [-1, 2]}),
     dict(vote_distribution={"choices": [1, 2]}), dict(platform_profile="nope"), dict(n_voters=2),
     dict(vote_distribution={"mystery": 1})],
)
def test_config_validation(bad):
    with pytest.raises(ValueError):
        _config(**bad)


def test_config_roundtrip(tmp_path):
    config = _config(stall_plan=[[1], [2]], vote_distribution={"weights": [1, 2]})
    path = tmp_path / "c.json"
    path.write_text(__import__("json").dumps(config.to_dict()))
    assert ScenarioConfig.load(path) == config
    with pytest.raises(ValueError):
        ScenarioConfig.from_dict({"unknown_field": 1})


def test_undeclared_rejection_surfaces_receipt():
    election = Election(_config()).run("signup")
    election.ledger.contracts["booth-0"].state.signed_up.clear()  # corrupt the booth behind the driver
    with pytest.raises(ScenarioError) as info:
        election.run("mpc")
    assert info.value.receipt.error == "TooFewVoters"


def test_sweeps():
    config = _config(group_size=100, mpc_batch=10)
    rows = sweep(config, "mpc_batch")
    best = min(rows, key=lambda r: r["per_voter_cost"])["mpc_batch"]
    assert 1 < best < 100
    k_rows = sweep(config, "k", range(1, 11))
    assert all(a["vote_cost"] < b["vote_cost"] for a, b in zip(k_rows, k_rows[1:]))
    p_rows = sweep(config, "period")
    per_day = p_rows[0]["max_voters"]
    assert [r["max_voters"] for r in p_rows] == [per_day * d for d in range(1, 8)]
    n_rows = sweep(_config(group_size=12), "n")
    assert n_rows[-1]["tally_search_space"] == 13
    with pytest.raises(ValueError):
        sweep(config, "bogus")


def test_rows_to_csv():
    text = rows_to_csv([{"a": 1, "b": 2.5}, {"a": 2, "b": 3.0}])
    assert list(csv.DictReader(io.StringIO(text))) == [{"a": "1", "b": "2.5"}, {"a": "2", "b": "3.0"}]
    assert rows_to_csv([]) == ""
