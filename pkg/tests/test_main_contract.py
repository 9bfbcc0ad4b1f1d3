import pytest
from hypothesis import given, strategies as st

from boothvote.errors import DuplicateBooth, InconsistentLists, NotAuthority, NotEligible, ProtocolError, WrongPhase
from boothvote.group import generate_params
from boothvote.keys import keygen
from boothvote.main_contract import DepositStatus, MainContract, MainPhase, group_sizes, shuffle_addresses
from boothvote.tally import Tally

from helpers import cast_all, recover


@pytest.mark.parametrize(
    "total, size, expected",
    [(10, 4, [4, 3, 3]), (13, 4, [4, 3, 3, 3]), (5, 4, [5]), (7, 3, [3, 4]), (3, 100, [3]), (12, 4, [4, 4, 4]),
     (9, 3, [3, 3, 3]), (11, 4, [4, 4, 3])],
)
def test_group_sizes(total, size, expected):
    assert group_sizes(total, size) == expected


@given(st.integers(3, 400), st.integers(3, 40))
def test_group_sizes_cover_everyone(total, size):
    sizes = group_sizes(total, size)
    assert sum(sizes) == total
    assert min(sizes) >= 3


def test_shuffle_is_keyed_and_deterministic():
    addrs = [f"a{i}" for i in range(30)]
    assert shuffle_addresses(addrs, b"s") == shuffle_addresses(addrs, b"s")
    assert shuffle_addresses(addrs, b"s") != shuffle_addresses(addrs, b"t")
    assert sorted(shuffle_addresses(addrs, b"s")) == sorted(addrs)


def _deployed(n=10, size=4, deposit=5, k=2):
    mc = MainContract("e", "auth")
    mc.enroll_batch("auth", [f"v{i}" for i in range(n)])
    groups = mc.assign_groups("auth", size, b"seed")
    params = generate_params(64, max(len(m) for m in groups.values()), k, b"main-tests")
    booths = mc.deploy_booths("auth", params, deposit)
    return mc, booths, params


def test_enrollment():
    mc = MainContract("e", "auth")
    assert mc.enroll_batch("auth", ["a", "b", "c"]) == []
    assert mc.enroll_batch("auth", ["d", "a", "e"]) == ["a"]
    assert mc.state.enrolled == ["a", "b", "c", "d", "e"]
    with pytest.raises(NotAuthority):
        mc.enroll_batch("mallory", ["x"])


def test_assignment_and_eligibility():
    mc, booths, _ = _deployed()
    assert [len(d.members) for d in mc.state.booths.values()] == [4, 3, 3]
    member = mc.state.booths[1].members[0]
    assert mc.is_eligible(1, member)
    assert not mc.is_eligible(0, member)
    assert not mc.is_eligible(0, "stranger")
    with pytest.raises(NotEligible):
        booths[0].sign_up(member, 7, 5)
    with pytest.raises(WrongPhase):
        mc.enroll_batch("auth", ["late"])


def test_deploy_needs_room_for_largest_group():
    mc = MainContract("e", "auth")
    mc.enroll_batch("auth", [f"v{i}" for i in range(10)])
    mc.assign_groups("auth", 4, b"seed")
    with pytest.raises(ProtocolError):
        mc.deploy_booths("auth", generate_params(64, 3, 2, b"small"))


def _run_booth(mc, booth, params, choices, skip=()):
    members = mc.state.booths[booth.state.booth_id].members
    keys = [keygen(params, f"k/{a}", "e") for a in members]
    for addr, kp in zip(members, keys):
        booth.sign_up(addr, kp.pk, booth.state.deposit)
    booth.precompute_right_markers(2)
    for b in range(len(booth.state.right_markers)):
        booth.compute_mpc_batch(b)
    cast_all(booth, keys, choices, skip=skip)
    booth.open_fault_recovery()
    if booth.state.stalled:
        recover(booth, keys)
        booth.repair_votes()


def test_final_tally_and_deposits():
    mc, booths, params = _deployed()
    _run_booth(mc, booths[0], params, [1, 2, 2, 2])
    _run_booth(mc, booths[1], params, [1, 1, 2], skip={2})
    assert booths[0].verify_booth_tally(Tally((1, 3)))
    assert mc.state.final_tally is None
    assert mc.partial_tally() == Tally((1, 3))
    assert booths[1].verify_booth_tally(Tally((2, 0)))
    _run_booth(mc, booths[2], params, [2, 2, 2])
    assert booths[2].verify_booth_tally(Tally((0, 3)))
    assert mc.state.final_tally == Tally((3, 6))
    assert mc.state.phase is MainPhase.FINALIZED
    with pytest.raises(DuplicateBooth):
        mc.submit_booth_tally(0, Tally((1, 3)), caller=booths[0])

    for booth in booths:
        correct, forfeit = booth.settlement()
        mc.settle_deposits("auth", booth.state.booth_id, correct, forfeit)
    staller = mc.state.booths[1].members[2]
    statuses = {a: r.status for a, r in mc.state.deposits.items()}
    assert statuses.pop(staller) is DepositStatus.FORFEIT
    assert set(statuses.values()) == {DepositStatus.REFUNDED}
    assert mc.deposit_totals()["Forfeit"] == 5
    assert mc.state.balances[mc.state.booths[0].members[0]] == 5


def test_only_the_booth_reports_its_tally():
    mc, booths, _ = _deployed()
    with pytest.raises(ProtocolError):
        mc.submit_booth_tally(0, Tally((0, 0)), caller=booths[1])


def test_inconsistent_settlement_lists():
    mc, booths, params = _deployed()
    _run_booth(mc, booths[0], params, [1, 1, 1, 1])
    booths[0].verify_booth_tally(Tally((4, 0)))
    members = list(mc.state.booths[0].members)
    with pytest.raises(InconsistentLists):
        mc.settle_deposits("auth", 0, members, members[:1])
    with pytest.raises(InconsistentLists):
        mc.settle_deposits("auth", 0, members + [mc.state.booths[1].members[0]], [])
    with pytest.raises(WrongPhase):
        mc.settle_deposits("auth", 1, [], [])
    mc.settle_deposits("auth", 0, members, [])
    with pytest.raises(InconsistentLists):
        mc.settle_deposits("auth", 0, members, [])


def test_voided_booth_is_skipped_in_final_tally():
    mc, booths, params = _deployed(n=10, size=4)
    _run_booth(mc, booths[0], params, [1, 1, 1, 1])
    _run_booth(mc, booths[1], params, [2, 2, 2])
    members = mc.state.booths[2].members
    booths[2].sign_up(members[0], keygen(params, "lonely", "e").pk, 5)
    booths[2].void()
    booths[0].verify_booth_tally(Tally((4, 0)))
    booths[1].verify_booth_tally(Tally((0, 3)))
    assert mc.state.final_tally == Tally((4, 3))
