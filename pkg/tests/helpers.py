"""Shortcuts for driving a standalone booth through its phases."""
from boothvote.booth import BoothContract
from boothvote.keys import keypair_from_secret
from boothvote.tally import TallyProblem, solve
from boothvote.zkp import prove_dh, prove_membership


def signed_up_booth(params, xs, election_id=""):
    booth = BoothContract(0, params, election_id=election_id)
    keys = [keypair_from_secret(params, x, election_id) for x in xs]
    for i, kp in enumerate(keys):
        booth.sign_up(f"v{i}", kp.pk, 0)
    return booth, keys


def booth_with_keys(params, xs, batch=None, election_id=""):
    booth, keys = signed_up_booth(params, xs, election_id=election_id)
    booth.precompute_right_markers(batch or len(xs))
    for b in range(len(booth.state.right_markers)):
        booth.compute_mpc_batch(b)
    return booth, keys


def cast_all(booth, keys, choices, skip=(), seed="cast"):
    for i, (kp, choice) in enumerate(zip(keys, choices)):
        if i in skip:
            continue
        B, proof = prove_membership(booth.params, kp, booth.state.mpc_keys[i], choice, f"{seed}/{i}")
        booth.cast_vote(i, B, proof)


def recover(booth, keys, skip=(), seed="share"):
    """One recovery round: every active voter not in ``skip`` posts all owed shares."""
    st = booth.state
    for i in st.active():
        if i in skip:
            continue
        owed = [j for j in sorted(st.stalled) if (i, j) not in st.shares]
        shares = [(j, *_share(booth, keys[i], j, f"{seed}/{i}/{j}")) for j in owed]
        if shares:
            booth.submit_shares(i, shares, deposit=booth.required_recovery_deposit() if st.deposit_step else 0)


def _share(booth, kp, j, seed):
    proof = prove_dh(booth.params, kp, booth.pk(j), seed)
    return proof.C, proof


def solve_booth(booth):
    return solve(TallyProblem.from_booth_snapshot(booth.to_dict()))
