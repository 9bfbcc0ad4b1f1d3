"""Booth contract: one voting group's sign-up, MPC keys, votes, recovery and tally.

Every operation validates before it writes, so a rejected call leaves the
state untouched. Voter indices are 0-based sign-up positions.
"""
from __future__ import annotations

import copy
import enum
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

from . import metering
from .errors import (
    AlreadyVoted,
    BadDeposit,
    Duplicate,
    InvalidProof,
    MalformedProof,
    MalformedTally,
    MissingShares,
    NotEligible,
    OutOfOrderBatch,
    ProtocolError,
    TallyRejected,
    TooFewVoters,
    WrongPair,
    WrongPhase,
)
from .group import GroupParams
from .tally import Tally
from .zkp import DHProof, MembershipProof, verify_dh, verify_membership

MIN_GROUP = 3


class Phase(str, enum.Enum):
    SIGN_UP = "SignUp"
    PRE_VOTING = "PreVoting"
    VOTING = "Voting"
    FAULT_RECOVERY = "FaultRecovery"
    TALLY = "Tally"
    CLOSED = "Closed"
    VOIDED = "Voided"


def batch_bounds(n: int, batch: int) -> List[Tuple[int, int]]:
    """Inclusive (start, end) index pairs of consecutive MPC batches."""
    return [(s, min(s + batch, n) - 1) for s in range(0, n, batch)]


def mpc_keys_direct(params: GroupParams, pks: Sequence[int]) -> List[int]:
    """Reference MPC keys: product of earlier keys over product of later keys."""
    keys = []
    for i in range(len(pks)):
        left = params.prod(pks[:i])
        right = params.prod(pks[i + 1:])
        keys.append(params.div(left, right))
    return keys


@dataclass
class BoothState:
    booth_id: int
    params: GroupParams
    election_id: str = ""
    deposit: int = 0
    deposit_step: int = 0
    phase: Phase = Phase.SIGN_UP
    signed_up: List[Tuple[str, int]] = field(default_factory=list)
    mpc_batch: int = 0
    right_markers: List[int] = field(default_factory=list)
    act_left: int = 1
    next_batch: int = 0
    mpc_keys: List[Optional[int]] = field(default_factory=list)
    votes: Dict[int, int] = field(default_factory=dict)
    repaired: Dict[int, int] = field(default_factory=dict)
    stalled: Set[int] = field(default_factory=set)
    shares: Dict[Tuple[int, int], int] = field(default_factory=dict)
    recovery_round: int = 0
    round_paid: Dict[int, int] = field(default_factory=dict)
    tally: Optional[Tally] = None

    @property
    def n(self) -> int:
        return len(self.signed_up)

    def active(self) -> List[int]:
        return sorted(i for i in self.votes if i not in self.stalled)


class BoothContract:
    """State machine for a single booth.

    ``registry`` is the main contract (or ``None`` for a standalone booth):
    it answers eligibility queries, escrows deposits and receives the
    verified booth tally.
    """

    def __init__(
        self,
        booth_id: int,
        params: GroupParams,
        registry=None,
        election_id: str = "",
        deposit: int = 0,
        deposit_step: int = 0,
    ):
        self.registry = registry
        self.state = BoothState(
            booth_id=booth_id,
            params=params,
            election_id=election_id,
            deposit=deposit,
            deposit_step=deposit_step,
        )

    @property
    def params(self) -> GroupParams:
        return self.state.params

    def _require(self, *phases: Phase) -> None:
        if self.state.phase not in phases:
            names = "/".join(p.value for p in phases)
            raise WrongPhase(f"booth {self.state.booth_id} is in {self.state.phase.value}, need {names}")

    def _check_sender(self, index: int, sender: Optional[str]) -> None:
        if sender is not None and self.state.signed_up[index][0] != sender:
            raise NotEligible(f"{sender} does not own voter index {index}")

    def index_of(self, address: str) -> int:
        for i, (addr, _) in enumerate(self.state.signed_up):
            if addr == address:
                return i
        raise NotEligible(f"{address} has not signed up in booth {self.state.booth_id}")

    def pk(self, index: int) -> int:
        return self.state.signed_up[index][1]

    # -- phase 2: sign-up -------------------------------------------------

    def sign_up(self, address: str, pk: int, deposit: int) -> int:
        st = self.state
        self._require(Phase.SIGN_UP)
        if self.registry is not None and not self.registry.is_eligible(st.booth_id, address):
            raise NotEligible(f"{address} is not assigned to booth {st.booth_id}")
        metering.count(metering.READ, 1)
        if any(addr == address for addr, _ in st.signed_up):
            raise Duplicate(f"{address} already signed up")
        if st.n >= st.params.n_max:
            raise ProtocolError(f"booth is full ({st.params.n_max} voters fit the count packing)")
        if any(key == pk for _, key in st.signed_up):
            raise Duplicate("ephemeral key already registered")
        if not st.params.is_element(pk) or pk == 1:
            raise ProtocolError("public key is not a usable group element")
        if deposit != st.deposit:
            raise BadDeposit(f"deposit must be exactly {st.deposit}, got {deposit}")
        if self.registry is not None:
            self.registry.escrow(st.booth_id, address, deposit)
        st.signed_up.append((address, pk))
        metering.count(metering.WRITE, 2)
        return st.n - 1

    def void(self) -> None:
        """Close an under-filled booth; its voters get their deposits back."""
        self._require(Phase.SIGN_UP)
        if self.state.n >= MIN_GROUP:
            raise ProtocolError(f"booth has {self.state.n} voters and is not under-filled")
        if self.registry is not None:
            self.registry.void_booth(self.state.booth_id, caller=self)
        self.state.phase = Phase.VOIDED
        metering.count(metering.WRITE)

    # -- phase 3: MPC keys ------------------------------------------------

    def precompute_right_markers(self, mpc_batch: int) -> List[int]:
        """Close sign-up and store, per batch, the product of all keys after it."""
        st = self.state
        self._require(Phase.SIGN_UP)
        if st.n < MIN_GROUP:
            raise TooFewVoters(f"booth has {st.n} voters, need at least {MIN_GROUP}")
        if mpc_batch < 1:
            raise ProtocolError("mpc_batch must be positive")
        params = st.params
        bounds = batch_bounds(st.n, mpc_batch)
        ends = {end: b for b, (_, end) in enumerate(bounds)}
        markers = [1] * len(bounds)
        acc = 1
        for j in range(st.n - 1, -1, -1):
            if j in ends:
                markers[ends[j]] = acc
            if j > 0:
                metering.count(metering.READ)
                acc = params.mul(acc, st.signed_up[j][1])
        st.mpc_batch = mpc_batch
        st.right_markers = markers
        st.act_left = 1
        st.next_batch = 0
        st.mpc_keys = [None] * st.n
        st.phase = Phase.PRE_VOTING
        metering.count(metering.WRITE, len(markers) + 2)
        return markers

    def compute_mpc_batch(self, batch_index: int) -> List[int]:
        st = self.state
        self._require(Phase.PRE_VOTING)
        bounds = batch_bounds(st.n, st.mpc_batch)
        if batch_index != st.next_batch or not 0 <= batch_index < len(bounds):
            raise OutOfOrderBatch(f"expected batch {st.next_batch}, got {batch_index}")
        params = st.params
        start, end = bounds[batch_index]
        size = end - start + 1
        metering.count(metering.READ, 2 + size)
        metering.touch_memory(2 * size)

        # right_tab[t] = product of keys after index start + t
        right_tab = [1] * size
        right_tab[-1] = st.right_markers[batch_index]
        for i in range(end - 1, start - 1, -1):
            right_tab[i - start] = params.mul(right_tab[i - start + 1], st.signed_up[i + 1][1])

        left = st.act_left
        keys = []
        for i in range(start, end + 1):
            keys.append(params.div(left, right_tab[i - start]))
            left = params.mul(left, st.signed_up[i][1])

        st.mpc_keys[start:end + 1] = keys
        st.act_left = left
        st.next_batch += 1
        metering.count(metering.WRITE, size + 2)
        if st.next_batch == len(bounds):
            st.phase = Phase.VOTING
        return keys

    # -- phase 4: voting --------------------------------------------------

    def cast_vote(
        self, voter_index: int, B: int, proof: MembershipProof, sender: Optional[str] = None
    ) -> None:
        st = self.state
        self._require(Phase.VOTING)
        if not 0 <= voter_index < st.n:
            raise NotEligible(f"no voter with index {voter_index}")
        self._check_sender(voter_index, sender)
        metering.count(metering.READ, 3)
        if voter_index in st.votes:
            raise AlreadyVoted(f"voter {voter_index} has already voted")
        try:
            ok = verify_membership(
                st.params, self.pk(voter_index), st.mpc_keys[voter_index], B, proof, st.election_id
            )
        except MalformedProof as exc:
            raise InvalidProof(str(exc)) from exc
        if not ok:
            raise InvalidProof(f"membership proof of voter {voter_index} rejected")
        st.votes[voter_index] = B
        metering.count(metering.WRITE)

    # -- phase 5: fault recovery ------------------------------------------

    def missing_shares(self) -> List[Tuple[int, int]]:
        st = self.state
        return [
            (i, j)
            for i in st.active()
            for j in sorted(st.stalled)
            if (i, j) not in st.shares
        ]

    def open_fault_recovery(self) -> List[int]:
        """Start (or repeat) fault recovery; returns the stalled indices.

        From Voting, everyone who signed up without voting is stalled; if
        nobody is, the booth moves straight to Tally. From FaultRecovery,
        active voters who still owe shares join the stalled set.
        """
        st = self.state
        self._require(Phase.VOTING, Phase.FAULT_RECOVERY)
        if st.phase is Phase.VOTING:
            newly = {i for i in range(st.n) if i not in st.votes}
            if not newly:
                st.phase = Phase.TALLY
                metering.count(metering.WRITE)
                return []
        else:
            newly = {i for i, _ in self.missing_shares()}
            if not newly:
                raise ProtocolError("every share is present; repair the votes instead")
        st.stalled |= newly
        st.recovery_round += 1
        st.phase = Phase.FAULT_RECOVERY if st.active() else Phase.TALLY
        metering.count(metering.WRITE, len(newly) + 2)
        return sorted(st.stalled)

    def required_recovery_deposit(self) -> int:
        return self.state.deposit_step * self.state.recovery_round

    def submit_shares(
        self,
        voter_index: int,
        shares: Sequence[Tuple[int, int, DHProof]],
        sender: Optional[str] = None,
        deposit: int = 0,
    ) -> None:
        """Store key material ``(stalled_index, C, proof)`` shared with stalled voters."""
        st = self.state
        self._require(Phase.FAULT_RECOVERY)
        if voter_index not in st.votes or voter_index in st.stalled:
            raise WrongPair(f"voter {voter_index} is not an active voter")
        self._check_sender(voter_index, sender)
        seen = set()
        for j, C, proof in shares:
            if j not in st.stalled:
                raise WrongPair(f"voter {j} is not stalled")
            if (voter_index, j) in st.shares or j in seen:
                raise Duplicate(f"share ({voter_index}, {j}) already submitted")
            seen.add(j)
            metering.count(metering.READ, 2)
            if proof.C != C or not verify_dh(
                st.params, self.pk(voter_index), self.pk(j), proof, st.election_id
            ):
                raise InvalidProof(f"share ({voter_index}, {j}) failed verification")
        owes = st.deposit_step > 0 and st.round_paid.get(voter_index) != st.recovery_round
        expected = self.required_recovery_deposit() if owes else 0
        if deposit != expected:
            raise BadDeposit(f"recovery deposit must be {expected}, got {deposit}")
        if deposit:
            if self.registry is not None:
                self.registry.escrow(st.booth_id, st.signed_up[voter_index][0], deposit)
            st.round_paid[voter_index] = st.recovery_round
        for j, C, _ in shares:
            st.shares[(voter_index, j)] = C
        metering.count(metering.WRITE, len(shares))

    def submit_share(self, i: int, j: int, C: int, proof: DHProof, sender=None, deposit=0) -> None:
        self.submit_shares(i, [(j, C, proof)], sender=sender, deposit=deposit)

    def repair_votes(self) -> Dict[int, int]:
        """Strip the stalled voters' key material out of every active vote."""
        st = self.state
        self._require(Phase.FAULT_RECOVERY)
        missing = self.missing_shares()
        if missing:
            raise MissingShares(missing)
        params = st.params
        repaired = {}
        for i in st.active():
            value = st.votes[i]
            metering.count(metering.READ, 1 + len(st.stalled))
            for j in sorted(st.stalled):
                C = st.shares[(i, j)]
                # y_i adds x_j for j < i and subtracts it for j > i
                value = params.mul(value, C) if j > i else params.div(value, C)
            repaired[i] = value
        st.repaired = repaired
        st.phase = Phase.TALLY
        metering.count(metering.WRITE, len(repaired) + 1)
        return repaired

    # -- phase 6: booth tally ---------------------------------------------

    def counted_votes(self) -> Dict[int, int]:
        st = self.state
        if st.recovery_round == 0:
            return dict(st.votes)
        return {i: st.repaired[i] for i in st.active() if i in st.repaired}

    def verify_booth_tally(self, claimed: Tally) -> bool:
        st = self.state
        self._require(Phase.TALLY)
        params = st.params
        counted = self.counted_votes()
        if len(claimed.counts) != params.k or any(
            not isinstance(c, int) or c < 0 for c in claimed.counts
        ):
            raise MalformedTally(f"tally must have {params.k} non-negative counts")
        if claimed.total != len(counted):
            raise MalformedTally(f"tally covers {claimed.total} votes, booth counted {len(counted)}")
        metering.count(metering.READ, len(counted) + params.k)
        votes_product = params.prod(counted[i] for i in sorted(counted))
        expected = params.prod(
            params.pow(f, c) for f, c in zip(params.candidates, claimed.counts)
        )
        if votes_product != expected:
            return False
        if self.registry is not None:
            self.registry.submit_booth_tally(st.booth_id, claimed, caller=self)
        st.tally = claimed
        st.phase = Phase.CLOSED
        metering.count(metering.WRITE, params.k + 1)
        return True

    def settlement(self) -> Tuple[List[str], List[str]]:
        """(voters whose deposit is returned, voters who forfeit)."""
        st = self.state
        self._require(Phase.CLOSED, Phase.VOIDED)
        addresses = [addr for addr, _ in st.signed_up]
        forfeit = [addresses[i] for i in sorted(st.stalled)]
        correct = [a for i, a in enumerate(addresses) if i not in st.stalled]
        return correct, forfeit

    # -- ledger plumbing --------------------------------------------------

    def apply(self, op: str, payload: dict, sender: str):
        """Decode and execute a ledger transaction against this booth."""
        if op == "sign_up":
            return self.sign_up(sender, int(payload["pk"]), int(payload["deposit"]))
        if op == "void":
            return self.void()
        if op == "precompute_right_markers":
            return [str(v) for v in self.precompute_right_markers(int(payload["mpc_batch"]))]
        if op == "compute_mpc_batch":
            return [str(v) for v in self.compute_mpc_batch(int(payload["batch_index"]))]
        if op == "cast_vote":
            proof = MembershipProof.from_dict(payload["proof"])
            return self.cast_vote(int(payload["voter_index"]), int(payload["B"]), proof, sender)
        if op == "open_fault_recovery":
            return self.open_fault_recovery()
        if op == "submit_shares":
            shares = [
                (int(s["stalled"]), int(s["C"]), DHProof.from_dict(s["proof"]))
                for s in payload["shares"]
            ]
            return self.submit_shares(
                int(payload["voter_index"]), shares, sender, int(payload.get("deposit", 0))
            )
        if op == "repair_votes":
            return {str(i): str(v) for i, v in self.repair_votes().items()}
        if op == "verify_booth_tally":
            if not self.verify_booth_tally(Tally.from_dict(payload)):
                raise TallyRejected("claimed tally does not match the vote product")
            return True
        raise ProtocolError(f"unknown booth operation {op!r}")

    def snapshot(self) -> BoothState:
        return copy.deepcopy(self.state)

    def restore(self, saved: BoothState) -> None:
        self.state = saved

    def to_dict(self) -> dict:
        st = self.state
        return {
            "booth_id": st.booth_id,
            "election_id": st.election_id,
            "params": st.params.to_dict(),
            "phase": st.phase.value,
            "deposit": st.deposit,
            "deposit_step": st.deposit_step,
            "signed_up": [[addr, str(pk)] for addr, pk in st.signed_up],
            "mpc_batch": st.mpc_batch,
            "right_markers": [str(v) for v in st.right_markers],
            "act_left": str(st.act_left),
            "next_batch": st.next_batch,
            "mpc_keys": [None if v is None else str(v) for v in st.mpc_keys],
            "votes": {str(i): str(v) for i, v in sorted(st.votes.items())},
            "repaired": {str(i): str(v) for i, v in sorted(st.repaired.items())},
            "stalled": sorted(st.stalled),
            "shares": {f"{i},{j}": str(c) for (i, j), c in sorted(st.shares.items())},
            "recovery_round": st.recovery_round,
            "counted_votes": {str(i): str(v) for i, v in sorted(self.counted_votes().items())}
            if st.phase in (Phase.TALLY, Phase.CLOSED)
            else {},
            "tally": None if st.tally is None else list(st.tally.counts),
        }
