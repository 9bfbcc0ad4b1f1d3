"""Main contract: enrollment, group assignment, booth directory, deposits, final tally."""
from __future__ import annotations

import copy
import enum
import hashlib
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from . import metering
from .booth import MIN_GROUP, BoothContract
from .errors import (
    DuplicateBooth,
    InconsistentLists,
    NotAuthority,
    ProtocolError,
    TooFewVoters,
    UnknownBooth,
    WrongPhase,
)
from .group import GroupParams, Seed, as_bytes
from .tally import Tally


class MainPhase(str, enum.Enum):
    ENROLLMENT = "Enrollment"
    ASSIGNED = "Assigned"
    DEPLOYED = "Deployed"
    FINALIZED = "Finalized"


class DepositStatus(str, enum.Enum):
    ESCROWED = "Escrowed"
    REFUNDABLE = "Refundable"
    FORFEIT = "Forfeit"
    REFUNDED = "Refunded"


@dataclass
class DepositRecord:
    voter: str
    amount: int
    status: DepositStatus = DepositStatus.ESCROWED


@dataclass
class BoothDescriptor:
    booth_id: int
    members: Tuple[str, ...]
    voided: bool = False


@dataclass
class MainState:
    election_id: str
    authority: str
    phase: MainPhase = MainPhase.ENROLLMENT
    enrolled: List[str] = field(default_factory=list)
    assignment: Dict[str, int] = field(default_factory=dict)
    booths: Dict[int, BoothDescriptor] = field(default_factory=dict)
    params: Optional[GroupParams] = None
    booth_tallies: Dict[int, Tally] = field(default_factory=dict)
    final_tally: Optional[Tally] = None
    deposits: Dict[str, DepositRecord] = field(default_factory=dict)
    balances: Dict[str, int] = field(default_factory=dict)
    settled: List[int] = field(default_factory=list)
    group_size: int = 0
    seed: bytes = b""


def group_sizes(total: int, group_size: int) -> List[int]:
    """Split ``total`` voters into consecutive groups of ``group_size``.

    A trailing group smaller than 3 first borrows one voter at a time from the
    preceding groups (last group first) as long as they stay at 3 or more.
    If that cannot lift it to 3, its voters are instead spread one per group
    over the last groups, which may then exceed ``group_size``.
    """
    if total < MIN_GROUP:
        raise TooFewVoters(f"{total} voters cannot form a group of {MIN_GROUP}")
    if group_size < MIN_GROUP:
        raise ValueError(f"group size must be at least {MIN_GROUP}")
    full, rem = divmod(total, group_size)
    sizes = [group_size] * full
    if rem == 0:
        return sizes
    if rem >= MIN_GROUP or full == 0:
        return sizes + [rem]
    borrowed = list(sizes)
    last = rem
    donor = len(borrowed) - 1
    while last < MIN_GROUP:
        # walk backwards over donors, wrapping, while any donor can spare one
        candidates = [d for d in range(len(borrowed)) if borrowed[d] > MIN_GROUP]
        if not candidates:
            break
        while borrowed[donor] <= MIN_GROUP:
            donor = (donor - 1) % len(borrowed)
        borrowed[donor] -= 1
        last += 1
        donor = (donor - 1) % len(borrowed)
    if last >= MIN_GROUP:
        return borrowed + [last]
    for t in range(rem):
        sizes[-1 - (t % full)] += 1
    return sizes


def shuffle_addresses(addresses: Sequence[str], seed: Seed) -> List[str]:
    """Keyed-hash permutation: sort by SHA-256(seed || address)."""
    key = as_bytes(seed)
    return sorted(addresses, key=lambda a: hashlib.sha256(key + b"\x00" + a.encode()).digest())


class MainContract:
    def __init__(self, election_id: str, authority: str):
        self.state = MainState(election_id=election_id, authority=authority)
        self.booth_contracts: Dict[int, BoothContract] = {}

    @property
    def election_id(self) -> str:
        return self.state.election_id

    def _authority(self, caller: str) -> None:
        if caller != self.state.authority:
            raise NotAuthority(f"{caller} is not the voting authority")

    def _require(self, *phases: MainPhase) -> None:
        if self.state.phase not in phases:
            raise WrongPhase(f"main contract is in {self.state.phase.value}")

    def _booth(self, booth_id: int) -> BoothDescriptor:
        if booth_id not in self.state.booths:
            raise UnknownBooth(f"no booth {booth_id}")
        return self.state.booths[booth_id]

    # -- setup ------------------------------------------------------------

    def enroll_batch(self, caller: str, addresses: Sequence[str]) -> List[str]:
        """Enroll addresses; returns the ones rejected as duplicates."""
        self._authority(caller)
        self._require(MainPhase.ENROLLMENT)
        known = set(self.state.enrolled)
        rejected = []
        for addr in addresses:
            metering.count(metering.READ)
            if addr in known:
                rejected.append(addr)
                continue
            known.add(addr)
            self.state.enrolled.append(addr)
            metering.count(metering.WRITE)
        return rejected

    def assign_groups(self, caller: str, group_size: int, seed: Seed) -> Dict[int, Tuple[str, ...]]:
        self._authority(caller)
        self._require(MainPhase.ENROLLMENT)
        st = self.state
        if group_size < MIN_GROUP:
            raise ProtocolError(f"group size must be at least {MIN_GROUP}")
        sizes = group_sizes(len(st.enrolled), group_size)
        order = shuffle_addresses(st.enrolled, seed)
        booths, assignment, pos = {}, {}, 0
        for booth_id, size in enumerate(sizes):
            members = tuple(order[pos:pos + size])
            pos += size
            booths[booth_id] = BoothDescriptor(booth_id, members)
            for addr in members:
                assignment[addr] = booth_id
        st.booths, st.assignment = booths, assignment
        st.group_size, st.seed = group_size, as_bytes(seed)
        st.phase = MainPhase.ASSIGNED
        metering.count(metering.WRITE, len(assignment) + len(booths))
        return {b: d.members for b, d in booths.items()}

    def deploy_booths(
        self, caller: str, params: GroupParams, deposit: int = 0, deposit_step: int = 0
    ) -> List[BoothContract]:
        """Instantiate one booth contract per group with the agreed parameters."""
        self._authority(caller)
        self._require(MainPhase.ASSIGNED)
        largest = max(len(d.members) for d in self.state.booths.values())
        if largest > params.n_max:
            raise ProtocolError(f"params support groups up to {params.n_max}, largest is {largest}")
        contracts = {
            booth_id: BoothContract(booth_id, params, self, self.election_id, deposit, deposit_step)
            for booth_id in self.state.booths
        }
        self.booth_contracts = contracts
        self.state.params = params
        self.state.phase = MainPhase.DEPLOYED
        metering.count(metering.WRITE, len(contracts) + 1)
        return [contracts[b] for b in sorted(contracts)]

    # -- queries used by booths ------------------------------------------

    def is_eligible(self, booth_id: int, address: str) -> bool:
        self._booth(booth_id)
        metering.count(metering.READ)
        return self.state.assignment.get(address) == booth_id

    def escrow(self, booth_id: int, address: str, amount: int) -> None:
        if self.state.assignment.get(address) != booth_id:
            raise ProtocolError(f"{address} cannot escrow in booth {booth_id}")
        record = self.state.deposits.get(address)
        if record is None:
            self.state.deposits[address] = DepositRecord(address, amount)
        elif record.status is DepositStatus.ESCROWED:
            record.amount += amount
        else:
            raise ProtocolError(f"deposit of {address} is already settled")
        metering.count(metering.WRITE)

    def _calling_booth(self, booth_id: int, caller) -> None:
        self._booth(booth_id)
        if self.booth_contracts.get(booth_id) is not caller:
            raise ProtocolError("only the booth contract itself may report for its booth")

    def void_booth(self, booth_id: int, caller) -> None:
        self._calling_booth(booth_id, caller)
        self.state.booths[booth_id].voided = True
        self._maybe_finalize()

    def submit_booth_tally(self, booth_id: int, tally: Tally, caller) -> None:
        self._calling_booth(booth_id, caller)
        st = self.state
        if booth_id in st.booth_tallies:
            raise DuplicateBooth(f"booth {booth_id} already reported")
        st.booth_tallies[booth_id] = tally
        metering.count(metering.WRITE, len(tally.counts))
        self._maybe_finalize()

    def _maybe_finalize(self) -> None:
        st = self.state
        live = [b for b, d in st.booths.items() if not d.voided]
        if all(b in st.booth_tallies for b in live) and st.params is not None:
            st.final_tally = self.partial_tally()
            st.phase = MainPhase.FINALIZED

    def partial_tally(self) -> Tally:
        """Sum of the booth tallies reported so far."""
        k = self.state.params.k
        total = Tally.zero(k)
        for booth_id in sorted(self.state.booth_tallies):
            total = total + self.state.booth_tallies[booth_id]
        return total

    # -- deposits ---------------------------------------------------------

    def settle_deposits(
        self, caller: str, booth_id: int, correct_voters: Sequence[str], forfeiting_voters: Sequence[str]
    ) -> None:
        self._authority(caller)
        st = self.state
        desc = self._booth(booth_id)
        if not desc.voided and booth_id not in st.booth_tallies:
            raise WrongPhase(f"booth {booth_id} is neither closed nor voided")
        correct, forfeit = set(correct_voters), set(forfeiting_voters)
        if correct & forfeit:
            raise InconsistentLists(f"voters in both lists: {sorted(correct & forfeit)}")
        for addr in correct | forfeit:
            record = st.deposits.get(addr)
            if st.assignment.get(addr) != booth_id or record is None:
                raise InconsistentLists(f"{addr} holds no deposit in booth {booth_id}")
            if record.status is not DepositStatus.ESCROWED:
                raise InconsistentLists(f"deposit of {addr} already settled")
        for addr in sorted(forfeit):
            st.deposits[addr].status = DepositStatus.FORFEIT
        for addr in sorted(correct):
            record = st.deposits[addr]
            record.status = DepositStatus.REFUNDABLE
            st.balances[addr] = st.balances.get(addr, 0) + record.amount
            record.status = DepositStatus.REFUNDED
        st.settled.append(booth_id)
        metering.count(metering.WRITE, 2 * len(correct) + len(forfeit))

    def deposit_totals(self) -> Dict[str, int]:
        totals = {status.value: 0 for status in DepositStatus}
        for record in self.state.deposits.values():
            totals[record.status.value] += record.amount
        totals["escrowed_total"] = sum(r.amount for r in self.state.deposits.values())
        return totals

    # -- ledger plumbing --------------------------------------------------

    def apply(self, op: str, payload: dict, sender: str):
        if op == "enroll_batch":
            return self.enroll_batch(sender, payload["addresses"])
        if op == "assign_groups":
            groups = self.assign_groups(sender, int(payload["group_size"]), payload["seed"])
            return {str(b): list(m) for b, m in groups.items()}
        if op == "deploy_booths":
            params = GroupParams.from_dict(payload["params"])
            booths = self.deploy_booths(
                sender, params, int(payload.get("deposit", 0)), int(payload.get("deposit_step", 0))
            )
            return [b.state.booth_id for b in booths]
        if op == "settle_deposits":
            return self.settle_deposits(
                sender, int(payload["booth_id"]), payload["correct"], payload["forfeiting"]
            )
        raise ProtocolError(f"unknown main-contract operation {op!r}")

    def snapshot(self) -> MainState:
        return copy.deepcopy(self.state)

    def restore(self, saved: MainState) -> None:
        self.state = saved

    def to_dict(self) -> dict:
        st = self.state
        return {
            "election_id": st.election_id,
            "authority": st.authority,
            "phase": st.phase.value,
            "enrolled": list(st.enrolled),
            "assignment": dict(sorted(st.assignment.items())),
            "booths": {
                str(b): {"members": list(d.members), "voided": d.voided}
                for b, d in sorted(st.booths.items())
            },
            "params": None if st.params is None else st.params.to_dict(),
            "booth_tallies": {str(b): list(t.counts) for b, t in sorted(st.booth_tallies.items())},
            "final_tally": None if st.final_tally is None else list(st.final_tally.counts),
            "deposits": {
                a: {"amount": r.amount, "status": r.status.value}
                for a, r in sorted(st.deposits.items())
            },
            "balances": dict(sorted(st.balances.items())),
            "group_size": st.group_size,
            "seed": st.seed.hex(),
        }
