"""Scenario driver: runs whole elections against the simulated ledger.

Voter secrets are simulated in-process. Every random choice (keys, proofs,
vote picks, group assignment, parameters) comes from the scenario seed via
labeled sub-seeds, so a scenario is fully reproducible.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

from .booth import BoothContract, Phase, batch_bounds
from .costs import (
    DAY,
    PROFILES,
    CostModel,
    capacity,
    meter_mpc_cost_per_voter,
    meter_vote_cost,
    votes_per_block,
)
from .group import derive_int, generate_params
from .keys import VoterKeypair, keygen
from .ledger import Ledger, Receipt, Transaction
from .main_contract import MainContract
from .tally import TallyProblem, search_space_size, solve
from .zkp import prove_dh, prove_membership

AUTHORITY = "authority"
STAGES = ("init", "enroll", "assign", "signup", "mpc", "vote", "recover", "tally", "aggregate")
SWEEP_AXES = ("mpc_batch", "k", "n", "period")


class ScenarioError(Exception):
    """A transaction the scenario did not plan for was rejected."""

    def __init__(self, tx: Transaction, receipt: Receipt):
        self.tx, self.receipt = tx, receipt
        super().__init__(f"{tx.op} from {tx.sender} rejected: {receipt.error}: {receipt.message}")


@dataclass
class ScenarioConfig:
    n_voters: int = 9
    k_candidates: int = 2
    group_size: int = 3
    mpc_batch: int = 2
    deposit_amount: int = 100
    deposit_step: int = 0
    platform_profile: str = "harmony-like"
    voting_period_seconds: int = 2 * DAY
    seed: str = "boothvote"
    election_id: str = "election-1"
    # stall_plan[0]: voters who never vote; stall_plan[r]: voters who skip recovery round r
    stall_plan: List[List[int]] = field(default_factory=list)
    # {"choices": [candidate per voter, 1-based]} or {"weights": [weight per candidate]}
    vote_distribution: Optional[dict] = None
    absent: List[int] = field(default_factory=list)
    group_bits: int = 64
    enroll_batch: int = 500
    share_batch: int = 50

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.n_voters < 3:
            raise ValueError("need at least 3 voters")
        if self.group_size < 3:
            raise ValueError("group_size must be at least 3")
        if self.k_candidates < 1:
            raise ValueError("need at least one candidate")
        if self.mpc_batch < 1 or self.enroll_batch < 1 or self.share_batch < 1:
            raise ValueError("batch sizes must be positive")
        if self.deposit_amount < 0 or self.deposit_step < 0:
            raise ValueError("deposits must be non-negative")
        if self.voting_period_seconds <= 0:
            raise ValueError("voting period must be positive")
        if self.platform_profile not in PROFILES:
            raise ValueError(f"unknown platform profile {self.platform_profile!r}")
        for idx in [i for rnd in self.stall_plan for i in rnd] + list(self.absent):
            if not 0 <= idx < self.n_voters:
                raise ValueError(f"voter index {idx} out of range")
        dist = self.vote_distribution or {}
        if "choices" in dist:
            choices = dist["choices"]
            if len(choices) != self.n_voters or not all(1 <= c <= self.k_candidates for c in choices):
                raise ValueError("choices need one candidate in 1..k per voter")
        elif "weights" in dist:
            weights = dist["weights"]
            if len(weights) != self.k_candidates or any(w < 0 for w in weights) or sum(weights) <= 0:
                raise ValueError("weights need k non-negative entries with a positive sum")
        elif dist:
            raise ValueError("vote_distribution takes 'choices' or 'weights'")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class ElectionReport:
    election_id: str
    final_tally: Optional[List[int]]
    expected_tally: List[int]
    booths: List[dict]
    phase_totals: Dict[str, int]
    phase_costs: List[dict]
    deposits: dict
    capacity: dict
    ledger: dict
    config: dict

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


class Election:
    def __init__(self, config: ScenarioConfig, model: Optional[CostModel] = None):
        self.config = config
        self.profile = PROFILES[config.platform_profile]
        self.model = model or CostModel()
        self.addresses = [f"voter-{i:05d}" for i in range(config.n_voters)]
        self.index_of = {a: i for i, a in enumerate(self.addresses)}
        self.completed: Optional[str] = None
        self.ledger: Optional[Ledger] = None
        self.main: Optional[MainContract] = None
        self.booths: Dict[int, BoothContract] = {}
        self.params = None
        self._keys: Dict[str, VoterKeypair] = {}

    # -- helpers ----------------------------------------------------------

    def _seed(self, label: str) -> bytes:
        return f"{self.config.seed}/{label}".encode()

    def keypair(self, address: str) -> VoterKeypair:
        if address not in self._keys:
            self._keys[address] = keygen(self.params, self._seed(f"key/{address}"), self.config.election_id)
        return self._keys[address]

    def choice_of(self, address: str) -> int:
        i = self.index_of[address]
        dist = self.config.vote_distribution or {}
        if "choices" in dist:
            return int(dist["choices"][i])
        weights = dist.get("weights") or [1] * self.config.k_candidates
        scale = 1 << 53
        u = derive_int(self._seed(f"choice/{address}"), "pick", scale) / scale * sum(weights)
        acc = 0.0
        for candidate, w in enumerate(weights, start=1):
            acc += w
            if u < acc:
                return candidate
        return max(c for c, w in enumerate(weights, start=1) if w > 0)

    def stalls_in(self, rnd: int) -> set:
        plan = self.config.stall_plan
        return {self.addresses[i] for i in plan[rnd]} if rnd < len(plan) else set()

    def _submit(self, sender: str, target: str, op: str, payload: dict, phase: str) -> Receipt:
        tx = Transaction(sender=sender, target=target, op=op, payload=payload, phase=phase)
        receipt = self.ledger.submit(tx)
        if not receipt.ok:
            raise ScenarioError(tx, receipt)
        return receipt

    def live_booths(self) -> List[BoothContract]:
        return [b for _, b in sorted(self.booths.items()) if b.state.phase is not Phase.VOIDED]

    # -- stages -----------------------------------------------------------

    def run(self, through: str = STAGES[-1]) -> "Election":
        target = STAGES.index(through)
        start = 0 if self.completed is None else STAGES.index(self.completed) + 1
        for stage in STAGES[start:target + 1]:
            getattr(self, f"stage_{stage}")()
            self.completed = stage
        return self

    def stage_init(self) -> None:
        self.ledger = Ledger(self.profile, self.model)
        self.main = MainContract(self.config.election_id, AUTHORITY)
        self.ledger.register("main", self.main, shared=True)

    def stage_enroll(self) -> None:
        step = self.config.enroll_batch
        for s in range(0, len(self.addresses), step):
            self._submit(AUTHORITY, "main", "enroll_batch", {"addresses": self.addresses[s:s + step]}, "setup")

    def stage_assign(self) -> None:
        cfg = self.config
        receipt = self._submit(
            AUTHORITY, "main", "assign_groups",
            {"group_size": cfg.group_size, "seed": f"{cfg.seed}/assign"}, "setup",
        )
        largest = max(len(m) for m in receipt.result.values())
        self.params = generate_params(cfg.group_bits, largest, cfg.k_candidates, self._seed("params"))
        self._submit(
            AUTHORITY, "main", "deploy_booths",
            {"params": self.params.to_dict(), "deposit": cfg.deposit_amount, "deposit_step": cfg.deposit_step},
            "setup",
        )
        self.booths = dict(self.main.booth_contracts)
        for booth_id, booth in sorted(self.booths.items()):
            self.ledger.register(f"booth-{booth_id}", booth)

    def stage_signup(self) -> None:
        absent = {self.addresses[i] for i in self.config.absent}
        for booth_id, booth in sorted(self.booths.items()):
            for addr in self.main.state.booths[booth_id].members:
                if addr in absent:
                    continue
                pk = self.keypair(addr).pk
                self._submit(addr, f"booth-{booth_id}", "sign_up",
                             {"pk": str(pk), "deposit": self.config.deposit_amount}, "signup")
            if booth.state.n < 3:
                self._submit(AUTHORITY, f"booth-{booth_id}", "void", {}, "signup")

    def stage_mpc(self) -> None:
        for booth in self.live_booths():
            target = f"booth-{booth.state.booth_id}"
            self._submit(AUTHORITY, target, "precompute_right_markers",
                         {"mpc_batch": self.config.mpc_batch}, "pre-voting")
            for b in range(len(batch_bounds(booth.state.n, self.config.mpc_batch))):
                self._submit(AUTHORITY, target, "compute_mpc_batch", {"batch_index": b}, "pre-voting")

    def stage_vote(self) -> None:
        self.ledger.new_block()
        stalled = self.stalls_in(0)
        for booth in self.live_booths():
            target = f"booth-{booth.state.booth_id}"
            for index, (addr, _) in enumerate(booth.state.signed_up):
                if addr in stalled:
                    continue
                h = booth.state.mpc_keys[index]
                B, proof = prove_membership(
                    self.params, self.keypair(addr), h, self.choice_of(addr),
                    self._seed(f"vote-proof/{addr}"), self.config.election_id,
                )
                self._submit(addr, target, "cast_vote",
                             {"voter_index": index, "B": str(B), "proof": proof.to_dict()}, "voting")

    def stage_recover(self) -> None:
        self.ledger.new_block()
        for booth in self.live_booths():
            target = f"booth-{booth.state.booth_id}"
            self._submit(AUTHORITY, target, "open_fault_recovery", {}, "fault-recovery")
            while booth.state.phase is Phase.FAULT_RECOVERY:
                st = booth.state
                skipping = self.stalls_in(st.recovery_round)
                for i in st.active():
                    addr = st.signed_up[i][0]
                    if addr in skipping:
                        continue
                    self._send_shares(booth, i)
                op = "repair_votes" if not booth.missing_shares() else "open_fault_recovery"
                self._submit(AUTHORITY, target, op, {}, "fault-recovery")

    def _send_shares(self, booth: BoothContract, i: int) -> None:
        st = booth.state
        addr = st.signed_up[i][0]
        kp = self.keypair(addr)
        owed = [j for j in sorted(st.stalled) if (i, j) not in st.shares]
        for n, s in enumerate(range(0, len(owed), self.config.share_batch)):
            shares = []
            for j in owed[s:s + self.config.share_batch]:
                proof = prove_dh(self.params, kp, booth.pk(j),
                                 self._seed(f"dh-proof/{addr}/{j}/{st.recovery_round}"),
                                 self.config.election_id)
                shares.append({"stalled": j, "C": str(proof.C), "proof": proof.to_dict()})
            deposit = booth.required_recovery_deposit() if n == 0 and st.deposit_step else 0
            self._submit(addr, f"booth-{st.booth_id}", "submit_shares",
                         {"voter_index": i, "shares": shares, "deposit": deposit}, "fault-recovery")

    def stage_tally(self) -> None:
        for booth in self.live_booths():
            problem = TallyProblem.from_booth_snapshot(booth.to_dict())
            tally = solve(problem)
            self._submit(AUTHORITY, f"booth-{booth.state.booth_id}", "verify_booth_tally",
                         tally.to_dict(), "tally")

    def stage_aggregate(self) -> None:
        for booth_id, booth in sorted(self.booths.items()):
            correct, forfeit = booth.settlement()
            self._submit(AUTHORITY, "main", "settle_deposits",
                         {"booth_id": booth_id, "correct": correct, "forfeiting": forfeit}, "final-tally")

    # -- reporting --------------------------------------------------------

    def expected_tally(self) -> List[int]:
        """Configured choices of every voter whose vote should end up counted."""
        counts = [0] * self.config.k_candidates
        for booth in self.live_booths():
            st = booth.state
            for i in (st.active() if st.phase in (Phase.TALLY, Phase.CLOSED) else []):
                counts[self.choice_of(st.signed_up[i][0]) - 1] += 1
        return counts

    def report(self) -> ElectionReport:
        cfg = self.config
        booths = []
        for booth_id, booth in sorted(self.booths.items()):
            st = booth.state
            booths.append({
                "booth_id": booth_id,
                "members": len(self.main.state.booths[booth_id].members),
                "signed_up": st.n,
                "phase": st.phase.value,
                "tally": None if st.tally is None else list(st.tally.counts),
                "stalled": [st.signed_up[i][0] for i in sorted(st.stalled)],
                "recovery_rounds": st.recovery_round,
                "rounds": 1 + st.recovery_round,
            })
        rows = self.ledger.cost_rows()
        totals: Dict[str, int] = {}
        for row in rows:
            totals[row["phase"]] = totals.get(row["phase"], 0) + row["units"]
        deposits = self.main.deposit_totals()
        deposits["forfeited_voters"] = sorted(
            a for a, r in self.main.state.deposits.items() if r.status.value == "Forfeit"
        )
        voting = self.ledger.phase_usage("voting")
        available = self.profile.blocks_in(cfg.voting_period_seconds) * self.profile.block_gas_limit
        final = self.main.state.final_tally
        return ElectionReport(
            election_id=cfg.election_id,
            final_tally=None if final is None else list(final.counts),
            expected_tally=self.expected_tally(),
            booths=booths,
            phase_totals=totals,
            phase_costs=rows,
            deposits=deposits,
            capacity={
                "profile": self.profile.name,
                "vote_cost": int(meter_vote_cost(self.model, cfg.k_candidates)),
                "votes_per_block": votes_per_block(self.profile, self.model, cfg.k_candidates),
                "max_voters": capacity(self.profile, self.model, cfg.k_candidates, cfg.voting_period_seconds),
                "voting_units_used": voting["units"],
                "voting_units_available": available,
                "headroom": available - voting["units"],
            },
            ledger={
                "transactions": len(self.ledger.entries),
                "blocks": self.ledger.height + 1,
                "rejected": sum(1 for _, r in self.ledger.entries if not r.ok),
            },
            config=cfg.to_dict(),
        )


def run_scenario(config: ScenarioConfig, model: Optional[CostModel] = None) -> ElectionReport:
    return Election(config, model).run().report()


# -- sweeps -------------------------------------------------------------------


def sweep(config: ScenarioConfig, axis: str, values=None, model: Optional[CostModel] = None) -> List[dict]:
    """Evaluate the cost model along one axis; returns rows ready for CSV."""
    model = model or CostModel()
    profile = PROFILES[config.platform_profile]
    k, period = config.k_candidates, config.voting_period_seconds
    if axis == "mpc_batch":
        n = config.group_size
        values = values or range(1, n + 1)
        return [{"mpc_batch": b, "per_voter_cost": float(meter_mpc_cost_per_voter(model, n, b))} for b in values]
    if axis == "k":
        values = values or range(1, 41)
        return [
            {
                "k": kk,
                "vote_cost": float(meter_vote_cost(model, kk)),
                "votes_per_block": votes_per_block(profile, model, kk),
                "max_voters": capacity(profile, model, kk, period),
            }
            for kk in values
        ]
    if axis == "n":
        values = values or range(3, config.group_size + 1)
        return [
            {
                "n": n,
                "mpc_per_voter_cost": float(meter_mpc_cost_per_voter(model, n, min(config.mpc_batch, n))),
                "tally_search_space": search_space_size(n, k),
            }
            for n in values
        ]
    if axis == "period":
        values = values or [d * DAY for d in range(1, 8)]
        return [{"period_seconds": s, "max_voters": capacity(profile, model, k, s)} for s in values]
    raise ValueError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")


def rows_to_csv(rows: List[dict]) -> str:
    if not rows:
        return ""
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return out.getvalue()
