"""Abstract gas model, calibration against published capacities, and capacity limits.

Costs are operation counts weighted by per-operation unit prices. The counts
come from running the real contract code under a :class:`~boothvote.metering.Meter`,
so the model follows whatever the contracts actually do.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from fractions import Fraction
from functools import lru_cache
from typing import List, Mapping, Sequence, Union

from . import metering
from .booth import BoothContract, batch_bounds
from .group import generate_params
from .keys import keygen
from .zkp import prove_membership

Number = Union[int, Fraction]

DAY = 24 * 3600


@dataclass(frozen=True)
class PlatformProfile:
    name: str
    block_gas_limit: int
    block_interval: int  # seconds

    def __post_init__(self):
        if self.block_gas_limit <= 0 or self.block_interval <= 0:
            raise ValueError("block gas limit and interval must be positive")

    def blocks_in(self, period_seconds: int) -> int:
        return period_seconds // self.block_interval


HARMONY_LIKE = PlatformProfile("harmony-like", 80_000_000, 2)
GNOSIS_LIKE = PlatformProfile("gnosis-like", 30_000_000, 5)
PROFILES = {p.name: p for p in (HARMONY_LIKE, GNOSIS_LIKE)}


@dataclass(frozen=True)
class CostModel:
    # tx_overhead and exponentiation are the calibrated pair (see calibrate());
    # the rest are fixed, EVM-flavoured unit prices
    tx_overhead: Number = 393_039
    exponentiation: Number = 417_502
    multiplication: Number = 1_500
    storage_write: Number = 20_000
    storage_read: Number = 2_100
    hash_word: Number = 36
    memory_word: Number = 3
    memory_quadratic: Number = 100

    def __post_init__(self):
        if any(v < 0 for v in asdict(self).values()):
            raise ValueError("unit costs must be non-negative")
        if self.tx_overhead <= 0:
            raise ValueError("per-transaction overhead must be positive")

    def cost(self, counts: Mapping[str, int]) -> Number:
        c = lambda kind: counts.get(kind, 0)
        mem = c(metering.MEMORY)
        return (
            self.tx_overhead * c(metering.TX)
            + self.exponentiation * c(metering.EXP)
            + self.multiplication * c(metering.MUL)
            + self.storage_write * c(metering.WRITE)
            + self.storage_read * c(metering.READ)
            + self.hash_word * c(metering.HASH)
            + self.memory_word * mem
            + self.memory_quadratic * mem * mem
        )

    def to_dict(self) -> dict:
        return {k: (str(v) if isinstance(v, Fraction) else v) for k, v in asdict(self).items()}


# -- instrumented operation counts ------------------------------------------


def _reference_booth(n: int, k: int) -> BoothContract:
    bits = max(64, 2 * k * max(n, 3).bit_length() + 16)
    params = generate_params(bits, max(n, 3), k, b"boothvote/reference-group")
    booth = BoothContract(0, params)
    for i in range(n):
        kp = keygen(params, f"reference-voter/{i}")
        booth.sign_up(f"ref-{i}", kp.pk, 0)
    return booth


@lru_cache(maxsize=None)
def vote_op_counts(k: int) -> Mapping[str, int]:
    """Counts for one cast-vote transaction with k candidates."""
    if k < 1:
        raise ValueError("k must be at least 1")
    booth = _reference_booth(3, k)
    params = booth.params
    booth.precompute_right_markers(3)
    booth.compute_mpc_batch(0)
    kp = keygen(params, "reference-voter/0")
    B, proof = prove_membership(params, kp, booth.state.mpc_keys[0], 1, b"reference-proof")
    with metering.metering() as meter:
        meter.add(metering.TX)
        booth.cast_vote(0, B, proof)
    return meter.snapshot()


@lru_cache(maxsize=None)
def mpc_op_counts(n: int, batch: int) -> tuple:
    """Per-transaction counts for right-marker precomputation plus every MPC batch."""
    if not 1 <= batch <= n:
        raise ValueError("need 1 <= batch <= n")
    booth = _reference_booth(n, 1)
    txs = []
    with metering.metering() as meter:
        meter.add(metering.TX)
        booth.precompute_right_markers(batch)
    txs.append(meter.snapshot())
    for b in range(len(batch_bounds(n, batch))):
        with metering.metering() as meter:
            meter.add(metering.TX)
            booth.compute_mpc_batch(b)
        txs.append(meter.snapshot())
    return tuple(txs)


def meter_vote_cost(model: CostModel, k: int) -> Number:
    return model.cost(vote_op_counts(k))


def meter_mpc_cost_per_voter(model: CostModel, n: int, batch: int) -> Fraction:
    total = sum(model.cost(counts) for counts in mpc_op_counts(n, batch))
    return Fraction(total) / n


def mpc_cost_curve(model: CostModel, n: int) -> List[Fraction]:
    """Per-voter MPC cost for every batch size 1..n."""
    return [meter_mpc_cost_per_voter(model, n, b) for b in range(1, n + 1)]


# -- capacity -----------------------------------------------------------------


def votes_per_block(profile: PlatformProfile, model: CostModel, k: int) -> int:
    return math.floor(Fraction(profile.block_gas_limit) / Fraction(meter_vote_cost(model, k)))


def capacity(profile: PlatformProfile, model: CostModel, k: int, period_seconds: int) -> int:
    """Most votes that fit into the voting period (only voting is time-bound)."""
    if period_seconds <= 0:
        raise ValueError("voting period must be positive")
    return profile.blocks_in(period_seconds) * votes_per_block(profile, model, k)


def max_candidates(profile: PlatformProfile, model: CostModel, limit: int = 500) -> int:
    """Largest k whose cast-vote transaction still fits into one block."""
    best = 0
    for k in range(1, limit + 1):
        if meter_vote_cost(model, k) > profile.block_gas_limit:
            break
        best = k
    return best


# -- calibration --------------------------------------------------------------


@dataclass(frozen=True)
class CapacityAnchor:
    k: int
    period_seconds: int
    voters: int


# published voter capacities on the harmony-like platform
HARMONY_ANCHORS = (
    CapacityAnchor(k=2, period_seconds=2 * DAY, voters=1_500_000),
    CapacityAnchor(k=2, period_seconds=5 * DAY, voters=3_800_000),
    CapacityAnchor(k=38, period_seconds=5 * DAY, voters=216_000),
)


def target_vote_cost(profile: PlatformProfile, anchor: CapacityAnchor) -> Fraction:
    """Vote cost that makes the platform admit exactly ``anchor.voters`` votes."""
    per_block = Fraction(anchor.voters, profile.blocks_in(anchor.period_seconds))
    return Fraction(profile.block_gas_limit) / per_block


def calibrate(
    profile: PlatformProfile = HARMONY_LIKE,
    anchors: Sequence[CapacityAnchor] = (HARMONY_ANCHORS[0], HARMONY_ANCHORS[2]),
    base: CostModel = CostModel(),
) -> CostModel:
    """Solve tx overhead and exponentiation price from two anchors with different k.

    All other unit prices are taken from ``base``. The solution is exact
    (rational arithmetic).
    """
    a1, a2 = anchors
    if a1.k == a2.k:
        raise ValueError("calibration needs two anchors with different candidate counts")
    probe = replace(base, tx_overhead=1, exponentiation=0)
    rows = []
    for anchor in (a1, a2):
        counts = vote_op_counts(anchor.k)
        rest = Fraction(probe.cost(counts)) - counts.get(metering.TX, 0)
        rows.append((counts.get(metering.EXP, 0), target_vote_cost(profile, anchor) - rest))
    (e1, y1), (e2, y2) = rows
    exponentiation = (y2 - y1) / (e2 - e1)
    tx_overhead = y1 - exponentiation * e1
    if exponentiation <= 0 or tx_overhead <= 0:
        raise ValueError("anchors imply a non-positive unit cost")
    return replace(base, tx_overhead=tx_overhead, exponentiation=exponentiation)


def predict(profile: PlatformProfile, model: CostModel, anchor: CapacityAnchor) -> int:
    return capacity(profile, model, anchor.k, anchor.period_seconds)
