"""Deterministic simulated bulletin board.

Transactions execute in submission order against registered contracts and
are packed into blocks under the platform's block gas limit. A rejected
transaction still occupies block space and leaves contract state untouched.
"""
from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from . import metering
from .costs import CostModel, PlatformProfile
from .errors import ExceedsBlockLimit, ProtocolError


@dataclass
class Transaction:
    sender: str
    target: str
    op: str
    payload: dict = field(default_factory=dict)
    nonce: Optional[int] = None
    phase: str = ""
    cost: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "sender": self.sender,
            "target": self.target,
            "op": self.op,
            "payload": self.payload,
            "nonce": self.nonce,
            "phase": self.phase,
            "cost": self.cost,
        }


@dataclass
class Receipt:
    index: int
    block: int
    cost: int
    ok: bool
    error: Optional[str] = None
    message: str = ""
    result: object = None
    counts: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "block": self.block,
            "cost": self.cost,
            "ok": self.ok,
            "error": self.error,
            "message": self.message,
            "result": self.result,
            "counts": self.counts,
        }


class Ledger:
    def __init__(self, profile: PlatformProfile, model: CostModel):
        self.profile = profile
        self.model = model
        self.contracts: Dict[str, object] = {}
        self.shared: List[str] = []
        self.block_used: List[int] = [0]
        self.entries: List[tuple] = []
        self.nonces: Dict[str, int] = defaultdict(int)

    def register(self, target_id: str, contract, shared: bool = False) -> None:
        """Add a contract; ``shared`` contracts can be touched by calls into other contracts."""
        if target_id in self.contracts:
            raise ValueError(f"contract id {target_id!r} already registered")
        self.contracts[target_id] = contract
        if shared:
            self.shared.append(target_id)

    @property
    def height(self) -> int:
        return len(self.block_used) - 1

    def submit(self, tx: Transaction) -> Receipt:
        if tx.target not in self.contracts:
            raise ProtocolError(f"no contract {tx.target!r} on the ledger")
        if tx.nonce is None:
            tx.nonce = self.nonces[tx.sender]
        contract = self.contracts[tx.target]
        touched = {tx.target, *self.shared}
        saved = {tid: self.contracts[tid].snapshot() for tid in touched}

        ok, error, message, result = True, None, "", None
        with metering.metering() as meter:
            meter.add(metering.TX)
            try:
                result = contract.apply(tx.op, tx.payload, tx.sender)
            except ProtocolError as exc:
                ok, error, message = False, type(exc).__name__, str(exc)
        cost = math.ceil(self.model.cost(meter.counts))

        if not ok:
            self._restore(saved)
        if cost > self.profile.block_gas_limit:
            self._restore(saved)
            raise ExceedsBlockLimit(
                f"{tx.op} costs {cost}, above the block gas limit {self.profile.block_gas_limit}"
            )
        if self.block_used[-1] + cost > self.profile.block_gas_limit:
            self.block_used.append(0)
        self.block_used[-1] += cost
        self.nonces[tx.sender] += 1
        tx.cost = cost
        receipt = Receipt(
            index=len(self.entries),
            block=self.height,
            cost=cost,
            ok=ok,
            error=error,
            message=message,
            result=result if ok else None,
            counts=meter.snapshot(),
        )
        self.entries.append((tx, receipt))
        return receipt

    def _restore(self, saved: dict) -> None:
        for tid, state in saved.items():
            self.contracts[tid].restore(state)

    def new_block(self) -> None:
        """Close the current block (e.g. at a phase deadline)."""
        if self.block_used[-1]:
            self.block_used.append(0)

    # -- exports ----------------------------------------------------------

    def transcript_lines(self) -> List[str]:
        return [
            json.dumps({"tx": tx.to_dict(), "receipt": r.to_dict()}, sort_keys=True, separators=(",", ":"))
            for tx, r in self.entries
        ]

    def transcript_jsonl(self) -> str:
        return "".join(line + "\n" for line in self.transcript_lines())

    def cost_rows(self) -> List[dict]:
        """Aggregated (phase, op) -> transaction count and total units."""
        agg: Dict[tuple, List[int]] = {}
        for tx, r in self.entries:
            key = (tx.phase, tx.op)
            count, units = agg.get(key, (0, 0))
            agg[key] = [count + 1, units + r.cost]
        return [
            {"phase": phase, "op": op, "count": count, "units": units}
            for (phase, op), (count, units) in agg.items()
        ]

    def cost_csv(self) -> str:
        out = io.StringIO()
        writer = csv.DictWriter(out, fieldnames=["phase", "op", "count", "units"], lineterminator="\n")
        writer.writeheader()
        writer.writerows(self.cost_rows())
        return out.getvalue()

    def phase_usage(self, phase: str) -> dict:
        """Gas and block span used by one phase's transactions."""
        rows = [(tx, r) for tx, r in self.entries if tx.phase == phase]
        if not rows:
            return {"units": 0, "blocks": 0}
        first, last = rows[0][1].block, rows[-1][1].block
        return {"units": sum(r.cost for _, r in rows), "blocks": last - first + 1}
