"""Operation counting for the abstract gas model.

Group arithmetic and contract storage access report into whichever
:class:`Meter` is active in the current context. Outside a ``metering()``
block the calls are no-ops.
"""
from __future__ import annotations

from collections import Counter
from contextlib import contextmanager
from contextvars import ContextVar
from typing import Iterator, Optional

EXP = "exp"
MUL = "mul"
READ = "read"
WRITE = "write"
HASH = "hash"
MEMORY = "memory"
TX = "tx"

KINDS = (TX, EXP, MUL, READ, WRITE, HASH, MEMORY)


class Meter:
    def __init__(self) -> None:
        self.counts: Counter = Counter()

    def add(self, kind: str, n: int = 1) -> None:
        self.counts[kind] += n

    def touch_memory(self, words: int) -> None:
        # memory is charged on the peak size reached within one transaction
        if words > self.counts[MEMORY]:
            self.counts[MEMORY] = words

    def snapshot(self) -> dict:
        return {kind: self.counts[kind] for kind in KINDS if self.counts[kind]}


_active: ContextVar[Optional[Meter]] = ContextVar("boothvote_meter", default=None)


@contextmanager
def metering() -> Iterator[Meter]:
    meter = Meter()
    token = _active.set(meter)
    try:
        yield meter
    finally:
        _active.reset(token)


def count(kind: str, n: int = 1) -> None:
    meter = _active.get()
    if meter is not None:
        meter.add(kind, n)


def touch_memory(words: int) -> None:
    meter = _active.get()
    if meter is not None:
        meter.touch_memory(words)
