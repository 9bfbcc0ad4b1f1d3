"""Off-chain tally: exhaustive search over count vectors."""
from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Iterator, Optional, Sequence, Tuple

from .errors import NoSolution
from .group import GroupParams


@dataclass(frozen=True)
class Tally:
    counts: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(self.counts))

    @property
    def total(self) -> int:
        return sum(self.counts)

    def __add__(self, other: "Tally") -> "Tally":
        if len(self.counts) != len(other.counts):
            raise ValueError("tallies over different candidate lists")
        return Tally(tuple(a + b for a, b in zip(self.counts, other.counts)))

    def to_dict(self) -> dict:
        return {"counts": list(self.counts)}

    @classmethod
    def from_dict(cls, d: dict) -> "Tally":
        return cls(tuple(int(c) for c in d["counts"]))

    @classmethod
    def zero(cls, k: int) -> "Tally":
        return cls((0,) * k)


@dataclass(frozen=True)
class TallyProblem:
    params: GroupParams
    product: int
    n_votes: int

    @classmethod
    def from_votes(cls, params: GroupParams, votes: Sequence[int]) -> "TallyProblem":
        product = 1
        for v in votes:
            product = product * v % params.p
        return cls(params, product, len(votes))

    @classmethod
    def from_booth_snapshot(cls, snapshot: dict) -> "TallyProblem":
        """Build the problem from a booth state snapshot (``BoothContract.to_dict``)."""
        params = GroupParams.from_dict(snapshot["params"])
        return cls.from_votes(params, [int(v) for v in snapshot["counted_votes"].values()])


def search_space_size(n: int, k: int) -> int:
    """Number of ways to split n votes among k candidates."""
    if n < 0 or k < 1:
        raise ValueError("need n >= 0 and k >= 1")
    return comb(n + k - 1, k - 1)


def iter_compositions(n: int, k: int) -> Iterator[Tuple[int, ...]]:
    """All k-tuples of non-negative ints summing to n, first coordinate ascending."""
    if k == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in iter_compositions(n - first, k - 1):
            yield (first,) + rest


def solve(problem: TallyProblem, first_counts: Optional[range] = None) -> Tally:
    """Find the count vector whose candidate-generator product equals the vote product.

    ``first_counts`` restricts the count of candidate 1, so the search can be
    split across workers; a match is unique, so any split gives the same answer.
    """
    params, n, k = problem.params, problem.n_votes, problem.params.k
    p, f = params.p, params.candidates
    # the last candidate absorbs whatever is left, so tabulate its powers once
    last = [1]
    for _ in range(n):
        last.append(last[-1] * f[-1] % p)

    target = problem.product
    counts = [0] * k

    def search(level: int, remaining: int, acc: int) -> bool:
        if level == k - 1:
            if acc * last[remaining] % p == target:
                counts[level] = remaining
                return True
            return False
        lo, hi = 0, remaining
        if level == 0 and first_counts is not None:
            lo, hi = max(first_counts.start, 0), min(first_counts.stop - 1, remaining)
        cur = acc * pow(f[level], lo, p) % p
        for c in range(lo, hi + 1):
            counts[level] = c
            if search(level + 1, remaining - c, cur):
                return True
            cur = cur * f[level] % p
        return False

    if n >= 0 and search(0, n, 1):
        return Tally(tuple(counts))
    raise NoSolution(f"no split of {n} votes over {k} candidates matches the vote product")
