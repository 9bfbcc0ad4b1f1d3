"""Safe-prime group arithmetic, parameter generation and candidate generators.

Group elements and scalars are plain Python ints. Exponents are reduced
modulo ``p - 1`` (the order of the full multiplicative group), which is
also the scalar modulus used by the proofs.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Iterable, Union

from sympy import isprime

from . import metering

Seed = Union[bytes, str]


def as_bytes(seed: Seed) -> bytes:
    return seed.encode() if isinstance(seed, str) else bytes(seed)


def derive_int(seed: Seed, label: str, bound: int) -> int:
    """Deterministic integer in ``[0, bound)`` from a labeled hash stream.

    64 surplus bits are drawn before reduction so the bias is negligible.
    """
    if bound <= 0:
        raise ValueError("bound must be positive")
    nbytes = (bound.bit_length() + 64 + 7) // 8
    prefix = as_bytes(seed) + b"\x00" + label.encode()
    out = b""
    counter = 0
    while len(out) < nbytes:
        out += hashlib.sha256(prefix + counter.to_bytes(4, "big")).digest()
        counter += 1
    return int.from_bytes(out[:nbytes], "big") % bound


def canonical_json(obj) -> bytes:
    """Canonical JSON bytes: sorted keys, no whitespace."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def bits_per_count(n_max: int) -> int:
    """Smallest m with 2**m > n_max."""
    return n_max.bit_length()


@dataclass(frozen=True)
class GroupParams:
    p: int
    q: int
    g: int
    k: int
    m: int
    n_max: int
    candidates: tuple

    @property
    def exp_mod(self) -> int:
        return self.p - 1

    # -- arithmetic -------------------------------------------------------

    def pow(self, base: int, e: int) -> int:
        metering.count(metering.EXP)
        return pow(base, e % (self.p - 1), self.p)

    def mul(self, a: int, b: int) -> int:
        metering.count(metering.MUL)
        return a * b % self.p

    def inv(self, a: int) -> int:
        metering.count(metering.EXP)
        return pow(a, -1, self.p)

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def prod(self, values: Iterable[int]) -> int:
        acc = 1
        for v in values:
            acc = self.mul(acc, v)
        return acc

    def is_element(self, v) -> bool:
        return isinstance(v, int) and 0 < v < self.p

    def is_scalar(self, v) -> bool:
        return isinstance(v, int) and 0 <= v < self.p - 1

    def candidate(self, choice: int) -> int:
        """Generator of candidate ``choice`` (1-based)."""
        if not 1 <= choice <= self.k:
            raise ValueError(f"choice {choice} outside 1..{self.k}")
        return self.candidates[choice - 1]

    def with_candidates(self, k: int, n_max: int | None = None) -> "GroupParams":
        return make_params(self.p, self.g, self.n_max if n_max is None else n_max, k)

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "p": str(self.p),
            "q": str(self.q),
            "g": str(self.g),
            "exp_mod": str(self.exp_mod),
            "k": self.k,
            "m": self.m,
            "n_max": self.n_max,
            "candidates": [str(f) for f in self.candidates],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GroupParams":
        params = make_params(int(d["p"]), int(d["g"]), int(d["n_max"]), int(d["k"]))
        if [str(f) for f in params.candidates] != list(d["candidates"]):
            raise ValueError("candidate list does not match (p, g, n_max, k)")
        return params

    def canonical_json(self) -> bytes:
        return canonical_json(self.to_dict())


def is_generator(p: int, g: int) -> bool:
    """True if g generates the full group of order p - 1 (p a safe prime)."""
    q = (p - 1) // 2
    return 1 < g < p and pow(g, 2, p) != 1 and pow(g, q, p) != 1


def make_params(p: int, g: int, n_max: int, k: int) -> GroupParams:
    """Validate a safe prime and generator and build the candidate generators."""
    q = (p - 1) // 2
    if p < 5 or not isprime(p) or not isprime(q) or p != 2 * q + 1:
        raise ValueError(f"{p} is not a safe prime")
    if not is_generator(p, g):
        raise ValueError(f"{g} does not generate the group mod {p}")
    if k < 1:
        raise ValueError("need at least one candidate")
    if not 1 <= n_max < p - 1:
        raise ValueError("group size bound must satisfy 1 <= n_max < p - 1")
    m = bits_per_count(n_max)
    # counts occupy k disjoint m-bit fields of the tally exponent
    if 2 ** (k * m) > p - 1:
        raise ValueError(
            f"k={k} candidates with m={m} bits each overflow the exponent space of p={p}"
        )
    candidates = tuple(pow(g, 2 ** ((i - 1) * m), p) for i in range(1, k + 1))
    return GroupParams(p=p, q=q, g=g, k=k, m=m, n_max=n_max, candidates=candidates)


def find_safe_prime(bits: int, seed: Seed) -> int:
    """Deterministic search for a ``bits``-bit safe prime."""
    if bits < 3:
        raise ValueError("bits too small for a safe prime")
    lo, hi = 1 << (bits - 2), 1 << (bits - 1)  # range of q
    span = hi - lo
    start = lo + derive_int(seed, "safe-prime", span)
    for offset in range(span):
        q = lo + (start - lo + offset) % span
        if q % 2 == 0 and q != 2:
            continue
        # cheap filter: 2q + 1 divisible by 3 whenever q = 1 mod 3
        if q > 3 and q % 3 == 1:
            continue
        if isprime(q) and isprime(2 * q + 1):
            return 2 * q + 1
    raise ValueError(f"no {bits}-bit safe prime exists")


def generate_params(bits: int, n_max: int, k: int, rng_seed: Seed) -> GroupParams:
    """Generate a safe-prime group fit for ``k`` candidates and groups up to ``n_max``."""
    if n_max < 3:
        raise ValueError("groups need at least 3 voters")
    m = bits_per_count(n_max)
    if k < 1 or k * m >= bits - 1:
        raise ValueError(f"k={k}, m={m} cannot be packed into a {bits}-bit group")
    p = find_safe_prime(bits, rng_seed)
    g_start = derive_int(rng_seed, "generator", p - 3)
    for offset in range(p - 3):
        g = 2 + (g_start + offset) % (p - 3)
        if is_generator(p, g):
            return make_params(p, g, n_max, k)
    raise ValueError(f"no generator found mod {p}")  # unreachable for a safe prime
