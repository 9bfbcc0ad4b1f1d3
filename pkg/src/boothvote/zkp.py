"""Non-interactive proofs used by the booth contract.

* 1-out-of-k set membership: the blinded vote ``B = h^x * f_v`` hides one of
  the candidate generators. One real Chaum-Pedersen branch, k - 1 simulated
  ones, challenge shares summing to the Fiat-Shamir challenge.
* DH tuple: the shared key material ``C = g^(x_i x_j)`` matches the public
  keys ``A = g^x_i`` and ``B = g^x_j``.

Challenges are hashed over the full statement, not only the commitments.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional, Tuple

from . import metering
from .errors import MalformedProof
from .group import GroupParams, Seed, canonical_json, derive_int
from .keys import VoterKeypair

MEMBERSHIP = "membership"
DH_TUPLE = "dh-tuple"


@dataclass(frozen=True)
class ChallengeTranscript:
    domain_tag: bytes
    statement: bytes
    commitments: bytes
    # number of group elements/scalars absorbed; the gas model charges per word
    elements: int = 0

    def to_bytes(self) -> bytes:
        out = b""
        for part in (self.domain_tag, self.statement, self.commitments):
            out += len(part).to_bytes(8, "big") + part
        return out


def domain_tag(kind: str, election_id: str, phase: str) -> bytes:
    return f"boothvote/v1/{kind}/{election_id}/{phase}".encode()


def hash_challenge(t: ChallengeTranscript, modulus: int) -> int:
    metering.count(metering.HASH, t.elements + 1)
    digest = hashlib.sha256(t.to_bytes()).digest()
    return int.from_bytes(digest, "big") % modulus


def _group_statement(params: GroupParams) -> dict:
    return {"p": str(params.p), "g": str(params.g), "f": [str(f) for f in params.candidates]}


def membership_transcript(params, election_id, pk, h, B, a, b) -> ChallengeTranscript:
    statement = {"group": _group_statement(params), "pk": str(pk), "h": str(h), "B": str(B)}
    commitments = {"a": [str(v) for v in a], "b": [str(v) for v in b]}
    return ChallengeTranscript(
        domain_tag(MEMBERSHIP, election_id, "voting"),
        canonical_json(statement),
        canonical_json(commitments),
        elements=2 + params.k + 3 + 2 * len(a),
    )


def dh_transcript(params, election_id, A, B, C, m1, m2) -> ChallengeTranscript:
    statement = {"group": _group_statement(params), "A": str(A), "B": str(B), "C": str(C)}
    commitments = {"m1": str(m1), "m2": str(m2)}
    return ChallengeTranscript(
        domain_tag(DH_TUPLE, election_id, "fault-recovery"),
        canonical_json(statement),
        canonical_json(commitments),
        elements=2 + params.k + 3 + 2,
    )


# -- membership -------------------------------------------------------------


@dataclass(frozen=True)
class MembershipProof:
    a: Tuple[int, ...]
    b: Tuple[int, ...]
    r: Tuple[int, ...]
    d: Tuple[int, ...]

    def to_dict(self) -> dict:
        return {name: [str(v) for v in getattr(self, name)] for name in ("a", "b", "r", "d")}

    @classmethod
    def from_dict(cls, d: dict) -> "MembershipProof":
        return cls(*(tuple(int(v) for v in d[name]) for name in ("a", "b", "r", "d")))


def prove_membership(
    params: GroupParams,
    kp: VoterKeypair,
    h: int,
    choice: int,
    rng_seed: Seed,
    election_id: Optional[str] = None,
) -> Tuple[int, MembershipProof]:
    """Blind the vote for candidate ``choice`` (1-based) and prove it well formed."""
    if not 1 <= choice <= params.k:
        raise ValueError(f"choice {choice} outside 1..{params.k}")
    kp.check_election(election_id)
    g, q = params.g, params.exp_mod
    B = params.mul(params.pow(h, kp.x), params.candidate(choice))

    k = params.k
    a, b, r, d = [0] * k, [0] * k, [0] * k, [0] * k
    w = derive_int(rng_seed, "membership/w", q)
    for l in range(k):
        if l == choice - 1:
            a[l] = params.pow(g, w)
            b[l] = params.pow(h, w)
            continue
        r[l] = derive_int(rng_seed, f"membership/r/{l + 1}", q)
        d[l] = derive_int(rng_seed, f"membership/d/{l + 1}", q)
        a[l] = params.mul(params.pow(kp.pk, -d[l]), params.pow(g, r[l]))
        quotient = params.div(B, params.candidates[l])
        b[l] = params.mul(params.pow(h, r[l]), params.pow(quotient, -d[l]))

    c = hash_challenge(membership_transcript(params, kp.election_id, kp.pk, h, B, a, b), q)
    real = choice - 1
    d[real] = (c - sum(d[l] for l in range(k) if l != real)) % q
    r[real] = (w + kp.x * d[real]) % q
    return B, MembershipProof(tuple(a), tuple(b), tuple(r), tuple(d))


def verify_membership(
    params: GroupParams,
    voter_pk: int,
    h: int,
    B: int,
    proof: MembershipProof,
    election_id: str = "",
) -> bool:
    k = params.k
    if not all(len(v) == k for v in (proof.a, proof.b, proof.r, proof.d)):
        raise MalformedProof(f"expected {k} entries per proof field")
    if not all(params.is_element(v) for v in (voter_pk, h, B, *proof.a, *proof.b)):
        return False
    if not all(params.is_scalar(v) for v in (*proof.r, *proof.d)):
        return False
    q, g = params.exp_mod, params.g
    c = hash_challenge(membership_transcript(params, election_id, voter_pk, h, B, proof.a, proof.b), q)
    if sum(proof.d) % q != c:
        return False
    for l in range(k):
        metering.count(metering.READ)  # candidate generator from storage
        lhs = params.pow(g, proof.r[l])
        if lhs != params.mul(proof.a[l], params.pow(voter_pk, proof.d[l])):
            return False
        quotient = params.div(B, params.candidates[l])
        lhs = params.pow(h, proof.r[l])
        if lhs != params.mul(proof.b[l], params.pow(quotient, proof.d[l])):
            return False
    return True


# -- DH tuple ---------------------------------------------------------------


@dataclass(frozen=True)
class DHProof:
    C: int
    r: int
    m1: int
    m2: int

    def to_dict(self) -> dict:
        return {"C": str(self.C), "r": str(self.r), "m1": str(self.m1), "m2": str(self.m2)}

    @classmethod
    def from_dict(cls, d: dict) -> "DHProof":
        return cls(int(d["C"]), int(d["r"]), int(d["m1"]), int(d["m2"]))


def prove_dh(
    params: GroupParams,
    kp_i: VoterKeypair,
    pk_j: int,
    rng_seed: Seed,
    election_id: Optional[str] = None,
) -> DHProof:
    """Share g^(x_i x_j) with a stalled voter j and prove it matches both public keys."""
    kp_i.check_election(election_id)
    q = params.exp_mod
    C = params.pow(pk_j, kp_i.x)
    w = derive_int(rng_seed, "dh/w", q)
    m1 = params.pow(params.g, w)
    m2 = params.pow(pk_j, w)
    c = hash_challenge(dh_transcript(params, kp_i.election_id, kp_i.pk, pk_j, C, m1, m2), q)
    return DHProof(C=C, r=(w + c * kp_i.x) % q, m1=m1, m2=m2)


def verify_dh(
    params: GroupParams, pk_i: int, pk_j: int, proof: DHProof, election_id: str = ""
) -> bool:
    if not all(params.is_element(v) for v in (pk_i, pk_j, proof.C, proof.m1, proof.m2)):
        return False
    if not params.is_scalar(proof.r):
        return False
    c = hash_challenge(
        dh_transcript(params, election_id, pk_i, pk_j, proof.C, proof.m1, proof.m2), params.exp_mod
    )
    if params.pow(params.g, proof.r) != params.mul(proof.m1, params.pow(pk_i, c)):
        return False
    return params.pow(pk_j, proof.r) == params.mul(proof.m2, params.pow(proof.C, c))
