"""Ephemeral voter keys and blinding keys."""
from __future__ import annotations

from dataclasses import dataclass

from .errors import KeyReuse
from .group import GroupParams, Seed, derive_int


@dataclass(frozen=True)
class VoterKeypair:
    x: int
    pk: int
    election_id: str = ""

    def check_election(self, election_id) -> None:
        """Ephemeral keys are one-time: refuse use in any other election."""
        if election_id is not None and election_id != self.election_id:
            raise KeyReuse(
                f"key made for election {self.election_id!r} used in {election_id!r}"
            )

    def to_dict(self) -> dict:
        # test vectors only; private keys never travel in transactions
        return {"x": str(self.x), "pk": str(self.pk), "election_id": self.election_id}

    @classmethod
    def from_dict(cls, d: dict) -> "VoterKeypair":
        return cls(int(d["x"]), int(d["pk"]), d.get("election_id", ""))


def keypair_from_secret(params: GroupParams, x: int, election_id: str = "") -> VoterKeypair:
    if not 1 <= x < params.exp_mod:
        raise ValueError("private key must lie in [1, p - 2]")
    return VoterKeypair(x, pow(params.g, x, params.p), election_id)


def keygen(params: GroupParams, rng_seed: Seed, election_id: str = "") -> VoterKeypair:
    x = 1 + derive_int(rng_seed, "ephemeral-key", params.exp_mod - 1)
    return keypair_from_secret(params, x, election_id)


def derive_blinding_key(params: GroupParams, kp: VoterKeypair, mpc_key: int) -> int:
    """The voter's blinding factor g^(x*y), computed from her MPC key h = g^y."""
    return params.pow(mpc_key, kp.x)
