"""Exceptions raised by the contracts, the ledger and the solver."""


class ProtocolError(Exception):
    """A transaction or call that the protocol rejects."""


class WrongPhase(ProtocolError):
    pass


class NotEligible(ProtocolError):
    pass


class Duplicate(ProtocolError):
    pass


class BadDeposit(ProtocolError):
    pass


class AlreadyVoted(ProtocolError):
    pass


class InvalidProof(ProtocolError):
    pass


class WrongPair(ProtocolError):
    pass


class MissingShares(ProtocolError):
    def __init__(self, pairs):
        self.pairs = sorted(pairs)
        super().__init__(f"missing shares for (active, stalled) pairs {self.pairs}")


class MalformedTally(ProtocolError):
    pass


class TallyRejected(ProtocolError):
    pass


class OutOfOrderBatch(ProtocolError):
    pass


class TooFewVoters(ProtocolError):
    pass


class NotAuthority(ProtocolError):
    pass


class UnknownBooth(ProtocolError):
    pass


class DuplicateBooth(ProtocolError):
    pass


class InconsistentLists(ProtocolError):
    pass


class ExceedsBlockLimit(ProtocolError):
    pass


class NoSolution(ProtocolError):
    """No count vector reproduces the vote product."""


class MalformedProof(ValueError):
    """Proof shape does not match the candidate count (distinct from rejection)."""


class KeyReuse(ValueError):
    """An ephemeral key was presented outside the election it was made for."""
