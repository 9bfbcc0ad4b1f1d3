"""Self-tallying booth voting: protocol library, contract simulator and cost model."""
from .booth import BoothContract, Phase
from .costs import GNOSIS_LIKE, HARMONY_LIKE, PROFILES, CostModel, PlatformProfile, calibrate
from .election import Election, ElectionReport, ScenarioConfig, ScenarioError, run_scenario, sweep
from .errors import ProtocolError
from .group import GroupParams, generate_params, make_params
from .keys import VoterKeypair, keygen
from .ledger import Ledger, Receipt, Transaction
from .main_contract import MainContract
from .tally import Tally, TallyProblem, solve
from .zkp import prove_dh, prove_membership, verify_dh, verify_membership

__version__ = "0.1.0"

__all__ = [
    "BoothContract", "CostModel", "Election", "ElectionReport", "GNOSIS_LIKE", "GroupParams",
    "HARMONY_LIKE", "Ledger", "MainContract", "PROFILES", "Phase", "PlatformProfile",
    "ProtocolError", "Receipt", "ScenarioConfig", "ScenarioError", "Tally", "TallyProblem",
    "Transaction", "VoterKeypair", "calibrate", "generate_params", "keygen", "make_params",
    "prove_dh", "prove_membership", "run_scenario", "solve", "sweep", "verify_dh",
    "verify_membership",
]
