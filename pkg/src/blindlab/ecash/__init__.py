"""Offline divisible eCash simulation on top of blind RSA-FDH issuance."""

from blindlab.ecash.harness import Network, Party, ProtocolAbort
from blindlab.ecash.primitives import Coin, SpendTranscript, derive_serials, identify
from blindlab.ecash.scenario import BUNDLED, ScenarioError, ScenarioResult, bundled_script, run_scenario

__all__ = [
    "BUNDLED",
    "Coin",
    "Network",
    "Party",
    "ProtocolAbort",
    "ScenarioError",
    "ScenarioResult",
    "SpendTranscript",
    "bundled_script",
    "derive_serials",
    "identify",
    "run_scenario",
]
