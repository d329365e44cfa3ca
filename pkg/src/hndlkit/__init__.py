"""Harvest-now/decrypt-later economics toolkit.

Byte-level storage models, adversary cost simulation, rekeying
multipliers, and an offline retrospective-decryption pipeline for
TLS 1.2, TLS 1.3, QUIC, and SSH.
"""

__version__ = "0.1.0"

from .econ import (  # noqa: F401
    CostDistribution,
    CostScenario,
    MoscaInputs,
    annual_cost_mc,
    cumulative_cost,
    cumulative_cost_mc,
    harvest_cost_table,
    mosca_at_risk,
)
from .profiles import (  # noqa: F401
    ProtocolId,
    ProtocolProfile,
    custom_profile,
    default_profile,
    minimal_profile,
)
from .rekey import (  # noqa: F401
    QuantumCost,
    RekeyMechanism,
    RekeyPolicy,
    decryption_latency,
    effective_multiplier,
    effective_threshold,
    instance_multiplier,
    rekey_storage_penalty,
)
from .storage import (  # noqa: F401
    SessionSpec,
    StorageBreakdown,
    alpha,
    framing_asymptote,
    padded_record_length,
    padded_session_alpha,
    session_storage,
)
