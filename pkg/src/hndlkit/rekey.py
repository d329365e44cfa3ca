"""Quantum-workload multipliers under rekeying policies.

Each fresh DH exchange inside a session is an independent key-recovery
instance for the adversary.  With a rekey threshold of R bytes, full
transcript recovery needs E = ceil(P/R) instances; a partial adversary
interested only in the first L bytes needs E_eff = ceil(min(L,P)/R),
which collapses to 1 whenever R >= L.

SSH counts the threshold against encrypted transport bytes rather than
bare payload, so the effective payload interval between rekeys runs at
roughly twice the configured limit (calibration_factor, default 2.0).
TLS 1.3 has no in-band mechanism; PSK-DHE session rotation achieves
E = ceil(P/R) exactly at the cost of a reconnect per interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .profiles import ProtocolProfile

SSH_REKEY_OVERHEAD = 3072          # ~2-3 KB per in-band rekey exchange
TLS13_RESUMED_HANDSHAKE = 2034     # resumed-connection handshake bytes


class RekeyMechanism(str, Enum):
    SSH_REKEYLIMIT = "ssh-rekeylimit"
    TLS13_PSK_DHE_ROTATION = "tls13-psk-dhe-rotation"
    NONE = "none"


@dataclass(frozen=True)
class RekeyPolicy:
    mechanism: RekeyMechanism
    nominal_threshold: int = 0              # R_nom, bytes
    calibration_factor: float = 2.0         # SSH: R_eff ~= factor * R_nom
    per_rekey_overhead: int | None = None   # wire bytes per rekey event

    def __post_init__(self) -> None:
        if self.mechanism != RekeyMechanism.NONE and self.nominal_threshold <= 0:
            raise ValueError("nominal_threshold must be positive when rekeying")
        if self.calibration_factor <= 0:
            raise ValueError("calibration_factor must be positive")

    @property
    def rekey_overhead(self) -> int:
        if self.per_rekey_overhead is not None:
            return self.per_rekey_overhead
        if self.mechanism == RekeyMechanism.SSH_REKEYLIMIT:
            return SSH_REKEY_OVERHEAD
        if self.mechanism == RekeyMechanism.TLS13_PSK_DHE_ROTATION:
            return TLS13_RESUMED_HANDSHAKE
        return 0


@dataclass(frozen=True)
class QuantumCost:
    instances: int              # E
    per_instance_hours: float   # T_q
    total_hours: float          # E * T_q
    storage_penalty: float      # added alpha from rekey handshakes

    def __post_init__(self) -> None:
        if self.instances < 1:
            raise ValueError("any nonempty session needs at least one instance")


def effective_threshold(policy: RekeyPolicy) -> float:
    """Effective payload bytes between fresh exchanges, R_eff."""
    if policy.mechanism == RekeyMechanism.NONE:
        raise ValueError("no rekey threshold without a rekey mechanism")
    if policy.mechanism == RekeyMechanism.SSH_REKEYLIMIT:
        return policy.calibration_factor * policy.nominal_threshold
    # TLS 1.3 rotation counts plaintext exactly: E = ceil(P/R) held exactly.
    return float(policy.nominal_threshold)


def instance_multiplier(payload: int, policy: RekeyPolicy) -> int:
    """E: independent key-recovery instances for full transcript recovery.

    Deterministic key ratchets add no instances, so E = 1 whenever no
    fresh-DH mechanism is active, regardless of session length.
    """
    if payload < 0:
        raise ValueError("payload must be non-negative")
    if policy.mechanism == RekeyMechanism.NONE:
        return 1
    return max(1, math.ceil(payload / effective_threshold(policy)))


def effective_multiplier(target_bytes: int, payload: int, policy: RekeyPolicy) -> int:
    """E_eff for an adversary needing only the first L payload bytes."""
    if target_bytes < 0 or payload < 0:
        raise ValueError("byte counts must be non-negative")
    if policy.mechanism == RekeyMechanism.NONE:
        return 1
    needed = min(target_bytes, payload)
    return max(1, math.ceil(needed / effective_threshold(policy)))


def rekey_storage_penalty(
    payload: int,
    policy: RekeyPolicy,
    profile: ProtocolProfile | None = None,
) -> float:
    """Added alpha from the (E-1) extra key exchanges: (E-1)*overhead/P."""
    if payload <= 0:
        raise ValueError("storage penalty is per payload byte; payload must be > 0")
    if policy.mechanism == RekeyMechanism.NONE:
        return 0.0
    instances = instance_multiplier(payload, policy)
    return (instances - 1) * policy.rekey_overhead / payload


def decryption_latency(instances: int, per_instance_hours: float) -> float:
    """Wall-clock hours to recover a full transcript: E * T_q."""
    if instances < 1:
        raise ValueError("instances must be at least 1")
    if per_instance_hours <= 0:
        raise ValueError("per-instance time must be positive")
    return instances * per_instance_hours


def quantum_cost(
    payload: int,
    policy: RekeyPolicy,
    per_instance_hours: float,
    profile: ProtocolProfile | None = None,
) -> QuantumCost:
    """Bundle E, E*T_q, and the storage penalty for one session."""
    instances = instance_multiplier(payload, policy)
    penalty = (
        rekey_storage_penalty(payload, policy, profile) if payload > 0 else 0.0
    )
    return QuantumCost(
        instances=instances,
        per_instance_hours=per_instance_hours,
        total_hours=decryption_latency(instances, per_instance_hours),
        storage_penalty=penalty,
    )


def effective_multiplier_grid(
    target_values: list[int],
    threshold_values: list[int],
    payload: int,
    mechanism: RekeyMechanism = RekeyMechanism.SSH_REKEYLIMIT,
    calibration_factor: float = 1.0,
) -> list[dict]:
    """(L, R) -> E_eff rows for heatmap plotting.

    ``calibration_factor`` defaults to 1.0 here so the grid axes are the
    effective thresholds themselves.
    """
    rows = []
    for r_nom in threshold_values:
        policy = RekeyPolicy(
            mechanism=mechanism,
            nominal_threshold=r_nom,
            calibration_factor=calibration_factor,
        )
        for target in target_values:
            rows.append(
                {
                    "target_bytes": target,
                    "threshold": r_nom,
                    "effective_threshold": effective_threshold(policy),
                    "e_eff": effective_multiplier(target, payload, policy),
                }
            )
    return rows
