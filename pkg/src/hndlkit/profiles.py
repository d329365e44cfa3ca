"""Per-protocol framing and handshake constants.

Every downstream model is parameterized by a :class:`ProtocolProfile`:
handshake transcript size H, session-setup bytes C, mean per-record
framing overhead omega, record payload capacity M, and per-packet
transport header l.  The defaults reproduce loopback-measured constants
for each protocol; every field can be overridden from a JSON document
(see :func:`load_profile_overrides`).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from enum import Enum
from pathlib import Path


class ProtocolId(str, Enum):
    TLS12_RSA = "tls12-rsa"
    TLS12_ECDHE = "tls12-ecdhe"
    TLS13 = "tls13"
    QUIC = "quic"
    SSH = "ssh"

    @classmethod
    def parse(cls, name: str) -> "ProtocolId":
        normalized = name.strip().lower().replace("_", "-")
        for member in cls:
            if member.value == normalized:
                return member
        raise ValueError(
            f"unknown protocol {name!r}; expected one of "
            + ", ".join(m.value for m in cls)
        )


@dataclass(frozen=True)
class ProtocolProfile:
    """Framing constants for one protocol.

    ``record_overhead`` is a mean and may be fractional (SSH's
    block-alignment padding averages 7.5 B); totals computed from it keep
    full precision and are rounded only at presentation.
    """

    protocol: ProtocolId
    handshake_bytes: int          # H
    session_setup_bytes: int      # C
    record_overhead: float        # omega (mean, per record)
    max_record_payload: int       # M
    transport_header: int         # l (per transport packet)
    record_header: int            # r
    aead_tag: int                 # t
    record_overhead_min: float | None = None  # omega after adversary stripping
    datagram_limit: int | None = None         # QUIC only

    def __post_init__(self) -> None:
        if self.handshake_bytes <= 0:
            raise ValueError("handshake_bytes must be positive")
        if self.max_record_payload <= 0:
            raise ValueError("max_record_payload must be positive")
        if self.record_header < 0 or self.aead_tag < 0:
            raise ValueError("record_header and aead_tag must be non-negative")
        if self.record_overhead_min is not None and (
            self.record_overhead_min > self.record_overhead
        ):
            raise ValueError("record_overhead_min must not exceed record_overhead")

    @property
    def packing_unit(self) -> int:
        """Unit the framing asymptote amortizes over (datagram for QUIC)."""
        return self.datagram_limit or self.max_record_payload


# Defaults.  H values: TLS 1.2 RSA baseline 1620 B; TLS 1.2 ECDHE adds a
# documented +300 B ServerKeyExchange assumption; TLS 1.3 2160 B; QUIC 2400 B
# (client Initial padded to >= 1200 B included); SSH 5100 B plus 1109 B of
# channel negotiation.  omega: TLS 1.3 exactly 22 B (5 header + 16 tag +
# 1 inner type); TLS 1.2 29 B (5 + 8 explicit nonce + 16 tag); QUIC 27 B
# (11 short header + 16 tag) per datagram; SSH 28.5 B mean (5 + 16 + 7.5
# expected alignment padding).  Transport headers: 54 B Ethernet+IPv4+TCP,
# 42 B Ethernet+IPv4+UDP (IPv6 variants via overrides: 74/62).
_DEFAULTS: dict[ProtocolId, ProtocolProfile] = {
    ProtocolId.TLS12_RSA: ProtocolProfile(
        protocol=ProtocolId.TLS12_RSA,
        handshake_bytes=1620,
        session_setup_bytes=0,
        record_overhead=29.0,
        max_record_payload=16384,
        transport_header=54,
        record_header=5,
        aead_tag=16,
    ),
    ProtocolId.TLS12_ECDHE: ProtocolProfile(
        protocol=ProtocolId.TLS12_ECDHE,
        handshake_bytes=1920,
        session_setup_bytes=0,
        record_overhead=29.0,
        max_record_payload=16384,
        transport_header=54,
        record_header=5,
        aead_tag=16,
    ),
    ProtocolId.TLS13: ProtocolProfile(
        protocol=ProtocolId.TLS13,
        handshake_bytes=2160,
        session_setup_bytes=0,
        record_overhead=22.0,
        record_overhead_min=3.0,
        max_record_payload=16384,
        transport_header=54,
        record_header=5,
        aead_tag=16,
    ),
    ProtocolId.QUIC: ProtocolProfile(
        protocol=ProtocolId.QUIC,
        handshake_bytes=2400,
        session_setup_bytes=0,
        record_overhead=27.0,
        record_overhead_min=11.0,
        # Payload capacity per datagram: 1350 B limit minus 27 B framing.
        max_record_payload=1323,
        transport_header=42,
        record_header=11,
        aead_tag=16,
        datagram_limit=1350,
    ),
    ProtocolId.SSH: ProtocolProfile(
        protocol=ProtocolId.SSH,
        handshake_bytes=5100,
        session_setup_bytes=1109,
        record_overhead=28.5,
        record_overhead_min=12.5,
        max_record_payload=32768,
        transport_header=54,
        record_header=5,
        aead_tag=16,
    ),
}

# Appendix-style minimal archives are defined for these protocols only.
_MINIMAL_SUPPORTED = frozenset(
    {ProtocolId.TLS13, ProtocolId.SSH, ProtocolId.QUIC}
)


def default_profile(protocol: ProtocolId) -> ProtocolProfile:
    """Canonical constants for ``protocol``."""
    return _DEFAULTS[ProtocolId(protocol)]


# Strippable PADDING frames in the QUIC client Initial (mandatory 1200 B
# datagram floor); they sit outside the CRYPTO stream, so a protocol-aware
# archivist can drop them without corrupting the transcript hash.
QUIC_INITIAL_PADDING_BYTES = 700


def minimal_profile(
    protocol: ProtocolId,
    strip_initial_padding: bool = False,
) -> ProtocolProfile:
    """Profile with omega replaced by the stripped-archive omega_min.

    Tags dropped and reconstructible header fields elided; defined for
    TLS 1.3, SSH, and QUIC only.  ``strip_initial_padding`` additionally
    deducts the QUIC client Initial's padding frames from H (off by
    default: the per-record analysis leaves handshakes untouched, and
    the saving only matters for ultra-short sessions).
    """
    protocol = ProtocolId(protocol)
    if protocol not in _MINIMAL_SUPPORTED:
        raise ValueError(
            f"minimal archive profile is not defined for {protocol.value}"
        )
    base = _DEFAULTS[protocol]
    assert base.record_overhead_min is not None
    profile = replace(base, record_overhead=base.record_overhead_min)
    if strip_initial_padding:
        if protocol != ProtocolId.QUIC:
            raise ValueError("only the QUIC Initial carries strippable padding")
        profile = replace(
            profile,
            handshake_bytes=profile.handshake_bytes - QUIC_INITIAL_PADDING_BYTES,
        )
    return profile


def custom_profile(protocol: ProtocolId, **overrides) -> ProtocolProfile:
    """Default profile with selected fields overridden."""
    return replace(default_profile(protocol), **overrides)


def profile_to_dict(profile: ProtocolProfile) -> dict:
    data = asdict(profile)
    data["protocol"] = profile.protocol.value
    return data


def profile_from_dict(data: dict) -> ProtocolProfile:
    protocol = ProtocolId.parse(data["protocol"])
    fields = {k: v for k, v in data.items() if k != "protocol"}
    return custom_profile(protocol, **fields)


def load_profile_overrides(path: str | Path) -> dict[ProtocolId, ProtocolProfile]:
    """Read a JSON document of per-protocol overrides.

    Format: ``{"tls13": {"handshake_bytes": 2500}, ...}``.  Unlisted
    protocols keep their defaults.
    """
    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, dict):
        raise ValueError("profile override file must hold a JSON object")
    profiles = {p: default_profile(p) for p in ProtocolId}
    for name, fields in raw.items():
        protocol = ProtocolId.parse(name)
        profiles[protocol] = custom_profile(protocol, **fields)
    return profiles
