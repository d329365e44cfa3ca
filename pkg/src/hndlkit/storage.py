"""Per-session storage footprint model.

Decomposes the bytes an archiving adversary must retain for one session
into a static initialization part (H + C), the payload itself, per-record
framing, and transport headers:

    S(P) = H + C + P + n*omega + n_data*l,    n = ceil(P / M)

The overhead ratio alpha(P) = S(P)/P falls toward the framing asymptote
1 + omega/M as P grows; an adversary doing stream reassembly drops the
transport term entirely.  Ciphertext is treated as incompressible, so no
compression factor ever applies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .profiles import ProtocolId, ProtocolProfile, default_profile

# Deterministic transport packing when stream reassembly is off.  TCP data
# bytes are packed into MSS-sized segments; QUIC records are datagrams.
TCP_MSS = 1460


@dataclass(frozen=True)
class SessionSpec:
    """One modeled session."""

    protocol: ProtocolId
    payload: int                      # application plaintext bytes, P
    padding_block: int = 0            # record padding block b; 0 = none
    stream_reassembly: bool = False
    use_minimal_archive: bool = False

    def __post_init__(self) -> None:
        if self.payload < 0:
            raise ValueError("payload must be non-negative")
        if self.padding_block < 0:
            raise ValueError("padding_block must be non-negative")
        if self.padding_block > 0 and self.protocol != ProtocolId.TLS13:
            raise ValueError(
                "record padding is a TLS 1.3 mechanism; "
                f"got padding_block={self.padding_block} for {self.protocol.value}"
            )


@dataclass(frozen=True)
class StorageBreakdown:
    handshake: float        # H + C
    payload: float          # P
    record_framing: float   # n * omega (or exact padded framing)
    transport: float        # n_data * l
    total: float            # S
    alpha: float | None     # S / P, None when P = 0
    record_count: int       # n
    packet_count: int       # n_data


def greedy_partition(payload: int, max_record: int) -> list[int]:
    """Split ``payload`` into maximal records (the default partition)."""
    if payload <= 0:
        return []
    full, rem = divmod(payload, max_record)
    return [max_record] * full + ([rem] if rem else [])


def padded_payload_capacity(padding_block: int, profile: ProtocolProfile) -> int:
    """Largest plaintext chunk whose padded record still fits.

    Padding rounds the protected content (chunk + inner type byte) up to
    a block multiple, so a maximal M-byte chunk would overflow; the
    capacity is one byte under the largest block multiple <= M + 1.
    """
    if padding_block <= 0:
        return profile.max_record_payload
    inner_cap = ((profile.max_record_payload + 1) // padding_block) * padding_block
    if inner_cap < padding_block:
        raise ValueError("padding block exceeds the record capacity")
    return inner_cap - 1


def _effective_overhead(spec: SessionSpec, profile: ProtocolProfile) -> float:
    if not spec.use_minimal_archive:
        return profile.record_overhead
    if profile.record_overhead_min is None:
        raise ValueError(
            f"minimal archive overhead undefined for {profile.protocol.value}"
        )
    return profile.record_overhead_min


def _packet_count(
    spec: SessionSpec,
    profile: ProtocolProfile,
    record_count: int,
    framing: float,
    mss: int,
) -> int:
    if spec.stream_reassembly:
        return 0
    if profile.datagram_limit is not None:
        # QUIC records are datagrams; one packet each.
        return record_count
    if spec.payload == 0 and framing == 0:
        return 0
    return math.ceil((spec.payload + framing) / mss)


def session_storage(
    spec: SessionSpec,
    profile: ProtocolProfile | None = None,
    *,
    mss: int = TCP_MSS,
) -> StorageBreakdown:
    """Evaluate S(P) and its decomposition for one session.

    A zero-payload session stores exactly H + C (handshake-only).  When
    ``spec.padding_block`` is set, each greedy record is inflated through
    :func:`padded_record_length` instead of the mean-omega term.
    """
    profile = profile or default_profile(spec.protocol)
    payload = spec.payload

    if spec.padding_block > 0:
        if spec.use_minimal_archive:
            raise ValueError("minimal archive is not modeled for padded records")
        partition = greedy_partition(
            payload, padded_payload_capacity(spec.padding_block, profile)
        )
        framing = float(
            sum(padded_record_length(p, spec.padding_block, profile) - p
                for p in partition)
        )
        n = len(partition)
    else:
        n = math.ceil(payload / profile.max_record_payload)
        framing = n * _effective_overhead(spec, profile)

    n_data = _packet_count(spec, profile, n, framing, mss)
    transport = n_data * profile.transport_header
    handshake = float(profile.handshake_bytes + profile.session_setup_bytes)
    total = handshake + payload + framing + transport
    return StorageBreakdown(
        handshake=handshake,
        payload=float(payload),
        record_framing=framing,
        transport=float(transport),
        total=total,
        alpha=(total / payload) if payload > 0 else None,
        record_count=n,
        packet_count=n_data,
    )


def alpha(
    spec: SessionSpec,
    profile: ProtocolProfile | None = None,
    *,
    mss: int = TCP_MSS,
) -> float:
    """Overhead ratio S(P)/P.  Undefined (raises) for P = 0."""
    if spec.payload == 0:
        raise ValueError("alpha is undefined for zero payload")
    result = session_storage(spec, profile, mss=mss)
    assert result.alpha is not None
    return result.alpha


def framing_asymptote(
    profile: ProtocolProfile,
    minimal: bool = False,
) -> float:
    """Large-payload limit 1 + omega/M.

    For QUIC the per-datagram framing amortizes over the datagram limit
    rather than the record payload capacity.
    """
    if minimal:
        if profile.record_overhead_min is None:
            raise ValueError(
                f"no stripped-archive overhead for {profile.protocol.value}"
            )
        omega = profile.record_overhead_min
    else:
        omega = profile.record_overhead
    return 1.0 + omega / profile.packing_unit


def padded_record_length(
    p: int,
    b: int,
    profile: ProtocolProfile | None = None,
) -> int:
    """Encrypted wire length of one padded record.

    With block size b > 0 the protected content (p plaintext bytes plus
    the inner content-type byte) pads up to the next multiple of b; the
    record then carries the header and AEAD tag on top.  b = 0 is the
    no-padding identity p + 1 + r + t.
    """
    if p < 0:
        raise ValueError("record payload must be non-negative")
    if b < 0:
        raise ValueError("padding block must be non-negative")
    profile = profile or default_profile(ProtocolId.TLS13)
    limit = profile.max_record_payload + 1  # content + inner type byte
    if b == 0:
        inner = p + 1
    else:
        inner = math.ceil((p + 1) / b) * b
    if inner > limit:
        raise ValueError(
            f"padded record content ({inner} B) exceeds the "
            f"{limit} B protected-record limit"
        )
    return inner + profile.record_header + profile.aead_tag


def padded_session_alpha(
    spec: SessionSpec,
    profile: ProtocolProfile | None = None,
    record_sizes: list[int] | None = None,
    *,
    mss: int = TCP_MSS,
) -> float:
    """Alpha with every record inflated per :func:`padded_record_length`.

    ``record_sizes`` must partition the payload; it defaults to greedy
    M-sized records.  Callers model request/response shapes by passing an
    explicit partition.
    """
    profile = profile or default_profile(spec.protocol)
    if spec.payload <= 0:
        raise ValueError("alpha is undefined for zero payload")
    if record_sizes is None:
        record_sizes = greedy_partition(
            spec.payload, padded_payload_capacity(spec.padding_block, profile)
        )
    if sum(record_sizes) != spec.payload:
        raise ValueError(
            f"record partition sums to {sum(record_sizes)}, expected {spec.payload}"
        )
    framing = float(
        sum(padded_record_length(p, spec.padding_block, profile) - p
            for p in record_sizes)
    )
    n_data = _packet_count(spec, profile, len(record_sizes), framing, mss)
    total = (
        profile.handshake_bytes
        + profile.session_setup_bytes
        + spec.payload
        + framing
        + n_data * profile.transport_header
    )
    return total / spec.payload


def ssh_record_padding(chunk_len: int) -> int:
    """RFC 4253 random-padding length for a synthetic SSH data record.

    Alignment runs over packet_length(4) || padding_length(1) ||
    type(1) || chunk || padding with block size 8 and a 4-byte minimum.
    """
    pad = (-(4 + 1 + 1 + chunk_len)) % 8
    if pad < 4:
        pad += 8
    return pad


def exact_record_overhead(protocol: ProtocolId, chunk_len: int) -> float:
    """Wire overhead of one data record in the synthetic capture stack.

    This is the canonical per-record arithmetic shared by the session
    generators; the mean-omega model is its expectation.
    """
    protocol = ProtocolId(protocol)
    if protocol == ProtocolId.TLS13:
        return 22.0                       # 5 header + 1 inner type + 16 tag
    if protocol in (ProtocolId.TLS12_RSA, ProtocolId.TLS12_ECDHE):
        return 29.0                       # 5 header + 8 explicit nonce + 16 tag
    if protocol == ProtocolId.QUIC:
        return 27.0                       # 11 short header + 16 tag
    if protocol == ProtocolId.SSH:
        # 4 length + 1 padding_length + 1 type marker + pad + 16 tag
        return 22.0 + ssh_record_padding(chunk_len)
    raise ValueError(f"unhandled protocol {protocol}")


def load_session_specs(path) -> list[SessionSpec]:
    """Read a JSON array of session specs (batch mode input).

    Fields per entry: ``protocol`` (required), ``payload`` (required),
    ``padding_block``, ``stream_reassembly``, ``use_minimal_archive``.
    """
    import json
    from pathlib import Path

    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, list):
        raise ValueError("batch file must hold a JSON array of session specs")
    specs = []
    for index, entry in enumerate(raw):
        try:
            specs.append(
                SessionSpec(
                    protocol=ProtocolId.parse(entry["protocol"]),
                    payload=int(entry["payload"]),
                    padding_block=int(entry.get("padding_block", 0)),
                    stream_reassembly=bool(entry.get("stream_reassembly", False)),
                    use_minimal_archive=bool(entry.get("use_minimal_archive", False)),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"batch entry {index}: {exc}") from exc
    return specs


def batch_rows(
    specs: list[SessionSpec],
    profiles: dict[ProtocolId, ProtocolProfile] | None = None,
) -> list[dict]:
    """Evaluate a batch of session specs into CSV-ready rows."""
    rows = []
    for spec in specs:
        profile = (profiles or {}).get(spec.protocol) or default_profile(spec.protocol)
        breakdown = session_storage(spec, profile)
        rows.append(
            {
                "protocol": spec.protocol.value,
                "payload": spec.payload,
                "padding_block": spec.padding_block,
                "reassembly": spec.stream_reassembly,
                "minimal": spec.use_minimal_archive,
                "storage": breakdown.total,
                "alpha": breakdown.alpha,
                "records": breakdown.record_count,
                "packets": breakdown.packet_count,
            }
        )
    return rows
