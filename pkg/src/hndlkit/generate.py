"""Synthetic session generator.

Simulates both endpoints of a protocol session honestly — real key
exchanges, real key schedules, records AEAD-encrypted under the true
keys — and emits a :class:`~hndlkit.capture.CaptureBundle` plus the
quantum-oracle entries (exactly the private keys a CRQC would recover
from the on-wire public values) and a withheld ground-truth keylog for
the verifier.

Handshake sizes are calibrated so each capture's wire footprint equals
the storage profile's constants byte-for-byte; the whole build is
deterministic in the seed, so captures are reproducible from a run
manifest.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

from . import quic, sshproto, tls12, tls13
from .capture import (
    CaptureBundle,
    GeneratedCapture,
    GroundTruth,
    HandshakeEntry,
    KeyKind,
    QuantumOracle,
    RecordEntry,
    SecretSchedule,
)
from .profiles import ProtocolId, ProtocolProfile, default_profile

CCS_RECORD = b"\x14\x03\x03\x00\x01\x01"
PLAIN_HS_HEADER = b"\x16\x03\x03"
SSH_CLIENT_VERSION = b"SSH-2.0-hndl_client"
SSH_SERVER_VERSION = b"SSH-2.0-hndl_server"
RESUMED_HANDSHAKE_TARGET = 2034


class GenerateError(ValueError):
    """Invalid option combination for the requested protocol."""


def _split_payload(payload: int, split: tuple[int, int] | None) -> tuple[int, int]:
    if split is not None:
        if split[0] < 0 or split[1] < 0 or sum(split) != payload:
            raise GenerateError(f"payload split {split} does not sum to {payload}")
        return split
    half = payload // 2
    return payload - half, half


def _chunks(data: bytes, size: int) -> list[bytes]:
    return [data[i : i + size] for i in range(0, len(data), size)]


def generate_session(
    protocol: ProtocolId,
    payload: int,
    *,
    seed: int = 0,
    resumption_links: int = 0,
    link_modes: list[str] | None = None,
    zero_rtt: bool = False,
    rekey_limit: int = 0,
    rotation_interval: int = 0,
    padding_block: int = 0,
    key_updates: int = 0,
    payload_split: tuple[int, int] | None = None,
    profile: ProtocolProfile | None = None,
) -> GeneratedCapture:
    """Generate one session (or a resumption/rotation chain).

    Options are protocol-gated: resumption, 0-RTT, record padding,
    KeyUpdate, and PSK-DHE rotation are TLS 1.3 mechanisms; RekeyLimit is
    SSH's.  ``link_modes`` picks "psk" (pure PSK, no fresh exchange) or
    "psk-dhe" per resumed link; 0-RTT data rides on the last pure-PSK
    link.
    """
    protocol = ProtocolId(protocol)
    if payload < 0:
        raise GenerateError("payload must be non-negative")
    profile = profile or default_profile(protocol)

    tls13_only = {
        "resumption_links": resumption_links,
        "zero_rtt": zero_rtt,
        "rotation_interval": rotation_interval,
        "padding_block": padding_block,
        "key_updates": key_updates,
    }
    if protocol != ProtocolId.TLS13 and any(tls13_only.values()):
        bad = [k for k, v in tls13_only.items() if v]
        raise GenerateError(f"{', '.join(bad)}: TLS 1.3 option(s) for {protocol.value}")
    if rekey_limit and protocol != ProtocolId.SSH:
        raise GenerateError(f"rekey_limit is an SSH option, got {protocol.value}")
    if zero_rtt and not resumption_links:
        raise GenerateError("zero_rtt requires at least one resumption link")
    if rotation_interval and resumption_links:
        raise GenerateError("rotation_interval and resumption_links are exclusive")

    rng = random.Random(seed)
    session_base = f"{protocol.value}-{seed:08x}"

    if protocol == ProtocolId.TLS13:
        return _generate_tls13(
            rng, session_base, payload, profile,
            resumption_links=resumption_links,
            link_modes=link_modes,
            zero_rtt=zero_rtt,
            rotation_interval=rotation_interval,
            padding_block=padding_block,
            key_updates=key_updates,
            payload_split=payload_split,
        )
    if protocol == ProtocolId.TLS12_RSA:
        return _generate_tls12_rsa(rng, session_base, payload, profile, payload_split)
    if protocol == ProtocolId.TLS12_ECDHE:
        raise GenerateError(
            "the synthetic testbed generates the RSA key-transport mode; "
            "TLS 1.2 ECDHE is storage-model only"
        )
    if protocol == ProtocolId.QUIC:
        return _generate_quic(rng, session_base, payload, profile, payload_split)
    if protocol == ProtocolId.SSH:
        return _generate_ssh(rng, session_base, payload, profile,
                             rekey_limit, payload_split)
    raise GenerateError(f"unhandled protocol {protocol}")


# ---------------------------------------------------------------------------
# TLS 1.3 handshake assembly (shared by the TCP and QUIC paths)


@dataclass
class _Tls13Materials:
    """All randomness one exchange consumes, drawn once up front so the
    size-calibration passes are pure re-serializations."""

    client_random: bytes
    server_random: bytes
    legacy_session: bytes
    client_priv: bytes | None
    client_pub: bytes | None
    server_pub: bytes | None
    shared: bytes | None
    sig_key: Ed25519PrivateKey
    cert_filler_pool: bytes
    quic_params: bytes | None = None

    @classmethod
    def draw(cls, rng: random.Random, mode: str, for_quic: bool) -> "_Tls13Materials":
        client_random = rng.randbytes(32)
        legacy_session = b"" if for_quic else rng.randbytes(32)
        server_random = rng.randbytes(32)
        if mode in ("full", "psk-dhe"):
            client_priv, client_pub = tls13.x25519_keypair(rng.randbytes(32))
            _, server_pub = tls13.x25519_keypair(rng.randbytes(32))
            shared = tls13.x25519_shared(client_priv, server_pub)
        else:
            client_priv = client_pub = server_pub = shared = None
        return cls(
            client_random=client_random,
            server_random=server_random,
            legacy_session=legacy_session,
            client_priv=client_priv,
            client_pub=client_pub,
            server_pub=server_pub,
            shared=shared,
            sig_key=Ed25519PrivateKey.from_private_bytes(rng.randbytes(32)),
            cert_filler_pool=rng.randbytes(8192),
            quic_params=rng.randbytes(16) if for_quic else None,
        )


@dataclass
class _Tls13Exchange:
    ch: bytes
    sh: bytes
    flight: list[bytes]        # EE [.. Cert CV] SF
    client_tail: list[bytes]   # [EOED] CF
    secrets: tls13.Tls13Secrets

    @property
    def transcript_to_sf(self) -> list[bytes]:
        return [self.ch, self.sh] + self.flight


def _tls13_exchange(
    mat: _Tls13Materials,
    mode: str,
    psk: bytes | None,
    psk_identity: bytes | None,
    early_data: bool,
    ch_padding: int,
    cert_filler: int,
) -> _Tls13Exchange:
    """Serialize one handshake and run the schedule; pure in its inputs."""

    def make_ch(binder: bytes | None) -> bytes:
        return tls13.build_client_hello(
            random=mat.client_random,
            session_id=mat.legacy_session,
            key_share_public=mat.client_pub,
            psk_identity=psk_identity,
            psk_binder_value=binder,
            offer_early_data=early_data,
            padding=ch_padding,
            quic_transport_params=mat.quic_params,
        )

    if psk_identity is not None:
        if psk is None:
            raise GenerateError("PSK identity offered without PSK material")
        # Two passes: a zero binder fixes all lengths, then the real
        # binder MACs the binder-less prefix of the final serialization.
        draft = make_ch(b"\x00" * tls13.HASH_LEN)
        binder = tls13.psk_binder(psk, tls13.binder_transcript_prefix(draft))
        ch = make_ch(binder)
    else:
        ch = make_ch(None)

    sh = tls13.build_server_hello(
        random=mat.server_random,
        session_id=mat.legacy_session,
        key_share_public=mat.server_pub if mode != "psk" else None,
        selected_psk=0 if psk_identity is not None else None,
    )

    flight = [tls13.hs_message(tls13.HS_ENCRYPTED_EXTENSIONS, b"\x00\x00")]
    if mode == "full":
        spki = mat.sig_key.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)
        cert_body = spki + mat.cert_filler_pool[:cert_filler]
        entry = len(cert_body).to_bytes(3, "big") + cert_body + b"\x00\x00"
        cert_list = len(entry).to_bytes(3, "big") + entry
        flight.append(tls13.hs_message(tls13.HS_CERTIFICATE, b"\x00" + cert_list))
        cv_content = (
            b" " * 64 + b"TLS 1.3, server CertificateVerify" + b"\x00"
            + tls13.transcript_hash([ch, sh] + flight)
        )
        signature = mat.sig_key.sign(cv_content)
        flight.append(
            tls13.hs_message(
                tls13.HS_CERTIFICATE_VERIFY,
                b"\x08\x07" + len(signature).to_bytes(2, "big") + signature,
            )
        )

    hs_secrets = tls13.derive_schedule(
        mat.shared, psk, [ch, sh], [ch, sh], None,
        full_client_hello=ch if early_data else None,
    )
    sf = tls13.hs_message(
        tls13.HS_FINISHED,
        tls13.finished_verify(
            hs_secrets.server_handshake_traffic,
            tls13.transcript_hash([ch, sh] + flight),
        ),
    )
    flight.append(sf)

    client_tail: list[bytes] = []
    if early_data:
        client_tail.append(tls13.hs_message(tls13.HS_END_OF_EARLY_DATA, b""))
    cf = tls13.hs_message(
        tls13.HS_FINISHED,
        tls13.finished_verify(
            hs_secrets.client_handshake_traffic,
            tls13.transcript_hash([ch, sh] + flight + client_tail),
        ),
    )
    client_tail.append(cf)

    secrets = tls13.derive_schedule(
        mat.shared, psk, [ch, sh], [ch, sh] + flight,
        [ch, sh] + flight + client_tail,
        full_client_hello=ch if early_data else None,
    )
    return _Tls13Exchange(ch=ch, sh=sh, flight=flight,
                          client_tail=client_tail, secrets=secrets)


@dataclass
class _Tls13Session:
    bundle: CaptureBundle
    secrets: tls13.Tls13Secrets
    tickets: list[tuple[bytes, bytes]] = field(default_factory=list)


def _padded_chunk_limit(padding_block: int, profile: ProtocolProfile) -> int:
    """Largest plaintext chunk whose padded record still fits."""
    from .storage import padded_payload_capacity

    return padded_payload_capacity(padding_block, profile)


def _encrypt_padded(codec: tls13.RecordCodec, chunk: bytes, padding_block: int) -> bytes:
    if padding_block <= 0:
        return codec.encrypt(chunk, 0x17)
    inner = -(-(len(chunk) + 1) // padding_block) * padding_block
    return codec.encrypt(chunk, 0x17, pad_to=inner)


def _build_tls13_session(
    rng: random.Random,
    session_id: str,
    payload_c: bytes,
    payload_s: bytes,
    profile: ProtocolProfile,
    *,
    mode: str = "full",
    psk: bytes | None = None,
    psk_identity: bytes | None = None,
    early_data: bool = False,
    padding_block: int = 0,
    key_updates: int = 0,
    issue_tickets: int = 0,
    handshake_target: int | None = None,
) -> tuple[_Tls13Session, list[bytes]]:
    """One TLS 1.3 connection over TCP framing.

    Returns the session plus the ephemeral private keys that belong in
    the oracle.  The handshake's wire bytes (records incl. CCS) are
    calibrated to ``handshake_target`` via the certificate size (full
    handshakes) or the ClientHello padding extension (resumed ones).
    """
    if handshake_target is None:
        handshake_target = (
            profile.handshake_bytes if mode == "full" else RESUMED_HANDSHAKE_TARGET
        )
    mat = _Tls13Materials.draw(rng, mode, for_quic=False)
    ticket_ids = [rng.randbytes(16) for _ in range(issue_tickets)]

    def wire_size(exchange: _Tls13Exchange, early_count: int) -> list[HandshakeEntry]:
        entries = [
            HandshakeEntry("client", "client_hello", _plain_record(exchange.ch))
        ]
        if early_data:
            entries.append(HandshakeEntry("client", "ccs", CCS_RECORD))
        entries.append(
            HandshakeEntry("server", "server_hello", _plain_record(exchange.sh))
        )
        entries.append(HandshakeEntry("server", "ccs", CCS_RECORD))
        server_codec = tls13.RecordCodec(exchange.secrets.server_handshake_traffic)
        entries.append(
            HandshakeEntry(
                "server", "handshake_flight",
                server_codec.encrypt(b"".join(exchange.flight), 0x16),
            )
        )
        if not early_data:
            entries.append(HandshakeEntry("client", "ccs", CCS_RECORD))
        tail = list(exchange.client_tail)
        if early_data:
            early_codec = tls13.RecordCodec(exchange.secrets.client_early_traffic)
            early_codec.seq = early_count
            entries.append(
                HandshakeEntry("client", "end_of_early_data",
                               early_codec.encrypt(tail.pop(0), 0x16))
            )
        client_codec = tls13.RecordCodec(exchange.secrets.client_handshake_traffic)
        entries.append(
            HandshakeEntry("client", "client_finished",
                           client_codec.encrypt(b"".join(tail), 0x16))
        )
        return entries

    def build(ch_padding: int, cert_filler: int) -> _Tls13Exchange:
        return _tls13_exchange(mat, mode, psk, psk_identity, early_data,
                               ch_padding, cert_filler)

    base_exchange = build(0, 0)
    base = sum(len(e.data) for e in wire_size(base_exchange, 0))
    deficit = handshake_target - base
    if deficit < 0:
        raise GenerateError(
            f"handshake target {handshake_target} B is below the structural "
            f"minimum {base} B ({session_id}, mode {mode})"
        )
    if mode == "full":
        exchange = build(0, deficit)
    elif deficit == 0:
        exchange = base_exchange
    else:
        if deficit < 4:
            raise GenerateError(
                f"cannot express a {deficit} B handshake deficit via the "
                "ClientHello padding extension"
            )
        exchange = build(deficit - 4, 0)
    secrets = exchange.secrets

    chunk_limit = _padded_chunk_limit(padding_block, profile)
    early_records: list[RecordEntry] = []
    app_payload_c = payload_c
    if early_data:
        early_codec = tls13.RecordCodec(secrets.client_early_traffic)
        for chunk in _chunks(payload_c, chunk_limit):
            early_records.append(
                RecordEntry(
                    "client",
                    _encrypt_padded(early_codec, chunk, padding_block),
                    "early",
                )
            )
        app_payload_c = b""

    entries = wire_size(exchange, len(early_records))
    measured = sum(len(e.data) for e in entries)
    if measured != handshake_target:
        raise GenerateError(
            f"handshake calibration failed: {measured} != {handshake_target}"
        )

    bundle = CaptureBundle(
        session_id=session_id,
        protocol=ProtocolId.TLS13,
        handshake=entries,
        metadata={"client_random": mat.client_random.hex()},
    )

    client_codec = tls13.RecordCodec(secrets.client_application_traffic)
    server_codec = tls13.RecordCodec(secrets.server_application_traffic)
    records: list[RecordEntry] = list(early_records)

    tickets: list[tuple[bytes, bytes]] = []
    for index, identity in enumerate(ticket_ids):
        nonce = index.to_bytes(2, "big")
        nst = tls13.build_new_session_ticket(nonce, identity,
                                             max_early_data=0xFFFFFFFF)
        records.append(RecordEntry("server", server_codec.encrypt(nst, 0x16)))
        tickets.append((identity, nonce))

    epoch_secrets_c = [secrets.client_application_traffic]
    epoch_secrets_s = [secrets.server_application_traffic]

    def emit(sender: str, codec: tls13.RecordCodec, data: bytes,
             epoch_log: list[bytes]) -> None:
        chunks = _chunks(data, chunk_limit)
        if not chunks:
            return
        groups = key_updates + 1
        per_group = max(1, -(-len(chunks) // groups))
        for index, chunk in enumerate(chunks):
            if (key_updates and index and index % per_group == 0
                    and len(epoch_log) <= key_updates):
                ku = tls13.hs_message(tls13.HS_KEY_UPDATE, b"\x00")
                records.append(RecordEntry(sender, codec.encrypt(ku, 0x16)))
                codec.ratchet()
                epoch_log.append(codec.secret)
            records.append(
                RecordEntry(sender, _encrypt_padded(codec, chunk, padding_block))
            )

    emit("client", client_codec, app_payload_c, epoch_secrets_c)
    emit("server", server_codec, payload_s, epoch_secrets_s)
    bundle.records = records

    schedule = _tls13_schedule(session_id, mat.client_random, secrets,
                               epoch_secrets_c, epoch_secrets_s)
    bundle.ground_truth = GroundTruth(
        keylog=schedule.keylog_lines(),
        payload_client=payload_c,
        payload_server=payload_s,
    )
    ephemerals = [mat.client_priv] if mat.client_priv is not None else []
    return _Tls13Session(bundle=bundle, secrets=secrets, tickets=tickets), ephemerals


def _plain_record(message: bytes) -> bytes:
    return PLAIN_HS_HEADER + len(message).to_bytes(2, "big") + message


def _tls13_schedule(
    session_id: str,
    client_random: bytes,
    secrets: tls13.Tls13Secrets,
    epochs_c: list[bytes],
    epochs_s: list[bytes],
    protocol: ProtocolId = ProtocolId.TLS13,
) -> SecretSchedule:
    schedule = SecretSchedule(
        protocol=protocol, session_id=session_id, client_random=client_random
    )
    schedule.secrets = {
        "CLIENT_HANDSHAKE_TRAFFIC_SECRET": secrets.client_handshake_traffic,
        "SERVER_HANDSHAKE_TRAFFIC_SECRET": secrets.server_handshake_traffic,
        "EXPORTER_SECRET": secrets.exporter_master,
    }
    if secrets.client_early_traffic is not None:
        schedule.secrets["CLIENT_EARLY_TRAFFIC_SECRET"] = secrets.client_early_traffic
    for index, secret in enumerate(epochs_c):
        schedule.secrets[f"CLIENT_TRAFFIC_SECRET_{index}"] = secret
    for index, secret in enumerate(epochs_s):
        schedule.secrets[f"SERVER_TRAFFIC_SECRET_{index}"] = secret
    if secrets.resumption_master is not None:
        schedule.secrets["resumption_master"] = secrets.resumption_master
    return schedule


def _generate_tls13(
    rng: random.Random,
    session_base: str,
    payload: int,
    profile: ProtocolProfile,
    *,
    resumption_links: int,
    link_modes: list[str] | None,
    zero_rtt: bool,
    rotation_interval: int,
    padding_block: int,
    key_updates: int,
    payload_split: tuple[int, int] | None,
) -> GeneratedCapture:
    oracle = QuantumOracle()
    bundles: list[CaptureBundle] = []
    data = rng.randbytes(payload)

    if rotation_interval:
        # PSK-DHE rotation: each link carries one interval of payload and
        # runs a fresh ECDHE exchange.
        spans = _chunks(data, rotation_interval) or [b""]
        modes = ["full"] + ["psk-dhe"] * (len(spans) - 1)
        payload_parts = spans
    else:
        links = resumption_links + 1
        if link_modes is None:
            link_modes = ["psk"] * resumption_links
        if len(link_modes) != resumption_links:
            raise GenerateError("link_modes must cover every resumption link")
        if any(m not in ("psk", "psk-dhe") for m in link_modes):
            raise GenerateError("link modes are 'psk' or 'psk-dhe'")
        modes = ["full"] + list(link_modes)
        per_link = payload // links
        payload_parts = [
            data[i * per_link : (i + 1) * per_link] if i < links - 1
            else data[(links - 1) * per_link :]
            for i in range(links)
        ]

    single = len(modes) == 1
    psk: bytes | None = None
    psk_identity: bytes | None = None
    last_secrets: tls13.Tls13Secrets | None = None
    for index, mode in enumerate(modes):
        session_id = session_base if single else f"{session_base}-{index}"
        part = payload_parts[index]
        c_len, _ = _split_payload(len(part), payload_split if single else None)
        early = zero_rtt and index == len(modes) - 1 and mode == "psk"
        session, ephemerals = _build_tls13_session(
            rng,
            session_id,
            part[:c_len],
            part[c_len:],
            profile,
            mode=mode,
            psk=psk,
            psk_identity=psk_identity,
            early_data=early,
            padding_block=padding_block,
            key_updates=key_updates if index == 0 else 0,
            issue_tickets=1 if index < len(modes) - 1 else 0,
        )
        for ephemeral in ephemerals:
            oracle.add(session_id, KeyKind.ECDHE_EPHEMERAL_PRIVATE, ephemeral)
        bundles.append(session.bundle)
        last_secrets = session.secrets
        if index < len(modes) - 1:
            identity, nonce = session.tickets[0]
            assert last_secrets.resumption_master is not None
            psk = tls13.resumption_psk(last_secrets.resumption_master, nonce)
            psk_identity = identity
    return GeneratedCapture(bundles=bundles, oracle=oracle)


# ---------------------------------------------------------------------------
# TLS 1.2 RSA key transport


def _generate_tls12_rsa(
    rng: random.Random,
    session_id: str,
    payload: int,
    profile: ProtocolProfile,
    payload_split: tuple[int, int] | None,
    rsa_key=None,
) -> GeneratedCapture:
    rsa_key = rsa_key or tls12.testbed_rsa_key()
    public = rsa_key.public_key()
    spki = tls12.public_key_der(public)
    fingerprint = tls12.public_key_fingerprint(public)

    client_random = rng.randbytes(32)
    server_random = rng.randbytes(32)
    legacy_session = rng.randbytes(32)
    data = rng.randbytes(payload)
    c_len, _ = _split_payload(payload, payload_split)
    payload_c, payload_s = data[:c_len], data[c_len:]

    def ch_message() -> bytes:
        body = b"\x03\x03" + client_random
        body += bytes([len(legacy_session)]) + legacy_session
        body += (2).to_bytes(2, "big") + tls12.CIPHER_TLS_RSA_AES128_GCM.to_bytes(2, "big")
        body += b"\x01\x00"
        sni_name = b"testbed.internal"
        sni = (
            len(sni_name + b"\x00\x00\x00").to_bytes(2, "big")[:2]
        )
        sni = (
            (len(sni_name) + 3).to_bytes(2, "big")
            + b"\x00"
            + len(sni_name).to_bytes(2, "big")
            + sni_name
        )
        exts = (0).to_bytes(2, "big") + len(sni).to_bytes(2, "big") + sni
        exts += (13).to_bytes(2, "big") + (4).to_bytes(2, "big") + b"\x00\x02\x04\x01"
        body += len(exts).to_bytes(2, "big") + exts
        return bytes([tls12.HS_CLIENT_HELLO]) + len(body).to_bytes(3, "big") + body

    def sh_message() -> bytes:
        body = b"\x03\x03" + server_random
        body += bytes([len(legacy_session)]) + legacy_session
        body += tls12.CIPHER_TLS_RSA_AES128_GCM.to_bytes(2, "big") + b"\x00"
        body += (0).to_bytes(2, "big")
        return bytes([tls12.HS_SERVER_HELLO]) + len(body).to_bytes(3, "big") + body

    def cert_message(filler: int) -> bytes:
        # Synthetic certificate: the real SubjectPublicKeyInfo followed by
        # opaque filler (X.509 wrapping is out of scope for derivation).
        cert = spki + rng_filler[:filler]
        entry = len(cert).to_bytes(3, "big") + cert
        body = len(entry).to_bytes(3, "big") + entry
        return bytes([tls12.HS_CERTIFICATE]) + len(body).to_bytes(3, "big") + body

    rng_filler = rng.randbytes(4096)
    premaster = b"\x03\x03" + rng.randbytes(46)
    encrypted_premaster = tls12.encrypt_premaster(premaster, public, rng=rng)

    shd = bytes([tls12.HS_SERVER_HELLO_DONE]) + (0).to_bytes(3, "big")
    cke_body = len(encrypted_premaster).to_bytes(2, "big") + encrypted_premaster
    cke = bytes([tls12.HS_CLIENT_KEY_EXCHANGE]) + len(cke_body).to_bytes(3, "big") + cke_body

    master = tls12.master_secret(premaster, client_random, server_random)
    keys = tls12.key_block(master, client_random, server_random)
    client_codec = tls12.RecordCodec(keys.client_write_key, keys.client_salt)
    server_codec = tls12.RecordCodec(keys.server_write_key, keys.server_salt)

    def entries_for(filler: int) -> list[HandshakeEntry]:
        ch, sh, cert = ch_message(), sh_message(), cert_message(filler)
        transcript = ch + sh + cert + shd + cke
        cfin = bytes([tls12.HS_FINISHED]) + (12).to_bytes(3, "big") + (
            tls12.finished_verify(master, b"client finished", transcript)
        )
        transcript_sf = transcript + cfin
        sfin = bytes([tls12.HS_FINISHED]) + (12).to_bytes(3, "big") + (
            tls12.finished_verify(master, b"server finished", transcript_sf)
        )
        c_fin_codec = tls12.RecordCodec(keys.client_write_key, keys.client_salt)
        s_fin_codec = tls12.RecordCodec(keys.server_write_key, keys.server_salt)
        return [
            HandshakeEntry("client", "client_hello", _tls12_plain_record(ch)),
            HandshakeEntry("server", "server_hello", _tls12_plain_record(sh)),
            HandshakeEntry("server", "certificate", _tls12_plain_record(cert)),
            HandshakeEntry("server", "server_hello_done", _tls12_plain_record(shd)),
            HandshakeEntry("client", "client_key_exchange", _tls12_plain_record(cke)),
            HandshakeEntry("client", "ccs", CCS_RECORD),
            HandshakeEntry("client", "client_finished",
                           c_fin_codec.encrypt(cfin, 0x16)),
            HandshakeEntry("server", "ccs", CCS_RECORD),
            HandshakeEntry("server", "server_finished",
                           s_fin_codec.encrypt(sfin, 0x16)),
        ]

    base = sum(len(e.data) for e in entries_for(0))
    deficit = profile.handshake_bytes - base
    if deficit < 0:
        raise GenerateError(
            f"handshake target {profile.handshake_bytes} B below minimum {base} B"
        )
    entries = entries_for(deficit)
    measured = sum(len(e.data) for e in entries)
    if measured != profile.handshake_bytes:
        raise GenerateError(f"calibration failed: {measured}")

    # Finished records consumed sequence number 0 in each direction.
    client_codec.seq = 1
    server_codec.seq = 1
    records = [
        RecordEntry("client", client_codec.encrypt(chunk))
        for chunk in _chunks(payload_c, profile.max_record_payload)
    ] + [
        RecordEntry("server", server_codec.encrypt(chunk))
        for chunk in _chunks(payload_s, profile.max_record_payload)
    ]

    bundle = CaptureBundle(
        session_id=session_id,
        protocol=ProtocolId.TLS12_RSA,
        handshake=entries,
        records=records,
        metadata={
            "client_random": client_random.hex(),
            "rsa_fingerprint": fingerprint,
        },
    )
    schedule = SecretSchedule(
        protocol=ProtocolId.TLS12_RSA,
        session_id=session_id,
        client_random=client_random,
        secrets={"CLIENT_RANDOM": master},
    )
    bundle.ground_truth = GroundTruth(
        keylog=schedule.keylog_lines(),
        payload_client=payload_c,
        payload_server=payload_s,
    )
    oracle = QuantumOracle()
    oracle.add(f"rsa:{fingerprint}", KeyKind.RSA_LONGTERM_PRIVATE,
               tls12_private_bytes(rsa_key))
    return GeneratedCapture(bundles=[bundle], oracle=oracle)


def _tls12_plain_record(message: bytes) -> bytes:
    return b"\x16\x03\x03" + len(message).to_bytes(2, "big") + message


def tls12_private_bytes(key) -> bytes:
    from cryptography.hazmat.primitives import serialization

    return key.private_bytes(
        serialization.Encoding.DER,
        serialization.PrivateFormat.PKCS8,
        serialization.NoEncryption(),
    )


# ---------------------------------------------------------------------------
# QUIC


def _generate_quic(
    rng: random.Random,
    session_id: str,
    payload: int,
    profile: ProtocolProfile,
    payload_split: tuple[int, int] | None,
) -> GeneratedCapture:
    assert profile.datagram_limit is not None
    mat = _Tls13Materials.draw(rng, "full", for_quic=True)
    client_dcid = rng.randbytes(8)     # destination CID of the first Initial
    client_scid = rng.randbytes(8)
    server_scid = rng.randbytes(8)
    data = rng.randbytes(payload)
    c_len, _ = _split_payload(payload, payload_split)
    payload_c, payload_s = data[:c_len], data[c_len:]

    client_init_secret, server_init_secret = quic.initial_secrets(client_dcid)
    client_init = quic.PacketSpace.from_secret(client_init_secret)
    server_init = quic.PacketSpace.from_secret(server_init_secret)

    def handshake_packets(cert_filler: int, tail_padding: int) -> tuple[list[RecordEntry], _Tls13Exchange]:
        exchange = _tls13_exchange(mat, "full", None, None, False, 0, cert_filler)
        entries: list[RecordEntry] = []

        # Client Initial: CRYPTO(CH) padded to a 1200 B datagram.  The
        # length varint is 2 bytes for any plausible padded payload, so
        # sizing converges in one pass.
        ch_frame = quic.crypto_frame(0, exchange.ch)
        header = quic.build_long_header(
            quic.TYPE_INITIAL, client_dcid, client_scid, 0,
            payload_len=1000, pn_length=2,
        )
        pad = 1200 - (len(header) + len(ch_frame) + quic.TAG_LEN)
        if pad < 0:
            raise GenerateError("ClientHello too large for the Initial datagram")
        payload_bytes = ch_frame + b"\x00" * pad
        header = quic.build_long_header(
            quic.TYPE_INITIAL, client_dcid, client_scid, 0,
            payload_len=len(payload_bytes), pn_length=2,
        )
        entries.append(RecordEntry(
            "client", quic.protect(client_init, header, payload_bytes, 0, 2)))

        # Server Initial: ACK + CRYPTO(SH).
        sh_payload = quic.ack_frame(0) + quic.crypto_frame(0, exchange.sh)
        header = quic.build_long_header(
            quic.TYPE_INITIAL, client_scid, server_scid, 0,
            payload_len=len(sh_payload), pn_length=2,
        )
        entries.append(RecordEntry(
            "server", quic.protect(server_init, header, sh_payload, 0, 2)))

        # Handshake space: server flight, then client Finished.
        s_hs = quic.PacketSpace.from_secret(
            exchange.secrets.server_handshake_traffic)
        c_hs = quic.PacketSpace.from_secret(
            exchange.secrets.client_handshake_traffic)
        flight = b"".join(exchange.flight)
        capacity = profile.datagram_limit - 30 - quic.TAG_LEN  # header margin
        offset = 0
        pn = 0
        for piece in _chunks(flight, capacity):
            frame = quic.crypto_frame(offset, piece)
            header = quic.build_long_header(
                quic.TYPE_HANDSHAKE, client_scid, server_scid, pn,
                payload_len=len(frame), pn_length=2,
            )
            entries.append(RecordEntry(
                "server", quic.protect(s_hs, header, frame, pn, 2)))
            offset += len(piece)
            pn += 1

        cf_frame = quic.ack_frame(pn - 1) + quic.crypto_frame(
            0, b"".join(exchange.client_tail))
        if tail_padding:
            cf_frame += b"\x00" * tail_padding
        header = quic.build_long_header(
            quic.TYPE_HANDSHAKE, server_scid, client_scid, 0,
            payload_len=len(cf_frame), pn_length=2,
        )
        entries.append(RecordEntry(
            "client", quic.protect(c_hs, header, cf_frame, 0, 2)))
        return entries, exchange

    # A 64-byte padding floor in the client's Handshake packet keeps its
    # length varint at two bytes, so size adjustments stay linear.
    base_tail = 64
    base_entries, _ = handshake_packets(0, base_tail)
    base = sum(len(e.data) for e in base_entries)
    deficit = profile.handshake_bytes - base
    if deficit < 0:
        raise GenerateError(
            f"handshake target {profile.handshake_bytes} B below minimum {base} B"
        )
    entries, exchange = handshake_packets(deficit, base_tail)
    for _ in range(4):
        measured = sum(len(e.data) for e in entries)
        if measured == profile.handshake_bytes:
            break
        # varint width drift only; absorb in the PADDING tail
        base_tail += profile.handshake_bytes - measured
        entries, exchange = handshake_packets(deficit, base_tail)
    else:
        raise GenerateError("QUIC handshake calibration did not converge")
    secrets = exchange.secrets

    # 1-RTT: one opaque stream chunk per short-header packet (frame
    # header elided; documented container behavior).
    c_app = quic.PacketSpace.from_secret(secrets.client_application_traffic)
    s_app = quic.PacketSpace.from_secret(secrets.server_application_traffic)
    records: list[RecordEntry] = []
    chunk_size = profile.max_record_payload
    pn_c = pn_s = 0
    for chunk in _chunks(payload_c, chunk_size):
        header = quic.build_short_header(server_scid, pn_c)
        records.append(RecordEntry(
            "client", quic.protect(c_app, header, chunk, pn_c, 2)))
        pn_c += 1
    for chunk in _chunks(payload_s, chunk_size):
        header = quic.build_short_header(client_scid, pn_s)
        records.append(RecordEntry(
            "server", quic.protect(s_app, header, chunk, pn_s, 2)))
        pn_s += 1

    bundle = CaptureBundle(
        session_id=session_id,
        protocol=ProtocolId.QUIC,
        handshake=[],
        records=records,
        metadata={
            "client_random": mat.client_random.hex(),
            "initial_dcid": client_dcid.hex(),
            "cid_length": 8,
        },
    )
    # Handshake-phase datagrams live in the handshake section.
    bundle.handshake = [
        HandshakeEntry(e.sender, "datagram", e.data) for e in entries
    ]
    schedule = _tls13_schedule(session_id, mat.client_random, secrets,
                               [secrets.client_application_traffic],
                               [secrets.server_application_traffic],
                               protocol=ProtocolId.QUIC)
    bundle.ground_truth = GroundTruth(
        keylog=schedule.keylog_lines(),
        payload_client=payload_c,
        payload_server=payload_s,
    )
    oracle = QuantumOracle()
    oracle.add(session_id, KeyKind.ECDHE_EPHEMERAL_PRIVATE, mat.client_priv)
    return GeneratedCapture(bundles=[bundle], oracle=oracle)


# ---------------------------------------------------------------------------
# SSH


def _generate_ssh(
    rng: random.Random,
    session_id: str,
    payload: int,
    profile: ProtocolProfile,
    rekey_limit: int,
    payload_split: tuple[int, int] | None,
) -> GeneratedCapture:
    from .rekey import RekeyMechanism, RekeyPolicy, effective_threshold

    oracle = QuantumOracle()
    data = rng.randbytes(payload)
    c_len, _ = _split_payload(payload, payload_split)
    payload_c, payload_s = data[:c_len], data[c_len:]

    host_key = Ed25519PrivateKey.from_private_bytes(rng.randbytes(32))
    host_blob = sshproto.build_host_key_blob(
        host_key.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)
    )

    # Epoch 0 exchange, calibrated so version lines + cleartext KEX
    # packets hit the profile's handshake bytes exactly.  The channel
    # phase is rounded down to the nearest record-reachable size and the
    # difference moves into the handshake target, keeping H + C exact.
    setup_target = profile.session_setup_bytes - (profile.session_setup_bytes % 8)
    handshake_target = profile.handshake_bytes + (
        profile.session_setup_bytes - setup_target
    )

    client_cookie = rng.randbytes(16)
    server_cookie = rng.randbytes(16)
    client_eph_priv, client_eph_pub = tls13.x25519_keypair(rng.randbytes(32))
    server_eph_priv, server_eph_pub = tls13.x25519_keypair(rng.randbytes(32))
    shared = tls13.x25519_shared(client_eph_priv, server_eph_pub)
    oracle.add(session_id, KeyKind.SSH_ECDH_EPHEMERAL_PRIVATE,
               client_eph_priv, epoch=0)

    def kex_wire(client_filler: int, server_filler: int,
                 version_pad: int) -> tuple[list[HandshakeEntry], sshproto.KexTranscript, bytes]:
        v_c = SSH_CLIENT_VERSION
        v_s = SSH_SERVER_VERSION + b"p" * version_pad
        kexinit_c = sshproto.build_kexinit(client_cookie, client_filler)
        kexinit_s = sshproto.build_kexinit(server_cookie, server_filler)
        ecdh_init = sshproto.build_ecdh_init(client_eph_pub)
        exchange_input = sshproto.KexTranscript(
            client_version=v_c,
            server_version=v_s,
            client_kexinit=kexinit_c,
            server_kexinit=kexinit_s,
            host_key_blob=host_blob,
            client_ephemeral=client_eph_pub,
            server_ephemeral=server_eph_pub,
        )
        exchange = sshproto.exchange_hash(exchange_input, shared)
        signature = sshproto.build_signature_blob(host_key.sign(exchange))
        ecdh_reply = sshproto.build_ecdh_reply(host_blob, server_eph_pub, signature)
        newkeys = bytes([sshproto.MSG_NEWKEYS])
        entries = [
            HandshakeEntry("client", "version", v_c + b"\r\n"),
            HandshakeEntry("server", "version", v_s + b"\r\n"),
            HandshakeEntry("client", "kexinit", sshproto.frame_plain(kexinit_c)),
            HandshakeEntry("server", "kexinit", sshproto.frame_plain(kexinit_s)),
            HandshakeEntry("client", "ecdh_init", sshproto.frame_plain(ecdh_init)),
            HandshakeEntry("server", "ecdh_reply", sshproto.frame_plain(ecdh_reply)),
            HandshakeEntry("client", "newkeys", sshproto.frame_plain(newkeys)),
            HandshakeEntry("server", "newkeys", sshproto.frame_plain(newkeys)),
        ]
        return entries, exchange_input, exchange

    # Multiple-of-8 filler maps one-for-one onto packet wire size (the
    # alignment phase is unchanged), and the server version line absorbs
    # the sub-8 remainder, so the calibration is closed-form.
    base_entries, _, _ = kex_wire(0, 0, 0)
    base = sum(len(e.data) for e in base_entries)
    deficit = handshake_target - base
    if deficit < 0:
        raise GenerateError(
            f"handshake target {handshake_target} B below minimum {base} B"
        )
    version_pad = deficit % 8
    if version_pad:
        version_pad += 8 if deficit - version_pad < 0 else 0
    filler_total = deficit - version_pad
    client_filler = (filler_total // 16) * 8
    server_filler = filler_total - client_filler
    entries, transcript, exchange = kex_wire(client_filler, server_filler, version_pad)
    if sum(len(e.data) for e in entries) != handshake_target:
        raise GenerateError(
            f"SSH handshake calibration failed: "
            f"{sum(len(e.data) for e in entries)} != {handshake_target}"
        )
    session_hash = exchange  # session_id = H of the first exchange

    keys = sshproto.SshKeys.derive(shared, exchange, session_hash)
    client_codec = sshproto.RecordCodec(keys.client.key, seq=3)
    server_codec = sshproto.RecordCodec(keys.server.key, seq=3)

    # Channel negotiation phase, calibrated to setup_target.
    def setup_records(filler: int) -> list[RecordEntry]:
        c = sshproto.RecordCodec(keys.client.key, seq=3)
        s = sshproto.RecordCodec(keys.server.key, seq=3)
        msgs = [
            ("client", c, bytes([sshproto.MSG_SERVICE_REQUEST])
             + sshproto.ssh_string(b"ssh-userauth")),
            ("server", s, bytes([sshproto.MSG_SERVICE_ACCEPT])
             + sshproto.ssh_string(b"ssh-userauth")),
            ("client", c, bytes([sshproto.MSG_USERAUTH_REQUEST])
             + sshproto.ssh_string(b"operator")
             + sshproto.ssh_string(b"ssh-connection")
             + sshproto.ssh_string(b"none")),
            ("server", s, bytes([sshproto.MSG_USERAUTH_SUCCESS])),
            ("client", c, bytes([sshproto.MSG_CHANNEL_OPEN])
             + sshproto.ssh_string(b"session")
             + b"\x00\x00\x00\x00" + b"\x00\x20\x00\x00" + b"\x00\x00\x80\x00"),
            ("server", s, bytes([sshproto.MSG_CHANNEL_OPEN_CONFIRMATION])
             + b"\x00\x00\x00\x00" * 2 + b"\x00\x20\x00\x00" + b"\x00\x00\x80\x00"),
            ("client", c, bytes([sshproto.MSG_CHANNEL_REQUEST])
             + b"\x00\x00\x00\x00" + sshproto.ssh_string(b"exec") + b"\x01"
             + sshproto.ssh_string(b"transfer " + b"x" * filler)),
            ("server", s, bytes([sshproto.MSG_CHANNEL_SUCCESS]) + b"\x00\x00\x00\x00"),
        ]
        return [RecordEntry(sender, codec.encrypt(payload))
                for sender, codec, payload in msgs]

    base_setup = sum(len(r.data) for r in setup_records(0))
    setup_deficit = setup_target - base_setup
    if setup_deficit < 0 or setup_deficit % 8:
        raise GenerateError(
            f"channel phase target {setup_target} B unreachable "
            f"(base {base_setup} B)"
        )
    setup = setup_records(setup_deficit)
    assert sum(len(r.data) for r in setup) == setup_target
    client_codec.seq += sum(1 for r in setup if r.sender == "client")
    server_codec.seq += sum(1 for r in setup if r.sender == "server")

    # Data phase with optional rekeying.
    policy = None
    threshold = None
    if rekey_limit:
        policy = RekeyPolicy(mechanism=RekeyMechanism.SSH_REKEYLIMIT,
                             nominal_threshold=rekey_limit)
        threshold = int(effective_threshold(policy))

    epochs = [{
        "K": shared, "H": exchange, "session_id": session_hash,
        "KEY_A": keys.client.iv, "KEY_B": keys.server.iv,
        "KEY_C": keys.client.key, "KEY_D": keys.server.key,
        "KEY_E": keys.client.mac_key, "KEY_F": keys.server.mac_key,
    }]
    records: list[RecordEntry] = []
    sent_since_kex = 0
    epoch_index = 0

    def rekey() -> None:
        nonlocal epoch_index, sent_since_kex
        epoch_index += 1
        cookie_c, cookie_s = rng.randbytes(16), rng.randbytes(16)
        eph_priv, eph_pub = tls13.x25519_keypair(rng.randbytes(32))
        srv_priv, srv_pub = tls13.x25519_keypair(rng.randbytes(32))
        new_shared = tls13.x25519_shared(eph_priv, srv_pub)
        oracle.add(session_id, KeyKind.SSH_ECDH_EPHEMERAL_PRIVATE,
                   eph_priv, epoch=epoch_index)

        def round_wire(filler_c: int, filler_s: int) -> tuple[list[RecordEntry], bytes]:
            c = sshproto.RecordCodec(keys_now_c.key, seq=client_codec.seq)
            s = sshproto.RecordCodec(keys_now_s.key, seq=server_codec.seq)
            kexinit_c = sshproto.build_kexinit(cookie_c, filler_c)
            kexinit_s = sshproto.build_kexinit(cookie_s, filler_s)
            transcript_n = sshproto.KexTranscript(
                client_version=transcript.client_version,
                server_version=transcript.server_version,
                client_kexinit=kexinit_c,
                server_kexinit=kexinit_s,
                host_key_blob=host_blob,
                client_ephemeral=eph_pub,
                server_ephemeral=srv_pub,
            )
            exchange_n = sshproto.exchange_hash(transcript_n, new_shared)
            signature = sshproto.build_signature_blob(host_key.sign(exchange_n))
            out = [
                RecordEntry("client", c.encrypt(kexinit_c)),
                RecordEntry("server", s.encrypt(kexinit_s)),
                RecordEntry("client", c.encrypt(sshproto.build_ecdh_init(eph_pub))),
                RecordEntry("server", s.encrypt(
                    sshproto.build_ecdh_reply(host_blob, srv_pub, signature))),
                RecordEntry("client", c.encrypt(bytes([sshproto.MSG_NEWKEYS]))),
                RecordEntry("server", s.encrypt(bytes([sshproto.MSG_NEWKEYS]))),
            ]
            return out, exchange_n

        keys_now_c, keys_now_s = current_keys[0]
        base_round, _ = round_wire(0, 0)
        base_size = sum(len(r.data) for r in base_round)
        target = policy.rekey_overhead
        need = target - base_size
        if need < 0 or need % 8:
            raise GenerateError(
                f"rekey overhead target {target} B unreachable from "
                f"{base_size} B (8-byte record alignment)"
            )
        f_client = (need // 16) * 8
        round_records, exchange_n = round_wire(f_client, need - f_client)
        if sum(len(r.data) for r in round_records) != target:
            raise GenerateError("rekey exchange calibration failed")
        records.extend(round_records)
        client_codec.seq += 3
        server_codec.seq += 3

        new_keys = sshproto.SshKeys.derive(new_shared, exchange_n, session_hash)
        current_keys[0] = (new_keys.client, new_keys.server)
        client_codec.rekey(new_keys.client.key)
        server_codec.rekey(new_keys.server.key)
        epochs.append({
            "K": new_shared, "H": exchange_n, "session_id": session_hash,
            "KEY_A": new_keys.client.iv, "KEY_B": new_keys.server.iv,
            "KEY_C": new_keys.client.key, "KEY_D": new_keys.server.key,
            "KEY_E": new_keys.client.mac_key, "KEY_F": new_keys.server.mac_key,
        })
        sent_since_kex = 0

    current_keys = [(keys.client, keys.server)]

    def emit(sender: str, codec: sshproto.RecordCodec, stream: bytes) -> None:
        nonlocal sent_since_kex
        offset = 0
        while offset < len(stream):
            room = len(stream) - offset
            if threshold is not None:
                room = min(room, threshold - sent_since_kex)
            chunk = stream[offset : offset + min(room, profile.max_record_payload)]
            records.append(RecordEntry(
                sender, codec.encrypt(sshproto.build_channel_data_record(chunk))))
            offset += len(chunk)
            sent_since_kex += len(chunk)
            if threshold is not None and sent_since_kex >= threshold and (
                offset < len(stream) or sender == "client" and payload_s
            ):
                rekey()

    emit("client", client_codec, payload_c)
    emit("server", server_codec, payload_s)

    bundle = CaptureBundle(
        session_id=session_id,
        protocol=ProtocolId.SSH,
        handshake=entries,
        setup=setup,
        records=records,
        metadata={
            "client_version": transcript.client_version.decode(),
            "server_version": transcript.server_version.decode(),
        },
    )
    schedule = SecretSchedule(
        protocol=ProtocolId.SSH, session_id=session_id, ssh_epochs=epochs
    )
    bundle.ground_truth = GroundTruth(
        schedule_lines=schedule.ssh_schedule_lines(),
        payload_client=payload_c,
        payload_server=payload_s,
    )
    return GeneratedCapture(bundles=[bundle], oracle=oracle)
