"""Retrospective decryption pipeline.

Each ``derive_*`` function consumes only the wire capture and the
quantum-oracle file (the private keys a CRQC would recover) and rebuilds
the session's full secret hierarchy; :func:`verify_compromise` then
proves compromise by byte-comparing the derived schedule against the
withheld ground-truth keylog and decrypting every application record.

The derivers are pure functions of (bundle, oracle): repeated runs are
bit-identical, and they never touch ``bundle.ground_truth``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from cryptography.exceptions import InvalidTag

from . import quic, sshproto, tls12, tls13
from .capture import (
    CaptureBundle,
    KeyKind,
    QuantumOracle,
    SecretSchedule,
)
from .profiles import ProtocolId


class DeriveError(ValueError):
    """The capture plus oracle do not suffice to rebuild the secrets."""


@dataclass
class ChainLink:
    """Per-session outcome when deriving a resumption chain."""

    session_id: str
    schedule: SecretSchedule | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.schedule is not None


def derive_session(bundle: CaptureBundle, oracle: QuantumOracle,
                   psk: bytes | None = None) -> SecretSchedule:
    """Dispatch on the bundle's protocol."""
    if bundle.protocol == ProtocolId.TLS13:
        return derive_tls13(bundle, oracle, psk=psk)
    if bundle.protocol == ProtocolId.TLS12_RSA:
        return derive_tls12_rsa(bundle, oracle)
    if bundle.protocol == ProtocolId.QUIC:
        return derive_quic(bundle, oracle)
    if bundle.protocol == ProtocolId.SSH:
        return derive_ssh(bundle, oracle)
    raise DeriveError(f"no derivation path for {bundle.protocol.value}")


# ---------------------------------------------------------------------------
# TLS 1.3


@dataclass
class _Tls13Walk:
    """Decryption state while walking a TLS 1.3 bundle in wire order."""

    secrets: tls13.Tls13Secrets
    tickets: list[tls13.NewSessionTicket] = field(default_factory=list)
    payload_client: bytes = b""
    payload_server: bytes = b""
    early_payload: bytes = b""
    epochs_client: list[bytes] = field(default_factory=list)
    epochs_server: list[bytes] = field(default_factory=list)
    record_results: list[bool] = field(default_factory=list)


def _tls13_handshake_messages(bundle: CaptureBundle, oracle: QuantumOracle,
                              psk: bytes | None,
                              res_master_transcript: str = "cf"):
    """Parse the handshake wire records and run the key schedule.

    ``res_master_transcript`` exists to reproduce a classic offline
    reconstruction mistake: "sf" computes the resumption master secret
    over the transcript through Server Finished instead of Client
    Finished, which silently breaks every descendant session.
    """
    client_hello: tls13.ClientHello | None = None
    server_hello: tls13.ServerHello | None = None
    transcript: list[bytes] = []
    secrets: tls13.Tls13Secrets | None = None
    hs_codecs: dict[str, tls13.RecordCodec] = {}
    early_codec: tls13.RecordCodec | None = None
    # EndOfEarlyData continues the early-data sequence number stream.
    early_record_count = sum(1 for r in bundle.records if r.phase == "early")

    for entry in bundle.handshake:
        data = entry.data
        if data[0] == 0x14:  # ChangeCipherSpec, not part of the transcript
            continue
        if data[0] == 0x16:  # cleartext handshake record(s)
            for msg_type, _, raw in tls13.iter_hs_messages(data[5:]):
                transcript.append(raw)
                if msg_type == tls13.HS_CLIENT_HELLO:
                    client_hello = tls13.parse_client_hello(raw)
                elif msg_type == tls13.HS_SERVER_HELLO:
                    server_hello = tls13.parse_server_hello(raw)
            if client_hello and server_hello and secrets is None:
                secrets, early_codec = _tls13_bootstrap(
                    bundle, oracle, client_hello, server_hello, psk, transcript
                )
                hs_codecs = {
                    "client": tls13.RecordCodec(secrets.client_handshake_traffic),
                    "server": tls13.RecordCodec(secrets.server_handshake_traffic),
                }
            continue
        if data[0] == 0x17:
            if secrets is None:
                raise DeriveError("encrypted record before both hello messages")
            codec = hs_codecs[entry.sender]
            try:
                content, ctype = codec.decrypt(data)
            except InvalidTag:
                if entry.sender == "client" and early_codec is not None:
                    # EndOfEarlyData rides under the early traffic keys.
                    early_codec.seq = early_record_count
                    content, ctype = early_codec.decrypt(data)
                else:
                    raise DeriveError(
                        f"cannot open handshake record from {entry.sender}"
                    )
            if ctype != 0x16:
                raise DeriveError("unexpected inner type in handshake flight")
            for _, _, raw in tls13.iter_hs_messages(content):
                transcript.append(raw)
            continue
        raise DeriveError(f"unknown record type 0x{data[0]:02x} in handshake")

    if client_hello is None or server_hello is None or secrets is None:
        raise DeriveError("transcript truncation: hello messages missing")

    # Locate the boundary messages and re-run the schedule over the full
    # transcript.
    sf_index = _find_finished(transcript, after=0)
    cf_index = _find_finished(transcript, after=sf_index + 1)
    ch_to_sf = transcript[: sf_index + 1]
    ch_to_cf = transcript[: cf_index + 1]
    boundary = ch_to_cf if res_master_transcript == "cf" else ch_to_sf
    shared = _tls13_shared_secret(bundle, oracle, client_hello, server_hello)
    full = tls13.derive_schedule(
        shared,
        psk,
        [transcript[0], transcript[1]],
        ch_to_sf,
        boundary,
        full_client_hello=transcript[0] if client_hello.offers_early_data else None,
    )
    notes = []
    if client_hello.psk_binder is not None and psk is not None:
        expected = tls13.psk_binder(psk, client_hello.truncated_raw)
        notes.append(
            "psk-binder: ok" if expected == client_hello.psk_binder
            else "psk-binder: MISMATCH"
        )
    return client_hello, full, early_record_count, notes


def _tls13_bootstrap(bundle, oracle, client_hello, server_hello, psk, transcript):
    shared = _tls13_shared_secret(bundle, oracle, client_hello, server_hello)
    secrets = tls13.derive_schedule(
        shared, psk, [transcript[0], transcript[1]],
        [transcript[0], transcript[1]], None,
        full_client_hello=transcript[0] if client_hello.offers_early_data else None,
    )
    early_codec = None
    if secrets.client_early_traffic is not None:
        early_codec = tls13.RecordCodec(secrets.client_early_traffic)
    return secrets, early_codec


def _tls13_shared_secret(bundle, oracle, client_hello, server_hello) -> bytes | None:
    if server_hello.key_share_public is None:
        return None  # pure PSK
    private = oracle.require(
        bundle.session_id, KeyKind.ECDHE_EPHEMERAL_PRIVATE
    )
    return tls13.x25519_shared(private, server_hello.key_share_public)


def _find_finished(transcript: list[bytes], after: int) -> int:
    for index in range(after, len(transcript)):
        if transcript[index][0] == tls13.HS_FINISHED:
            return index
    raise DeriveError("transcript truncation: Finished message missing")


def derive_tls13(
    bundle: CaptureBundle,
    oracle: QuantumOracle,
    psk: bytes | None = None,
    res_master_transcript: str = "cf",
) -> SecretSchedule:
    """Rebuild the full TLS 1.3 hierarchy from the capture and oracle.

    Pure-PSK handshakes need ``psk``; PSK-DHE handshakes need the PSK
    *and* the session's ephemeral key from the oracle.  KeyUpdate epochs
    ratchet deterministically while walking the records, so no extra
    oracle entries are consumed regardless of depth.
    """
    if bundle.protocol not in (ProtocolId.TLS13,):
        raise DeriveError(f"not a TLS 1.3 bundle: {bundle.protocol.value}")
    client_hello, secrets, _, notes = _tls13_handshake_messages(
        bundle, oracle, psk, res_master_transcript
    )
    walk = _tls13_walk_records(bundle, secrets)

    schedule = SecretSchedule(
        protocol=bundle.protocol,
        session_id=bundle.session_id,
        client_random=client_hello.random,
    )
    schedule.secrets = {
        "CLIENT_HANDSHAKE_TRAFFIC_SECRET": secrets.client_handshake_traffic,
        "SERVER_HANDSHAKE_TRAFFIC_SECRET": secrets.server_handshake_traffic,
        "EXPORTER_SECRET": secrets.exporter_master,
    }
    if secrets.client_early_traffic is not None:
        schedule.secrets["CLIENT_EARLY_TRAFFIC_SECRET"] = secrets.client_early_traffic
    for index, secret in enumerate(walk.epochs_client):
        schedule.secrets[f"CLIENT_TRAFFIC_SECRET_{index}"] = secret
    for index, secret in enumerate(walk.epochs_server):
        schedule.secrets[f"SERVER_TRAFFIC_SECRET_{index}"] = secret
    if secrets.resumption_master is not None:
        schedule.secrets["resumption_master"] = secrets.resumption_master
    schedule.notes = notes
    return schedule


def _tls13_walk_records(bundle: CaptureBundle, secrets: tls13.Tls13Secrets,
                        collect_payload: bool = True) -> _Tls13Walk:
    """Decrypt the record stream, ratcheting on KeyUpdate, collecting
    NewSessionTickets and (optionally) the plaintext payload."""
    walk = _Tls13Walk(secrets=secrets)
    codecs = {
        "client": tls13.RecordCodec(secrets.client_application_traffic),
        "server": tls13.RecordCodec(secrets.server_application_traffic),
    }
    walk.epochs_client.append(secrets.client_application_traffic)
    walk.epochs_server.append(secrets.server_application_traffic)
    early_codec = None
    if secrets.client_early_traffic is not None:
        early_codec = tls13.RecordCodec(secrets.client_early_traffic)

    for entry in bundle.records:
        try:
            if entry.phase == "early":
                if early_codec is None:
                    raise DeriveError("early record without an early secret")
                content, ctype = early_codec.decrypt(entry.data)
            else:
                content, ctype = codecs[entry.sender].decrypt(entry.data)
        except InvalidTag:
            walk.record_results.append(False)
            continue
        walk.record_results.append(True)
        if ctype == 0x17:
            if collect_payload:
                if entry.phase == "early":
                    walk.early_payload += content
                elif entry.sender == "client":
                    walk.payload_client += content
                else:
                    walk.payload_server += content
        elif ctype == 0x16:
            for msg_type, _, raw in tls13.iter_hs_messages(content):
                if msg_type == tls13.HS_NEW_SESSION_TICKET:
                    walk.tickets.append(tls13.parse_new_session_ticket(raw))
                elif msg_type == tls13.HS_KEY_UPDATE:
                    codec = codecs[entry.sender]
                    codec.ratchet()
                    log = (walk.epochs_client if entry.sender == "client"
                           else walk.epochs_server)
                    log.append(codec.secret)
    return walk


def derive_resumption_chain(
    bundles: list[CaptureBundle],
    oracle: QuantumOracle,
    res_master_transcript: str = "cf",
) -> list[ChainLink]:
    """Unravel a ticket chain from the first session's ephemeral key.

    Pure-PSK descendants decrypt with no extra oracle entries; PSK-DHE
    links additionally need their own ephemeral key and fail cleanly
    (the chain continues wherever tickets from surviving links allow).
    """
    psk_store: dict[bytes, bytes] = {}
    links: list[ChainLink] = []
    for index, bundle in enumerate(bundles):
        psk = None
        try:
            offered = _offered_psk_identity(bundle)
            if offered is not None:
                if offered not in psk_store:
                    raise DeriveError(
                        "no PSK for the offered ticket "
                        f"(identity {offered.hex()[:16]}...)"
                    )
                psk = psk_store[offered]
            schedule = derive_tls13(
                bundle, oracle, psk=psk,
                res_master_transcript=res_master_transcript,
            )
        except (DeriveError, KeyError, InvalidTag) as exc:
            links.append(ChainLink(bundle.session_id, None, str(exc)))
            continue
        links.append(ChainLink(bundle.session_id, schedule))
        res_master = schedule.secrets.get("resumption_master")
        if res_master is not None:
            # collect this session's tickets for the descendants
            secrets = _schedule_to_secrets(schedule)
            walk = _tls13_walk_records(bundle, secrets, collect_payload=False)
            for ticket in walk.tickets:
                psk_store[ticket.ticket] = tls13.resumption_psk(
                    res_master, ticket.ticket_nonce
                )
    return links


def _offered_psk_identity(bundle: CaptureBundle) -> bytes | None:
    for entry in bundle.handshake:
        if entry.data[0] == 0x16:
            for msg_type, _, raw in tls13.iter_hs_messages(entry.data[5:]):
                if msg_type == tls13.HS_CLIENT_HELLO:
                    return tls13.parse_client_hello(raw).psk_identity
    return None


def _schedule_to_secrets(schedule: SecretSchedule) -> tls13.Tls13Secrets:
    s = schedule.secrets
    return tls13.Tls13Secrets(
        early_secret=b"",
        handshake_secret=b"",
        master_secret=b"",
        client_handshake_traffic=s["CLIENT_HANDSHAKE_TRAFFIC_SECRET"],
        server_handshake_traffic=s["SERVER_HANDSHAKE_TRAFFIC_SECRET"],
        client_application_traffic=s["CLIENT_TRAFFIC_SECRET_0"],
        server_application_traffic=s["SERVER_TRAFFIC_SECRET_0"],
        exporter_master=s["EXPORTER_SECRET"],
        resumption_master=s.get("resumption_master"),
        client_early_traffic=s.get("CLIENT_EARLY_TRAFFIC_SECRET"),
    )


# ---------------------------------------------------------------------------
# TLS 1.2 RSA


def derive_tls12_rsa(bundle: CaptureBundle, oracle: QuantumOracle) -> SecretSchedule:
    """Decrypt the premaster under the compromised long-term key and run
    the PRF; one oracle entry opens every session under that key."""
    if bundle.protocol != ProtocolId.TLS12_RSA:
        raise DeriveError(f"not a TLS 1.2 RSA bundle: {bundle.protocol.value}")

    client_random = server_random = None
    spki = encrypted_premaster = None
    transcript = b""
    for entry in bundle.handshake:
        data = entry.data
        if data[0] == 0x14:
            continue
        if data[0] != 0x16:
            raise DeriveError(f"unexpected record type 0x{data[0]:02x}")
        body = data[5:]
        msg_type = body[0]
        if msg_type == tls12.HS_CLIENT_HELLO:
            client_random = body[6:38]
            transcript += body
        elif msg_type == tls12.HS_SERVER_HELLO:
            server_random = body[6:38]
            transcript += body
        elif msg_type == tls12.HS_CERTIFICATE:
            spki = _spki_from_certificate(body)
            transcript += body
        elif msg_type == tls12.HS_SERVER_HELLO_DONE:
            transcript += body
        elif msg_type == tls12.HS_CLIENT_KEY_EXCHANGE:
            length = int.from_bytes(body[4:6], "big")
            encrypted_premaster = body[6 : 6 + length]
            transcript += body
        # encrypted Finished records are validated by the verifier

    if None in (client_random, server_random, spki, encrypted_premaster):
        raise DeriveError("malformed capture: handshake messages missing")

    public = tls12.load_public_key_der(spki)
    fingerprint = tls12.public_key_fingerprint(public)
    key_der = oracle.require(f"rsa:{fingerprint}", KeyKind.RSA_LONGTERM_PRIVATE)
    from cryptography.hazmat.primitives import serialization

    private = serialization.load_der_private_key(key_der, password=None)
    premaster = tls12.decrypt_premaster(encrypted_premaster, private)
    master = tls12.master_secret(premaster, client_random, server_random)

    return SecretSchedule(
        protocol=bundle.protocol,
        session_id=bundle.session_id,
        client_random=client_random,
        secrets={"CLIENT_RANDOM": master, "premaster": premaster},
    )


def _spki_from_certificate(cert_message: bytes) -> bytes:
    # Synthetic certificate entries carry the DER SubjectPublicKeyInfo
    # first; its outer SEQUENCE header gives the exact length.
    body = cert_message[4:]
    entry_len = int.from_bytes(body[3:6], "big")
    cert = body[6 : 6 + entry_len]
    if cert[0] != 0x30:
        raise DeriveError("certificate entry does not start with a DER sequence")
    if cert[1] & 0x80:
        n = cert[1] & 0x7F
        length = int.from_bytes(cert[2 : 2 + n], "big") + 2 + n
    else:
        length = cert[1] + 2
    return cert[:length]


# ---------------------------------------------------------------------------
# QUIC


def derive_quic(bundle: CaptureBundle, oracle: QuantumOracle) -> SecretSchedule:
    """Initial keys from the wire DCID, then the TLS 1.3 schedule.

    Initial packets decrypt with zero oracle entries; the handshake and
    1-RTT spaces fall once the ephemeral shared secret is recovered.
    """
    if bundle.protocol != ProtocolId.QUIC:
        raise DeriveError(f"not a QUIC bundle: {bundle.protocol.value}")

    datagrams = list(bundle.handshake)
    if not datagrams:
        raise DeriveError("capture carries no handshake datagrams")
    first = datagrams[0].data
    # DCID straight off the first long header
    dcid_len = first[5]
    dcid = first[6 : 6 + dcid_len]

    client_init, server_init = quic.initial_secrets(dcid)
    spaces = {
        "client": quic.PacketSpace.from_secret(client_init),
        "server": quic.PacketSpace.from_secret(server_init),
    }

    initial_packets: dict[str, list[quic.UnprotectedPacket]] = {"client": [], "server": []}
    handshake_raw: dict[str, list[bytes]] = {"client": [], "server": []}
    for entry in datagrams:
        packet_type = (entry.data[0] >> 4) & 0x03
        if packet_type == quic.TYPE_INITIAL:
            initial_packets[entry.sender].append(
                quic.unprotect_long(spaces[entry.sender], entry.data)
            )
        else:
            handshake_raw[entry.sender].append(entry.data)

    ch_stream = quic.reassemble_crypto(initial_packets["client"])
    sh_stream = quic.reassemble_crypto(initial_packets["server"])
    ch = next(tls13.iter_hs_messages(ch_stream))[2]
    sh = next(tls13.iter_hs_messages(sh_stream))[2]
    client_hello = tls13.parse_client_hello(ch)
    server_hello = tls13.parse_server_hello(sh)
    if server_hello.key_share_public is None:
        raise DeriveError("QUIC handshake without a key share")
    private = oracle.require(bundle.session_id, KeyKind.ECDHE_EPHEMERAL_PRIVATE)
    shared = tls13.x25519_shared(private, server_hello.key_share_public)

    hs_secrets = tls13.derive_schedule(shared, None, [ch, sh], [ch, sh], None)
    hs_spaces = {
        "client": quic.PacketSpace.from_secret(hs_secrets.client_handshake_traffic),
        "server": quic.PacketSpace.from_secret(hs_secrets.server_handshake_traffic),
    }
    hs_packets = {
        sender: [quic.unprotect_long(hs_spaces[sender], d) for d in blobs]
        for sender, blobs in handshake_raw.items()
    }
    flight_stream = quic.reassemble_crypto(hs_packets["server"])
    tail_stream = quic.reassemble_crypto(hs_packets["client"])
    transcript = [ch, sh]
    transcript += [raw for _, _, raw in tls13.iter_hs_messages(flight_stream)]
    ch_to_sf = list(transcript)
    transcript += [raw for _, _, raw in tls13.iter_hs_messages(tail_stream)]

    secrets = tls13.derive_schedule(shared, None, [ch, sh], ch_to_sf, transcript)

    schedule = SecretSchedule(
        protocol=bundle.protocol,
        session_id=bundle.session_id,
        client_random=client_hello.random,
        secrets={
            "CLIENT_HANDSHAKE_TRAFFIC_SECRET": secrets.client_handshake_traffic,
            "SERVER_HANDSHAKE_TRAFFIC_SECRET": secrets.server_handshake_traffic,
            "CLIENT_TRAFFIC_SECRET_0": secrets.client_application_traffic,
            "SERVER_TRAFFIC_SECRET_0": secrets.server_application_traffic,
            "EXPORTER_SECRET": secrets.exporter_master,
            "client_initial_secret": client_init,
            "server_initial_secret": server_init,
        },
        notes=["initial-space: decrypted with zero oracle entries"],
    )
    if secrets.resumption_master is not None:
        schedule.secrets["resumption_master"] = secrets.resumption_master
    return schedule


# ---------------------------------------------------------------------------
# SSH


@dataclass
class SshEpochStatus:
    epoch: int
    status: str     # "decrypted" | "oracle-missing" | "transcript-unavailable"


@dataclass
class SshDerivation:
    schedule: SecretSchedule
    epoch_status: list[SshEpochStatus]
    payload_client: bytes
    payload_server: bytes
    undecryptable_records: int


def derive_ssh(bundle: CaptureBundle, oracle: QuantumOracle) -> SecretSchedule:
    return derive_ssh_full(bundle, oracle).schedule


def derive_ssh_full(bundle: CaptureBundle, oracle: QuantumOracle) -> SshDerivation:
    """Per-epoch key recovery.

    Every KEX epoch needs its own oracle entry.  A missing entry leaves
    that epoch's records (and, because later rekey exchanges ride inside
    the encrypted stream, every later epoch's transcript) unrecoverable;
    derivation reports the boundary instead of failing outright.
    """
    if bundle.protocol != ProtocolId.SSH:
        raise DeriveError(f"not an SSH bundle: {bundle.protocol.value}")

    versions: dict[str, bytes] = {}
    kexinit: dict[str, bytes] = {}
    ecdh_client = None
    host_blob = server_eph = None
    for entry in bundle.handshake:
        if entry.name == "version":
            versions[entry.sender] = entry.data.rstrip(b"\r\n")
            continue
        payload, _ = sshproto.parse_plain(entry.data)
        msg = payload[0]
        if msg == sshproto.MSG_KEXINIT:
            kexinit[entry.sender] = payload
        elif msg == sshproto.MSG_KEX_ECDH_INIT:
            ecdh_client = sshproto.parse_ecdh_init(payload)
        elif msg == sshproto.MSG_KEX_ECDH_REPLY:
            host_blob, server_eph, _ = sshproto.parse_ecdh_reply(payload)
        elif msg == sshproto.MSG_NEWKEYS:
            pass
        else:
            raise DeriveError(f"unexpected KEX message type {msg}")
    if not versions or ecdh_client is None or server_eph is None:
        raise DeriveError("malformed capture: KEX transcript incomplete")

    epoch_status: list[SshEpochStatus] = []
    epochs: list[dict[str, bytes]] = []
    private = oracle.lookup(bundle.session_id,
                            KeyKind.SSH_ECDH_EPHEMERAL_PRIVATE, epoch=0)
    if private is None:
        raise DeriveError("oracle holds no key for the initial exchange")
    shared = tls13.x25519_shared(private, server_eph)
    transcript = sshproto.KexTranscript(
        client_version=versions["client"],
        server_version=versions["server"],
        client_kexinit=kexinit["client"],
        server_kexinit=kexinit["server"],
        host_key_blob=host_blob,
        client_ephemeral=ecdh_client,
        server_ephemeral=server_eph,
    )
    exchange = sshproto.exchange_hash(transcript, shared)
    session_hash = exchange
    keys = sshproto.SshKeys.derive(shared, exchange, session_hash)
    epochs.append(_epoch_dict(shared, exchange, session_hash, keys))
    epoch_status.append(SshEpochStatus(0, "decrypted"))

    codecs = {
        "client": sshproto.RecordCodec(keys.client.key, seq=3),
        "server": sshproto.RecordCodec(keys.server.key, seq=3),
    }

    payload = {"client": b"", "server": b""}
    undecryptable = 0
    # Channel negotiation then data, one ordered encrypted stream.  A
    # direction goes dark once its sender switches to an epoch whose
    # ephemeral key the oracle lacks; later rekey exchanges ride inside
    # the dark stream, so everything beyond is unrecoverable too.
    pending: dict = {}
    epoch_index = 0
    dead = {"client": False, "server": False}
    for entry in list(bundle.setup) + list(bundle.records):
        if dead[entry.sender]:
            undecryptable += 1
            continue
        codec = codecs[entry.sender]
        try:
            message = codec.decrypt(entry.data)
        except InvalidTag as exc:
            raise DeriveError(f"record failed authentication: {exc}") from exc
        msg = message[0]
        if msg == sshproto.MSG_CHANNEL_DATA:
            payload[entry.sender] += message[1:]
        elif msg == sshproto.MSG_KEXINIT:
            pending[f"kexinit_{entry.sender}"] = message
        elif msg == sshproto.MSG_KEX_ECDH_INIT:
            pending["client_eph"] = sshproto.parse_ecdh_init(message)
        elif msg == sshproto.MSG_KEX_ECDH_REPLY:
            blob, eph, _ = sshproto.parse_ecdh_reply(message)
            pending["host_blob"], pending["server_eph"] = blob, eph
        elif msg == sshproto.MSG_NEWKEYS:
            # the sender switches to the next epoch's keys from here on
            if "new_keys" not in pending:
                epoch_index += 1
                new_private = oracle.lookup(
                    bundle.session_id, KeyKind.SSH_ECDH_EPHEMERAL_PRIVATE,
                    epoch=epoch_index,
                )
                if new_private is None:
                    epoch_status.append(
                        SshEpochStatus(epoch_index, "oracle-missing"))
                    pending["new_keys"] = None
                else:
                    new_shared = tls13.x25519_shared(
                        new_private, pending["server_eph"])
                    new_transcript = sshproto.KexTranscript(
                        client_version=versions["client"],
                        server_version=versions["server"],
                        client_kexinit=pending["kexinit_client"],
                        server_kexinit=pending["kexinit_server"],
                        host_key_blob=pending["host_blob"],
                        client_ephemeral=pending["client_eph"],
                        server_ephemeral=pending["server_eph"],
                    )
                    new_exchange = sshproto.exchange_hash(
                        new_transcript, new_shared)
                    new_keys = sshproto.SshKeys.derive(
                        new_shared, new_exchange, session_hash)
                    epochs.append(_epoch_dict(new_shared, new_exchange,
                                              session_hash, new_keys))
                    epoch_status.append(
                        SshEpochStatus(epoch_index, "decrypted"))
                    pending["new_keys"] = new_keys
                pending["newkeys_seen"] = 0
            new_keys = pending["new_keys"]
            if new_keys is None:
                dead[entry.sender] = True
            else:
                codec.rekey(getattr(new_keys, entry.sender).key)
            pending["newkeys_seen"] += 1
            if pending["newkeys_seen"] == 2:
                pending = {}
        else:
            pass  # other control messages carry no secrets

    schedule = SecretSchedule(
        protocol=bundle.protocol,
        session_id=bundle.session_id,
        ssh_epochs=epochs,
    )
    missing = [s for s in epoch_status if s.status != "decrypted"]
    if missing:
        schedule.notes.append(
            f"epoch {missing[0].epoch}: oracle entry missing; stream "
            "unreadable from that exchange onward"
        )
    return SshDerivation(
        schedule=schedule,
        epoch_status=epoch_status,
        payload_client=payload["client"],
        payload_server=payload["server"],
        undecryptable_records=undecryptable,
    )


def _epoch_dict(shared, exchange, session_hash, keys) -> dict[str, bytes]:
    return {
        "K": shared, "H": exchange, "session_id": session_hash,
        "KEY_A": keys.client.iv, "KEY_B": keys.server.iv,
        "KEY_C": keys.client.key, "KEY_D": keys.server.key,
        "KEY_E": keys.client.mac_key, "KEY_F": keys.server.mac_key,
    }
