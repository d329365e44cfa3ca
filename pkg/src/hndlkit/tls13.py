"""TLS 1.3 key schedule, record protection, and handshake codec.

Implements the RFC 8446 HKDF-based schedule for the fixed suite
TLS_AES_128_GCM_SHA256 plus just enough handshake message handling to
generate and re-derive sessions offline.  Two transcript boundaries are
easy to get wrong when reconstructing from a capture and are modeled
explicitly here: the resumption master secret hashes through Client
Finished (one message past the application secrets), and the PSK binder
hashes a truncated ClientHello while the early traffic secret hashes the
full one.
"""

from __future__ import annotations

import hashlib
import hmac
import struct
from dataclasses import dataclass

from cryptography.hazmat.primitives.asymmetric import x25519
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.serialization import (
    Encoding,
    PrivateFormat,
    PublicFormat,
    NoEncryption,
)

HASH_LEN = 32          # SHA-256
KEY_LEN = 16           # AES-128-GCM
IV_LEN = 12
TAG_LEN = 16
CIPHER_SUITE = 0x1301  # TLS_AES_128_GCM_SHA256
MAX_INNER_PLAINTEXT = 16384 + 1


# ---------------------------------------------------------------------------
# HKDF and the key schedule


def hkdf_extract(salt: bytes, ikm: bytes) -> bytes:
    return hmac.new(salt or b"\x00" * HASH_LEN, ikm, hashlib.sha256).digest()


def hkdf_expand(prk: bytes, info: bytes, length: int) -> bytes:
    out = b""
    block = b""
    counter = 1
    while len(out) < length:
        block = hmac.new(prk, block + info + bytes([counter]), hashlib.sha256).digest()
        out += block
        counter += 1
    return out[:length]


def hkdf_expand_label(secret: bytes, label: bytes, context: bytes, length: int) -> bytes:
    full = b"tls13 " + label
    info = struct.pack("!H", length) + bytes([len(full)]) + full
    info += bytes([len(context)]) + context
    return hkdf_expand(secret, info, length)


def derive_secret(secret: bytes, label: bytes, transcript_hash: bytes) -> bytes:
    return hkdf_expand_label(secret, label, transcript_hash, HASH_LEN)


def transcript_hash(messages: list[bytes]) -> bytes:
    h = hashlib.sha256()
    for message in messages:
        h.update(message)
    return h.digest()


EMPTY_HASH = hashlib.sha256(b"").digest()
ZEROS = b"\x00" * HASH_LEN


@dataclass
class Tls13Secrets:
    """The full derived hierarchy for one connection (epoch 0)."""

    early_secret: bytes
    handshake_secret: bytes
    master_secret: bytes
    client_handshake_traffic: bytes
    server_handshake_traffic: bytes
    client_application_traffic: bytes
    server_application_traffic: bytes
    exporter_master: bytes
    resumption_master: bytes | None = None
    client_early_traffic: bytes | None = None
    binder_key: bytes | None = None


def early_secret(psk: bytes | None) -> bytes:
    return hkdf_extract(ZEROS, psk or ZEROS)


def binder_key_from_early(early: bytes, external: bool = False) -> bytes:
    label = b"ext binder" if external else b"res binder"
    return derive_secret(early, label, EMPTY_HASH)


def derive_schedule(
    shared_secret: bytes | None,
    psk: bytes | None,
    ch_to_sh: list[bytes],
    ch_to_server_finished: list[bytes],
    ch_to_client_finished: list[bytes] | None,
    full_client_hello: bytes | None = None,
) -> Tls13Secrets:
    """Run the schedule from the key-exchange inputs and the transcript.

    ``shared_secret`` may be None only for pure-PSK handshakes.  The
    resumption master secret is derived only when the transcript through
    Client Finished is available.
    """
    if shared_secret is None and psk is None:
        raise ValueError("need an ECDHE shared secret or a PSK (or both)")
    early = early_secret(psk)
    secrets = Tls13Secrets(
        early_secret=early,
        handshake_secret=b"",
        master_secret=b"",
        client_handshake_traffic=b"",
        server_handshake_traffic=b"",
        client_application_traffic=b"",
        server_application_traffic=b"",
        exporter_master=b"",
    )
    if psk is not None:
        secrets.binder_key = binder_key_from_early(early)
        if full_client_hello is not None:
            secrets.client_early_traffic = derive_secret(
                early, b"c e traffic", transcript_hash([full_client_hello])
            )

    derived = derive_secret(early, b"derived", EMPTY_HASH)
    secrets.handshake_secret = hkdf_extract(derived, shared_secret or ZEROS)

    hs_hash = transcript_hash(ch_to_sh)
    secrets.client_handshake_traffic = derive_secret(
        secrets.handshake_secret, b"c hs traffic", hs_hash
    )
    secrets.server_handshake_traffic = derive_secret(
        secrets.handshake_secret, b"s hs traffic", hs_hash
    )

    derived2 = derive_secret(secrets.handshake_secret, b"derived", EMPTY_HASH)
    secrets.master_secret = hkdf_extract(derived2, ZEROS)

    sf_hash = transcript_hash(ch_to_server_finished)
    secrets.client_application_traffic = derive_secret(
        secrets.master_secret, b"c ap traffic", sf_hash
    )
    secrets.server_application_traffic = derive_secret(
        secrets.master_secret, b"s ap traffic", sf_hash
    )
    secrets.exporter_master = derive_secret(secrets.master_secret, b"exp master", sf_hash)

    if ch_to_client_finished is not None:
        cf_hash = transcript_hash(ch_to_client_finished)
        secrets.resumption_master = derive_secret(
            secrets.master_secret, b"res master", cf_hash
        )
    return secrets


def traffic_keys(secret: bytes) -> tuple[bytes, bytes]:
    key = hkdf_expand_label(secret, b"key", b"", KEY_LEN)
    iv = hkdf_expand_label(secret, b"iv", b"", IV_LEN)
    return key, iv


def next_traffic_secret(secret: bytes) -> bytes:
    """KeyUpdate ratchet; deterministic, no fresh entropy enters."""
    return hkdf_expand_label(secret, b"traffic upd", b"", HASH_LEN)


def finished_verify(traffic_secret: bytes, transcript: bytes) -> bytes:
    finished_key = hkdf_expand_label(traffic_secret, b"finished", b"", HASH_LEN)
    return hmac.new(finished_key, transcript, hashlib.sha256).digest()


def resumption_psk(resumption_master: bytes, ticket_nonce: bytes) -> bytes:
    return hkdf_expand_label(resumption_master, b"resumption", ticket_nonce, HASH_LEN)


def psk_binder(psk: bytes, truncated_client_hello: bytes) -> bytes:
    """Binder over the truncated ClientHello (binders excluded from input)."""
    binder_key = binder_key_from_early(early_secret(psk))
    return finished_verify(binder_key, transcript_hash([truncated_client_hello]))


# ---------------------------------------------------------------------------
# X25519 helpers


def x25519_keypair(private_bytes: bytes) -> tuple[bytes, bytes]:
    """(private, public) raw bytes from 32 seed bytes (clamped by the lib)."""
    priv = x25519.X25519PrivateKey.from_private_bytes(private_bytes)
    priv_raw = priv.private_bytes(Encoding.Raw, PrivateFormat.Raw, NoEncryption())
    pub_raw = priv.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)
    return priv_raw, pub_raw


def x25519_shared(private_bytes: bytes, peer_public: bytes) -> bytes:
    priv = x25519.X25519PrivateKey.from_private_bytes(private_bytes)
    peer = x25519.X25519PublicKey.from_public_bytes(peer_public)
    return priv.exchange(peer)


# ---------------------------------------------------------------------------
# Record protection


class RecordCodec:
    """One direction of the TLS 1.3 record layer.

    Sequence numbers reset to zero whenever the traffic secret changes
    (handshake -> application, and on every KeyUpdate ratchet).
    """

    def __init__(self, traffic_secret: bytes):
        self.rekey(traffic_secret)

    def rekey(self, traffic_secret: bytes) -> None:
        self.secret = traffic_secret
        self.key, self.iv = traffic_keys(traffic_secret)
        self.seq = 0
        self._aead = AESGCM(self.key)

    def ratchet(self) -> None:
        self.rekey(next_traffic_secret(self.secret))

    def _nonce(self) -> bytes:
        seq = self.seq.to_bytes(IV_LEN, "big")
        return bytes(a ^ b for a, b in zip(self.iv, seq))

    def encrypt(self, content: bytes, content_type: int, pad_to: int = 0) -> bytes:
        """Build one protected record; ``pad_to`` is the padded inner size."""
        inner = content + bytes([content_type])
        if pad_to:
            if pad_to < len(inner):
                raise ValueError("padding target smaller than content")
            inner += b"\x00" * (pad_to - len(inner))
        if len(inner) > MAX_INNER_PLAINTEXT:
            raise ValueError(
                f"inner plaintext {len(inner)} exceeds {MAX_INNER_PLAINTEXT} B"
            )
        length = len(inner) + TAG_LEN
        header = b"\x17\x03\x03" + struct.pack("!H", length)
        sealed = self._aead.encrypt(self._nonce(), inner, header)
        self.seq += 1
        return header + sealed

    def decrypt(self, record: bytes) -> tuple[bytes, int]:
        """Open one record; returns (content, inner content type)."""
        if len(record) < 5 + TAG_LEN or record[0] != 0x17:
            raise ValueError("not a protected application-data record")
        header, body = record[:5], record[5:]
        (length,) = struct.unpack("!H", record[3:5])
        if length != len(body):
            raise ValueError("record length field mismatch")
        inner = self._aead.decrypt(self._nonce(), body, header)
        self.seq += 1
        end = len(inner)
        while end > 0 and inner[end - 1] == 0:
            end -= 1
        if end == 0:
            raise ValueError("record carries no content type")
        return inner[: end - 1], inner[end - 1]


# ---------------------------------------------------------------------------
# Handshake message codec (just what the pipeline consumes)

HS_CLIENT_HELLO = 1
HS_SERVER_HELLO = 2
HS_NEW_SESSION_TICKET = 4
HS_END_OF_EARLY_DATA = 5
HS_ENCRYPTED_EXTENSIONS = 8
HS_CERTIFICATE = 11
HS_CERTIFICATE_VERIFY = 15
HS_FINISHED = 20
HS_KEY_UPDATE = 24

EXT_SERVER_NAME = 0
EXT_SUPPORTED_GROUPS = 10
EXT_SIGNATURE_ALGORITHMS = 13
EXT_PADDING = 21
EXT_SESSION_TICKET = 35
EXT_PRE_SHARED_KEY = 41
EXT_EARLY_DATA = 42
EXT_SUPPORTED_VERSIONS = 43
EXT_PSK_MODES = 45
EXT_KEY_SHARE = 51
EXT_QUIC_TRANSPORT_PARAMS = 0x39

GROUP_X25519 = 0x001D


def hs_message(msg_type: int, body: bytes) -> bytes:
    return bytes([msg_type]) + len(body).to_bytes(3, "big") + body


def parse_hs_message(data: bytes) -> tuple[int, bytes]:
    if len(data) < 4:
        raise ValueError("truncated handshake message")
    msg_type = data[0]
    length = int.from_bytes(data[1:4], "big")
    if 4 + length != len(data):
        raise ValueError("handshake length field mismatch")
    return msg_type, data[4:]


def iter_hs_messages(stream: bytes):
    """Yield (type, body, raw) messages from a concatenated stream."""
    offset = 0
    while offset < len(stream):
        if offset + 4 > len(stream):
            raise ValueError("trailing bytes are not a handshake message")
        msg_type = stream[offset]
        length = int.from_bytes(stream[offset + 1 : offset + 4], "big")
        end = offset + 4 + length
        if end > len(stream):
            raise ValueError("truncated handshake message in stream")
        yield msg_type, stream[offset + 4 : end], stream[offset:end]
        offset = end


def _ext(ext_type: int, body: bytes) -> bytes:
    return struct.pack("!HH", ext_type, len(body)) + body


@dataclass
class ClientHello:
    random: bytes
    session_id: bytes
    key_share_public: bytes | None
    psk_identity: bytes | None = None
    psk_binder: bytes | None = None
    offers_early_data: bool = False
    raw: bytes = b""
    truncated_raw: bytes | None = None  # binder-less form, when a PSK is offered


@dataclass
class ServerHello:
    random: bytes
    cipher_suite: int
    key_share_public: bytes | None
    selected_psk: int | None = None


def build_client_hello(
    random: bytes,
    session_id: bytes,
    key_share_public: bytes | None,
    server_name: bytes = b"testbed.internal",
    psk_identity: bytes | None = None,
    psk_obfuscated_age: int = 0,
    binder_placeholder: bool = False,
    psk_binder_value: bytes | None = None,
    offer_early_data: bool = False,
    padding: int = 0,
    quic_transport_params: bytes | None = None,
) -> bytes:
    """Serialize a ClientHello handshake message.

    When a PSK is offered the pre_shared_key extension is emitted last,
    as required; callers first build with ``binder_placeholder`` to get
    the truncated form, compute the binder, then rebuild with
    ``psk_binder_value``.
    """
    body = b"\x03\x03" + random
    body += bytes([len(session_id)]) + session_id
    body += struct.pack("!H", 2) + struct.pack("!H", CIPHER_SUITE)
    body += b"\x01\x00"  # null compression

    exts = b""
    sni = (
        struct.pack("!H", len(server_name) + 3)
        + b"\x00"
        + struct.pack("!H", len(server_name))
        + server_name
    )
    exts += _ext(EXT_SERVER_NAME, sni)
    exts += _ext(EXT_SUPPORTED_VERSIONS, b"\x02\x03\x04")
    exts += _ext(EXT_SUPPORTED_GROUPS, struct.pack("!HH", 2, GROUP_X25519))
    exts += _ext(EXT_SIGNATURE_ALGORITHMS, struct.pack("!HHH", 4, 0x0807, 0x0804))
    if quic_transport_params is not None:
        exts += _ext(EXT_QUIC_TRANSPORT_PARAMS, quic_transport_params)
    if key_share_public is not None:
        share = struct.pack("!HH", GROUP_X25519, len(key_share_public))
        share += key_share_public
        exts += _ext(EXT_KEY_SHARE, struct.pack("!H", len(share)) + share)
    exts += _ext(EXT_PSK_MODES, b"\x02\x00\x01")  # psk_ke, psk_dhe_ke
    if offer_early_data:
        exts += _ext(EXT_EARLY_DATA, b"")
    if padding:
        exts += _ext(EXT_PADDING, b"\x00" * padding)
    if psk_identity is not None:
        identities = struct.pack("!H", len(psk_identity)) + psk_identity
        identities += struct.pack("!I", psk_obfuscated_age)
        id_block = struct.pack("!H", len(identities)) + identities
        if binder_placeholder:
            binders = b""
        else:
            if psk_binder_value is None:
                raise ValueError("PSK offered without a binder value")
            binders = struct.pack("!H", HASH_LEN + 1)
            binders += bytes([HASH_LEN]) + psk_binder_value
        exts += _ext(EXT_PRE_SHARED_KEY, id_block + binders)

    body += struct.pack("!H", len(exts)) + exts
    return hs_message(HS_CLIENT_HELLO, body)


def binder_transcript_prefix(full_client_hello: bytes) -> bytes:
    """The truncated ClientHello the binder MACs over (binders list cut)."""
    # One offered PSK: binders list = 2 (list len) + 1 (binder len) + 32.
    cut = 2 + 1 + HASH_LEN
    return full_client_hello[:-cut]


def build_server_hello(
    random: bytes,
    session_id: bytes,
    key_share_public: bytes | None,
    selected_psk: int | None = None,
) -> bytes:
    body = b"\x03\x03" + random
    body += bytes([len(session_id)]) + session_id
    body += struct.pack("!H", CIPHER_SUITE)
    body += b"\x00"  # compression
    exts = _ext(EXT_SUPPORTED_VERSIONS, b"\x03\x04")
    if selected_psk is not None:
        exts += _ext(EXT_PRE_SHARED_KEY, struct.pack("!H", selected_psk))
    if key_share_public is not None:
        share = struct.pack("!HH", GROUP_X25519, len(key_share_public))
        exts += _ext(EXT_KEY_SHARE, share + key_share_public)
    body += struct.pack("!H", len(exts)) + exts
    return hs_message(HS_SERVER_HELLO, body)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ValueError("truncated structure")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return struct.unpack("!H", self.take(2))[0]

    def u24(self) -> int:
        return int.from_bytes(self.take(3), "big")

    def u32(self) -> int:
        return struct.unpack("!I", self.take(4))[0]

    @property
    def remaining(self) -> int:
        return len(self.data) - self.pos


def _iter_extensions(block: bytes):
    reader = _Reader(block)
    while reader.remaining:
        ext_type = reader.u16()
        length = reader.u16()
        yield ext_type, reader.take(length)


def parse_client_hello(message: bytes) -> ClientHello:
    msg_type, body = parse_hs_message(message)
    if msg_type != HS_CLIENT_HELLO:
        raise ValueError(f"expected ClientHello, got type {msg_type}")
    reader = _Reader(body)
    reader.take(2)  # legacy version
    random = reader.take(32)
    session_id = reader.take(reader.u8())
    reader.take(reader.u16())  # cipher suites
    reader.take(reader.u8())   # compression
    out = ClientHello(
        random=random, session_id=session_id, key_share_public=None, raw=message
    )
    for ext_type, ext_body in _iter_extensions(reader.take(reader.u16())):
        if ext_type == EXT_KEY_SHARE:
            shares = _Reader(ext_body)
            shares.u16()
            group = shares.u16()
            share = shares.take(shares.u16())
            if group == GROUP_X25519:
                out.key_share_public = share
        elif ext_type == EXT_PRE_SHARED_KEY:
            psk = _Reader(ext_body)
            identities = _Reader(psk.take(psk.u16()))
            out.psk_identity = identities.take(identities.u16())
            identities.u32()  # obfuscated age
            binders = _Reader(psk.take(psk.u16()))
            out.psk_binder = binders.take(binders.u8())
        elif ext_type == EXT_EARLY_DATA:
            out.offers_early_data = True
    if out.psk_identity is not None:
        out.truncated_raw = binder_transcript_prefix(message)
    return out


def parse_server_hello(message: bytes) -> ServerHello:
    msg_type, body = parse_hs_message(message)
    if msg_type != HS_SERVER_HELLO:
        raise ValueError(f"expected ServerHello, got type {msg_type}")
    reader = _Reader(body)
    reader.take(2)
    random = reader.take(32)
    reader.take(reader.u8())  # session id echo
    suite = reader.u16()
    reader.take(1)
    out = ServerHello(random=random, cipher_suite=suite, key_share_public=None)
    for ext_type, ext_body in _iter_extensions(reader.take(reader.u16())):
        if ext_type == EXT_KEY_SHARE:
            shares = _Reader(ext_body)
            group = shares.u16()
            share = shares.take(shares.u16())
            if group == GROUP_X25519:
                out.key_share_public = share
        elif ext_type == EXT_PRE_SHARED_KEY:
            out.selected_psk = struct.unpack("!H", ext_body)[0]
    return out


def build_new_session_ticket(
    ticket_nonce: bytes,
    ticket: bytes,
    lifetime: int = 7200,
    age_add: int = 0,
    max_early_data: int | None = None,
) -> bytes:
    body = struct.pack("!II", lifetime, age_add)
    body += bytes([len(ticket_nonce)]) + ticket_nonce
    body += struct.pack("!H", len(ticket)) + ticket
    exts = b""
    if max_early_data is not None:
        exts = _ext(EXT_EARLY_DATA, struct.pack("!I", max_early_data))
    body += struct.pack("!H", len(exts)) + exts
    return hs_message(HS_NEW_SESSION_TICKET, body)


@dataclass
class NewSessionTicket:
    ticket_nonce: bytes
    ticket: bytes
    max_early_data: int | None = None


def parse_new_session_ticket(message: bytes) -> NewSessionTicket:
    msg_type, body = parse_hs_message(message)
    if msg_type != HS_NEW_SESSION_TICKET:
        raise ValueError(f"expected NewSessionTicket, got type {msg_type}")
    reader = _Reader(body)
    reader.u32()
    reader.u32()
    nonce = reader.take(reader.u8())
    ticket = reader.take(reader.u16())
    max_early = None
    for ext_type, ext_body in _iter_extensions(reader.take(reader.u16())):
        if ext_type == EXT_EARLY_DATA:
            max_early = struct.unpack("!I", ext_body)[0]
    return NewSessionTicket(ticket_nonce=nonce, ticket=ticket, max_early_data=max_early)
