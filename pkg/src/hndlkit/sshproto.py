"""SSH transport crypto: curve25519 KEX, the hash-chaining KDF, and
chacha20-poly1305 record protection.

The exchange hash H binds the byte-exact KEX transcript (version lines,
both KEXINIT payloads, host key blob, both ephemeral publics, and the
shared secret K as an mpint); all six session keys chain from (K, H,
session_id).  A rekey runs a fresh exchange mid-stream — new K and H,
original session_id retained — so every epoch is an independent
key-recovery problem.

The generator and the deriver both use this module's encoders; a
self-consistent-but-wrong transcript encoding would silently corrupt
every key, so there is exactly one encoding of record.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms
from cryptography.hazmat.primitives.poly1305 import Poly1305

CHACHA_KEY_LEN = 64    # main key (32) || header-length key (32)
IV_LEN = 12            # derived for schedule completeness; unused by chacha
MAC_KEY_LEN = 32       # derived for schedule completeness; unused by chacha
TAG_LEN = 16
PAD_BLOCK = 8
MIN_PAD = 4

MSG_DISCONNECT = 1
MSG_IGNORE = 2
MSG_SERVICE_REQUEST = 5
MSG_SERVICE_ACCEPT = 6
MSG_KEXINIT = 20
MSG_NEWKEYS = 21
MSG_KEX_ECDH_INIT = 30
MSG_KEX_ECDH_REPLY = 31
MSG_USERAUTH_REQUEST = 50
MSG_USERAUTH_SUCCESS = 52
MSG_GLOBAL_REQUEST = 80
MSG_CHANNEL_OPEN = 90
MSG_CHANNEL_OPEN_CONFIRMATION = 91
MSG_CHANNEL_DATA = 94
MSG_CHANNEL_REQUEST = 98
MSG_CHANNEL_SUCCESS = 99


# ---------------------------------------------------------------------------
# Wire primitives


def ssh_string(data: bytes) -> bytes:
    return struct.pack("!I", len(data)) + data


def ssh_mpint(value: int) -> bytes:
    if value == 0:
        return ssh_string(b"")
    raw = value.to_bytes((value.bit_length() + 7) // 8, "big")
    if raw[0] & 0x80:
        raw = b"\x00" + raw
    return ssh_string(raw)


def mpint_from_shared(shared: bytes) -> bytes:
    """K as transmitted: big-endian integer, mpint-encoded."""
    return ssh_mpint(int.from_bytes(shared, "big"))


def ssh_name_list(names: list[bytes]) -> bytes:
    return ssh_string(b",".join(names))


class Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ValueError("truncated SSH structure")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def byte(self) -> int:
        return self.take(1)[0]

    def u32(self) -> int:
        return struct.unpack("!I", self.take(4))[0]

    def string(self) -> bytes:
        return self.take(self.u32())

    @property
    def remaining(self) -> int:
        return len(self.data) - self.pos


# ---------------------------------------------------------------------------
# Binary packet framing

# Alignment runs over the whole packet (length field included), block 8,
# at least four bytes of padding.


def record_padding(payload_len: int) -> int:
    pad = (-(4 + 1 + payload_len)) % PAD_BLOCK
    if pad < MIN_PAD:
        pad += PAD_BLOCK
    return pad


def frame_plain(payload: bytes, pad_byte: int = 0) -> bytes:
    """Cleartext binary packet (pre-NEWKEYS); deterministic padding bytes."""
    pad = record_padding(len(payload))
    packet = bytes([pad]) + payload + bytes([pad_byte]) * pad
    return struct.pack("!I", len(packet)) + packet


def parse_plain(data: bytes, offset: int = 0) -> tuple[bytes, int]:
    """Payload of one cleartext packet; returns (payload, next_offset)."""
    (length,) = struct.unpack("!I", data[offset : offset + 4])
    end = offset + 4 + length
    packet = data[offset + 4 : end]
    pad = packet[0]
    return packet[1 : len(packet) - pad], end


# ---------------------------------------------------------------------------
# KEX and key derivation


@dataclass(frozen=True)
class KexTranscript:
    client_version: bytes      # without CRLF
    server_version: bytes
    client_kexinit: bytes      # full payload incl. message type byte
    server_kexinit: bytes
    host_key_blob: bytes
    client_ephemeral: bytes    # 32-byte X25519 public
    server_ephemeral: bytes


def exchange_hash(transcript: KexTranscript, shared: bytes) -> bytes:
    """H = SHA-256 over the canonical KEX concatenation."""
    h = hashlib.sha256()
    h.update(ssh_string(transcript.client_version))
    h.update(ssh_string(transcript.server_version))
    h.update(ssh_string(transcript.client_kexinit))
    h.update(ssh_string(transcript.server_kexinit))
    h.update(ssh_string(transcript.host_key_blob))
    h.update(ssh_string(transcript.client_ephemeral))
    h.update(ssh_string(transcript.server_ephemeral))
    h.update(mpint_from_shared(shared))
    return h.digest()


def derive_key(shared: bytes, exchange: bytes, letter: bytes,
               session_id: bytes, length: int) -> bytes:
    """K_x = HASH(K || H || x || session_id), extended by chaining.

    Keys longer than one hash output append HASH(K || H || K1),
    HASH(K || H || K1 || K2), ... until enough material exists; the
    64-byte chacha20-poly1305 keys exercise exactly this path.
    """
    k_mpint = mpint_from_shared(shared)
    out = hashlib.sha256(k_mpint + exchange + letter + session_id).digest()
    while len(out) < length:
        out += hashlib.sha256(k_mpint + exchange + out).digest()
    return out[:length]


@dataclass(frozen=True)
class DirectionKeys:
    iv: bytes
    key: bytes        # 64 B: chacha main key || header key
    mac_key: bytes


@dataclass(frozen=True)
class SshKeys:
    """Keys A-F for one epoch (client-to-server and server-to-client)."""

    client: DirectionKeys
    server: DirectionKeys

    @classmethod
    def derive(cls, shared: bytes, exchange: bytes, session_id: bytes) -> "SshKeys":
        def key(letter: bytes, length: int) -> bytes:
            return derive_key(shared, exchange, letter, session_id, length)

        return cls(
            client=DirectionKeys(
                iv=key(b"A", IV_LEN),
                key=key(b"C", CHACHA_KEY_LEN),
                mac_key=key(b"E", MAC_KEY_LEN),
            ),
            server=DirectionKeys(
                iv=key(b"B", IV_LEN),
                key=key(b"D", CHACHA_KEY_LEN),
                mac_key=key(b"F", MAC_KEY_LEN),
            ),
        )


# ---------------------------------------------------------------------------
# chacha20-poly1305 record protection


def _chacha_block_nonce(seq: int, counter: int) -> bytes:
    # cryptography's ChaCha20 takes 16 bytes: 8-byte little-endian block
    # counter followed by the 8-byte nonce (the packet sequence number).
    return struct.pack("<Q", counter) + struct.pack("!Q", seq)


def _chacha(key: bytes, seq: int, counter: int, data: bytes) -> bytes:
    cipher = Cipher(algorithms.ChaCha20(key, _chacha_block_nonce(seq, counter)), None)
    enc = cipher.encryptor()
    return enc.update(data) + enc.finalize()


class RecordCodec:
    """One direction of chacha20-poly1305 SSH record protection.

    The 4-byte length field is encrypted under the second half of the
    key; the packet body under the first half with the block counter
    starting at 1; block 0 keys the Poly1305 tag over the whole
    encrypted packet.  Sequence numbers count every packet since the
    connection started and keep running across rekeys.
    """

    def __init__(self, key: bytes, seq: int = 0):
        self.rekey(key)
        self.seq = seq

    def rekey(self, key: bytes) -> None:
        if len(key) != CHACHA_KEY_LEN:
            raise ValueError("chacha20-poly1305 needs a 64-byte key")
        self._main = key[:32]
        self._header = key[32:]

    def encrypt(self, payload: bytes, pad_byte: int = 0) -> bytes:
        pad = record_padding(len(payload))
        body = bytes([pad]) + payload + bytes([pad_byte]) * pad
        enc_len = _chacha(self._header, self.seq, 0, struct.pack("!I", len(body)))
        enc_body = _chacha(self._main, self.seq, 1, body)
        poly_key = _chacha(self._main, self.seq, 0, b"\x00" * 32)
        mac = Poly1305.generate_tag(poly_key, enc_len + enc_body)
        self.seq += 1
        return enc_len + enc_body + mac

    def decrypt(self, record: bytes) -> bytes:
        if len(record) < 4 + 1 + MIN_PAD + TAG_LEN:
            raise ValueError("record too short for chacha20-poly1305 framing")
        enc_len, rest = record[:4], record[4:]
        (length,) = struct.unpack(
            "!I", _chacha(self._header, self.seq, 0, enc_len)
        )
        if 4 + length + TAG_LEN != len(record):
            raise ValueError("record length field mismatch after decryption")
        enc_body, mac = rest[:length], rest[length:]
        poly_key = _chacha(self._main, self.seq, 0, b"\x00" * 32)
        Poly1305.verify_tag(poly_key, enc_len + enc_body, mac)
        body = _chacha(self._main, self.seq, 1, enc_body)
        self.seq += 1
        pad = body[0]
        return body[1 : len(body) - pad]


# ---------------------------------------------------------------------------
# Message payload builders/parsers (the subset the pipeline uses)


def build_kexinit(cookie: bytes, filler: int = 0) -> bytes:
    """KEXINIT payload; ``filler`` pads the first languages name-list
    byte-for-byte so transcripts can be calibrated to exact sizes."""
    if len(cookie) != 16:
        raise ValueError("KEXINIT cookie must be 16 bytes")
    payload = bytes([MSG_KEXINIT]) + cookie
    payload += ssh_name_list([b"curve25519-sha256"])
    payload += ssh_name_list([b"ssh-ed25519"])
    payload += ssh_name_list([b"chacha20-poly1305@openssh.com"]) * 2
    payload += ssh_name_list([b"none"]) * 2          # MACs (AEAD mode)
    payload += ssh_name_list([b"none"]) * 2          # compression
    payload += ssh_string(b"x" * filler)             # languages c->s
    payload += ssh_string(b"")                       # languages s->c
    payload += b"\x00"                               # first_kex_packet_follows
    payload += struct.pack("!I", 0)
    return payload


def build_ecdh_init(client_ephemeral: bytes) -> bytes:
    return bytes([MSG_KEX_ECDH_INIT]) + ssh_string(client_ephemeral)


def parse_ecdh_init(payload: bytes) -> bytes:
    reader = Reader(payload)
    if reader.byte() != MSG_KEX_ECDH_INIT:
        raise ValueError("not an ECDH init message")
    return reader.string()


def build_ecdh_reply(host_key_blob: bytes, server_ephemeral: bytes,
                     signature_blob: bytes) -> bytes:
    return (
        bytes([MSG_KEX_ECDH_REPLY])
        + ssh_string(host_key_blob)
        + ssh_string(server_ephemeral)
        + ssh_string(signature_blob)
    )


def parse_ecdh_reply(payload: bytes) -> tuple[bytes, bytes, bytes]:
    reader = Reader(payload)
    if reader.byte() != MSG_KEX_ECDH_REPLY:
        raise ValueError("not an ECDH reply message")
    return reader.string(), reader.string(), reader.string()


def build_host_key_blob(ed25519_public: bytes) -> bytes:
    return ssh_string(b"ssh-ed25519") + ssh_string(ed25519_public)


def build_signature_blob(signature: bytes) -> bytes:
    return ssh_string(b"ssh-ed25519") + ssh_string(signature)


def build_channel_data_record(chunk: bytes) -> bytes:
    """Condensed data record payload: type marker + raw chunk.

    The synthetic capture elides the 8-byte channel/length header so the
    per-record overhead matches the storage model's omega exactly; the
    type byte keeps data records distinguishable from control messages.
    """
    return bytes([MSG_CHANNEL_DATA]) + chunk
