"""QUIC v1 packet protection and the Initial-secret bootstrap.

QUIC carries the TLS 1.3 handshake inside its own transport encryption.
Initial packets are protected with keys derived from the version salt
and the client's Destination Connection ID — both on the wire — so an
observer (or archivist) can always open them; the handshake and 1-RTT
spaces need the TLS traffic secrets.  Header protection masks the first
byte's low bits and the packet number with an AES-ECB mask sampled from
the packet's own ciphertext.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from .tls13 import hkdf_expand_label, hkdf_extract

QUIC_V1 = 0x00000001
INITIAL_SALT_V1 = bytes.fromhex("38762cf7f55934b34d179ae6a4c80cadccbb7f0a")
KEY_LEN = 16
IV_LEN = 12
TAG_LEN = 16
SAMPLE_LEN = 16

TYPE_INITIAL = 0
TYPE_HANDSHAKE = 2

FRAME_PADDING = 0x00
FRAME_PING = 0x01
FRAME_ACK = 0x02
FRAME_CRYPTO = 0x06


def encode_varint(value: int) -> bytes:
    if value < 0x40:
        return bytes([value])
    if value < 0x4000:
        return struct.pack("!H", 0x4000 | value)
    if value < 0x40000000:
        return struct.pack("!I", 0x80000000 | value)
    if value < 0x4000000000000000:
        return struct.pack("!Q", 0xC000000000000000 | value)
    raise ValueError("varint out of range")


def decode_varint(data: bytes, offset: int = 0) -> tuple[int, int]:
    first = data[offset]
    length = 1 << (first >> 6)
    if offset + length > len(data):
        raise ValueError("truncated varint")
    value = first & 0x3F
    for i in range(1, length):
        value = (value << 8) | data[offset + i]
    return value, offset + length


def initial_secrets(dcid: bytes, version: int = QUIC_V1) -> tuple[bytes, bytes]:
    """(client_initial_secret, server_initial_secret) from the wire DCID."""
    if version != QUIC_V1:
        raise ValueError(
            f"no initial salt known for QUIC version 0x{version:08x}"
        )
    initial = hkdf_extract(INITIAL_SALT_V1, dcid)
    client = hkdf_expand_label(initial, b"client in", b"", 32)
    server = hkdf_expand_label(initial, b"server in", b"", 32)
    return client, server


def packet_keys(secret: bytes) -> tuple[bytes, bytes, bytes]:
    """(key, iv, header-protection key) for one packet-protection secret."""
    return (
        hkdf_expand_label(secret, b"quic key", b"", KEY_LEN),
        hkdf_expand_label(secret, b"quic iv", b"", IV_LEN),
        hkdf_expand_label(secret, b"quic hp", b"", KEY_LEN),
    )


def _hp_mask(hp_key: bytes, sample: bytes) -> bytes:
    cipher = Cipher(algorithms.AES(hp_key), modes.ECB())
    enc = cipher.encryptor()
    return enc.update(sample) + enc.finalize()


def _nonce(iv: bytes, packet_number: int) -> bytes:
    pn = packet_number.to_bytes(IV_LEN, "big")
    return bytes(a ^ b for a, b in zip(iv, pn))


@dataclass
class PacketSpace:
    """Protection context for one packet-number space, one direction."""

    key: bytes
    iv: bytes
    hp: bytes

    @classmethod
    def from_secret(cls, secret: bytes) -> "PacketSpace":
        key, iv, hp = packet_keys(secret)
        return cls(key=key, iv=iv, hp=hp)


def build_long_header(
    packet_type: int,
    dcid: bytes,
    scid: bytes,
    packet_number: int,
    payload_len: int,
    pn_length: int = 2,
    token: bytes = b"",
    version: int = QUIC_V1,
) -> bytes:
    first = 0xC0 | (packet_type << 4) | (pn_length - 1)
    header = bytes([first]) + struct.pack("!I", version)
    header += bytes([len(dcid)]) + dcid
    header += bytes([len(scid)]) + scid
    if packet_type == TYPE_INITIAL:
        header += encode_varint(len(token)) + token
    header += encode_varint(payload_len + pn_length + TAG_LEN)
    header += packet_number.to_bytes(pn_length, "big")
    return header


def build_short_header(dcid: bytes, packet_number: int, pn_length: int = 2) -> bytes:
    first = 0x40 | (pn_length - 1)  # fixed bit, key phase 0, spin 0
    return bytes([first]) + dcid + packet_number.to_bytes(pn_length, "big")


def protect(space: PacketSpace, header: bytes, payload: bytes,
            packet_number: int, pn_length: int) -> bytes:
    """AEAD-seal the payload and apply header protection."""
    aead = AESGCM(space.key)
    sealed = aead.encrypt(_nonce(space.iv, packet_number), payload, header)
    pn_offset = len(header) - pn_length
    sample_start = pn_offset + 4 - len(header)
    sample = sealed[sample_start : sample_start + SAMPLE_LEN]
    mask = _hp_mask(space.hp, sample)
    out = bytearray(header + sealed)
    out[0] ^= mask[0] & (0x0F if header[0] & 0x80 else 0x1F)
    for i in range(pn_length):
        out[pn_offset + i] ^= mask[1 + i]
    return bytes(out)


@dataclass
class UnprotectedPacket:
    packet_type: int | None   # None for short header (1-RTT)
    dcid: bytes
    scid: bytes | None
    packet_number: int
    payload: bytes
    header_len: int
    total_len: int            # wire bytes consumed (for coalesced datagrams)


def _remove_protection(
    space: PacketSpace, packet: bytes, pn_offset: int, payload_end: int
) -> tuple[int, int, bytes]:
    """Undo header protection; returns (pn_length, packet_number, plain)."""
    sample = packet[pn_offset + 4 : pn_offset + 4 + SAMPLE_LEN]
    mask = _hp_mask(space.hp, sample)
    first = packet[0] ^ (mask[0] & (0x0F if packet[0] & 0x80 else 0x1F))
    pn_length = (first & 0x03) + 1
    pn_bytes = bytearray(packet[pn_offset : pn_offset + pn_length])
    for i in range(pn_length):
        pn_bytes[i] ^= mask[1 + i]
    packet_number = int.from_bytes(pn_bytes, "big")
    header = bytes([first]) + packet[1:pn_offset] + bytes(pn_bytes)
    aead = AESGCM(space.key)
    plain = aead.decrypt(
        _nonce(space.iv, packet_number),
        packet[pn_offset + pn_length : payload_end],
        header,
    )
    return pn_length, packet_number, plain


def unprotect_long(space: PacketSpace, datagram: bytes) -> UnprotectedPacket:
    """Open one long-header packet at the start of ``datagram``."""
    if not datagram or not datagram[0] & 0x80:
        raise ValueError("not a long-header packet")
    packet_type = (datagram[0] >> 4) & 0x03
    offset = 1
    (version,) = struct.unpack("!I", datagram[offset : offset + 4])
    if version != QUIC_V1:
        raise ValueError(f"no initial salt known for QUIC version 0x{version:08x}")
    offset += 4
    dcid_len = datagram[offset]
    dcid = datagram[offset + 1 : offset + 1 + dcid_len]
    offset += 1 + dcid_len
    scid_len = datagram[offset]
    scid = datagram[offset + 1 : offset + 1 + scid_len]
    offset += 1 + scid_len
    if packet_type == TYPE_INITIAL:
        token_len, offset = decode_varint(datagram, offset)
        offset += token_len
    rest_len, offset = decode_varint(datagram, offset)
    pn_offset = offset
    payload_end = pn_offset + rest_len
    pn_length, packet_number, plain = _remove_protection(
        space, datagram, pn_offset, payload_end
    )
    return UnprotectedPacket(
        packet_type=packet_type,
        dcid=dcid,
        scid=scid,
        packet_number=packet_number,
        payload=plain,
        header_len=pn_offset + pn_length,
        total_len=payload_end,
    )


def unprotect_short(space: PacketSpace, datagram: bytes, dcid_len: int) -> UnprotectedPacket:
    if not datagram or datagram[0] & 0x80:
        raise ValueError("not a short-header packet")
    pn_offset = 1 + dcid_len
    pn_length, packet_number, plain = _remove_protection(
        space, datagram, pn_offset, len(datagram)
    )
    return UnprotectedPacket(
        packet_type=None,
        dcid=datagram[1 : 1 + dcid_len],
        scid=None,
        packet_number=packet_number,
        payload=plain,
        header_len=pn_offset + pn_length,
        total_len=len(datagram),
    )


def crypto_frame(offset: int, data: bytes) -> bytes:
    return (
        bytes([FRAME_CRYPTO])
        + encode_varint(offset)
        + encode_varint(len(data))
        + data
    )


def ack_frame(largest: int) -> bytes:
    # largest, delay, range count, first range
    return bytes([FRAME_ACK]) + encode_varint(largest) + b"\x00\x00\x00"


def parse_frames(payload: bytes):
    """Yield (frame_type, body) pairs; PADDING/PING collapse to markers."""
    offset = 0
    while offset < len(payload):
        frame_type = payload[offset]
        if frame_type == FRAME_PADDING:
            offset += 1
            continue
        if frame_type == FRAME_PING:
            yield FRAME_PING, b""
            offset += 1
            continue
        if frame_type == FRAME_ACK:
            _, offset = decode_varint(payload, offset + 1)
            _, offset = decode_varint(payload, offset)
            count, offset = decode_varint(payload, offset)
            _, offset = decode_varint(payload, offset)
            for _ in range(count):
                _, offset = decode_varint(payload, offset)
                _, offset = decode_varint(payload, offset)
            yield FRAME_ACK, b""
            continue
        if frame_type == FRAME_CRYPTO:
            data_off, offset = decode_varint(payload, offset + 1)
            length, offset = decode_varint(payload, offset)
            yield FRAME_CRYPTO, (data_off, payload[offset : offset + length])
            offset += length
            continue
        raise ValueError(f"unhandled frame type 0x{frame_type:02x}")


def reassemble_crypto(packets: list[UnprotectedPacket]) -> bytes:
    """Merge CRYPTO frames across packets by stream offset."""
    chunks: list[tuple[int, bytes]] = []
    for packet in packets:
        for frame_type, body in parse_frames(packet.payload):
            if frame_type == FRAME_CRYPTO:
                chunks.append(body)
    chunks.sort(key=lambda item: item[0])
    stream = b""
    for data_off, data in chunks:
        if data_off != len(stream):
            raise ValueError("gap in CRYPTO stream reassembly")
        stream += data
    return stream
