"""TLS 1.2 PRF, key block, record layer, and RSA key-transport checks."""

import os

import pytest
from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.asymmetric import rsa

from hndlkit import tls12


class TestPrf:
    def test_external_vector(self):
        # P_SHA256 known-answer (tlslite-ng unit-test value)
        out = tls12.prf(bytes(48), b"key expansion", bytes(64), 16)
        assert out == bytes.fromhex("53b5dbc854207d752942787542e4ebeb")

    def test_output_length(self):
        for n in (1, 12, 48, 100):
            assert len(tls12.prf(b"secret", b"label", b"seed", n)) == n

    def test_label_and_seed_sensitivity(self):
        a = tls12.prf(b"secret", b"master secret", b"seed", 48)
        b = tls12.prf(b"secret", b"key expansion", b"seed", 48)
        c = tls12.prf(b"secret", b"master secret", b"seeds", 48)
        assert len({a, b, c}) == 3


class TestKeyBlock:
    def test_master_secret_shape(self):
        master = tls12.master_secret(b"\x03\x03" + bytes(46), os.urandom(32),
                                     os.urandom(32))
        assert len(master) == 48

    def test_key_block_layout(self):
        master = os.urandom(48)
        cr, sr = os.urandom(32), os.urandom(32)
        keys = tls12.key_block(master, cr, sr)
        material = tls12.prf(master, b"key expansion", sr + cr, 40)
        assert keys.client_write_key == material[:16]
        assert keys.server_write_key == material[16:32]
        assert keys.client_salt == material[32:36]
        assert keys.server_salt == material[36:40]


class TestRecordLayer:
    def test_round_trip(self):
        key, salt = os.urandom(16), os.urandom(4)
        enc = tls12.RecordCodec(key, salt)
        dec = tls12.RecordCodec(key, salt)
        for chunk in (b"a", b"x" * 1000, bytes(16384)):
            plaintext, ctype = dec.decrypt(enc.encrypt(chunk))
            assert plaintext == chunk
            assert ctype == 0x17

    def test_sequence_mismatch_fails(self):
        key, salt = os.urandom(16), os.urandom(4)
        enc = tls12.RecordCodec(key, salt)
        dec = tls12.RecordCodec(key, salt)
        dec.seq = 5  # out of step: AAD binds the sequence number
        with pytest.raises(InvalidTag):
            dec.decrypt(enc.encrypt(b"hello"))


class TestRsaKeyTransport:
    def test_round_trip(self):
        key = tls12.testbed_rsa_key()
        premaster = b"\x03\x03" + os.urandom(46)
        ciphertext = tls12.encrypt_premaster(premaster, key.public_key())
        assert tls12.decrypt_premaster(ciphertext, key) == premaster

    def test_wrong_key_fails_loudly(self):
        key = tls12.testbed_rsa_key()
        other = rsa.generate_private_key(public_exponent=65537, key_size=2048)
        ciphertext = tls12.encrypt_premaster(b"\x03\x03" + os.urandom(46),
                                             key.public_key())
        with pytest.raises(ValueError):
            tls12.decrypt_premaster(ciphertext, other)

    def test_fingerprint_stable(self):
        key = tls12.testbed_rsa_key()
        fp1 = tls12.public_key_fingerprint(key.public_key())
        fp2 = tls12.public_key_fingerprint(
            tls12.load_public_key_der(tls12.public_key_der(key.public_key()))
        )
        assert fp1 == fp2
        assert len(fp1) == 64
