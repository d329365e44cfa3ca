"""Session generator checks: option gating, wire calibration against the
storage profiles, and bit-reproducibility."""

import pytest

from hndlkit.capture import KeyKind
from hndlkit.generate import GenerateError, generate_session
from hndlkit.profiles import ProtocolId, default_profile
from hndlkit.storage import SessionSpec, session_storage


class TestOptionGating:
    def test_tls13_options_rejected_elsewhere(self):
        with pytest.raises(GenerateError, match="TLS 1.3 option"):
            generate_session(ProtocolId.SSH, 100, resumption_links=1)
        with pytest.raises(GenerateError, match="TLS 1.3 option"):
            generate_session(ProtocolId.QUIC, 100, padding_block=256)

    def test_rekey_is_ssh_only(self):
        with pytest.raises(GenerateError, match="SSH option"):
            generate_session(ProtocolId.TLS13, 100, rekey_limit=65536)

    def test_zero_rtt_needs_resumption(self):
        with pytest.raises(GenerateError, match="resumption"):
            generate_session(ProtocolId.TLS13, 100, zero_rtt=True)

    def test_rotation_excludes_links(self):
        with pytest.raises(GenerateError, match="exclusive"):
            generate_session(ProtocolId.TLS13, 100, rotation_interval=50,
                             resumption_links=1)

    def test_tls12_ecdhe_not_generated(self):
        with pytest.raises(GenerateError, match="storage-model only"):
            generate_session(ProtocolId.TLS12_ECDHE, 100)

    def test_bad_split(self):
        with pytest.raises(GenerateError, match="split"):
            generate_session(ProtocolId.TLS13, 100, payload_split=(10, 10))


class TestStructure:
    def test_tls13_structural_minimum(self):
        cap = generate_session(ProtocolId.TLS13, 1024, seed=3)
        bundle = cap.bundles[0]
        hs_messages = [e for e in bundle.handshake if e.name != "ccs"]
        assert len(hs_messages) >= 4
        client_records = [r for r in bundle.records if r.sender == "client"]
        server_records = [r for r in bundle.records if r.sender == "server"]
        assert client_records and server_records

    def test_resumption_chain_shape(self):
        cap = generate_session(ProtocolId.TLS13, 3000, seed=4,
                               resumption_links=2, zero_rtt=True)
        assert len(cap.bundles) == 3
        assert len(cap.oracle.entries) == 1
        assert any(r.phase == "early" for r in cap.bundles[2].records)

    def test_ssh_rekey_epochs(self):
        cap = generate_session(ProtocolId.SSH, 5 * 2**20, seed=5,
                               rekey_limit=65536)
        epochs = sorted(e.epoch for e in cap.oracle.entries)
        assert len(epochs) == 40  # ceil(5 MiB / 131072)
        assert epochs == list(range(40))

    def test_rotation_chain(self):
        cap = generate_session(ProtocolId.TLS13, 10 * 102400, seed=6,
                               rotation_interval=102400)
        assert len(cap.bundles) == 10
        # every link performs a fresh exchange
        assert len(cap.oracle.entries) == 10


class TestCalibration:
    @pytest.mark.parametrize("protocol", [
        ProtocolId.TLS13, ProtocolId.TLS12_RSA, ProtocolId.QUIC, ProtocolId.SSH,
    ])
    def test_handshake_matches_profile(self, protocol):
        profile = default_profile(protocol)
        cap = generate_session(protocol, 1000, seed=7)
        bundle = cap.bundles[0]
        assert bundle.handshake_bytes() + bundle.setup_bytes() == (
            profile.handshake_bytes + profile.session_setup_bytes
        )

    @pytest.mark.parametrize("protocol", [
        ProtocolId.TLS13, ProtocolId.TLS12_RSA, ProtocolId.QUIC,
    ])
    def test_storage_exact_against_model(self, protocol):
        for payload in (0, 100, 16384, 200000):
            cap = generate_session(protocol, payload, seed=8,
                                   payload_split=(payload, 0))
            spec = SessionSpec(protocol, payload, stream_reassembly=True)
            assert cap.bundles[0].measured_storage() == (
                session_storage(spec).total
            )

    def test_ssh_storage_within_alignment_quantization(self):
        for payload in (100, 2683, 200000):
            cap = generate_session(ProtocolId.SSH, payload, seed=9,
                                   payload_split=(payload, 0))
            spec = SessionSpec(ProtocolId.SSH, payload, stream_reassembly=True)
            gap = abs(cap.bundles[0].measured_storage()
                      - session_storage(spec).total)
            assert gap <= 3.5 * max(1, payload // 32768 + 1)

    def test_rekey_round_costs_policy_overhead(self):
        cap = generate_session(ProtocolId.SSH, 300000, seed=10,
                               rekey_limit=65536, payload_split=(300000, 0))
        bundle = cap.bundles[0]
        epochs = max(e.epoch for e in cap.oracle.entries) + 1
        spec = SessionSpec(ProtocolId.SSH, 300000, stream_reassembly=True)
        base = session_storage(spec).total
        measured = bundle.measured_storage()
        # measured ~= base + (E-1) * 3072, up to per-record alignment and
        # the extra chunk splits at epoch boundaries
        assert measured - base == pytest.approx((epochs - 1) * 3072, abs=200)


class TestDeterminism:
    @pytest.mark.parametrize("protocol", [
        ProtocolId.TLS13, ProtocolId.TLS12_RSA, ProtocolId.QUIC, ProtocolId.SSH,
    ])
    def test_same_seed_same_bytes(self, protocol, tmp_path):
        a = generate_session(protocol, 5000, seed=42)
        b = generate_session(protocol, 5000, seed=42)
        dir_a, dir_b = tmp_path / "a", tmp_path / "b"
        paths_a = a.save(dir_a)
        paths_b = b.save(dir_b)
        for name in paths_a:
            assert paths_a[name].read_bytes() == paths_b[name].read_bytes()

    def test_different_seed_differs(self):
        a = generate_session(ProtocolId.TLS13, 5000, seed=1)
        b = generate_session(ProtocolId.TLS13, 5000, seed=2)
        assert a.bundles[0].metadata["client_random"] != (
            b.bundles[0].metadata["client_random"]
        )


class TestOracleContents:
    def test_oracle_holds_only_private_keys(self):
        cap = generate_session(ProtocolId.TLS13, 1000, seed=11)
        truth = cap.bundles[0].ground_truth
        for entry in cap.oracle.entries:
            assert entry.kind in (KeyKind.ECDHE_EPHEMERAL_PRIVATE,
                                  KeyKind.RSA_LONGTERM_PRIVATE,
                                  KeyKind.SSH_ECDH_EPHEMERAL_PRIVATE)
            # never a symmetric secret from the keylog
            for line in truth.keylog:
                assert entry.key.hex() not in line

    def test_rsa_entry_keyed_by_fingerprint(self):
        cap = generate_session(ProtocolId.TLS12_RSA, 100, seed=12)
        entry = cap.oracle.entries[0]
        assert entry.owner.startswith("rsa:")
        assert entry.owner.split(":")[1] == (
            cap.bundles[0].metadata["rsa_fingerprint"]
        )
