"""Two-layer compromise verification.

Layer one byte-compares the derived schedule against the withheld
ground-truth keylog; layer two AEAD-decrypts every captured application
record with the derived keys and compares the reassembled plaintext to
the generator's payload.  Failures are report content, never
exceptions: a clean negative control produces a report that says
exactly what stayed sealed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from cryptography.exceptions import InvalidTag

from . import sshproto, tls12
from .capture import CaptureBundle, GroundTruth, SecretSchedule
from .derive import (
    DeriveError,
    _schedule_to_secrets,
    _tls13_walk_records,
)
from .profiles import ProtocolId


@dataclass
class VerifyReport:
    session_id: str
    secret_matches: list[tuple[str, bool]] = field(default_factory=list)
    records_total: int = 0
    records_decrypted: int = 0
    payload_client_ok: bool = False
    payload_server_ok: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def secrets_ok(self) -> bool:
        return bool(self.secret_matches) and all(ok for _, ok in self.secret_matches)

    @property
    def records_ok(self) -> bool:
        return self.records_total == self.records_decrypted

    @property
    def ok(self) -> bool:
        return (self.secrets_ok and self.records_ok
                and self.payload_client_ok and self.payload_server_ok)

    def lines(self) -> list[str]:
        out = [f"session {self.session_id}: {'COMPROMISED' if self.ok else 'MISMATCH'}"]
        for label, match in self.secret_matches:
            out.append(f"  secret {label}: {'match' if match else 'MISMATCH'}")
        out.append(
            f"  records decrypted: {self.records_decrypted}/{self.records_total}"
        )
        out.append(f"  client payload: {'match' if self.payload_client_ok else 'MISMATCH'}")
        out.append(f"  server payload: {'match' if self.payload_server_ok else 'MISMATCH'}")
        out.extend(f"  note: {note}" for note in self.notes)
        return out


def verify_compromise(
    bundle: CaptureBundle,
    schedule: SecretSchedule,
    truth: GroundTruth | None = None,
) -> VerifyReport:
    """Compare a derived schedule against ground truth and decrypt.

    ``truth`` defaults to the bundle's embedded ground truth (present on
    freshly generated captures; supplied separately when verifying from
    files).
    """
    truth = truth or bundle.ground_truth
    if truth is None:
        raise ValueError("no ground truth available for verification")
    report = VerifyReport(session_id=bundle.session_id)
    report.notes.extend(schedule.notes)

    if bundle.protocol == ProtocolId.SSH:
        _compare_lines(report, truth.schedule_lines, schedule.ssh_schedule_lines())
    else:
        _compare_lines(report, truth.keylog, schedule.keylog_lines())

    if bundle.protocol == ProtocolId.TLS13:
        _verify_tls13_records(bundle, schedule, truth, report)
    elif bundle.protocol == ProtocolId.TLS12_RSA:
        _verify_tls12_records(bundle, schedule, truth, report)
    elif bundle.protocol == ProtocolId.QUIC:
        _verify_quic_records(bundle, schedule, truth, report)
    elif bundle.protocol == ProtocolId.SSH:
        _verify_ssh_records(bundle, schedule, truth, report)
    return report


def _compare_lines(report: VerifyReport, truth_lines: list[str],
                   derived_lines: list[str]) -> None:
    """Byte-exact line comparison; a wrong secret fails its label."""
    derived_set = set(derived_lines)
    truth_set = set(truth_lines)
    for line in truth_lines:
        label = line.split()[0]
        report.secret_matches.append((label, line in derived_set))
    extras = [line for line in derived_lines if line not in truth_set]
    for line in extras:
        report.notes.append(f"derived line not in ground truth: {line.split()[0]}")


def _verify_tls13_records(bundle, schedule, truth, report) -> None:
    try:
        secrets = _schedule_to_secrets(schedule)
    except KeyError as exc:
        report.notes.append(f"schedule incomplete: {exc}")
        report.records_total = len(bundle.records)
        return
    walk = _tls13_walk_records(bundle, secrets)
    report.records_total = len(walk.record_results)
    report.records_decrypted = sum(walk.record_results)
    client_plain = walk.early_payload + walk.payload_client
    report.payload_client_ok = client_plain == truth.payload_client
    report.payload_server_ok = walk.payload_server == truth.payload_server


def _verify_tls12_records(bundle, schedule, truth, report) -> None:
    master = schedule.secrets.get("CLIENT_RANDOM")
    if master is None or schedule.client_random is None:
        report.notes.append("schedule incomplete: master secret missing")
        report.records_total = len(bundle.records)
        return
    client_random = schedule.client_random
    server_random = _tls12_server_random(bundle)
    keys = tls12.key_block(master, client_random, server_random)
    codecs = {
        "client": tls12.RecordCodec(keys.client_write_key, keys.client_salt),
        "server": tls12.RecordCodec(keys.server_write_key, keys.server_salt),
    }
    # Finished records burned sequence number zero in both directions.
    codecs["client"].seq = 1
    codecs["server"].seq = 1
    payload = {"client": b"", "server": b""}
    report.records_total = len(bundle.records)
    for entry in bundle.records:
        try:
            plaintext, _ = codecs[entry.sender].decrypt(entry.data)
        except InvalidTag:
            continue
        payload[entry.sender] += plaintext
        report.records_decrypted += 1
    report.payload_client_ok = payload["client"] == truth.payload_client
    report.payload_server_ok = payload["server"] == truth.payload_server

    # The encrypted Finished records double as an integrity check on the
    # derived master secret.
    fin = {
        "client": tls12.RecordCodec(keys.client_write_key, keys.client_salt),
        "server": tls12.RecordCodec(keys.server_write_key, keys.server_salt),
    }
    for entry in bundle.handshake:
        if entry.name in ("client_finished", "server_finished"):
            try:
                fin[entry.sender].decrypt(entry.data)
            except InvalidTag:
                report.notes.append(f"{entry.name}: record failed to open")


def _tls12_server_random(bundle: CaptureBundle) -> bytes:
    for entry in bundle.handshake:
        body = entry.data[5:]
        if entry.data[0] == 0x16 and body and body[0] == tls12.HS_SERVER_HELLO:
            return body[6:38]
    raise DeriveError("ServerHello missing from capture")


def _verify_quic_records(bundle, schedule, truth, report) -> None:
    from . import quic

    needed = ("CLIENT_TRAFFIC_SECRET_0", "SERVER_TRAFFIC_SECRET_0")
    if any(k not in schedule.secrets for k in needed):
        report.notes.append("schedule incomplete: application secrets missing")
        report.records_total = len(bundle.records)
        return
    spaces = {
        "client": quic.PacketSpace.from_secret(
            schedule.secrets["CLIENT_TRAFFIC_SECRET_0"]),
        "server": quic.PacketSpace.from_secret(
            schedule.secrets["SERVER_TRAFFIC_SECRET_0"]),
    }
    cid_len = int(bundle.metadata.get("cid_length", 8))
    payload = {"client": b"", "server": b""}
    report.records_total = len(bundle.records)
    for entry in bundle.records:
        try:
            packet = quic.unprotect_short(spaces[entry.sender], entry.data, cid_len)
        except (InvalidTag, ValueError):
            continue
        payload[entry.sender] += packet.payload
        report.records_decrypted += 1
    report.payload_client_ok = payload["client"] == truth.payload_client
    report.payload_server_ok = payload["server"] == truth.payload_server


def _verify_ssh_records(bundle, schedule, truth, report) -> None:
    # Replays the stream with the derived epoch keys; the walk both
    # decrypts and locates epoch switches.
    if not schedule.ssh_epochs:
        report.notes.append("schedule incomplete: no epochs derived")
        report.records_total = len(bundle.setup) + len(bundle.records)
        return
    epochs = schedule.ssh_epochs
    codecs = {
        "client": sshproto.RecordCodec(epochs[0]["KEY_C"], seq=3),
        "server": sshproto.RecordCodec(epochs[0]["KEY_D"], seq=3),
    }
    epoch_cursor = {"client": 0, "server": 0}
    payload = {"client": b"", "server": b""}
    entries = list(bundle.setup) + list(bundle.records)
    report.records_total = len(entries)
    for entry in entries:
        codec = codecs[entry.sender]
        if codec is None:
            continue
        try:
            message = codec.decrypt(entry.data)
        except InvalidTag:
            codecs[entry.sender] = None
            continue
        report.records_decrypted += 1
        msg = message[0]
        if msg == sshproto.MSG_CHANNEL_DATA:
            payload[entry.sender] += message[1:]
        elif msg == sshproto.MSG_NEWKEYS:
            cursor = epoch_cursor[entry.sender] + 1
            epoch_cursor[entry.sender] = cursor
            if cursor < len(epochs):
                key = epochs[cursor]["KEY_C" if entry.sender == "client" else "KEY_D"]
                codec.rekey(key)
            else:
                codecs[entry.sender] = None  # keys beyond what was derived
    report.payload_client_ok = payload["client"] == truth.payload_client
    report.payload_server_ok = payload["server"] == truth.payload_server
