"""Capture containers: synthetic session bundles, the quantum-oracle
file, derived secret schedules, and keylog emission.

A :class:`CaptureBundle` is the on-disk stand-in for a PCAP: ordered
handshake transcript bytes, encrypted records with direction labels, and
the cleartext metadata a passive observer sees.  Ground truth (keylog
lines and the generator's plaintext) rides along in memory but is
written to a separate file so the derivation path physically cannot read
it.  The oracle file holds only private keys a CRQC would recover from
on-wire public values — never symmetric secrets or transcripts.

Container formats (all JSON, hex-encoded bodies):

``capture.json``  {"format": "hndl-capture-set/1", "sessions": [...]}
``oracle.json``   {"format": "hndl-oracle/1", "entries": [...]}
``truth.json``    {"format": "hndl-truth/1", "sessions": [...]}
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .profiles import ProtocolId

CAPTURE_FORMAT = "hndl-capture-set/1"
ORACLE_FORMAT = "hndl-oracle/1"
TRUTH_FORMAT = "hndl-truth/1"


class KeyKind(str, Enum):
    ECDHE_EPHEMERAL_PRIVATE = "ecdhe-ephemeral-private"
    RSA_LONGTERM_PRIVATE = "rsa-longterm-private"
    SSH_ECDH_EPHEMERAL_PRIVATE = "ssh-ecdh-ephemeral-private"


@dataclass
class OracleEntry:
    owner: str          # session id, or "rsa:<fingerprint>" for long-term keys
    kind: KeyKind
    key: bytes
    epoch: int = 0      # SSH KEX epoch index; 0 otherwise


@dataclass
class QuantumOracle:
    entries: list[OracleEntry] = field(default_factory=list)

    def add(self, owner: str, kind: KeyKind, key: bytes, epoch: int = 0) -> None:
        self.entries.append(OracleEntry(owner=owner, kind=kind, key=key, epoch=epoch))

    def lookup(self, owner: str, kind: KeyKind, epoch: int = 0) -> bytes | None:
        for entry in self.entries:
            if (entry.owner, entry.kind, entry.epoch) == (owner, kind, epoch):
                return entry.key
        return None

    def require(self, owner: str, kind: KeyKind, epoch: int = 0) -> bytes:
        key = self.lookup(owner, kind, epoch)
        if key is None:
            raise OracleMissError(owner, kind, epoch)
        return key

    def without(self, owner: str, kind: KeyKind | None = None,
                epoch: int | None = None) -> "QuantumOracle":
        """Ablated copy for negative controls and minimality checks."""
        kept = [
            e for e in self.entries
            if not (
                e.owner == owner
                and (kind is None or e.kind == kind)
                and (epoch is None or e.epoch == epoch)
            )
        ]
        return QuantumOracle(entries=kept)

    def to_dict(self) -> dict:
        return {
            "format": ORACLE_FORMAT,
            "entries": [
                {
                    "owner": e.owner,
                    "kind": e.kind.value,
                    "epoch": e.epoch,
                    "key_hex": e.key.hex(),
                }
                for e in self.entries
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "QuantumOracle":
        if data.get("format") != ORACLE_FORMAT:
            raise FormatError(f"not an oracle file (format={data.get('format')!r})")
        oracle = cls()
        for raw in data.get("entries", []):
            oracle.add(
                owner=raw["owner"],
                kind=KeyKind(raw["kind"]),
                key=bytes.fromhex(raw["key_hex"]),
                epoch=int(raw.get("epoch", 0)),
            )
        return oracle


class OracleMissError(KeyError):
    def __init__(self, owner: str, kind: KeyKind, epoch: int):
        self.owner, self.kind, self.epoch = owner, kind, epoch
        super().__init__(
            f"oracle holds no {kind.value} key for {owner!r} (epoch {epoch})"
        )


class FormatError(ValueError):
    """Container file does not match its documented schema."""


@dataclass
class HandshakeEntry:
    sender: str        # "client" | "server"
    name: str          # message label, e.g. "client_hello", "kexinit"
    data: bytes


@dataclass
class RecordEntry:
    sender: str
    data: bytes        # full encrypted record / QUIC datagram as on the wire
    phase: str = "app"  # "app" | "early" (TLS 1.3 0-RTT position marker)


@dataclass
class GroundTruth:
    keylog: list[str] = field(default_factory=list)
    schedule_lines: list[str] = field(default_factory=list)  # SSH export format
    payload_client: bytes = b""
    payload_server: bytes = b""


@dataclass
class CaptureBundle:
    session_id: str
    protocol: ProtocolId
    handshake: list[HandshakeEntry] = field(default_factory=list)
    setup: list[RecordEntry] = field(default_factory=list)    # SSH channel phase
    records: list[RecordEntry] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    ground_truth: GroundTruth | None = None

    def handshake_bytes(self) -> int:
        return sum(len(e.data) for e in self.handshake)

    def setup_bytes(self) -> int:
        return sum(len(e.data) for e in self.setup)

    def record_bytes(self) -> int:
        return sum(len(e.data) for e in self.records)

    def measured_storage(self) -> float:
        """Wire bytes an archiving adversary keeps (stream reassembly)."""
        return float(self.handshake_bytes() + self.setup_bytes() + self.record_bytes())

    def to_dict(self) -> dict:
        # Ground truth intentionally excluded: the capture file is what
        # the derivation path is allowed to read.
        return {
            "session_id": self.session_id,
            "protocol": self.protocol.value,
            "metadata": self.metadata,
            "handshake": [
                {"sender": e.sender, "name": e.name, "hex": e.data.hex()}
                for e in self.handshake
            ],
            "setup": [
                {"sender": e.sender, "hex": e.data.hex()} for e in self.setup
            ],
            "records": [
                {"sender": e.sender, "phase": e.phase, "hex": e.data.hex()}
                for e in self.records
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CaptureBundle":
        try:
            bundle = cls(
                session_id=data["session_id"],
                protocol=ProtocolId.parse(data["protocol"]),
                metadata=data.get("metadata", {}),
            )
            bundle.handshake = [
                HandshakeEntry(e["sender"], e["name"], bytes.fromhex(e["hex"]))
                for e in data.get("handshake", [])
            ]
            bundle.setup = [
                RecordEntry(e["sender"], bytes.fromhex(e["hex"]))
                for e in data.get("setup", [])
            ]
            bundle.records = [
                RecordEntry(e["sender"], bytes.fromhex(e["hex"]),
                            e.get("phase", "app"))
                for e in data.get("records", [])
            ]
            return bundle
        except (KeyError, ValueError) as exc:
            raise FormatError(f"malformed capture bundle: {exc}") from exc


@dataclass
class GeneratedCapture:
    """Everything one generator run produces (one session or a chain)."""

    bundles: list[CaptureBundle]
    oracle: QuantumOracle

    def save(self, directory: str | Path) -> dict[str, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        capture_path = directory / "capture.json"
        oracle_path = directory / "oracle.json"
        truth_path = directory / "truth.json"
        keylog_path = directory / "keylog.txt"

        capture_path.write_text(json.dumps(
            {"format": CAPTURE_FORMAT,
             "sessions": [b.to_dict() for b in self.bundles]},
            indent=1))
        oracle_path.write_text(json.dumps(self.oracle.to_dict(), indent=1))

        truth_sessions = []
        keylog_lines: list[str] = []
        for bundle in self.bundles:
            truth = bundle.ground_truth or GroundTruth()
            truth_sessions.append(
                {
                    "session_id": bundle.session_id,
                    "keylog": truth.keylog,
                    "schedule_lines": truth.schedule_lines,
                    "payload_client_hex": truth.payload_client.hex(),
                    "payload_server_hex": truth.payload_server.hex(),
                }
            )
            keylog_lines.extend(truth.keylog)
        truth_path.write_text(json.dumps(
            {"format": TRUTH_FORMAT, "sessions": truth_sessions}, indent=1))
        keylog_path.write_text("".join(line + "\n" for line in keylog_lines))
        return {
            "capture": capture_path,
            "oracle": oracle_path,
            "truth": truth_path,
            "keylog": keylog_path,
        }


def load_capture(path: str | Path) -> list[CaptureBundle]:
    data = json.loads(Path(path).read_text())
    if data.get("format") != CAPTURE_FORMAT:
        raise FormatError(f"not a capture file (format={data.get('format')!r})")
    return [CaptureBundle.from_dict(s) for s in data["sessions"]]


def load_oracle(path: str | Path) -> QuantumOracle:
    return QuantumOracle.from_dict(json.loads(Path(path).read_text()))


def load_truth(path: str | Path) -> dict[str, GroundTruth]:
    data = json.loads(Path(path).read_text())
    if data.get("format") != TRUTH_FORMAT:
        raise FormatError(f"not a truth file (format={data.get('format')!r})")
    out = {}
    for raw in data["sessions"]:
        out[raw["session_id"]] = GroundTruth(
            keylog=list(raw.get("keylog", [])),
            schedule_lines=list(raw.get("schedule_lines", [])),
            payload_client=bytes.fromhex(raw.get("payload_client_hex", "")),
            payload_server=bytes.fromhex(raw.get("payload_server_hex", "")),
        )
    return out


# ---------------------------------------------------------------------------
# Secret schedules and keylog formats

# NSS key log labels, in emission order.
KEYLOG_LABELS = (
    "CLIENT_EARLY_TRAFFIC_SECRET",
    "CLIENT_HANDSHAKE_TRAFFIC_SECRET",
    "SERVER_HANDSHAKE_TRAFFIC_SECRET",
    "CLIENT_TRAFFIC_SECRET_0",
    "SERVER_TRAFFIC_SECRET_0",
    "EXPORTER_SECRET",
)


@dataclass
class SecretSchedule:
    """Named secrets derived for one session, keylog-comparable."""

    protocol: ProtocolId
    session_id: str
    client_random: bytes | None = None
    secrets: dict[str, bytes] = field(default_factory=dict)
    ssh_epochs: list[dict[str, bytes]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def keylog_lines(self) -> list[str]:
        """De-facto NSS format: ``<LABEL> <client_random hex> <secret hex>``."""
        if self.client_random is None:
            return []
        cr = self.client_random.hex()
        lines = []
        ordered = list(KEYLOG_LABELS) + sorted(
            k for k in self.secrets
            if k not in KEYLOG_LABELS and k == k.upper()
        )
        for label in ordered:
            if label in self.secrets:
                lines.append(f"{label} {cr} {self.secrets[label].hex()}")
        return lines

    def ssh_schedule_lines(self) -> list[str]:
        """Documented SSH export: per-epoch K (mpint hex), H, KEY_A..KEY_F."""
        from . import sshproto  # local import; capture stays wire-agnostic

        lines = []
        for index, epoch in enumerate(self.ssh_epochs):
            lines.append(f"EPOCH {index}")
            lines.append("K " + sshproto.mpint_from_shared(epoch["K"]).hex())
            lines.append("H " + epoch["H"].hex())
            for letter in "ABCDEF":
                lines.append(f"KEY_{letter} " + epoch[f"KEY_{letter}"].hex())
        return lines


def parse_keylog_lines(lines: list[str]) -> list[tuple[str, str, str]]:
    out = []
    for line in lines:
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise FormatError(f"malformed keylog line: {line!r}")
        out.append((parts[0], parts[1], parts[2]))
    return out
