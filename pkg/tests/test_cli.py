"""CLI surface: schemas, exit codes, and manifest reproducibility."""

import csv
import json

import pytest
from click.testing import CliRunner

from hndlkit.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestAlphaCommand:
    def test_grid_shape_and_schema(self, runner, tmp_path):
        result = runner.invoke(main, ["alpha", "--all-protocols",
                                      "--out", str(tmp_path), "--no-plot"])
        assert result.exit_code == 0, result.output
        rows = _read_csv(tmp_path / "alpha.csv")
        assert len(rows) == 32  # 8 payloads x 4 protocols
        assert list(rows[0]) == ["protocol", "payload", "padding_block",
                                 "reassembly", "minimal", "storage", "alpha",
                                 "alpha_inf", "records", "packets"]

    def test_single_row(self, runner, tmp_path):
        result = runner.invoke(main, ["alpha", "--protocol", "tls13",
                                      "--payload", "16384",
                                      "--out", str(tmp_path), "--no-plot"])
        assert result.exit_code == 0
        rows = _read_csv(tmp_path / "alpha.csv")
        assert len(rows) == 1
        assert float(rows[0]["storage"]) == 18566.0

    def test_minimal_quic_asymptote(self, runner, tmp_path):
        result = runner.invoke(main, ["alpha", "--protocol", "quic", "--minimal",
                                      "--out", str(tmp_path), "--no-plot"])
        assert result.exit_code == 0
        rows = _read_csv(tmp_path / "alpha.csv")
        assert float(rows[0]["alpha_inf"]) == pytest.approx(1.008, abs=2e-3)

    def test_usage_error(self, runner, tmp_path):
        result = runner.invoke(main, ["alpha", "--out", str(tmp_path)])
        assert result.exit_code == 2

    def test_minimal_rejected_for_tls12(self, runner, tmp_path):
        result = runner.invoke(main, ["alpha", "--protocol", "tls12-rsa",
                                      "--minimal", "--out", str(tmp_path)])
        assert result.exit_code == 2
        assert "stripped-archive" in result.output

    def test_batch_mode(self, runner, tmp_path):
        batch = tmp_path / "batch.json"
        batch.write_text(json.dumps([
            {"protocol": "tls13", "payload": 16384, "stream_reassembly": True},
            {"protocol": "ssh", "payload": 0},
        ]))
        result = runner.invoke(main, ["alpha", "--sessions", str(batch),
                                      "--out", str(tmp_path), "--no-plot"])
        assert result.exit_code == 0
        rows = _read_csv(tmp_path / "alpha.csv")
        assert len(rows) == 2
        assert float(rows[0]["storage"]) == 18566.0
        assert rows[1]["alpha"] == ""

    def test_config_file_defaults(self, runner, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps(
            {"alpha": {"protocol": "tls13", "payload": "16384",
                       "out": str(tmp_path), "plot": False}}
        ))
        result = runner.invoke(main, ["--config", str(config), "alpha"])
        assert result.exit_code == 0, result.output
        rows = _read_csv(tmp_path / "alpha.csv")
        assert len(rows) == 1
        # explicit flags still override the file
        result = runner.invoke(main, ["--config", str(config), "alpha",
                                      "--payload", "100,200"])
        assert result.exit_code == 0
        assert len(_read_csv(tmp_path / "alpha.csv")) == 2


class TestCostCommand:
    def test_table(self, runner, tmp_path):
        result = runner.invoke(main, ["cost", "--table", "--out", str(tmp_path)])
        assert result.exit_code == 0
        rows = _read_csv(tmp_path / "cost_table.csv")
        assert len(rows) == 3
        assert list(rows[0]) == ["fraction", "daily_ingest_pb",
                                 "annual_volume_eb", "annual_cost_usd"]

    def test_mc_deterministic_files(self, runner, tmp_path):
        args = ["cost", "--mc", "--fractions", "0.01", "--draws", "500",
                "--seed", "7", "--no-plot"]
        a_dir, b_dir = tmp_path / "a", tmp_path / "b"
        assert runner.invoke(main, args + ["--out", str(a_dir)]).exit_code == 0
        assert runner.invoke(main, args + ["--out", str(b_dir)]).exit_code == 0
        assert (a_dir / "cost_mc.csv").read_bytes() == (
            (b_dir / "cost_mc.csv").read_bytes()
        )

    def test_bad_scenario_file(self, runner, tmp_path):
        bad = tmp_path / "scenario.json"
        bad.write_text(json.dumps({"harvest_fraction": 0.01, "nope": 5}))
        result = runner.invoke(main, ["cost", "--mc", "--scenario", str(bad),
                                      "--out", str(tmp_path)])
        assert result.exit_code == 3
        assert "nope" in result.output

    def test_mode_required(self, runner, tmp_path):
        assert runner.invoke(main, ["cost", "--out", str(tmp_path)]).exit_code == 2


class TestRekeyCommand:
    def test_table_and_grid(self, runner, tmp_path):
        result = runner.invoke(main, [
            "rekey", "--ssh", "--rnom", "65536", "--payload", "5242880",
            "--grid", "--out", str(tmp_path), "--no-plot",
        ])
        assert result.exit_code == 0, result.output
        rows = _read_csv(tmp_path / "rekey.csv")
        assert 33 <= int(rows[0]["instances"]) <= 41
        assert float(rows[0]["storage_penalty"]) == pytest.approx(0.021, abs=0.005)
        grid = _read_csv(tmp_path / "rekey_grid.csv")
        for row in grid:
            if float(row["target_bytes"]) <= float(row["effective_threshold"]):
                assert int(row["e_eff"]) == 1

    def test_tls13_exact(self, runner, tmp_path):
        result = runner.invoke(main, [
            "rekey", "--tls13", "--rnom", "102400", "--payload", "1048576",
            "--out", str(tmp_path), "--no-plot",
        ])
        assert result.exit_code == 0
        rows = _read_csv(tmp_path / "rekey.csv")
        assert int(rows[0]["instances"]) == 11


class TestPaddingCommand:
    def test_default_sweep_shape(self, runner, tmp_path):
        result = runner.invoke(main, ["padding", "--out", str(tmp_path),
                                      "--no-plot"])
        assert result.exit_code == 0
        rows = _read_csv(tmp_path / "padding.csv")
        assert len(rows) == 40  # 5 blocks x 8 payloads
        assert list(rows[0]) == ["payload", "padding_block", "alpha"]

    def test_unpadded_column_matches_alpha_command(self, runner, tmp_path):
        assert runner.invoke(main, [
            "padding", "--blocks", "0", "--payload", "16384",
            "--out", str(tmp_path / "p"), "--no-plot",
        ]).exit_code == 0
        assert runner.invoke(main, [
            "alpha", "--protocol", "tls13", "--payload", "16384",
            "--out", str(tmp_path / "a"), "--no-plot",
        ]).exit_code == 0
        padded = float(_read_csv(tmp_path / "p" / "padding.csv")[0]["alpha"])
        plain = float(_read_csv(tmp_path / "a" / "alpha.csv")[0]["alpha"])
        assert padded == pytest.approx(plain, abs=1e-12)


class TestPipelineCommands:
    def test_full_round_trip_exit_codes(self, runner, tmp_path):
        out = str(tmp_path)
        assert runner.invoke(main, [
            "generate", "--protocol", "quic", "--payload", "3000",
            "--seed", "9", "--out", out,
        ]).exit_code == 0
        assert runner.invoke(main, [
            "derive", "--capture", f"{out}/capture.json",
            "--oracle", f"{out}/oracle.json", "--out", out,
        ]).exit_code == 0
        result = runner.invoke(main, [
            "verify", "--capture", f"{out}/capture.json",
            "--oracle", f"{out}/oracle.json",
            "--truth", f"{out}/truth.json", "--out", out,
        ])
        assert result.exit_code == 0, result.output
        report = json.loads((tmp_path / "verify_report.json").read_text())
        assert report["ok"] is True
        assert "initial" in " ".join(report["sessions"][0]["notes"])

    def test_withheld_entry_fails_with_exit_one(self, runner, tmp_path):
        out = str(tmp_path)
        assert runner.invoke(main, [
            "generate", "--protocol", "tls13", "--payload", "3000",
            "--links", "1", "--link-modes", "psk-dhe", "--seed", "10",
            "--out", out,
        ]).exit_code == 0
        oracle = json.loads((tmp_path / "oracle.json").read_text())
        oracle["entries"] = oracle["entries"][:1]
        (tmp_path / "oracle_ablated.json").write_text(json.dumps(oracle))
        result = runner.invoke(main, [
            "verify", "--capture", f"{out}/capture.json",
            "--oracle", f"{out}/oracle_ablated.json",
            "--truth", f"{out}/truth.json", "--out", out,
        ])
        assert result.exit_code == 1
        assert "FAILED" in result.output

    def test_malformed_capture_is_input_error(self, runner, tmp_path):
        bad = tmp_path / "capture.json"
        bad.write_text(json.dumps({"format": "something-else"}))
        result = runner.invoke(main, [
            "derive", "--capture", str(bad), "--oracle", str(bad),
            "--out", str(tmp_path),
        ])
        assert result.exit_code == 3

    def test_invalid_generate_options(self, runner, tmp_path):
        result = runner.invoke(main, [
            "generate", "--protocol", "ssh", "--payload", "100",
            "--zero-rtt", "--out", str(tmp_path),
        ])
        assert result.exit_code == 3


class TestManifests:
    def test_every_run_writes_manifest(self, runner, tmp_path):
        assert runner.invoke(main, ["cost", "--table",
                                    "--out", str(tmp_path)]).exit_code == 0
        manifest = json.loads((tmp_path / "manifest-cost.json").read_text())
        assert manifest["tool"] == "hndlkit"
        assert manifest["command"] == "cost"
        assert "cost_table.csv" in manifest["outputs"]

    def test_rerun_reproduces_bit_identically(self, runner, tmp_path):
        first = tmp_path / "first"
        again = tmp_path / "again"
        assert runner.invoke(main, [
            "generate", "--protocol", "ssh", "--payload", "9000",
            "--seed", "77", "--out", str(first),
        ]).exit_code == 0
        result = runner.invoke(main, [
            "rerun", str(first / "manifest-generate.json"),
            "--out", str(again),
        ])
        assert result.exit_code == 0, result.output
        for name in ("capture.json", "oracle.json", "truth.json", "keylog.txt"):
            assert (first / name).read_bytes() == (again / name).read_bytes()
