"""Command-line entry point.

One subcommand per model plus the generate/derive/verify pipeline.
Every run resolves its parameters, writes its outputs (CSV/JSON, with a
rendered PNG beside each report CSV), and drops a manifest; ``rerun``
replays a manifest bit-identically.

Exit codes: 0 success, 1 verification mismatch, 2 usage error,
3 input/format error.
"""

from __future__ import annotations

import csv
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import click

from . import __version__, plots
from .capture import (
    FormatError,
    load_capture,
    load_oracle,
    load_truth,
)
from .derive import (
    ChainLink,
    DeriveError,
    derive_resumption_chain,
    derive_session,
)
from .econ import (
    DEFAULT_FRACTION_GRID,
    DEFAULT_HORIZONS,
    CostScenario,
    ScenarioError,
    fraction_sweep,
    harvest_cost_table,
)
from .generate import GenerateError, generate_session
from .profiles import (
    ProtocolId,
    default_profile,
    load_profile_overrides,
)
from .rekey import (
    RekeyMechanism,
    RekeyPolicy,
    decryption_latency,
    effective_multiplier_grid,
    effective_threshold,
    instance_multiplier,
    rekey_storage_penalty,
)
from .storage import SessionSpec, framing_asymptote, padded_session_alpha, session_storage
from .verify import verify_compromise

EXIT_MISMATCH = 1
EXIT_INPUT = 3

DEFAULT_PAYLOAD_GRID = (100, 518, 2683, 13895, 71969, 372759, 1930698, 10000000)
DEFAULT_PADDING_BLOCKS = (0, 256, 1024, 4096, 16384)
DEFAULT_PADDING_PAYLOADS = (100, 373, 1389, 5179, 19307, 71969, 268270, 1000000)


def _outdir(value: str | None) -> Path:
    path = Path(value or os.environ.get("HNDLKIT_OUT", "hndl-out"))
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_csv(path: Path, rows: list[dict], columns: list[str]) -> Path:
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in columns})
    return path


def _write_manifest(outdir: Path, command: str, params: dict,
                    outputs: list[Path]) -> Path:
    manifest = {
        "tool": "hndlkit",
        "version": __version__,
        "command": command,
        "params": params,
        "outputs": [p.name for p in outputs],
    }
    path = outdir / f"manifest-{command}.json"
    path.write_text(json.dumps(manifest, indent=1, sort_keys=True))
    return path


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise click.UsageError(f"expected a comma-separated integer list: {exc}")


def _parse_float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise click.UsageError(f"expected a comma-separated number list: {exc}")


@click.group()
@click.version_option(__version__)
@click.option("--config", "config_path", default=None,
              envvar="HNDLKIT_CONFIG",
              help="JSON file of per-command flag defaults "
                   "(precedence: flag > file > built-in)")
@click.pass_context
def main(ctx, config_path) -> None:
    """Harvest-now/decrypt-later cost models and attack pipeline."""
    if config_path:
        try:
            defaults = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            click.echo(f"error: config file: {exc}", err=True)
            sys.exit(EXIT_INPUT)
        if not isinstance(defaults, dict):
            click.echo("error: config file must hold a JSON object", err=True)
            sys.exit(EXIT_INPUT)
        ctx.default_map = defaults


# ---------------------------------------------------------------------------
# alpha


@main.command("alpha")
@click.option("--protocol", "protocol_name", default=None,
              help="tls12-rsa | tls12-ecdhe | tls13 | quic | ssh")
@click.option("--all-protocols", is_flag=True, help="sweep every protocol")
@click.option("--sessions", "sessions_path", default=None,
              help="batch mode: JSON array of session specs")
@click.option("--payload", "payloads_text", default=None,
              help="comma-separated payload bytes (default: 8-point log grid)")
@click.option("--reassembly/--no-reassembly", default=True,
              help="drop transport headers (adversary stream reassembly)")
@click.option("--minimal", is_flag=True, help="stripped-archive overhead")
@click.option("--padding-block", default=0, type=int)
@click.option("--profiles", "profiles_path", default=None,
              help="JSON file of per-protocol constant overrides")
@click.option("--out", default=None, help="output directory [env HNDLKIT_OUT]")
@click.option("--plot/--no-plot", "render", default=True)
def cmd_alpha(protocol_name, all_protocols, sessions_path, payloads_text,
              reassembly, minimal, padding_block, profiles_path, out,
              render) -> None:
    """Protocol overhead ratio table (and figure) over a payload sweep."""
    if sessions_path:
        from .storage import batch_rows, load_session_specs

        try:
            rows = batch_rows(load_session_specs(sessions_path))
        except (OSError, ValueError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_INPUT)
        outdir = _outdir(out)
        outputs = [_write_csv(outdir / "alpha.csv", rows,
                              ["protocol", "payload", "padding_block",
                               "reassembly", "minimal", "storage", "alpha",
                               "records", "packets"])]
        if render:
            plottable = [r for r in rows if r["alpha"] is not None]
            if plottable:
                outputs.append(plots.plot_alpha(plottable, outdir / "alpha.png"))
        outputs.append(_write_manifest(outdir, "alpha", {
            "sessions": sessions_path, "plot": render,
        }, outputs))
        click.echo(f"wrote {', '.join(str(p) for p in outputs)}")
        return
    if bool(protocol_name) == bool(all_protocols):
        raise click.UsageError(
            "pick exactly one of --protocol, --all-protocols, or --sessions"
        )
    protocols = (
        list(ProtocolId) if all_protocols else [ProtocolId.parse(protocol_name)]
    )
    if all_protocols:
        # the four-protocol testbed grid (one TLS 1.2 variant)
        protocols = [ProtocolId.TLS12_RSA, ProtocolId.TLS13,
                     ProtocolId.QUIC, ProtocolId.SSH]
    payloads = (_parse_int_list(payloads_text) if payloads_text
                else list(DEFAULT_PAYLOAD_GRID))
    overrides = {}
    if profiles_path:
        try:
            overrides = load_profile_overrides(profiles_path)
        except (OSError, ValueError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_INPUT)

    rows = []
    for protocol in protocols:
        base = overrides.get(protocol) or default_profile(protocol)
        if minimal:
            if base.record_overhead_min is None:
                raise click.UsageError(
                    f"no stripped-archive overhead defined for {protocol.value}"
                )
            profile = replace(base, record_overhead=base.record_overhead_min)
        else:
            profile = base
        for payload in payloads:
            try:
                spec = SessionSpec(
                    protocol=protocol,
                    payload=payload,
                    padding_block=padding_block,
                    stream_reassembly=reassembly,
                )
            except ValueError as exc:
                raise click.UsageError(str(exc))
            breakdown = session_storage(spec, profile)
            rows.append(
                {
                    "protocol": protocol.value,
                    "payload": payload,
                    "padding_block": padding_block,
                    "reassembly": reassembly,
                    "minimal": minimal,
                    "storage": f"{breakdown.total:.1f}",
                    "alpha": breakdown.alpha,
                    "alpha_inf": framing_asymptote(profile),
                    "records": breakdown.record_count,
                    "packets": breakdown.packet_count,
                }
            )
    outdir = _outdir(out)
    outputs = [_write_csv(outdir / "alpha.csv", rows,
                          ["protocol", "payload", "padding_block", "reassembly",
                           "minimal", "storage", "alpha", "alpha_inf",
                           "records", "packets"])]
    if render:
        outputs.append(plots.plot_alpha(rows, outdir / "alpha.png"))
    outputs.append(_write_manifest(outdir, "alpha", {
        "protocols": [p.value for p in protocols],
        "payloads": payloads,
        "reassembly": reassembly,
        "minimal": minimal,
        "padding_block": padding_block,
        "profiles": profiles_path,
        "plot": render,
    }, outputs))
    click.echo(f"wrote {', '.join(str(p) for p in outputs)}")


# ---------------------------------------------------------------------------
# cost


@main.command("cost")
@click.option("--table", "mode_table", is_flag=True,
              help="deterministic harvest cost table")
@click.option("--mc", "mode_mc", is_flag=True, help="Monte Carlo bands")
@click.option("--fractions", default=None,
              help="comma-separated harvest fractions (default table: 1%,10%,100%)")
@click.option("--scenario", "scenario_path", default=None,
              help="JSON file with CostScenario fields")
@click.option("--tape", is_flag=True, help="sunk tape-media CapEx preset")
@click.option("--horizons", default=None, help="retention horizons, years")
@click.option("--seed", default=0, type=int)
@click.option("--draws", default=10000, type=int)
@click.option("--workers", default=1, type=int)
@click.option("--out", default=None)
@click.option("--plot/--no-plot", "render", default=True)
def cmd_cost(mode_table, mode_mc, fractions, scenario_path, tape, horizons,
             seed, draws, workers, out, render) -> None:
    """Annual harvest cost table and multi-year Monte Carlo bands."""
    if bool(mode_table) == bool(mode_mc):
        raise click.UsageError("pick exactly one of --table or --mc")
    outdir = _outdir(out)
    outputs: list[Path] = []

    try:
        if scenario_path:
            base = CostScenario.from_json(scenario_path)
        elif tape:
            base = CostScenario.tape_capex(harvest_fraction=0.01)
        else:
            base = CostScenario(harvest_fraction=0.01)
    except (ScenarioError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    base = replace(base, rng_seed=seed, draws=draws)

    if mode_table:
        f_values = (_parse_float_list(fractions) if fractions
                    else [0.01, 0.10, 1.00])
        rows = harvest_cost_table(f_values, base.annual_volume, base.unit_cost)
        outputs.append(_write_csv(outdir / "cost_table.csv", rows,
                                  ["fraction", "daily_ingest_pb",
                                   "annual_volume_eb", "annual_cost_usd"]))
        for row in rows:
            click.echo(
                f"f={row['fraction']:>7.2%}  {row['daily_ingest_pb']:>10.0f} PB/day  "
                f"{row['annual_volume_eb']:>8.0f} EB/yr  ${row['annual_cost_usd']:.3g}/yr"
            )
    else:
        f_values = (_parse_float_list(fractions) if fractions
                    else list(DEFAULT_FRACTION_GRID))
        horizon_values = tuple(_parse_int_list(horizons)) if horizons else DEFAULT_HORIZONS
        rows = fraction_sweep(base, tuple(f_values), horizon_values, workers=workers)
        outputs.append(_write_csv(
            outdir / "cost_mc.csv", rows,
            ["fraction", "kind", "horizon_years", "p5", "p25", "median", "p75", "p95"],
        ))
        summary = {
            "scenario": {
                "harvest_fraction": base.harvest_fraction,
                "annual_volume_bytes": base.annual_volume,
                "unit_cost_usd_tb_year": base.unit_cost,
                "unit_cost_spread": base.unit_cost_spread,
                "growth_range": base.growth,
                "annual_price_change_range": base.annual_price_change,
                "price_decline_range": base.price_decline_range,
                "draws": base.draws,
                "rng_seed": base.rng_seed,
            },
            "horizons_years": list(horizon_values),
            "fractions": f_values,
        }
        summary_path = outdir / "cost_mc_summary.json"
        summary_path.write_text(json.dumps(summary, indent=1, sort_keys=True))
        outputs.append(summary_path)
        if render:
            outputs.append(plots.plot_cost_bands(rows, outdir / "cost_mc.png"))

    outputs.append(_write_manifest(outdir, "cost", {
        "mode": "table" if mode_table else "mc",
        "fractions": fractions,
        "scenario": scenario_path,
        "tape": tape,
        "horizons": horizons,
        "seed": seed,
        "draws": draws,
        "workers": workers,
        "plot": render,
    }, outputs))
    click.echo(f"wrote {', '.join(str(p) for p in outputs)}")


# ---------------------------------------------------------------------------
# rekey


@main.command("rekey")
@click.option("--ssh", "mechanism_name", flag_value="ssh", default=True)
@click.option("--tls13", "mechanism_name", flag_value="tls13",
              help="PSK-DHE rotation instead of SSH RekeyLimit")
@click.option("--rnom", default="65536,262144,1048576,10485760",
              help="nominal thresholds R_nom (bytes)")
@click.option("--payload", "payloads_text",
              default="1024,65536,524288,1048576,5242880")
@click.option("--tq", default=1.0, type=float, help="hours per key recovery")
@click.option("--grid", is_flag=True, help="emit the (L, R) -> E_eff heatmap grid")
@click.option("--targets", default=None,
              help="prefix sizes L for --grid (default 20-point log grid)")
@click.option("--out", default=None)
@click.option("--plot/--no-plot", "render", default=True)
def cmd_rekey(mechanism_name, rnom, payloads_text, tq, grid, targets, out,
              render) -> None:
    """Quantum instance multipliers E / E_eff and storage penalties."""
    import numpy as np

    mechanism = (RekeyMechanism.SSH_REKEYLIMIT if mechanism_name == "ssh"
                 else RekeyMechanism.TLS13_PSK_DHE_ROTATION)
    thresholds = _parse_int_list(rnom)
    payloads = _parse_int_list(payloads_text)
    outdir = _outdir(out)
    outputs: list[Path] = []

    rows = []
    for r_nom in thresholds:
        policy = RekeyPolicy(mechanism=mechanism, nominal_threshold=r_nom)
        for payload in payloads:
            instances = instance_multiplier(payload, policy)
            rows.append(
                {
                    "mechanism": mechanism.value,
                    "nominal_threshold": r_nom,
                    "effective_threshold": effective_threshold(policy),
                    "payload": payload,
                    "instances": instances,
                    "latency_hours": decryption_latency(instances, tq),
                    "storage_penalty": rekey_storage_penalty(payload, policy),
                }
            )
    outputs.append(_write_csv(
        outdir / "rekey.csv", rows,
        ["mechanism", "nominal_threshold", "effective_threshold", "payload",
         "instances", "latency_hours", "storage_penalty"],
    ))
    if render:
        outputs.append(plots.plot_rekey(rows, outdir / "rekey.png"))

    if grid:
        target_values = (_parse_int_list(targets) if targets else
                         [int(x) for x in np.logspace(3, 8, 20)])
        grid_rows = effective_multiplier_grid(
            target_values, target_values, payload=max(payloads),
            mechanism=mechanism,
        )
        outputs.append(_write_csv(
            outdir / "rekey_grid.csv", grid_rows,
            ["target_bytes", "threshold", "effective_threshold", "e_eff"],
        ))
        if render:
            outputs.append(plots.plot_rekey_grid(grid_rows, outdir / "rekey_grid.png"))

    outputs.append(_write_manifest(outdir, "rekey", {
        "mechanism": mechanism_name,
        "rnom": rnom,
        "payloads": payloads_text,
        "tq": tq,
        "grid": grid,
        "targets": targets,
        "plot": render,
    }, outputs))
    click.echo(f"wrote {', '.join(str(p) for p in outputs)}")


# ---------------------------------------------------------------------------
# padding


@main.command("padding")
@click.option("--blocks", default=None, help="padding block sizes (bytes)")
@click.option("--payload", "payloads_text", default=None)
@click.option("--out", default=None)
@click.option("--plot/--no-plot", "render", default=True)
def cmd_padding(blocks, payloads_text, out, render) -> None:
    """Record-padding inflation sweep (TLS 1.3)."""
    block_values = (_parse_int_list(blocks) if blocks
                    else list(DEFAULT_PADDING_BLOCKS))
    payloads = (_parse_int_list(payloads_text) if payloads_text
                else list(DEFAULT_PADDING_PAYLOADS))
    profile = default_profile(ProtocolId.TLS13)
    rows = []
    for block in block_values:
        for payload in payloads:
            spec = SessionSpec(
                protocol=ProtocolId.TLS13,
                payload=payload,
                padding_block=block,
                stream_reassembly=True,
            )
            rows.append(
                {
                    "payload": payload,
                    "padding_block": block,
                    "alpha": padded_session_alpha(spec, profile),
                }
            )
    outdir = _outdir(out)
    outputs = [_write_csv(outdir / "padding.csv", rows,
                          ["payload", "padding_block", "alpha"])]
    if render:
        outputs.append(plots.plot_padding(rows, outdir / "padding.png"))
    outputs.append(_write_manifest(outdir, "padding", {
        "blocks": block_values,
        "payloads": payloads,
        "plot": render,
    }, outputs))
    click.echo(f"wrote {', '.join(str(p) for p in outputs)}")


# ---------------------------------------------------------------------------
# generate / derive / verify


@main.command("generate")
@click.option("--protocol", "protocol_name", required=True)
@click.option("--payload", required=True, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--links", default=0, type=int, help="resumption links")
@click.option("--link-modes", default=None,
              help="comma-separated per-link modes: psk | psk-dhe")
@click.option("--zero-rtt", is_flag=True)
@click.option("--rekey-limit", default=0, type=int, help="SSH RekeyLimit bytes")
@click.option("--rotation-interval", default=0, type=int,
              help="TLS 1.3 PSK-DHE rotation interval bytes")
@click.option("--padding-block", default=0, type=int)
@click.option("--key-updates", default=0, type=int)
@click.option("--out", default=None)
def cmd_generate(protocol_name, payload, seed, links, link_modes, zero_rtt,
                 rekey_limit, rotation_interval, padding_block, key_updates,
                 out) -> None:
    """Write a synthetic capture bundle, oracle file, and ground truth."""
    outdir = _outdir(out)
    try:
        capture = generate_session(
            ProtocolId.parse(protocol_name),
            payload,
            seed=seed,
            resumption_links=links,
            link_modes=link_modes.split(",") if link_modes else None,
            zero_rtt=zero_rtt,
            rekey_limit=rekey_limit,
            rotation_interval=rotation_interval,
            padding_block=padding_block,
            key_updates=key_updates,
        )
    except (GenerateError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    paths = capture.save(outdir)
    outputs = list(paths.values())
    outputs.append(_write_manifest(outdir, "generate", {
        "protocol": protocol_name,
        "payload": payload,
        "seed": seed,
        "links": links,
        "link_modes": link_modes,
        "zero_rtt": zero_rtt,
        "rekey_limit": rekey_limit,
        "rotation_interval": rotation_interval,
        "padding_block": padding_block,
        "key_updates": key_updates,
    }, outputs))
    click.echo(f"wrote {', '.join(str(p) for p in outputs)}")


def _derive_links(bundles, oracle) -> list[ChainLink]:
    if len(bundles) > 1 and bundles[0].protocol == ProtocolId.TLS13:
        return derive_resumption_chain(bundles, oracle)
    links = []
    for bundle in bundles:
        try:
            links.append(ChainLink(bundle.session_id,
                                   derive_session(bundle, oracle)))
        except (DeriveError, KeyError) as exc:
            links.append(ChainLink(bundle.session_id, None, str(exc)))
    return links


@main.command("derive")
@click.option("--capture", "capture_path", required=True)
@click.option("--oracle", "oracle_path", required=True)
@click.option("--out", default=None)
def cmd_derive(capture_path, oracle_path, out) -> None:
    """Rederive every session secret from the capture plus oracle only."""
    outdir = _outdir(out)
    try:
        bundles = load_capture(capture_path)
        oracle = load_oracle(oracle_path)
    except (FormatError, OSError, json.JSONDecodeError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    links = _derive_links(bundles, oracle)

    keylog_lines: list[str] = []
    schedule_lines: list[str] = []
    statuses = []
    for link in links:
        if link.ok:
            keylog_lines.extend(link.schedule.keylog_lines())
            schedule_lines.extend(link.schedule.ssh_schedule_lines())
            statuses.append({"session_id": link.session_id, "ok": True,
                             "notes": link.schedule.notes})
        else:
            statuses.append({"session_id": link.session_id, "ok": False,
                             "error": link.error})
    outputs = []
    keylog_path = outdir / "derived_keylog.txt"
    keylog_path.write_text("".join(line + "\n" for line in keylog_lines))
    outputs.append(keylog_path)
    if schedule_lines:
        ssh_path = outdir / "derived_ssh_schedule.txt"
        ssh_path.write_text("".join(line + "\n" for line in schedule_lines))
        outputs.append(ssh_path)
    status_path = outdir / "derive_report.json"
    status_path.write_text(json.dumps({"sessions": statuses}, indent=1))
    outputs.append(status_path)
    outputs.append(_write_manifest(outdir, "derive", {
        "capture": str(capture_path), "oracle": str(oracle_path),
    }, outputs))
    for status in statuses:
        mark = "ok" if status["ok"] else f"FAILED: {status['error']}"
        click.echo(f"{status['session_id']}: {mark}")
    click.echo(f"wrote {', '.join(str(p) for p in outputs)}")
    if any(not s["ok"] for s in statuses):
        sys.exit(EXIT_MISMATCH)


@main.command("verify")
@click.option("--capture", "capture_path", required=True)
@click.option("--oracle", "oracle_path", required=True)
@click.option("--truth", "truth_path", required=True)
@click.option("--out", default=None)
def cmd_verify(capture_path, oracle_path, truth_path, out) -> None:
    """Rederive, compare against ground truth, and decrypt every record."""
    outdir = _outdir(out)
    try:
        bundles = load_capture(capture_path)
        oracle = load_oracle(oracle_path)
        truths = load_truth(truth_path)
    except (FormatError, OSError, json.JSONDecodeError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    links = _derive_links(bundles, oracle)

    reports = []
    all_ok = True
    for bundle, link in zip(bundles, links):
        truth = truths.get(bundle.session_id)
        if truth is None:
            click.echo(f"error: no ground truth for {bundle.session_id}", err=True)
            sys.exit(EXIT_INPUT)
        if not link.ok:
            all_ok = False
            reports.append({"session_id": bundle.session_id, "ok": False,
                            "error": link.error})
            click.echo(f"session {bundle.session_id}: DERIVATION FAILED "
                       f"({link.error})")
            continue
        report = verify_compromise(bundle, link.schedule, truth)
        all_ok = all_ok and report.ok
        reports.append({
            "session_id": report.session_id,
            "ok": report.ok,
            "secrets": [
                {"label": label, "match": match}
                for label, match in report.secret_matches
            ],
            "records_total": report.records_total,
            "records_decrypted": report.records_decrypted,
            "payload_client_match": report.payload_client_ok,
            "payload_server_match": report.payload_server_ok,
            "notes": report.notes,
        })
        click.echo("\n".join(report.lines()))

    report_path = outdir / "verify_report.json"
    report_path.write_text(json.dumps({"ok": all_ok, "sessions": reports}, indent=1))
    outputs = [report_path]
    outputs.append(_write_manifest(outdir, "verify", {
        "capture": str(capture_path), "oracle": str(oracle_path),
        "truth": str(truth_path),
    }, outputs))
    click.echo(f"wrote {', '.join(str(p) for p in outputs)}")
    if not all_ok:
        sys.exit(EXIT_MISMATCH)


# ---------------------------------------------------------------------------
# mosca, rerun


@main.command("mosca")
@click.option("-x", "--shelf-life", required=True, type=float,
              help="data shelf-life, years")
@click.option("-y", "--migration", required=True, type=float,
              help="migration time, years")
@click.option("-z", "--horizon", required=True, type=float,
              help="time until a cryptographically relevant quantum computer")
def cmd_mosca(shelf_life, migration, horizon) -> None:
    """Migration-urgency predicate: at risk iff x + y > z."""
    from .econ import MoscaInputs, mosca_at_risk

    at_risk = mosca_at_risk(MoscaInputs(shelf_life, migration, horizon))
    click.echo(
        f"x + y = {shelf_life + migration:g} vs z = {horizon:g}: "
        + ("AT RISK (x + y > z)" if at_risk else "inside the safe window")
    )


@main.command("rerun")
@click.argument("manifest_path")
@click.option("--out", default=None)
def cmd_rerun(manifest_path, out) -> None:
    """Replay a previous run from its manifest (bit-identical outputs)."""
    try:
        manifest = json.loads(Path(manifest_path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    command = manifest.get("command")
    params = manifest.get("params", {})
    outdir = out or str(Path(manifest_path).parent)
    argv = _manifest_to_argv(command, params, outdir)
    if argv is None:
        click.echo(f"error: cannot rerun command {command!r}", err=True)
        sys.exit(EXIT_INPUT)
    main.main(args=argv, standalone_mode=False)


def _manifest_to_argv(command: str, params: dict, outdir: str) -> list[str] | None:
    if command == "alpha":
        argv = ["alpha", "--out", outdir]
        if params.get("sessions"):
            argv += ["--sessions", params["sessions"]]
            argv += ["--plot" if params.get("plot", True) else "--no-plot"]
            return argv
        if len(params.get("protocols", [])) > 1:
            argv.append("--all-protocols")
        else:
            argv += ["--protocol", params["protocols"][0]]
        argv += ["--payload", ",".join(str(p) for p in params["payloads"])]
        argv += ["--reassembly" if params.get("reassembly") else "--no-reassembly"]
        if params.get("minimal"):
            argv.append("--minimal")
        argv += ["--padding-block", str(params.get("padding_block", 0))]
        if params.get("profiles"):
            argv += ["--profiles", params["profiles"]]
        argv += ["--plot" if params.get("plot", True) else "--no-plot"]
        return argv
    if command == "cost":
        argv = ["cost", "--out", outdir,
                "--table" if params.get("mode") == "table" else "--mc",
                "--seed", str(params.get("seed", 0)),
                "--draws", str(params.get("draws", 10000)),
                "--workers", str(params.get("workers", 1))]
        for key, flag in (("fractions", "--fractions"), ("scenario", "--scenario"),
                          ("horizons", "--horizons")):
            if params.get(key):
                argv += [flag, str(params[key])]
        if params.get("tape"):
            argv.append("--tape")
        argv += ["--plot" if params.get("plot", True) else "--no-plot"]
        return argv
    if command == "rekey":
        argv = ["rekey", "--out", outdir,
                "--ssh" if params.get("mechanism") == "ssh" else "--tls13",
                "--rnom", params["rnom"], "--payload", params["payloads"],
                "--tq", str(params.get("tq", 1.0))]
        if params.get("grid"):
            argv.append("--grid")
        if params.get("targets"):
            argv += ["--targets", params["targets"]]
        argv += ["--plot" if params.get("plot", True) else "--no-plot"]
        return argv
    if command == "padding":
        argv = ["padding", "--out", outdir,
                "--blocks", ",".join(str(b) for b in params["blocks"]),
                "--payload", ",".join(str(p) for p in params["payloads"])]
        argv += ["--plot" if params.get("plot", True) else "--no-plot"]
        return argv
    if command == "generate":
        argv = ["generate", "--out", outdir,
                "--protocol", params["protocol"],
                "--payload", str(params["payload"]),
                "--seed", str(params.get("seed", 0)),
                "--links", str(params.get("links", 0)),
                "--rekey-limit", str(params.get("rekey_limit", 0)),
                "--rotation-interval", str(params.get("rotation_interval", 0)),
                "--padding-block", str(params.get("padding_block", 0)),
                "--key-updates", str(params.get("key_updates", 0))]
        if params.get("link_modes"):
            argv += ["--link-modes", params["link_modes"]]
        if params.get("zero_rtt"):
            argv.append("--zero-rtt")
        return argv
    if command in ("derive", "verify"):
        argv = [command, "--out", outdir,
                "--capture", params["capture"], "--oracle", params["oracle"]]
        if command == "verify":
            argv += ["--truth", params["truth"]]
        return argv
    return None


if __name__ == "__main__":
    main()
