"""Figure rendering for the CLI report paths.

Every report command drops a PNG next to its CSV.  Rendering is
headless (Agg) and keeps fixed metadata so repeated runs of the same
command produce identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_SAVE_KWARGS = {"dpi": 120, "metadata": {"Software": "hndlkit"}}


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)
    return path


def plot_alpha(rows: list[dict], path: Path) -> Path:
    """Overhead ratio vs payload, one line per protocol."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    by_protocol: dict[str, list[dict]] = {}
    for row in rows:
        by_protocol.setdefault(row["protocol"], []).append(row)
    for protocol, series in sorted(by_protocol.items()):
        series = sorted(series, key=lambda r: r["payload"])
        ax.loglog(
            [r["payload"] for r in series],
            [r["alpha"] for r in series],
            marker="o", markersize=3.5, label=protocol,
        )
    ax.set_xlabel("session payload P (B)")
    ax.set_ylabel("overhead ratio alpha")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    return _save(fig, path)


def plot_cost_bands(rows: list[dict], path: Path) -> Path:
    """Median cost with 5-95 and 25-75 percentile bands vs fraction."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    kinds = sorted({(r["kind"], r["horizon_years"]) for r in rows})
    colors = plt.cm.viridis(np.linspace(0.15, 0.85, max(len(kinds), 2)))
    for color, (kind, horizon) in zip(colors, kinds):
        series = sorted(
            (r for r in rows if (r["kind"], r["horizon_years"]) == (kind, horizon)),
            key=lambda r: r["fraction"],
        )
        f = [r["fraction"] for r in series]
        label = "annual" if kind == "annual" else f"cumulative {horizon} y"
        ax.fill_between(f, [r["p5"] for r in series], [r["p95"] for r in series],
                        color=color, alpha=0.15)
        ax.fill_between(f, [r["p25"] for r in series], [r["p75"] for r in series],
                        color=color, alpha=0.3)
        ax.loglog(f, [r["median"] for r in series], color=color, label=label)
    ax.set_xlabel("harvest fraction f")
    ax.set_ylabel("storage cost (USD)")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    return _save(fig, path)


def plot_rekey(rows: list[dict], path: Path) -> Path:
    """Instance multiplier E vs payload, one line per threshold."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    thresholds = sorted({r["nominal_threshold"] for r in rows})
    for r_nom in thresholds:
        series = sorted((r for r in rows if r["nominal_threshold"] == r_nom),
                        key=lambda r: r["payload"])
        ax.loglog([r["payload"] for r in series],
                  [r["instances"] for r in series],
                  marker="s", markersize=3.5, label=f"R_nom={r_nom}")
    ax.set_xlabel("session payload P (B)")
    ax.set_ylabel("key-recovery instances E")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    return _save(fig, path)


def plot_rekey_grid(rows: list[dict], path: Path) -> Path:
    """E_eff heatmap over (target bytes L, threshold R)."""
    targets = sorted({r["target_bytes"] for r in rows})
    thresholds = sorted({r["threshold"] for r in rows})
    grid = np.zeros((len(thresholds), len(targets)))
    for row in rows:
        i = thresholds.index(row["threshold"])
        j = targets.index(row["target_bytes"])
        grid[i, j] = row["e_eff"]
    fig, ax = plt.subplots(figsize=(7, 5))
    mesh = ax.pcolormesh(targets, thresholds, np.log10(grid),
                         shading="nearest", cmap="magma")
    ax.plot(targets, targets, color="white", linestyle="--",
            linewidth=1, label="R = L")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("target prefix L (B)")
    ax.set_ylabel("rekey threshold R (B)")
    ax.set_ylim(min(thresholds), max(thresholds))
    fig.colorbar(mesh, ax=ax, label="log10 E_eff")
    ax.legend(loc="upper left")
    return _save(fig, path)


def plot_padding(rows: list[dict], path: Path) -> Path:
    """Padded alpha vs payload, one line per block size."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    blocks = sorted({r["padding_block"] for r in rows})
    for block in blocks:
        series = sorted((r for r in rows if r["padding_block"] == block),
                        key=lambda r: r["payload"])
        ax.loglog([r["payload"] for r in series],
                  [r["alpha"] for r in series],
                  marker="o", markersize=3.5,
                  label=f"b={block}" if block else "no padding")
    ax.set_xlabel("session payload P (B)")
    ax.set_ylabel("overhead ratio alpha")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    return _save(fig, path)
