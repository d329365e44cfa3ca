"""Harvest economics: cost tables, the migration-risk predicate, and
Monte Carlo propagation of storage-cost uncertainty.

Units are decimal (SI) throughout this module: 1 TB = 1e12 B, 1 EB =
1e6 TB, 1 ZB = 1e9 TB.  The default inputs model global end-user traffic
of 8.8 ZB/year against a fully-loaded cloud archival rate of
$12.16/TB-year (+/-30%), with session payloads log-normal around a 2 MB
median.

Sign convention: the cumulative formula compounds (1 - delta)^i with
delta the annual price *decline*.  Scenarios store the signed annual
price *change* range (change = -delta); the default (-0.20, +0.10)
spans a 20% annual decline through a 10% increase.  Output headers print
both conventions.

Randomness comes from numpy's counter-based Philox generator keyed by
the scenario seed; each operation draws its inputs as whole arrays in a
documented order (payload then unit cost for annual; growth, price
change, then unit cost for cumulative), so results are identical across
runs and across worker counts.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .profiles import ProtocolId, ProtocolProfile, default_profile

BYTES_PER_TB = 1e12
TB_PER_EB = 1e6
TB_PER_ZB = 1e9

# Fully-loaded cloud archival rate and the LTO tape raw-media floor.
CLOUD_COST_PER_TB_YEAR = 12.16
TAPE_CAPEX_PER_TB = 5.25

DEFAULT_ANNUAL_VOLUME = 8.8e21          # bytes/year (8.8 ZB, decimal)
DEFAULT_HORIZONS = (5, 10, 15)

# Log-spaced harvest fractions, 0.1% .. 100%.
DEFAULT_FRACTION_GRID = tuple(
    float(f) for f in np.logspace(-3, 0, 16)
)


@dataclass(frozen=True)
class MoscaInputs:
    shelf_life_years: float        # x
    migration_years: float         # y
    quantum_horizon_years: float   # z

    def __post_init__(self) -> None:
        if min(self.shelf_life_years, self.migration_years,
               self.quantum_horizon_years) < 0:
            raise ValueError("all horizons must be non-negative")


def mosca_at_risk(inputs: MoscaInputs) -> bool:
    """True iff x + y > z (strict): data outlives the safe window."""
    return inputs.shelf_life_years + inputs.migration_years > (
        inputs.quantum_horizon_years
    )


@dataclass(frozen=True)
class CostScenario:
    """Economic inputs for the Monte Carlo cost models."""

    harvest_fraction: float
    annual_volume: float = DEFAULT_ANNUAL_VOLUME      # bytes/year
    unit_cost: float = CLOUD_COST_PER_TB_YEAR         # USD per TB-year
    unit_cost_spread: float = 0.30                    # +/- ratio, uniform
    payload_median: float = 2e6                       # bytes
    payload_sigma_ln: float = 1.5
    growth: tuple[float, float] = (0.20, 0.30)        # gamma range, /year
    annual_price_change: tuple[float, float] = (-0.20, 0.10)  # signed change
    retention_years: int = 10                         # T_r
    draws: int = 10000                                # N
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.harvest_fraction <= 1.0:
            raise ValueError("harvest_fraction must lie in [0, 1]")
        if self.annual_volume <= 0:
            raise ValueError("annual_volume must be positive")
        if self.unit_cost <= 0:
            raise ValueError("unit_cost must be positive")
        if self.unit_cost_spread < 0 or self.unit_cost_spread >= 1:
            raise ValueError("unit_cost_spread must lie in [0, 1)")
        if self.retention_years < 1:
            raise ValueError("retention_years must be at least 1")
        if self.draws < 1:
            raise ValueError("draws must be at least 1")
        for name in ("growth", "annual_price_change"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} range is inverted: ({lo}, {hi})")

    @property
    def price_decline_range(self) -> tuple[float, float]:
        """The (1-delta) convention: decline = -change."""
        lo, hi = self.annual_price_change
        return (-hi, -lo)

    @classmethod
    def tape_capex(cls, harvest_fraction: float, **overrides) -> "CostScenario":
        """Preset: sunk LTO media CapEx, no spread, flat prices."""
        params = dict(
            harvest_fraction=harvest_fraction,
            unit_cost=TAPE_CAPEX_PER_TB,
            unit_cost_spread=0.0,
            annual_price_change=(0.0, 0.0),
        )
        params.update(overrides)
        return cls(**params)

    @classmethod
    def from_json(cls, path: str | Path) -> "CostScenario":
        raw = json.loads(Path(path).read_text())
        if not isinstance(raw, dict):
            raise ScenarioError("$", "scenario file must hold a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        kwargs = {}
        for key, value in raw.items():
            if key not in known:
                raise ScenarioError(key, "unknown scenario field")
            if key in ("growth", "annual_price_change"):
                if (not isinstance(value, (list, tuple)) or len(value) != 2):
                    raise ScenarioError(key, "expected a [low, high] pair")
                value = (float(value[0]), float(value[1]))
            kwargs[key] = value
        try:
            return cls(**kwargs)
        except (TypeError, ValueError) as exc:
            raise ScenarioError("$", str(exc)) from exc


class ScenarioError(ValueError):
    """Malformed scenario input; carries the offending field path."""

    def __init__(self, field_path: str, message: str):
        self.field_path = field_path
        super().__init__(f"scenario field {field_path!r}: {message}")


@dataclass(frozen=True)
class CostDistribution:
    median: float
    p5: float
    p25: float
    p75: float
    p95: float
    draws: int
    samples: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        ordered = (self.p5, self.p25, self.median, self.p75, self.p95)
        if any(a > b for a, b in zip(ordered, ordered[1:])):
            raise ValueError(f"percentiles out of order: {ordered}")

    @classmethod
    def from_samples(cls, samples: np.ndarray, keep: bool = False):
        p5, p25, p50, p75, p95 = np.percentile(samples, [5, 25, 50, 75, 95])
        return cls(
            median=float(p50), p5=float(p5), p25=float(p25),
            p75=float(p75), p95=float(p95), draws=len(samples),
            samples=samples if keep else None,
        )


def harvest_cost_table(
    fractions: list[float],
    annual_volume: float = DEFAULT_ANNUAL_VOLUME,
    unit_cost: float = CLOUD_COST_PER_TB_YEAR,
) -> list[dict]:
    """Daily ingest (PB), annual volume (EB), annual cost (USD) per fraction.

    Bulk traffic is charged at alpha ~= 1: cost is raw ciphertext volume
    times the unit rate.
    """
    if annual_volume <= 0 or unit_cost <= 0:
        raise ValueError("volume and unit cost must be positive")
    rows = []
    for f in fractions:
        if not 0.0 <= f <= 1.0:
            raise ValueError(f"harvest fraction {f} outside [0, 1]")
        harvested = f * annual_volume
        rows.append(
            {
                "fraction": f,
                "daily_ingest_pb": harvested / 365.0 / 1e15,
                "annual_volume_eb": harvested / 1e18,
                "annual_cost_usd": harvested / BYTES_PER_TB * unit_cost,
            }
        )
    return rows


def _bulk_alpha(payloads: np.ndarray, profile: ProtocolProfile) -> np.ndarray:
    """Vectorized alpha under stream reassembly for the bulk-traffic profile."""
    records = np.ceil(payloads / profile.max_record_payload)
    static = profile.handshake_bytes + profile.session_setup_bytes
    return (static + payloads + records * profile.record_overhead) / payloads


def _chunked(samples_fn, n: int, workers: int) -> np.ndarray:
    """Evaluate ``samples_fn(lo, hi)`` over [0, n) in ``workers`` chunks.

    Chunks reassemble in index order, so the result is identical for any
    worker count; used to honor the serial==parallel determinism contract.
    """
    if workers <= 1:
        return samples_fn(0, n)
    bounds = np.linspace(0, n, workers + 1, dtype=int)
    out = [None] * workers
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {
            pool.submit(samples_fn, bounds[i], bounds[i + 1]): i
            for i in range(workers)
        }
        for future, index in futures.items():
            out[index] = future.result()
    return np.concatenate(out)


def annual_cost_mc(
    scenario: CostScenario,
    profile: ProtocolProfile | None = None,
    *,
    workers: int = 1,
    keep_samples: bool = False,
) -> CostDistribution:
    """One-year harvest cost C_1 = f * V * alpha * c under input uncertainty.

    Per draw: payload ~ lognormal(median, sigma_ln) feeds the overhead
    ratio alpha (TLS 1.3 bulk profile with stream reassembly unless
    another profile is supplied); unit cost ~ uniform within the spread.
    """
    profile = profile or default_profile(ProtocolId.TLS13)
    rng = np.random.Generator(np.random.Philox(key=scenario.rng_seed))
    n = scenario.draws
    payloads = rng.lognormal(
        mean=math.log(scenario.payload_median),
        sigma=scenario.payload_sigma_ln,
        size=n,
    )
    costs = rng.uniform(
        scenario.unit_cost * (1 - scenario.unit_cost_spread),
        scenario.unit_cost * (1 + scenario.unit_cost_spread),
        size=n,
    )
    volume_tb = scenario.harvest_fraction * scenario.annual_volume / BYTES_PER_TB

    def evaluate(lo: int, hi: int) -> np.ndarray:
        alpha = _bulk_alpha(payloads[lo:hi], profile)
        return volume_tb * alpha * costs[lo:hi]

    samples = _chunked(evaluate, n, workers)
    return CostDistribution.from_samples(samples, keep=keep_samples)


def cumulative_cost(
    initial_volume: float,
    initial_unit_cost: float,
    growth: float,
    price_decline: float,
    retention_years: int,
) -> float:
    """Multi-year retention bill with the remaining-obligation weights.

    sum_{i=0}^{T_r-1} (T_r - i) * V0 (1+gamma)^i * C0 (1-delta)^i:
    data harvested in year i must be held for the T_r - i years left
    until Q-Day, at year-i prices.  ``initial_volume`` is bytes/year.
    """
    if retention_years < 1:
        raise ValueError("retention must span at least one year")
    volume_tb = initial_volume / BYTES_PER_TB
    total = 0.0
    for i in range(retention_years):
        total += (
            (retention_years - i)
            * volume_tb * (1 + growth) ** i
            * initial_unit_cost * (1 - price_decline) ** i
        )
    return total


def cumulative_cost_mc(
    scenario: CostScenario,
    horizons: tuple[int, ...] = DEFAULT_HORIZONS,
    *,
    workers: int = 1,
    keep_samples: bool = False,
) -> dict[int, CostDistribution]:
    """Percentile bands of the cumulative bill per retention horizon.

    Per draw: growth and price change uniform over their scenario ranges,
    unit cost as in the annual model; the harvested volume is charged at
    alpha ~= 1 (bulk).  Deterministic under a fixed seed.
    """
    rng = np.random.Generator(np.random.Philox(key=scenario.rng_seed))
    n = scenario.draws
    growth = rng.uniform(*scenario.growth, size=n)
    change = rng.uniform(*scenario.annual_price_change, size=n)
    decline = -change
    costs = rng.uniform(
        scenario.unit_cost * (1 - scenario.unit_cost_spread),
        scenario.unit_cost * (1 + scenario.unit_cost_spread),
        size=n,
    )
    volume_tb = scenario.harvest_fraction * scenario.annual_volume / BYTES_PER_TB

    results: dict[int, CostDistribution] = {}
    for horizon in horizons:
        if horizon < 1:
            raise ValueError("retention must span at least one year")
        years = np.arange(horizon)[:, None]

        def evaluate(lo: int, hi: int, years=years, horizon=horizon) -> np.ndarray:
            compound = (1 + growth[None, lo:hi]) ** years
            repriced = (1 - decline[None, lo:hi]) ** years
            weights = horizon - years
            factor = (weights * compound * repriced).sum(axis=0)
            return volume_tb * costs[lo:hi] * factor

        samples = _chunked(evaluate, n, workers)
        results[horizon] = CostDistribution.from_samples(samples, keep=keep_samples)
    return results


def fraction_sweep(
    base: CostScenario,
    fractions: tuple[float, ...] = DEFAULT_FRACTION_GRID,
    horizons: tuple[int, ...] = DEFAULT_HORIZONS,
    *,
    workers: int = 1,
) -> list[dict]:
    """Annual + cumulative percentile bands per harvest fraction (CSV rows)."""
    rows = []
    for f in fractions:
        scenario = replace(base, harvest_fraction=f)
        annual = annual_cost_mc(scenario, workers=workers)
        rows.append(_band_row(f, "annual", 1, annual))
        for horizon, dist in cumulative_cost_mc(
            scenario, horizons, workers=workers
        ).items():
            rows.append(_band_row(f, "cumulative", horizon, dist))
    return rows


def _band_row(fraction: float, kind: str, horizon: int, dist: CostDistribution) -> dict:
    return {
        "fraction": fraction,
        "kind": kind,
        "horizon_years": horizon,
        "p5": dist.p5,
        "p25": dist.p25,
        "median": dist.median,
        "p75": dist.p75,
        "p95": dist.p95,
    }
