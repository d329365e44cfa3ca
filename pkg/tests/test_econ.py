import json
import math
from dataclasses import replace

import numpy as np
import pytest

from hndlkit.econ import (
    CostScenario,
    MoscaInputs,
    ScenarioError,
    annual_cost_mc,
    cumulative_cost,
    cumulative_cost_mc,
    fraction_sweep,
    harvest_cost_table,
    mosca_at_risk,
)

# Independent decimal unit table for the audit checks.
TB = 1e12
EB = 1e18
ZB = 1e21
PB = 1e15


class TestMosca:
    def test_healthcare_vs_quantum_window(self):
        assert mosca_at_risk(MoscaInputs(25, 10, 15)) is True

    def test_no_shelf_life(self):
        assert mosca_at_risk(MoscaInputs(0, 0, 1)) is False

    def test_equality_is_not_excess(self):
        assert mosca_at_risk(MoscaInputs(7, 5, 12)) is False

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            MoscaInputs(-1, 0, 0)


class TestHarvestTable:
    def test_canonical_rows_to_two_significant_figures(self):
        rows = harvest_cost_table([0.01, 0.10, 1.00])

        def sig2(x):
            return float(f"{x:.2g}")

        assert sig2(rows[0]["daily_ingest_pb"]) == 240  # 241 PB/day
        assert round(rows[0]["daily_ingest_pb"]) == 241
        assert sig2(rows[0]["annual_volume_eb"]) == 88
        assert sig2(rows[0]["annual_cost_usd"]) == 1.1e9
        assert round(rows[1]["daily_ingest_pb"]) == 2411
        assert sig2(rows[1]["annual_volume_eb"]) == 880
        assert sig2(rows[1]["annual_cost_usd"]) == 1.1e10
        assert round(rows[2]["daily_ingest_pb"]) == 24110
        assert sig2(rows[2]["annual_volume_eb"]) == 8800
        assert sig2(rows[2]["annual_cost_usd"]) == 1.1e11

    def test_zero_fraction(self):
        row = harvest_cost_table([0.0])[0]
        assert row["daily_ingest_pb"] == row["annual_volume_eb"] == 0
        assert row["annual_cost_usd"] == 0

    def test_unit_audit(self):
        # reconvert through the independent unit table
        row = harvest_cost_table([0.01])[0]
        harvested_bytes = 0.01 * 8.8 * ZB
        assert row["annual_volume_eb"] == pytest.approx(harvested_bytes / EB)
        assert row["daily_ingest_pb"] == pytest.approx(harvested_bytes / 365 / PB)
        assert row["annual_cost_usd"] == pytest.approx(
            harvested_bytes / TB * 12.16
        )

    def test_linearity_in_fraction_and_volume(self):
        low = harvest_cost_table([0.001])[0]["annual_cost_usd"]
        high = harvest_cost_table([0.01])[0]["annual_cost_usd"]
        assert high == pytest.approx(10 * low)
        scaled = harvest_cost_table([0.01], annual_volume=2 * 8.8e21)[0]
        assert scaled["annual_cost_usd"] == pytest.approx(2 * high)


class TestAnnualMc:
    def test_median_scale(self):
        dist = annual_cost_mc(CostScenario(harvest_fraction=0.01, rng_seed=3))
        assert 0.8e9 <= dist.median <= 1.6e9

    def test_percentile_ordering(self):
        dist = annual_cost_mc(CostScenario(harvest_fraction=0.10, rng_seed=4))
        assert dist.p5 <= dist.p25 <= dist.median <= dist.p75 <= dist.p95

    def test_degenerate_distributions_collapse_to_table(self):
        # zero spread, vanishing payload dispersion, huge payloads: the
        # distribution collapses to a point at f * V * alpha_inf * c; the
        # deterministic table's alpha ~= 1 bulk assumption holds to the
        # framing asymptote (0.13% for the bulk profile)
        scenario = CostScenario(
            harvest_fraction=0.01,
            unit_cost_spread=0.0,
            payload_median=1e15,
            payload_sigma_ln=1e-9,
            rng_seed=5,
            draws=500,
        )
        dist = annual_cost_mc(scenario, keep_samples=True)
        assert np.ptp(dist.samples) == pytest.approx(0.0, abs=1.0)
        expected = 0.01 * 8.8e9 * 12.16
        assert dist.median == pytest.approx(expected * (1 + 22 / 16384), rel=1e-6)
        assert dist.median == pytest.approx(expected, rel=2e-3)

    def test_seed_determinism_and_worker_independence(self):
        scenario = CostScenario(harvest_fraction=0.01, rng_seed=11, draws=4000)
        a = annual_cost_mc(scenario, keep_samples=True)
        b = annual_cost_mc(scenario, keep_samples=True)
        c = annual_cost_mc(scenario, workers=5, keep_samples=True)
        assert np.array_equal(a.samples, b.samples)
        assert np.array_equal(a.samples, c.samples)

    def test_linear_in_fraction(self):
        one = annual_cost_mc(CostScenario(harvest_fraction=0.01, rng_seed=6))
        ten = annual_cost_mc(CostScenario(harvest_fraction=0.10, rng_seed=6))
        assert ten.median == pytest.approx(10 * one.median, rel=1e-12)

    def test_storage_cost_uncertainty_dominates_variance(self):
        # hold unit cost fixed: the remaining (payload-driven) spread is
        # over 10x narrower than the cost-driven spread
        base = CostScenario(harvest_fraction=0.01, rng_seed=7)
        cost_fixed = replace(base, unit_cost_spread=0.0)
        payload_fixed = replace(base, payload_sigma_ln=1e-9)
        iqr_payload_only = _iqr(annual_cost_mc(cost_fixed))
        iqr_cost_only = _iqr(annual_cost_mc(payload_fixed))
        assert iqr_cost_only > 10 * iqr_payload_only


def _iqr(dist):
    return dist.p75 - dist.p25


class TestCumulative:
    def test_single_year(self):
        assert cumulative_cost(1e12, 10.0, 0.5, 0.5, 1) == 10.0

    def test_triangular_sum(self):
        # gamma = delta = 0 over three years: weights 3 + 2 + 1
        assert cumulative_cost(1e12, 10.0, 0.0, 0.0, 3) == 60.0

    def test_ten_year_scale(self):
        value = cumulative_cost(0.01 * 8.8e21, 12.16, 0.25, 0.05, 10)
        assert 1e10 <= value <= 5e11
        assert math.floor(math.log10(value)) in (10, 11)

    def test_strictly_increasing_in_horizon_growth_and_price(self):
        base = cumulative_cost(1e21, 12.16, 0.25, 0.05, 10)
        assert cumulative_cost(1e21, 12.16, 0.25, 0.05, 11) > base
        assert cumulative_cost(1e21, 12.16, 0.30, 0.05, 10) > base
        # a price *increase* (more negative decline) raises the bill
        assert cumulative_cost(1e21, 12.16, 0.25, -0.05, 10) > base

    def test_mc_bands(self):
        scenario = CostScenario(harvest_fraction=0.01, rng_seed=8, draws=4000)
        results = cumulative_cost_mc(scenario)
        assert set(results) == {5, 10, 15}
        ten = results[10]
        assert ten.p5 <= ten.p25 <= ten.median <= ten.p75 <= ten.p95
        assert math.floor(math.log10(ten.median)) in (10, 11)

    def test_mc_zero_width_ranges_collapse(self):
        scenario = CostScenario(
            harvest_fraction=0.01,
            growth=(0.25, 0.25),
            annual_price_change=(-0.05, -0.05),
            unit_cost_spread=0.0,
            rng_seed=9,
            draws=200,
        )
        dist = cumulative_cost_mc(scenario, horizons=(10,))[10]
        expected = cumulative_cost(0.01 * 8.8e21, 12.16, 0.25, 0.05, 10)
        assert dist.median == pytest.approx(expected, rel=1e-9)
        assert dist.p5 == pytest.approx(dist.p95, rel=1e-9)

    def test_mc_determinism_across_workers(self):
        scenario = CostScenario(harvest_fraction=0.01, rng_seed=10, draws=3000)
        serial = cumulative_cost_mc(scenario, keep_samples=True)
        threaded = cumulative_cost_mc(scenario, workers=4, keep_samples=True)
        for horizon in (5, 10, 15):
            assert np.array_equal(serial[horizon].samples,
                                  threaded[horizon].samples)


class TestScenario:
    def test_sign_convention_exposed_both_ways(self):
        scenario = CostScenario(harvest_fraction=0.01)
        assert scenario.annual_price_change == (-0.20, 0.10)
        assert scenario.price_decline_range == (-0.10, 0.20)

    def test_tape_preset(self):
        scenario = CostScenario.tape_capex(0.01)
        assert scenario.unit_cost == 5.25
        assert scenario.unit_cost_spread == 0.0
        assert scenario.annual_price_change == (0.0, 0.0)

    def test_json_round_trip(self, tmp_path):
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps({
            "harvest_fraction": 0.02,
            "unit_cost": 10.0,
            "growth": [0.1, 0.2],
        }))
        scenario = CostScenario.from_json(path)
        assert scenario.harvest_fraction == 0.02
        assert scenario.growth == (0.1, 0.2)

    def test_json_error_names_field(self, tmp_path):
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps({"harvest_fraction": 0.02, "bogus": 1}))
        with pytest.raises(ScenarioError, match="bogus"):
            CostScenario.from_json(path)
        path.write_text(json.dumps({"harvest_fraction": 0.02, "growth": [1]}))
        with pytest.raises(ScenarioError, match="growth"):
            CostScenario.from_json(path)

    def test_validation(self):
        with pytest.raises(ValueError):
            CostScenario(harvest_fraction=1.5)
        with pytest.raises(ValueError):
            CostScenario(harvest_fraction=0.5, draws=0)
        with pytest.raises(ValueError):
            CostScenario(harvest_fraction=0.5, retention_years=0)


def test_fraction_sweep_rows():
    scenario = CostScenario(harvest_fraction=0.01, rng_seed=12, draws=500)
    rows = fraction_sweep(scenario, fractions=(0.001, 0.01), horizons=(5,))
    kinds = {(r["fraction"], r["kind"], r["horizon_years"]) for r in rows}
    assert kinds == {
        (0.001, "annual", 1), (0.001, "cumulative", 5),
        (0.01, "annual", 1), (0.01, "cumulative", 5),
    }
