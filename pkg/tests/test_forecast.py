import numpy as np
import pytest

from htsbench.errors import SingularReconciliationError
from htsbench.forecast import (ForecasterSpec, MintConfig, coherence_deviation,
                               ets_sse, fit_predict, fit_with_residuals,
                               method_label, reconcile_bu, reconcile_mint,
                               run_method, write_forecast_csv)
from htsbench.hts import SummingStructure, TimeSeries, check_coherence

from conftest import build_dataset


def three_node_structure():
    # minimal hierarchy: a top node over two bottom series, S = [[1,1],[1,0],[0,1]]
    return SummingStructure(
        nodes=("total", "b1", "b2"), bottom_ids=("b1", "b2"),
        members={"total": ("b1", "b2"), "b1": ("b1",), "b2": ("b2",)})


class TestBaseForecasters:
    def test_naive(self):
        ts = TimeSeries("x", [1.0, 2.0, 3.0])
        assert np.array_equal(fit_predict(ts, ForecasterSpec("naive"), 2),
                              [3.0, 3.0])

    def test_seasonal_naive(self):
        ts = TimeSeries("x", [1.0, 2.0, 3.0, 4.0, 1.0, 2.0, 3.0, 4.0],
                        seasonal_period=4)
        assert np.array_equal(fit_predict(ts, ForecasterSpec("snaive"), 4),
                              [1.0, 2.0, 3.0, 4.0])
        assert np.array_equal(fit_predict(ts, ForecasterSpec("snaive"), 6),
                              [1.0, 2.0, 3.0, 4.0, 1.0, 2.0])

    def test_ets_on_noiseless_ramp(self):
        ramp = TimeSeries("ramp", np.arange(50, dtype=float), seasonal_period=1)
        forecast = fit_predict(ramp, ForecasterSpec("ets"), 5)
        assert np.max(np.abs(forecast - np.arange(50, 55))) < 0.5

    def test_ets_seasonal_recovers_pattern(self):
        t = np.arange(72, dtype=float)
        z = 10 + 0.2 * t + 5 * np.sin(2 * np.pi * t / 12)
        ts = TimeSeries("s", z, seasonal_period=12)
        forecast = fit_predict(ts, ForecasterSpec("ets"), 12)
        truth = 10 + 0.2 * (72 + np.arange(12)) + 5 * np.sin(2 * np.pi * (72 + np.arange(12)) / 12)
        assert np.max(np.abs(forecast - truth)) < 1.0

    def test_ets_beats_fixed_grid(self):
        rng = np.random.default_rng(21)
        grid = (0.1, 0.5, 0.9)
        for seed in range(3):
            t = np.arange(60, dtype=float)
            z = (20 + rng.normal(0, 0.1) * t
                 + 6 * np.sin(2 * np.pi * t / 12) + rng.normal(0, 1.0, 60))
            ts = TimeSeries(f"s{seed}", z, seasonal_period=12)
            forecast, residuals = fit_with_residuals(ts, ForecasterSpec("ets"), 4)
            fitted_sse = float(np.sum(residuals ** 2))
            grid_best = min(ets_sse(z, 12, a, b, g)
                            for a in grid for b in grid for g in grid)
            assert fitted_sse <= grid_best + 1e-9

    def test_ar_on_linear_ramp(self):
        # z_t = z_{t-1} + 1 exactly, so least squares recovers the recursion.
        ramp = TimeSeries("ramp", np.arange(30, dtype=float), seasonal_period=1)
        forecast = fit_predict(ramp, ForecasterSpec("ar", order=1), 4)
        assert np.allclose(forecast, [30.0, 31.0, 32.0, 33.0], atol=1e-8)

    def test_translation_consistency_exact(self):
        rng = np.random.default_rng(4)
        z = rng.normal(10.0, 2.0, 24)
        for kind, period in (("naive", 1), ("snaive", 4)):
            ts = TimeSeries("x", z, seasonal_period=period)
            shifted = TimeSeries("x", z + 17.5, seasonal_period=period)
            spec = ForecasterSpec(kind)
            assert np.array_equal(fit_predict(shifted, spec, 5),
                                  fit_predict(ts, spec, 5) + 17.5)

    def test_too_short_names_minimum(self):
        ts = TimeSeries("x", np.arange(10, dtype=float), seasonal_period=12)
        with pytest.raises(ValueError, match="24"):
            fit_predict(ts, ForecasterSpec("ets"), 2)

    def test_residual_lengths(self):
        z = np.arange(24, dtype=float)
        ts = TimeSeries("x", z, seasonal_period=4)
        for kind, expected in (("naive", 23), ("snaive", 20), ("ets", 20)):
            _, residuals = fit_with_residuals(ts, ForecasterSpec(kind), 2)
            assert residuals.size == expected

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            ForecasterSpec("arima")
        with pytest.raises(ValueError):
            ForecasterSpec("ar", order=0)
        with pytest.raises(ValueError):
            MintConfig(covariance="magic")
        with pytest.raises(ValueError):
            MintConfig(shrinkage_intensity=1.5)


class TestBottomUp:
    def test_sums_members(self):
        structure = three_node_structure()
        out = reconcile_bu({"b1": np.array([4.0]), "b2": np.array([4.0])}, structure)
        assert np.array_equal(out["total"], [8.0])

    def test_discards_aggregate_base(self):
        structure = three_node_structure()
        out = reconcile_bu({"total": np.array([999.0]),
                            "b1": np.array([4.0]), "b2": np.array([4.0])}, structure)
        assert np.array_equal(out["total"], [8.0])

    def test_missing_bottom_node_errors(self):
        structure = three_node_structure()
        with pytest.raises(ValueError, match="b2"):
            reconcile_bu({"b1": np.array([4.0])}, structure)

    def test_coherent_by_construction(self, seasonal_dataset):
        run = run_method(seasonal_dataset, ForecasterSpec("snaive"),
                         "bottom_up", 6)
        assert coherence_deviation(run, seasonal_dataset.structure) == 0.0


class TestMint:
    def test_identity_closed_form(self):
        structure = three_node_structure()
        base = {"total": np.array([10.0]), "b1": np.array([4.0]),
                "b2": np.array([4.0])}
        out = reconcile_mint(base, structure, None, MintConfig(covariance="identity"))
        assert out["b1"][0] == pytest.approx(14.0 / 3.0, abs=1e-12)
        assert out["b2"][0] == pytest.approx(14.0 / 3.0, abs=1e-12)
        assert out["total"][0] == pytest.approx(28.0 / 3.0, abs=1e-12)

    def test_projection_fixes_coherent_points(self):
        structure = three_node_structure()
        base = {"b1": np.array([3.0, 1.0]), "b2": np.array([5.0, 2.0]),
                "total": np.array([8.0, 3.0])}
        out = reconcile_mint(base, structure, None, MintConfig(covariance="identity"))
        for node in base:
            assert np.allclose(out[node], base[node], atol=1e-9)

    def test_projection_idempotent(self, seasonal_dataset):
        run = run_method(seasonal_dataset, ForecasterSpec("ets"), "mint", 6)
        again = reconcile_mint(run.forecasts, seasonal_dataset.structure, None,
                               MintConfig(covariance="identity"))
        for node in run.forecasts:
            assert np.allclose(again[node], run.forecasts[node], atol=1e-9)

    def test_matches_ols_closed_form(self):
        structure = three_node_structure()
        s = structure.matrix
        rng = np.random.default_rng(8)
        y = rng.normal(size=(3, 4))
        base = {node: y[i] for i, node in enumerate(structure.nodes)}
        out = reconcile_mint(base, structure, None, MintConfig(covariance="identity"))
        expected = np.linalg.inv(s.T @ s) @ s.T @ y
        assert np.max(np.abs(out["b1"] - expected[0])) < 1e-12
        assert np.max(np.abs(out["b2"] - expected[1])) < 1e-12

    def test_sample_covariances(self, seasonal_dataset):
        for covariance in ("sample_diagonal", "shrinkage"):
            run = run_method(seasonal_dataset, ForecasterSpec("ets"), "mint", 6,
                             MintConfig(covariance=covariance))
            assert coherence_deviation(run, seasonal_dataset.structure) < 1e-9

    def test_missing_residuals_error(self):
        structure = three_node_structure()
        base = {"total": np.array([1.0]), "b1": np.array([0.5]),
                "b2": np.array([0.5])}
        with pytest.raises(ValueError, match="residuals"):
            reconcile_mint(base, structure, None,
                           MintConfig(covariance="shrinkage"))

    def test_singular_covariance_error(self):
        structure = three_node_structure()
        base = {"total": np.array([1.0]), "b1": np.array([0.5]),
                "b2": np.array([0.5])}
        residuals = {node: np.zeros(4) for node in structure.nodes}
        with pytest.raises(SingularReconciliationError, match="identity"):
            reconcile_mint(base, structure, residuals,
                           MintConfig(covariance="sample_diagonal"))

    def test_given_shrinkage_intensity_respected(self, seasonal_dataset):
        run_a = run_method(seasonal_dataset, ForecasterSpec("naive"), "mint", 4,
                           MintConfig(covariance="shrinkage", shrinkage_intensity=1.0))
        run_b = run_method(seasonal_dataset, ForecasterSpec("naive"), "mint", 4,
                           MintConfig(covariance="sample_diagonal"))
        # full shrinkage collapses onto the diagonal estimate
        for node in run_a.forecasts:
            assert np.allclose(run_a.forecasts[node], run_b.forecasts[node],
                               atol=1e-9)


class TestRunMethod:
    def test_naive_bu_aggregates(self, seasonal_dataset):
        run = run_method(seasonal_dataset, ForecasterSpec("naive"), "bottom_up", 6)
        train, _ = seasonal_dataset.split(6)
        expected = sum(train.bottom[sid].values[-1]
                       for sid in seasonal_dataset.series_ids)
        assert np.allclose(run.forecasts["total"], expected, atol=1e-12)
        assert run.method == "naive_bu"

    def test_deterministic(self, seasonal_dataset):
        one = run_method(seasonal_dataset, ForecasterSpec("ets"), "mint", 6)
        two = run_method(seasonal_dataset, ForecasterSpec("ets"), "mint", 6)
        for node in one.forecasts:
            assert np.array_equal(one.forecasts[node], two.forecasts[node])

    def test_mint_identity_on_coherent_naive_equals_bu(self, seasonal_dataset):
        bu = run_method(seasonal_dataset, ForecasterSpec("naive"), "bottom_up", 6)
        mint = run_method(seasonal_dataset, ForecasterSpec("naive"), "mint", 6,
                          MintConfig(covariance="identity"))
        for node in bu.forecasts:
            assert np.allclose(mint.forecasts[node], bu.forecasts[node], atol=1e-9)

    def test_reconciled_runs_pass_check_coherence(self, seasonal_dataset):
        for reconciliation in ("bottom_up", "mint"):
            run = run_method(seasonal_dataset, ForecasterSpec("ets"),
                             reconciliation, 6)
            candidates = {node: run.forecasts[node]
                          for node in seasonal_dataset.structure.aggregate_nodes}
            bottom = {sid: run.forecasts[sid]
                      for sid in seasonal_dataset.series_ids}
            from htsbench.hts import summing_check
            report = summing_check(seasonal_dataset.structure, bottom,
                                   candidates, tolerance=1e-6, relative=True)
            assert report.ok

    def test_none_reconciliation_keeps_base(self, seasonal_dataset):
        run = run_method(seasonal_dataset, ForecasterSpec("naive"), "none", 4)
        for node in run.base_forecasts:
            assert np.array_equal(run.forecasts[node], run.base_forecasts[node])

    def test_method_labels(self):
        assert method_label(ForecasterSpec("ets"), "bottom_up") == "ets_bu"
        assert method_label(ForecasterSpec("ets"), "mint") == "ets_mint"
        assert method_label(ForecasterSpec("snaive"), "bottom_up") == "snaive_bu"
        assert method_label(ForecasterSpec("ar"), "mint") == "ar_mint"


def test_forecast_csv_dump(tmp_path, seasonal_dataset):
    run = run_method(seasonal_dataset, ForecasterSpec("naive"), "bottom_up", 3)
    path = tmp_path / "dump.csv"
    write_forecast_csv(run, seasonal_dataset.structure, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "node,step,base,reconciled"
    # one row per node per step
    assert len(lines) == 1 + len(seasonal_dataset.structure.nodes) * 3
    # aggregates had no base forecast under bottom-up
    first = lines[1].split(",")
    assert first[0] == "total"
    assert first[2] == ""
