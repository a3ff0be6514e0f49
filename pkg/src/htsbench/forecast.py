"""Base forecasters and hierarchical reconciliation.

Four forecasters sit behind one interface: naive, seasonal naive, additive
exponential smoothing (level + trend + seasonal), and an order-p linear
autoregression. Reconciliation is either Bottom-Up (aggregate forecasts
replaced by member sums) or a generalized least-squares projection of the
stacked base forecasts onto the coherent subspace, with a configurable
error-covariance estimate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numba
import numpy as np

from .errors import SingularReconciliationError
from .hts import HtsDataset, SummingStructure, TimeSeries, sum_members, summing_check

FORECASTER_KINDS = ("naive", "snaive", "ets", "ar")
RECONCILIATIONS = ("bottom_up", "mint", "none")
_RECON_SUFFIX = {"bottom_up": "bu", "mint": "mint", "none": "none"}

_ETS_BOX = (1e-4, 0.9999)
_ETS_STARTS = ((0.2, 0.05, 0.05), (0.5, 0.1, 0.1), (0.8, 0.3, 0.2))
_ETS_GRID = (0.1, 0.5, 0.9)
_ETS_MAXITER = 200


@dataclass(frozen=True)
class ForecasterSpec:
    """A forecaster kind plus its kind-specific hyperparameters."""

    kind: str
    order: int | None = None        # autoregression only
    ets_bounds: tuple[float, float] = _ETS_BOX

    def __post_init__(self):
        if self.kind not in FORECASTER_KINDS:
            raise ValueError(f"unknown forecaster kind {self.kind!r}")
        if self.order is not None and self.order < 1:
            raise ValueError("autoregression order must be >= 1")
        lo, hi = self.ets_bounds
        if not 0 < lo < hi < 1:
            raise ValueError("ets_bounds must satisfy 0 < lo < hi < 1")


@dataclass(frozen=True)
class MintConfig:
    """Choice of error-covariance estimate for the GLS reconciliation."""

    covariance: str = "shrinkage"   # identity | sample_diagonal | shrinkage
    shrinkage_intensity: float | None = None

    def __post_init__(self):
        if self.covariance not in ("identity", "sample_diagonal", "shrinkage"):
            raise ValueError(f"unknown covariance estimator {self.covariance!r}")
        if self.shrinkage_intensity is not None and not 0 <= self.shrinkage_intensity <= 1:
            raise ValueError("shrinkage_intensity must lie in [0, 1]")


@dataclass(eq=False)
class ForecastRun:
    """Point forecasts for every node, before and after reconciliation."""

    method: str
    reconciliation: str
    horizon: int
    forecasts: dict[str, np.ndarray]
    base_forecasts: dict[str, np.ndarray]


def method_label(spec: ForecasterSpec, reconciliation: str) -> str:
    return f"{spec.kind}_{_RECON_SUFFIX[reconciliation]}"


@numba.njit(cache=True, nogil=True)
def _hw_filter(z, m, alpha, beta, gamma):  # pragma: no cover - jitted
    """One pass of additive Holt-Winters; returns SSE, final state, fitted.

    State is initialized from the first one (m == 1) or two seasonal cycles;
    fitted one-step predictions start at index m (index 1 when m == 1) and
    are NaN before that. With m == 1 the seasonal component is held at zero.
    """
    n = z.size
    fitted = np.full(n, np.nan)
    seasonal = np.zeros(n)
    if m == 1:
        level = z[0]
        trend = z[1] - z[0]
        start = 1
    else:
        mu1 = 0.0
        for i in range(m):
            mu1 += z[i]
        mu1 /= m
        mu2 = 0.0
        for i in range(m, 2 * m):
            mu2 += z[i]
        mu2 /= m
        trend = (mu2 - mu1) / m
        level = mu1 + trend * (m - 1) / 2.0
        for i in range(m):
            seasonal[i] = z[i] - (mu1 + (i - (m - 1) / 2.0) * trend)
        start = m
    sse = 0.0
    for t in range(start, n):
        s_lag = seasonal[t - m] if m > 1 else 0.0
        pred = level + trend + s_lag
        fitted[t] = pred
        err = z[t] - pred
        sse += err * err
        new_level = alpha * (z[t] - s_lag) + (1.0 - alpha) * (level + trend)
        trend = beta * (new_level - level) + (1.0 - beta) * trend
        if m > 1:
            seasonal[t] = gamma * (z[t] - new_level) + (1.0 - gamma) * s_lag
        level = new_level
    return sse, level, trend, seasonal[n - m:] if m > 1 else seasonal[:1], fitted


@numba.njit(cache=True, nogil=True)
def _hw_sse(z, m, alpha, beta, gamma):  # pragma: no cover - jitted
    """In-sample one-step SSE of the smoothing pass (no state kept)."""
    n = z.size
    if m == 1:
        level = z[0]
        trend = z[1] - z[0]
        sse = 0.0
        for t in range(1, n):
            err = z[t] - (level + trend)
            sse += err * err
            new_level = alpha * z[t] + (1.0 - alpha) * (level + trend)
            trend = beta * (new_level - level) + (1.0 - beta) * trend
            level = new_level
        return sse
    mu1 = 0.0
    for i in range(m):
        mu1 += z[i]
    mu1 /= m
    mu2 = 0.0
    for i in range(m, 2 * m):
        mu2 += z[i]
    mu2 /= m
    trend = (mu2 - mu1) / m
    level = mu1 + trend * (m - 1) / 2.0
    season = np.empty(m)
    for i in range(m):
        season[i] = z[i] - (mu1 + (i - (m - 1) / 2.0) * trend)
    sse = 0.0
    for t in range(m, n):
        slot = t % m
        s_lag = season[slot]
        err = z[t] - (level + trend + s_lag)
        sse += err * err
        new_level = alpha * (z[t] - s_lag) + (1.0 - alpha) * (level + trend)
        trend = beta * (new_level - level) + (1.0 - beta) * trend
        season[slot] = gamma * (z[t] - new_level) + (1.0 - gamma) * s_lag
        level = new_level
    return sse


@numba.njit(cache=True, nogil=True)
def _nm_ets(z, m, start, lo, hi, maxiter):  # pragma: no cover - jitted
    """Nelder-Mead simplex over the smoothing-parameter box.

    Standard reflection/expansion/contraction/shrink coefficients; every
    candidate is clipped into [lo, hi] before evaluation.
    """
    sim = np.empty((4, 3))
    fx = np.empty(4)
    for k in range(3):
        v = start[k]
        sim[0, k] = lo if v < lo else (hi if v > hi else v)
    for i in range(3):
        for k in range(3):
            sim[i + 1, k] = sim[0, k]
        step = sim[0, i] * 0.05
        if step == 0.0:
            step = 0.00025
        v = sim[0, i] + step
        if v > hi:
            v = sim[0, i] - step
        if v < lo:
            v = lo
        sim[i + 1, i] = v
    for i in range(4):
        fx[i] = _hw_sse(z, m, sim[i, 0], sim[i, 1], sim[i, 2])

    xr = np.empty(3)
    xe = np.empty(3)
    xc = np.empty(3)
    cen = np.empty(3)
    for _ in range(maxiter):
        order = np.argsort(fx)
        sim = sim[order]
        fx = fx[order]
        max_dx = 0.0
        max_df = 0.0
        for i in range(1, 4):
            df = abs(fx[i] - fx[0])
            if df > max_df:
                max_df = df
            for k in range(3):
                dx = abs(sim[i, k] - sim[0, k])
                if dx > max_dx:
                    max_dx = dx
        if max_dx <= 1e-6 and max_df <= 1e-10:
            break
        for k in range(3):
            cen[k] = (sim[0, k] + sim[1, k] + sim[2, k]) / 3.0
        for k in range(3):
            v = cen[k] + (cen[k] - sim[3, k])
            xr[k] = lo if v < lo else (hi if v > hi else v)
        fr = _hw_sse(z, m, xr[0], xr[1], xr[2])
        if fr < fx[0]:
            for k in range(3):
                v = cen[k] + 2.0 * (cen[k] - sim[3, k])
                xe[k] = lo if v < lo else (hi if v > hi else v)
            fe = _hw_sse(z, m, xe[0], xe[1], xe[2])
            if fe < fr:
                sim[3] = xe
                fx[3] = fe
            else:
                sim[3] = xr
                fx[3] = fr
        elif fr < fx[2]:
            sim[3] = xr
            fx[3] = fr
        else:
            shrink = False
            if fr < fx[3]:
                for k in range(3):
                    v = cen[k] + 0.5 * (xr[k] - cen[k])
                    xc[k] = lo if v < lo else (hi if v > hi else v)
                fc = _hw_sse(z, m, xc[0], xc[1], xc[2])
                if fc <= fr:
                    sim[3] = xc
                    fx[3] = fc
                else:
                    shrink = True
            else:
                for k in range(3):
                    v = cen[k] - 0.5 * (cen[k] - sim[3, k])
                    xc[k] = lo if v < lo else (hi if v > hi else v)
                fc = _hw_sse(z, m, xc[0], xc[1], xc[2])
                if fc < fx[3]:
                    sim[3] = xc
                    fx[3] = fc
                else:
                    shrink = True
            if shrink:
                for i in range(1, 4):
                    for k in range(3):
                        sim[i, k] = sim[0, k] + 0.5 * (sim[i, k] - sim[0, k])
                    fx[i] = _hw_sse(z, m, sim[i, 0], sim[i, 1], sim[i, 2])
    best = np.argmin(fx)
    return sim[best], fx[best]


def ets_sse(values: np.ndarray, seasonal_period: int, alpha: float,
            beta: float, gamma: float) -> float:
    """In-sample one-step squared error of the smoothing pass."""
    z = np.ascontiguousarray(values, dtype=np.float64)
    return float(_hw_sse(z, seasonal_period, alpha, beta, gamma))


def _fit_ets_params(z: np.ndarray, m: int, bounds: tuple[float, float]) -> tuple[float, float, float]:
    """Minimize in-sample SSE over the (alpha, beta, gamma) box.

    Derivative-free simplex search from three fixed starts; a coarse fixed
    grid is also evaluated so the returned point is never worse than the
    best grid point.
    """
    lo, hi = bounds
    best_p = None
    best_sse = np.inf
    for start in _ETS_STARTS:
        p, sse = _nm_ets(z, m, np.array(start), lo, hi, _ETS_MAXITER)
        if sse < best_sse:
            best_sse = sse
            best_p = p
    for a in _ETS_GRID:
        for b in _ETS_GRID:
            for g in _ETS_GRID:
                sse = _hw_sse(z, m, a, b, g)
                if sse < best_sse:
                    best_sse = sse
                    best_p = np.array((a, b, g))
    return float(best_p[0]), float(best_p[1]), float(best_p[2])


def _ets_forecast(z: np.ndarray, m: int, horizon: int,
                  bounds: tuple[float, float]) -> tuple[np.ndarray, np.ndarray]:
    alpha, beta, gamma = _fit_ets_params(z, m, bounds)
    _, level, trend, seasonal, fitted = _hw_filter(z, m, alpha, beta, gamma)
    steps = np.arange(1, horizon + 1)
    if m > 1:
        seasonal_idx = (steps - 1) % m
        forecast = level + steps * trend + seasonal[seasonal_idx]
        residuals = z[m:] - fitted[m:]
    else:
        forecast = level + steps * trend
        residuals = z[1:] - fitted[1:]
    return forecast, residuals


def _ar_design(z: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    rows = z.size - order
    x = np.ones((rows, order + 1))
    for lag in range(1, order + 1):
        x[:, lag] = z[order - lag: z.size - lag]
    return x, z[order:]


def _ar_forecast(z: np.ndarray, order: int, horizon: int) -> tuple[np.ndarray, np.ndarray]:
    x, y = _ar_design(z, order)
    coef, *_ = np.linalg.lstsq(x, y, rcond=None)
    residuals = y - x @ coef
    history = list(z[-order:])
    forecast = np.empty(horizon)
    for h in range(horizon):
        lags = np.array([history[-lag] for lag in range(1, order + 1)])
        value = coef[0] + lags @ coef[1:]
        forecast[h] = value
        history.append(value)
    return forecast, residuals


def _default_ar_order(seasonal_period: int) -> int:
    return seasonal_period + 1 if seasonal_period > 1 else 2


def _min_training_length(spec: ForecasterSpec, m: int) -> int:
    if spec.kind == "naive":
        kind_min = 2
    elif spec.kind == "snaive":
        kind_min = m + 1
    elif spec.kind == "ets":
        kind_min = 3
    else:
        order = spec.order or _default_ar_order(m)
        kind_min = 2 * order + 1
    return max(2 * m, kind_min)


def fit_with_residuals(series: TimeSeries, spec: ForecasterSpec,
                       horizon: int) -> tuple[np.ndarray, np.ndarray]:
    """Forecasts of length ``horizon`` plus in-sample one-step residuals."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    z = np.ascontiguousarray(series.values, dtype=np.float64)
    m = series.seasonal_period
    minimum = _min_training_length(spec, m)
    if z.size < minimum:
        raise ValueError(
            f"series {series.id!r} has {z.size} observations; "
            f"{spec.kind} needs at least {minimum}"
        )
    if spec.kind == "naive":
        forecast = np.full(horizon, z[-1])
        residuals = z[1:] - z[:-1]
    elif spec.kind == "snaive":
        cycle = z[-m:]
        forecast = cycle[np.arange(horizon) % m]
        residuals = z[m:] - z[:-m]
    elif spec.kind == "ets":
        forecast, residuals = _ets_forecast(z, m, horizon, spec.ets_bounds)
    else:
        order = spec.order or _default_ar_order(m)
        forecast, residuals = _ar_forecast(z, order, horizon)
    if not np.all(np.isfinite(forecast)):
        raise ValueError(f"series {series.id!r}: non-finite forecast from {spec.kind}")
    return forecast, residuals


def fit_predict(series: TimeSeries, spec: ForecasterSpec, horizon: int) -> np.ndarray:
    """Point forecasts of length ``horizon`` for one series."""
    forecast, _ = fit_with_residuals(series, spec, horizon)
    return forecast


def reconcile_bu(base: Mapping[str, np.ndarray],
                 structure: SummingStructure) -> dict[str, np.ndarray]:
    """Bottom-Up: keep bottom forecasts, rebuild every aggregate as the sum

    of its members. Any aggregate forecasts present in ``base`` are ignored.
    """
    missing = [sid for sid in structure.bottom_ids if sid not in base]
    if missing:
        raise ValueError(f"base forecasts missing bottom nodes: {missing[:5]}")
    bottom = {sid: np.asarray(base[sid], dtype=np.float64)
              for sid in structure.bottom_ids}
    out: dict[str, np.ndarray] = {}
    for node in structure.nodes:
        if node in bottom:
            out[node] = bottom[node].copy()
        else:
            out[node] = sum_members(bottom, structure.members[node])
    return out


def _covariance_matrix(residual_matrix: np.ndarray, config: MintConfig) -> np.ndarray:
    """Error covariance W from stacked residuals (rows = observations)."""
    n_obs, n_nodes = residual_matrix.shape
    if config.covariance == "identity":
        return np.eye(n_nodes)
    # Uncentered second moments: reconciliation residuals are treated as
    # zero-mean one-step errors.
    sample = residual_matrix.T @ residual_matrix / n_obs
    if config.covariance == "sample_diagonal":
        return np.diag(np.diag(sample))
    lam = (config.shrinkage_intensity
           if config.shrinkage_intensity is not None
           else _shrinkage_intensity(residual_matrix, sample))
    return (1.0 - lam) * sample + lam * np.diag(np.diag(sample))


def _shrinkage_intensity(residual_matrix: np.ndarray, sample: np.ndarray) -> float:
    """Variance-of-entries estimate of how far to shrink toward the diagonal.

    Standard ratio of the summed sampling variances of the off-diagonal
    correlations to their summed squares, clipped to [0, 1].
    """
    n_obs = residual_matrix.shape[0]
    scale = np.sqrt(np.diag(sample))
    scale[scale == 0] = 1.0
    standardized = residual_matrix / scale
    corr = sample / np.outer(scale, scale)
    # Var of each correlation entry via the variance of per-observation
    # products w_t = x_ti * x_tj.
    products_mean = standardized.T @ standardized / n_obs
    products_sq_mean = (standardized ** 2).T @ (standardized ** 2) / n_obs
    var_entries = (products_sq_mean - products_mean ** 2) * n_obs / (n_obs - 1) ** 3
    off = ~np.eye(corr.shape[0], dtype=bool)
    denom = float((corr[off] ** 2).sum())
    if denom == 0:
        return 1.0
    return float(np.clip(var_entries[off].sum() / denom, 0.0, 1.0))


def reconcile_mint(base: Mapping[str, np.ndarray], structure: SummingStructure,
                   residuals: Mapping[str, np.ndarray] | None,
                   config: MintConfig = MintConfig()) -> dict[str, np.ndarray]:
    """GLS projection of stacked base forecasts onto the coherent subspace.

    Solves b = (S' W^-1 S)^-1 S' W^-1 y for the bottom series at every
    forecast step and rebuilds all aggregates from b, where S is the summing
    map, W the configured error-covariance estimate from in-sample one-step
    residuals, and y the base forecasts stacked over all nodes.
    """
    missing = [node for node in structure.nodes if node not in base]
    if missing:
        raise ValueError(f"base forecasts missing nodes: {missing[:5]}")
    y = np.stack([np.asarray(base[node], dtype=np.float64)
                  for node in structure.nodes])
    if config.covariance == "identity":
        w = np.eye(len(structure.nodes))
    else:
        if residuals is None:
            raise ValueError(
                f"covariance {config.covariance!r} needs in-sample residuals"
            )
        missing_res = [node for node in structure.nodes if node not in residuals]
        if missing_res:
            raise ValueError(f"residuals missing nodes: {missing_res[:5]}")
        columns = [np.asarray(residuals[node], dtype=np.float64)
                   for node in structure.nodes]
        lengths = {c.size for c in columns}
        if len(lengths) != 1 or min(lengths) < 2:
            raise ValueError("residuals must have equal length >= 2 per node")
        w = _covariance_matrix(np.stack(columns, axis=1), config)

    s = structure.matrix
    try:
        winv_s = np.linalg.solve(w, s)
        gram = s.T @ winv_s
        bottom = np.linalg.solve(gram, winv_s.T @ y)
    except np.linalg.LinAlgError as exc:
        raise SingularReconciliationError(
            "reconciliation system is singular; use the shrinkage or "
            "identity covariance"
        ) from exc
    if not np.all(np.isfinite(bottom)):
        raise SingularReconciliationError(
            "reconciliation produced non-finite values; use the shrinkage "
            "or identity covariance"
        )
    bottom_map = {sid: bottom[j] for j, sid in enumerate(structure.bottom_ids)}
    out: dict[str, np.ndarray] = {}
    for node in structure.nodes:
        if node in bottom_map:
            out[node] = bottom_map[node].copy()
        else:
            out[node] = sum_members(bottom_map, structure.members[node])
    return out


def run_method(dataset: HtsDataset, spec: ForecasterSpec, reconciliation: str,
               horizon: int, mint_config: MintConfig = MintConfig()) -> ForecastRun:
    """Split, fit, and reconcile one method on one dataset.

    Bottom-Up fits only the bottom series; the GLS reconciliation fits every
    node's aggregate series and collects in-sample one-step residuals for
    the covariance estimate.
    """
    if reconciliation not in RECONCILIATIONS:
        raise ValueError(f"unknown reconciliation {reconciliation!r}")
    train, _ = dataset.split(horizon)
    structure = dataset.structure

    if reconciliation == "bottom_up":
        base = {sid: fit_predict(train.bottom[sid], spec, horizon)
                for sid in structure.bottom_ids}
        forecasts = reconcile_bu(base, structure)
    else:
        base = {}
        residuals = {}
        for node in structure.nodes:
            series = train.aggregate(node)
            base[node], residuals[node] = fit_with_residuals(series, spec, horizon)
        if reconciliation == "mint":
            forecasts = reconcile_mint(base, structure, residuals, mint_config)
        else:
            forecasts = {node: fc.copy() for node, fc in base.items()}

    return ForecastRun(method=method_label(spec, reconciliation),
                       reconciliation=reconciliation, horizon=horizon,
                       forecasts=forecasts, base_forecasts=base)


def coherence_deviation(run: ForecastRun, structure: SummingStructure) -> float:
    """Worst relative deviation |forecast - member sum| / (1 + |member sum|)."""
    bottom = {sid: run.forecasts[sid] for sid in structure.bottom_ids}
    candidates = {node: run.forecasts[node] for node in structure.aggregate_nodes}
    report = summing_check(structure, bottom, candidates, tolerance=0.0, relative=True)
    return report.max_deviation


def write_forecast_csv(run: ForecastRun, structure: SummingStructure, path) -> None:
    """Dump per-node base and reconciled forecasts for one run."""
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node", "step", "base", "reconciled"])
        for node in structure.nodes:
            base = run.base_forecasts.get(node)
            for step in range(run.horizon):
                base_cell = repr(float(base[step])) if base is not None else ""
                writer.writerow([node, step + 1, base_cell,
                                 repr(float(run.forecasts[node][step]))])
