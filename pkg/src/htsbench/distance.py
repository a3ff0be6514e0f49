"""Dynamic time warping distance and pairwise distance distributions.

The DP kernel minimizes the accumulated q-th power of absolute differences
over boundary-anchored monotone alignment paths (steps right, down,
diagonal) and returns the 1/q root, optionally restricted to a Sakoe-Chiba
band. Suitable for the short series this package works with; no
lower-bounding or pruning.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Iterable, Sequence

import numba
import numpy as np


@dataclass(frozen=True)
class DtwParams:
    """Exponent q of the accumulated cost and optional band half-width."""

    q: float = 2.0
    window: int | None = None

    def __post_init__(self):
        if self.q <= 0:
            raise ValueError("q must be > 0")
        if self.window is not None and self.window < 0:
            raise ValueError("window must be >= 0")


@numba.njit(cache=True, nogil=True)
def _dtw_accumulate(a, b, q, window):  # pragma: no cover - jitted
    n = a.size
    m = b.size
    prev = np.full(m + 1, np.inf)
    cur = np.full(m + 1, np.inf)
    prev[0] = 0.0
    for i in range(1, n + 1):
        for j in range(m + 1):
            cur[j] = np.inf
        if window < 0:
            lo, hi = 1, m
        else:
            lo = i - window if i - window > 1 else 1
            hi = i + window if i + window < m else m
        for j in range(lo, hi + 1):
            d = a[i - 1] - b[j - 1]
            if d < 0.0:
                d = -d
            cost = d ** q
            best = prev[j]
            if prev[j - 1] < best:
                best = prev[j - 1]
            if cur[j - 1] < best:
                best = cur[j - 1]
            cur[j] = cost + best
        tmp = prev
        prev = cur
        cur = tmp
    return prev[m]


def _as_values(series) -> np.ndarray:
    values = getattr(series, "values", series)
    return np.ascontiguousarray(np.asarray(values, dtype=np.float64))


def dtw(a, b, params: DtwParams = DtwParams()) -> float:
    """DTW distance between two series under the given parameters.

    Accepts TimeSeries or plain 1-d arrays. Raises on empty input or on a
    band too narrow to admit any alignment path.
    """
    x = _as_values(a)
    y = _as_values(b)
    if x.size == 0 or y.size == 0:
        raise ValueError("dtw requires non-empty series")
    window = -1 if params.window is None else int(params.window)
    if window >= 0 and window < abs(x.size - y.size):
        raise ValueError(
            f"window {window} admits no path for lengths {x.size} and {y.size}"
        )
    acc = _dtw_accumulate(x, y, float(params.q), window)
    return float(acc ** (1.0 / params.q))


def z_normalize(values: np.ndarray) -> np.ndarray:
    """Center and scale to unit variance; constant series become zeros."""
    values = np.asarray(values, dtype=np.float64)
    sd = values.std()
    if sd == 0:
        return np.zeros_like(values)
    return (values - values.mean()) / sd


@dataclass(eq=False)
class DistanceDistribution:
    """All unordered pairwise DTW distances at one hierarchy level."""

    pairs: tuple[tuple[str, str], ...]
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.size != len(self.pairs):
            raise ValueError("one distance per pair required")
        if self.values.size and self.values.min() < 0:
            raise ValueError("distances must be non-negative")

    @cached_property
    def sorted_values(self) -> np.ndarray:
        return np.sort(self.values)

    @property
    def mean(self) -> float:
        return float(self.sorted_values.mean())

    @property
    def sd(self) -> float:
        if self.values.size < 2:
            return 0.0
        return float(self.sorted_values.std(ddof=1))

    def histogram(self, edges: np.ndarray) -> np.ndarray:
        """Counts per bin; edges must span all values so counts sum to n."""
        counts, _ = np.histogram(self.sorted_values, bins=edges)
        return counts


def pairwise_distribution(dataset, params: DtwParams = DtwParams(),
                          level="bottom", normalize: bool = True) -> DistanceDistribution:
    """DTW over all unordered pairs of series at the chosen level.

    ``level`` is "bottom" or an iterable of aggregate-node selectors. Each
    series is z-normalized first by default so the distribution reflects
    shape rather than raw scale.
    """
    if isinstance(level, str) and level == "bottom":
        ids = list(dataset.series_ids)
        series = {sid: dataset.bottom[sid].values for sid in ids}
    else:
        ids = [dataset.resolve_node(node) for node in level]
        series = {node: dataset.node_values(node) for node in ids}
    if len(ids) < 2:
        raise ValueError("pairwise distribution needs at least 2 series")
    if normalize:
        series = {sid: z_normalize(v) for sid, v in series.items()}
    pairs = []
    values = []
    for a, b in combinations(sorted(ids), 2):
        pairs.append((a, b))
        values.append(dtw(series[a], series[b], params))
    return DistanceDistribution(pairs=tuple(pairs), values=np.array(values))


@dataclass(frozen=True)
class ShiftReport:
    """Summary-statistic deltas, transformed minus original."""

    mean_delta: float
    sd_delta: float


def distribution_shift(original: DistanceDistribution,
                       transformed: DistanceDistribution) -> ShiftReport:
    if original.values.size == 0 or transformed.values.size == 0:
        raise ValueError("both distributions must be non-empty")
    return ShiftReport(mean_delta=transformed.mean - original.mean,
                       sd_delta=transformed.sd - original.sd)


def pooled_bin_edges(distributions: Iterable[DistanceDistribution],
                     bins: int = 40) -> np.ndarray:
    """Equal-width bin edges spanning the pooled min/max of all values."""
    lows = []
    highs = []
    for dist in distributions:
        if dist.values.size:
            lows.append(float(dist.sorted_values[0]))
            highs.append(float(dist.sorted_values[-1]))
    if not lows:
        raise ValueError("no values to bin")
    lo = min(lows)
    hi = max(highs)
    if hi == lo:
        hi = lo + 1.0
    return np.linspace(lo, hi, bins + 1)
