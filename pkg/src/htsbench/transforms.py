"""Parameterized perturbations of bottom-level series.

Four transformations (jitter, scaling, magnitude warp, time warp) generate
families of semi-synthetic datasets. Intensity follows a linear schedule in
the version index, and every (kind, version, sample, series) combination gets
its own derived random substream, so output is independent of iteration order
and of how the input file happened to be sorted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .hts import HtsDataset, TimeSeries
from .seeding import derive_seed, substream
from .spline import NaturalCubicSpline

KINDS = ("jitter", "scaling", "magnitude_warp", "time_warp")
WARP_KINDS = ("magnitude_warp", "time_warp")

ORIGINAL = "orig"

DEFAULT_BASE_SIGMA = 0.05
DEFAULT_KNOTS = 4
DEFAULT_NUM_VERSIONS = 6
DEFAULT_NUM_SAMPLES = 10

_TIME_WARP_FLOOR = 0.01


@dataclass(frozen=True)
class TransformSpec:
    """One transformation at one intensity step."""

    kind: str
    version: int
    base_sigma: float = DEFAULT_BASE_SIGMA
    knots: int = DEFAULT_KNOTS
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown transformation kind {self.kind!r}")
        if self.version < 0:
            raise ValueError("version must be >= 0")
        if self.base_sigma <= 0:
            raise ValueError("base_sigma must be > 0")
        if self.kind in WARP_KINDS and self.knots < 2:
            raise ValueError("warp transforms need knots >= 2")

    @property
    def sigma(self) -> float:
        """Effective intensity: base_sigma grows linearly with the version."""
        return self.base_sigma * (self.version + 1)


@dataclass(frozen=True)
class VariantKey:
    """Identity of one semi-synthetic dataset."""

    transformation: str
    version: int
    sample: int
    seed: int

    @classmethod
    def derive(cls, master_seed: int, dataset_name: str, kind: str,
               version: int, sample: int) -> VariantKey:
        seed = derive_seed(master_seed, dataset_name, kind, f"v{version}", f"s{sample}")
        return cls(transformation=kind, version=version, sample=sample, seed=seed)

    def filename(self, dataset_name: str) -> str:
        return f"{dataset_name}__{self.transformation}__v{self.version}__s{self.sample}.csv"


@dataclass(eq=False)
class TransformedDataset:
    """A perturbed dataset together with the key that produced it."""

    data: HtsDataset
    provenance: VariantKey


def _series_sd(values: np.ndarray) -> float:
    return float(values.std(ddof=1)) if values.size > 1 else 0.0


def jitter(series: TimeSeries, sigma: float, rng: np.random.Generator) -> TimeSeries:
    """Add i.i.d. Gaussian noise scaled by the series' own spread.

    Noise standard deviation is sigma times the sample standard deviation of
    the input, so one intensity schedule works across datasets of different
    magnitudes. Constant series (zero spread) pass through unchanged.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    scale = _series_sd(series.values)
    if sigma == 0 or scale == 0:
        return series.replace_values(series.values.copy())
    noise = rng.normal(0.0, sigma * scale, size=series.values.size)
    return series.replace_values(series.values + noise)


def scaling(series: TimeSeries, sigma: float, rng: np.random.Generator) -> TimeSeries:
    """Multiply the whole series by one draw from Gaussian(1, sigma^2)."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return series.replace_values(series.values.copy())
    alpha = rng.normal(1.0, sigma)
    return series.replace_values(series.values * alpha)


def _check_warp_args(series: TimeSeries, sigma: float, knots: int) -> None:
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if knots < 2:
        raise ValueError("warp transforms need knots >= 2")
    if len(series) < 4:
        raise ValueError("warp transforms need series length >= 4")


def warp_curve(length: int, sigma: float, knots: int,
               rng: np.random.Generator) -> np.ndarray:
    """Smooth random multiplier curve: a natural cubic spline through knot

    values drawn from Gaussian(1, sigma^2) at equally spaced positions
    spanning [0, length - 1], evaluated at every time step.
    """
    positions = np.linspace(0.0, length - 1, knots)
    values = rng.normal(1.0, sigma, size=knots)
    return NaturalCubicSpline(positions, values)(np.arange(length, dtype=np.float64))


def magnitude_warp(series: TimeSeries, sigma: float, knots: int,
                   rng: np.random.Generator) -> TimeSeries:
    """Scale the series pointwise by a smooth random curve around 1."""
    _check_warp_args(series, sigma, knots)
    if sigma == 0:
        return series.replace_values(series.values.copy())
    curve = warp_curve(len(series), sigma, knots, rng)
    return series.replace_values(series.values * curve)


def time_warp(series: TimeSeries, sigma: float, knots: int,
              rng: np.random.Generator) -> TimeSeries:
    """Resample the series along a smoothly distorted time axis.

    The same smooth curve as in magnitude_warp acts as a local tempo; its
    cumulative sum, affinely rescaled to start at 0 and end at length - 1,
    gives the positions at which the original series is linearly
    interpolated. Curve values are clamped below at a small positive floor so
    the warped time axis is monotone, and the rescaling pins both endpoints.
    """
    _check_warp_args(series, sigma, knots)
    if sigma == 0:
        return series.replace_values(series.values.copy())
    n = len(series)
    curve = np.maximum(warp_curve(n, sigma, knots, rng), _TIME_WARP_FLOOR)
    warped = np.cumsum(curve)
    warped -= warped[0]
    warped *= (n - 1) / warped[-1]
    warped[-1] = float(n - 1)
    resampled = np.interp(warped, np.arange(n, dtype=np.float64), series.values)
    return series.replace_values(resampled)


def apply_transform(series: TimeSeries, kind: str, sigma: float, knots: int,
                    rng: np.random.Generator) -> TimeSeries:
    if kind == "jitter":
        return jitter(series, sigma, rng)
    if kind == "scaling":
        return scaling(series, sigma, rng)
    if kind == "magnitude_warp":
        return magnitude_warp(series, sigma, knots, rng)
    if kind == "time_warp":
        return time_warp(series, sigma, knots, rng)
    raise ValueError(f"unknown transformation kind {kind!r}")


def make_schedule(base_sigma: float, num_versions: int) -> list[float]:
    """Linear intensity schedule: [base*1, base*2, ..., base*num_versions]."""
    if base_sigma <= 0:
        raise ValueError("base_sigma must be > 0")
    if num_versions < 1:
        raise ValueError("num_versions must be >= 1")
    return [base_sigma * (v + 1) for v in range(num_versions)]


def make_variant(dataset: HtsDataset, kind: str, version: int, sample: int,
                 master_seed: int, base_sigma: float = DEFAULT_BASE_SIGMA,
                 knots: int = DEFAULT_KNOTS) -> TransformedDataset:
    """Build one semi-synthetic dataset Z(kind, version, sample).

    Every bottom series is transformed independently with a substream seeded
    by (master seed, dataset name, kind, version, sample, series id); the
    schema is preserved and aggregates are left to be recomputed downstream.
    """
    spec = TransformSpec(kind=kind, version=version, base_sigma=base_sigma,
                         knots=knots, seed=master_seed)
    key = VariantKey.derive(master_seed, dataset.name, kind, version, sample)
    bottom = {}
    for sid in dataset.series_ids:
        rng = substream(key.seed, sid)
        bottom[sid] = apply_transform(dataset.bottom[sid], kind, spec.sigma,
                                      spec.knots, rng)
    data = HtsDataset(name=dataset.name, bottom=bottom, schema=dataset.schema)
    return TransformedDataset(data=data, provenance=key)


def generate_variants(dataset: HtsDataset, kinds: Iterable[str],
                      num_versions: int, num_samples: int, master_seed: int,
                      base_sigma: float = DEFAULT_BASE_SIGMA,
                      knots: int = DEFAULT_KNOTS) -> Iterator[TransformedDataset]:
    """Yield every (kind, version, sample) variant in canonical order."""
    if num_versions < 1 or num_samples < 1:
        raise ValueError("num_versions and num_samples must be >= 1")
    kinds = ordered_kinds(kinds)
    for kind in kinds:
        for version in range(num_versions):
            for sample in range(num_samples):
                yield make_variant(dataset, kind, version, sample,
                                   master_seed, base_sigma, knots)


def ordered_kinds(kinds: Iterable[str]) -> tuple[str, ...]:
    """Validate and order transformation kinds canonically."""
    requested = set(kinds)
    unknown = requested - set(KINDS)
    if unknown:
        raise ValueError(f"unknown transformation kinds: {sorted(unknown)}")
    return tuple(k for k in KINDS if k in requested)
