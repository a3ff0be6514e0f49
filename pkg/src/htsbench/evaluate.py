"""Level-wise MASE scoring, robustness curves, and method ranking."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import UndefinedScaleError
from .hts import HtsDataset, TOP_NODE, group_node
from .forecast import ForecastRun
from .transforms import ORIGINAL, VariantKey

log = logging.getLogger(__name__)

LEVEL_BOTTOM = "bottom"
LEVEL_TOP = "top"


def group_level(dimension: str) -> str:
    return f"group:{dimension}"


@dataclass(frozen=True)
class EvalRecord:
    """One MASE measurement: dataset x variant x method x hierarchy level.

    ``version`` is None for the untransformed dataset (transformation
    "orig", sample 0).
    """

    dataset: str
    transformation: str
    version: int | None
    sample: int
    method: str
    level: str
    mase: float

    def __post_init__(self):
        if not np.isfinite(self.mase) or self.mase < 0:
            raise ValueError("mase must be finite and >= 0")
        if (self.transformation == ORIGINAL) != (self.version is None):
            raise ValueError("transformation 'orig' implies version None and vice versa")
        if self.transformation == ORIGINAL and self.sample != 0:
            raise ValueError("the original dataset has sample 0")

    @property
    def version_label(self) -> str:
        return ORIGINAL if self.version is None else str(self.version)


@dataclass(eq=False)
class RankTable:
    """Average-rank assignment over methods for one (dataset, transformation,

    version) key; rank 1 is the best (lowest mean MASE).
    """

    dataset: str
    transformation: str
    version: int | None
    ranks: dict[str, float]


def mase_series(actual: Sequence[float], forecast: Sequence[float], train) -> float:
    """Horizon mean absolute error scaled by the training series' mean

    one-step naive error.
    """
    actual = np.asarray(actual, dtype=np.float64)
    forecast = np.asarray(forecast, dtype=np.float64)
    z = np.asarray(getattr(train, "values", train), dtype=np.float64)
    if actual.size < 1 or actual.shape != forecast.shape:
        raise ValueError("actual and forecast must be equal-length, non-empty")
    if z.size < 2:
        raise ValueError("training series needs at least 2 observations")
    scale = np.mean(np.abs(np.diff(z)))
    if scale == 0:
        raise UndefinedScaleError("constant training series: naive error is zero")
    return float(np.mean(np.abs(forecast - actual)) / scale)


def _level_nodes(dataset: HtsDataset, level: str) -> list[str]:
    if level == LEVEL_TOP:
        return [TOP_NODE]
    if level == LEVEL_BOTTOM:
        return list(dataset.series_ids)
    if level.startswith("group:"):
        dim = level.split(":", 1)[1]
        return [group_node(dim, element) for element in dataset.schema.elements(dim)]
    raise ValueError(f"unknown level {level!r}")


def _level_mase(run: ForecastRun, train: HtsDataset, test: HtsDataset,
                level: str, excluded: list[str]) -> float:
    values = []
    for node in _level_nodes(train, level):
        try:
            score = mase_series(test.node_values(node), run.forecasts[node],
                                train.node_values(node))
        except UndefinedScaleError:
            log.warning("excluding %s: constant training series", node)
            excluded.append(node)
            continue
        values.append(score)
    if not values:
        raise UndefinedScaleError(f"every node at level {level!r} was excluded")
    return float(np.mean(values))


def mase_group(run: ForecastRun, dataset: HtsDataset, dimension: str) -> float:
    """Mean MASE over the element aggregates of one dimension."""
    train, test = dataset.split(run.horizon)
    excluded: list[str] = []
    return _level_mase(run, train, test, group_level(dimension), excluded)


def evaluate_run(run: ForecastRun, dataset: HtsDataset,
                 key: VariantKey | str = ORIGINAL,
                 excluded: list[str] | None = None) -> list[EvalRecord]:
    """Score one run at every hierarchy level.

    Returns one record for the bottom level, one per group dimension, and
    one for the top. Nodes whose training series is constant are excluded
    from level means and appended to ``excluded`` when given.
    """
    if isinstance(key, str):
        if key != ORIGINAL:
            raise ValueError(f"string key must be {ORIGINAL!r}")
        transformation, version, sample = ORIGINAL, None, 0
    else:
        transformation, version, sample = key.transformation, key.version, key.sample
    train, test = dataset.split(run.horizon)
    if excluded is None:
        excluded = []
    levels = [LEVEL_BOTTOM]
    levels += [group_level(dim) for dim in dataset.schema.dimensions]
    levels += [LEVEL_TOP]
    records = []
    for level in levels:
        score = _level_mase(run, train, test, level, excluded)
        records.append(EvalRecord(dataset=dataset.name, transformation=transformation,
                                  version=version, sample=sample, method=run.method,
                                  level=level, mase=score))
    return records


@dataclass(eq=False)
class RobustnessCurve:
    """Mean MASE per intensity step, ordered orig, v0, v1, ..."""

    labels: list[str]
    means: list[float]
    sds: list[float]
    missing_versions: list[int]


def robustness_curve(records: Iterable[EvalRecord], dataset: str,
                     transformation: str, method: str, level: str) -> RobustnessCurve:
    """Aggregate records for one curve; versions are averaged over samples.

    The original dataset's score is included as the leading point. Gaps in
    the version axis are reported, never interpolated.
    """
    by_version: dict[int | None, list[float]] = {}
    for record in records:
        if (record.dataset, record.method, record.level) != (dataset, method, level):
            continue
        if record.transformation == transformation:
            by_version.setdefault(record.version, []).append(record.mase)
        elif record.transformation == ORIGINAL:
            by_version.setdefault(None, []).append(record.mase)
    if not by_version:
        raise ValueError(
            f"no records for {dataset}/{transformation}/{method}/{level}"
        )
    versions = sorted(v for v in by_version if v is not None)
    missing = []
    if versions:
        missing = sorted(set(range(versions[-1] + 1)) - set(versions))
        if missing:
            log.warning("version gaps for %s/%s/%s: %s",
                        dataset, transformation, method, missing)
    labels = []
    means = []
    sds = []
    ordered: list[int | None] = ([None] if None in by_version else []) + versions
    for version in ordered:
        samples = np.array(sorted(by_version[version]))
        labels.append(ORIGINAL if version is None else f"v{version}")
        means.append(float(samples.mean()))
        sds.append(float(samples.std(ddof=1)) if samples.size > 1 else 0.0)
    return RobustnessCurve(labels=labels, means=means, sds=sds,
                           missing_versions=missing)


def rank_methods(records: Iterable[EvalRecord], dataset: str, transformation: str,
                 version: int | None, level: str = LEVEL_TOP) -> RankTable:
    """Rank methods by mean MASE over samples; ties get their average rank."""
    records = list(records)
    all_methods = sorted({r.method for r in records if r.dataset == dataset})
    by_method: dict[str, list[float]] = {}
    for record in records:
        if (record.dataset, record.transformation, record.version, record.level) \
                == (dataset, transformation, version, level):
            by_method.setdefault(record.method, []).append(record.mase)
    if not by_method:
        raise ValueError(f"no records for {dataset}/{transformation}/{version}/{level}")
    missing = sorted(set(all_methods) - set(by_method))
    if missing:
        raise ValueError(f"methods without records for this key: {missing}")
    methods = sorted(by_method)
    means = np.array([np.mean(sorted(by_method[m])) for m in methods])
    ranks = rankdata(means, method="average")
    return RankTable(dataset=dataset, transformation=transformation, version=version,
                     ranks={m: float(r) for m, r in zip(methods, ranks)})


def aggregate_ranks(tables: Iterable[RankTable]) -> dict[tuple[str, str], dict[str, float]]:
    """Mean rank per (transformation, version label, method) across datasets."""
    tables = list(tables)
    if not tables:
        raise ValueError("no rank tables to aggregate")
    collected: dict[tuple[str, str], dict[str, list[float]]] = {}
    for table in tables:
        version_label = ORIGINAL if table.version is None else str(table.version)
        bucket = collected.setdefault((table.transformation, version_label), {})
        for method, rank in table.ranks.items():
            bucket.setdefault(method, []).append(rank)
    return {
        key: {method: float(np.mean(sorted(values)))
              for method, values in sorted(bucket.items())}
        for key, bucket in sorted(collected.items())
    }
