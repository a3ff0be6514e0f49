"""Data model for hierarchically grouped time series.

Bottom-level series carry the data; every aggregate (the total and one node
per (dimension, element) pair) is recomputed from them on demand and never
stored, so the stored dataset cannot drift out of coherence.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataParseError, RaggedDataError, SchemaError

TOP_NODE = "total"


def group_node(dimension: str, element: str) -> str:
    """Canonical node name for one element of a group dimension."""
    return f"{dimension}/{element}"


@dataclass(eq=False)
class TimeSeries:
    """A univariate series on a 0-based integer time index."""

    id: str
    values: np.ndarray
    seasonal_period: int = 1
    start_index: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or self.values.size == 0:
            raise ValueError(f"series {self.id!r}: values must be a non-empty 1-d array")
        if not np.all(np.isfinite(self.values)):
            raise ValueError(f"series {self.id!r}: values must be finite")
        if int(self.seasonal_period) < 1:
            raise ValueError(f"series {self.id!r}: seasonal_period must be >= 1")
        self.seasonal_period = int(self.seasonal_period)

    def __len__(self) -> int:
        return self.values.size

    def replace_values(self, values: np.ndarray) -> TimeSeries:
        """Copy of this series with new observations, same identity."""
        return TimeSeries(self.id, values, self.seasonal_period, self.start_index)


@dataclass(eq=False)
class GroupSchema:
    """Assigns every bottom series to exactly one element per dimension."""

    dimensions: list[str]
    membership: dict[str, dict[str, str]]

    def __post_init__(self):
        if not self.dimensions:
            raise SchemaError("schema needs at least one dimension")
        if len(set(self.dimensions)) != len(self.dimensions):
            raise SchemaError("dimension names must be unique")
        if TOP_NODE in self.dimensions:
            raise SchemaError(f"dimension name {TOP_NODE!r} is reserved")
        if not self.membership:
            raise SchemaError("schema has no series")
        for sid, row in self.membership.items():
            if set(row) != set(self.dimensions):
                raise SchemaError(
                    f"series {sid!r}: membership must assign exactly one element per dimension"
                )

    @property
    def series_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self.membership))

    def elements(self, dimension: str) -> list[str]:
        if dimension not in self.dimensions:
            raise KeyError(f"unknown dimension {dimension!r}")
        return sorted({row[dimension] for row in self.membership.values()})

    def members(self, dimension: str, element: str) -> list[str]:
        ids = sorted(sid for sid, row in self.membership.items()
                     if row[dimension] == element)
        if not ids:
            raise KeyError(f"unknown element {element!r} in dimension {dimension!r}")
        return ids


@dataclass(eq=False)
class SummingStructure:
    """The linear 0/1 map from bottom series to every node of the hierarchy.

    Node order is fixed: the top node, then one node per (dimension, element)
    pair (dimensions in schema order, elements sorted), then the bottom
    series in ascending id order.
    """

    nodes: tuple[str, ...]
    bottom_ids: tuple[str, ...]
    members: dict[str, tuple[str, ...]]

    @classmethod
    def from_schema(cls, schema: GroupSchema) -> SummingStructure:
        bottom_ids = schema.series_ids
        nodes: list[str] = [TOP_NODE]
        members: dict[str, tuple[str, ...]] = {TOP_NODE: bottom_ids}
        for dim in schema.dimensions:
            for element in schema.elements(dim):
                node = group_node(dim, element)
                nodes.append(node)
                members[node] = tuple(schema.members(dim, element))
        nodes.extend(bottom_ids)
        for sid in bottom_ids:
            members[sid] = (sid,)
        if len(set(nodes)) != len(nodes):
            raise SchemaError(
                "node names collide: series ids must differ from the top node "
                "and from '<dimension>/<element>' names"
            )
        return cls(nodes=tuple(nodes), bottom_ids=bottom_ids, members=members)

    @property
    def aggregate_nodes(self) -> tuple[str, ...]:
        return self.nodes[: len(self.nodes) - len(self.bottom_ids)]

    def index(self, node: str) -> int:
        try:
            return self.nodes.index(node)
        except ValueError:
            raise KeyError(f"unknown node {node!r}") from None

    @cached_property
    def matrix(self) -> np.ndarray:
        """Summing matrix S, shape (n_nodes, n_bottom)."""
        col = {sid: j for j, sid in enumerate(self.bottom_ids)}
        s = np.zeros((len(self.nodes), len(self.bottom_ids)))
        for i, node in enumerate(self.nodes):
            for sid in self.members[node]:
                s[i, col[sid]] = 1.0
        return s


def sum_members(values: Mapping[str, np.ndarray], member_ids: Sequence[str]) -> np.ndarray:
    """Pointwise sum of the named series, stacked in ascending-id order.

    The fixed order makes repeated aggregation bit-reproducible.
    """
    return np.stack([values[sid] for sid in sorted(member_ids)]).sum(axis=0)


@dataclass(eq=False)
class HtsDataset:
    """Bottom-level series plus the group schema that organizes them."""

    name: str
    bottom: dict[str, TimeSeries]
    schema: GroupSchema

    def __post_init__(self):
        if not self.bottom:
            raise SchemaError(f"dataset {self.name!r} has no bottom series")
        for sid, ts in self.bottom.items():
            if ts.id != sid:
                raise SchemaError(f"series keyed {sid!r} carries id {ts.id!r}")
        lengths = {sid: len(ts) for sid, ts in self.bottom.items()}
        if len(set(lengths.values())) > 1:
            raise RaggedDataError(f"unequal series lengths: {sorted(set(lengths.values()))}")
        periods = {ts.seasonal_period for ts in self.bottom.values()}
        if len(periods) > 1:
            raise SchemaError(f"mixed seasonal periods: {sorted(periods)}")
        data_ids = set(self.bottom)
        schema_ids = set(self.schema.membership)
        if data_ids != schema_ids:
            missing = sorted(data_ids - schema_ids)
            extra = sorted(schema_ids - data_ids)
            raise SchemaError(
                f"schema mismatch for dataset {self.name!r}: "
                f"missing from schema {missing}, not in data {extra}"
            )

    @property
    def series_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self.bottom))

    @property
    def length(self) -> int:
        return len(next(iter(self.bottom.values())))

    @property
    def seasonal_period(self) -> int:
        return next(iter(self.bottom.values())).seasonal_period

    @cached_property
    def structure(self) -> SummingStructure:
        return SummingStructure.from_schema(self.schema)

    def bottom_values(self) -> dict[str, np.ndarray]:
        return {sid: ts.values for sid, ts in self.bottom.items()}

    def resolve_node(self, node) -> str:
        """Accepts a node name, the top node, or a (dimension, element) pair."""
        if isinstance(node, tuple):
            node = group_node(*node)
        if node not in self.structure.members:
            raise KeyError(f"unknown node {node!r}")
        return node

    def node_values(self, node) -> np.ndarray:
        name = self.resolve_node(node)
        return sum_members(self.bottom_values(), self.structure.members[name])

    def aggregate(self, node) -> TimeSeries:
        """Recompute one aggregate node as the sum of its member series."""
        name = self.resolve_node(node)
        first = next(iter(self.bottom.values()))
        return TimeSeries(name, self.node_values(name),
                          first.seasonal_period, first.start_index)

    def all_node_values(self) -> dict[str, np.ndarray]:
        values = self.bottom_values()
        out: dict[str, np.ndarray] = {}
        for node in self.structure.nodes:
            members = self.structure.members[node]
            out[node] = values[node] if node in values else sum_members(values, members)
        return out

    def split(self, horizon: int) -> tuple[HtsDataset, HtsDataset]:
        """Chronological split; the last `horizon` observations go to test."""
        if not 1 <= horizon < self.length:
            raise ValueError(
                f"horizon must be in [1, {self.length - 1}], got {horizon}"
            )
        cut = self.length - horizon
        train = {
            sid: TimeSeries(sid, ts.values[:cut].copy(), ts.seasonal_period, ts.start_index)
            for sid, ts in self.bottom.items()
        }
        test = {
            sid: TimeSeries(sid, ts.values[cut:].copy(), ts.seasonal_period,
                            ts.start_index + cut)
            for sid, ts in self.bottom.items()
        }
        return (HtsDataset(self.name, train, self.schema),
                HtsDataset(self.name, test, self.schema))


@dataclass
class CoherenceReport:
    """Outcome of comparing candidate aggregates against recomputed ones."""

    ok: bool
    checked: int
    worst_node: str | None
    max_deviation: float
    tolerance: float
    relative: bool

    def __bool__(self) -> bool:
        return self.ok


def summing_check(structure: SummingStructure,
                  bottom_values: Mapping[str, np.ndarray],
                  candidates: Mapping[str, np.ndarray],
                  tolerance: float,
                  relative: bool = False) -> CoherenceReport:
    """Compare candidate node series against sums recomputed from the bottom.

    With ``relative`` the per-element threshold is tolerance * (1 + |true|).
    """
    worst_node = None
    worst = 0.0
    for node, series in candidates.items():
        if node not in structure.members:
            raise KeyError(f"unknown node {node!r}")
        candidate = np.asarray(series, dtype=np.float64)
        true = sum_members(bottom_values, structure.members[node])
        if candidate.shape != true.shape:
            raise ValueError(
                f"node {node!r}: candidate length {candidate.size} != {true.size}"
            )
        deviation = np.abs(candidate - true)
        if relative:
            deviation = deviation / (1.0 + np.abs(true))
        peak = float(deviation.max()) if deviation.size else 0.0
        if worst_node is None or peak > worst:
            worst_node = node
            worst = peak
    return CoherenceReport(ok=worst <= tolerance, checked=len(candidates),
                           worst_node=worst_node, max_deviation=worst,
                           tolerance=tolerance, relative=relative)


def check_coherence(dataset: HtsDataset,
                    candidate_aggregates: Mapping[str, np.ndarray],
                    tolerance: float,
                    relative: bool = False) -> CoherenceReport:
    """True iff every candidate matches the dataset's recomputed aggregate

    within tolerance at every time step; the report names the worst offender.
    """
    candidates = {dataset.resolve_node(node): np.asarray(series, dtype=np.float64)
                  for node, series in candidate_aggregates.items()}
    return summing_check(dataset.structure, dataset.bottom_values(),
                         candidates, tolerance, relative)


def _parse_float(text: str, path: Path, row_number: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DataParseError(f"{path}:{row_number}: non-numeric value {text!r}") from None
    if not np.isfinite(value):
        raise DataParseError(f"{path}:{row_number}: non-finite value {text!r}")
    return value


def _read_data_csv(path: Path) -> dict[str, dict[int, float]]:
    observations: dict[str, dict[int, float]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["series_id", "t", "value"]:
            raise DataParseError(f"{path}: expected header 'series_id,t,value', got {header}")
        for row_number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise DataParseError(f"{path}:{row_number}: expected 3 fields, got {len(row)}")
            sid = row[0].strip()
            if not sid:
                raise DataParseError(f"{path}:{row_number}: empty series id")
            try:
                t = int(row[1])
            except ValueError:
                raise DataParseError(f"{path}:{row_number}: non-integer index {row[1]!r}") from None
            if t < 0:
                raise DataParseError(f"{path}:{row_number}: negative index {t}")
            value = _parse_float(row[2], path, row_number)
            per_series = observations.setdefault(sid, {})
            if t in per_series:
                raise DataParseError(f"{path}:{row_number}: duplicate observation ({sid!r}, t={t})")
            per_series[t] = value
    if not observations:
        raise DataParseError(f"{path}: no data rows")
    return observations


def _read_schema_csv(path: Path) -> GroupSchema:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 2 or header[0].strip() != "series_id":
            raise SchemaError(f"{path}: expected header 'series_id,<dim1>,...', got {header}")
        dimensions = [h.strip() for h in header[1:]]
        membership: dict[str, dict[str, str]] = {}
        for row_number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise SchemaError(f"{path}:{row_number}: expected {len(header)} fields, got {len(row)}")
            sid = row[0].strip()
            if sid in membership:
                raise SchemaError(f"{path}:{row_number}: duplicate schema row for {sid!r}")
            membership[sid] = {dim: cell.strip() for dim, cell in zip(dimensions, row[1:])}
    return GroupSchema(dimensions=dimensions, membership=membership)


def load_dataset(data_path, schema_path, *, name: str | None = None,
                 seasonal_period: int = 1) -> HtsDataset:
    """Load and validate a dataset from long-format data plus a schema file.

    Parameters
    ----------
    data_path : path to a CSV with header ``series_id,t,value``; ``t`` is a
        0-based integer index and rows may appear in any order.
    schema_path : path to a CSV with header ``series_id,<dim1>,<dim2>,...``,
        one row per bottom series.
    name : dataset label; defaults to the data file stem.
    seasonal_period : observations per seasonal cycle, applied to all series.
    """
    data_path = Path(data_path)
    schema_path = Path(schema_path)
    observations = _read_data_csv(data_path)
    schema = _read_schema_csv(schema_path)

    lengths = {sid: len(obs) for sid, obs in observations.items()}
    if len(set(lengths.values())) > 1:
        detail = ", ".join(f"{sid}={n}" for sid, n in sorted(lengths.items()))
        raise RaggedDataError(f"{data_path}: unequal series lengths ({detail})")
    length = next(iter(lengths.values()))
    bottom: dict[str, TimeSeries] = {}
    for sid in sorted(observations):
        obs = observations[sid]
        missing = sorted(set(range(length)) - set(obs))
        if missing:
            raise DataParseError(
                f"{data_path}: series {sid!r} is missing observations at t={missing[:5]}"
            )
        values = np.array([obs[t] for t in range(length)])
        bottom[sid] = TimeSeries(sid, values, seasonal_period=seasonal_period)

    return HtsDataset(name=name or data_path.stem, bottom=bottom, schema=schema)


def write_data_csv(dataset: HtsDataset, path) -> None:
    """Write bottom series in the long format accepted by load_dataset."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["series_id", "t", "value"])
        for sid in dataset.series_ids:
            for t, value in enumerate(dataset.bottom[sid].values):
                writer.writerow([sid, t, repr(float(value))])


def write_schema_csv(schema: GroupSchema, path) -> None:
    """Write a schema in the format accepted by load_dataset."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["series_id", *schema.dimensions])
        for sid in sorted(schema.membership):
            row = schema.membership[sid]
            writer.writerow([sid, *(row[dim] for dim in schema.dimensions)])
