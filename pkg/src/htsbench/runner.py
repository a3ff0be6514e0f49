"""Experiment orchestration: seeded sweeps, resumable cells, report files.

A run is a set of independent cells: one evaluation cell per (dataset,
transformation, version, sample, method) and one distance cell per
(dataset, transformation, version). Each cell writes its rows to a private
staging file that is atomically renamed on completion, so an interrupted
run can be resumed by skipping every staged cell. Final CSVs are always
rebuilt from the staged files in sorted order, which makes output bytes
independent of scheduling, thread count, and interruption history.
"""

from __future__ import annotations

import csv
import json
import logging
import os
import re
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from zlib import crc32

import numpy as np

from ._version import __version__
from .charts import emit_line_chart, emit_radar_chart, emit_ridge_data
from .config import ExperimentConfig, validate_datasets
from .distance import DistanceDistribution, pairwise_distribution, pooled_bin_edges
from .errors import ConfigError
from .evaluate import (EvalRecord, LEVEL_BOTTOM, LEVEL_TOP, RankTable,
                       aggregate_ranks, evaluate_run, group_level, rank_methods)
from .forecast import coherence_deviation, run_method, write_forecast_csv
from .hts import HtsDataset, write_data_csv
from .transforms import KINDS, ORIGINAL, generate_variants, make_variant

log = logging.getLogger(__name__)

RESULTS_HEADER = ["dataset", "transformation", "version", "sample", "method",
                  "level", "mase"]
RANKS_HEADER = ["dataset", "transformation", "version", "method", "rank"]
MEAN_RANKS_HEADER = ["transformation", "version", "method", "mean_rank"]
DISTANCES_HEADER = ["dataset", "transformation", "version", "pair_a", "pair_b", "dtw"]
HISTOGRAM_BINS = 40


def _fmt_float(x: float) -> str:
    return repr(float(x))


def _version_label(version: int | None) -> str:
    return ORIGINAL if version is None else str(version)


@dataclass(frozen=True)
class EvalCell:
    dataset: str
    transformation: str
    version: int | None
    sample: int
    method: str

    @property
    def cell_id(self) -> str:
        return (f"eval::{self.dataset}::{self.transformation}"
                f"::{_version_label(self.version)}::{self.sample}::{self.method}")


@dataclass(frozen=True)
class DistanceCell:
    dataset: str
    transformation: str
    version: int | None
    samples: tuple[int, ...]

    @property
    def cell_id(self) -> str:
        return (f"dtw::{self.dataset}::{self.transformation}"
                f"::{_version_label(self.version)}")


@dataclass
class RunManifest:
    """Per-cell completion status for one experiment run."""

    config_hash: str
    tool_version: str = __version__
    started: str = ""
    finished: str = ""
    cells: dict[str, dict] = field(default_factory=dict)

    @property
    def failed_cells(self) -> list[str]:
        return sorted(cid for cid, info in self.cells.items()
                      if info.get("status") == "failed")

    @property
    def any_failed(self) -> bool:
        return bool(self.failed_cells)

    def save(self, path: Path) -> None:
        payload = {"config_hash": self.config_hash, "tool_version": self.tool_version,
                   "started": self.started, "finished": self.finished,
                   "cells": self.cells}
        _atomic_write_text(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")

    @classmethod
    def load(cls, path: Path) -> RunManifest:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        return cls(config_hash=payload["config_hash"],
                   tool_version=payload.get("tool_version", ""),
                   started=payload.get("started", ""),
                   finished=payload.get("finished", ""),
                   cells=payload.get("cells", {}))


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _atomic_write_rows(path: Path, header: list[str], rows: list[list[str]]) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    os.replace(tmp, path)


def _staging_name(cell_id: str) -> str:
    safe = re.sub(r"[^A-Za-z0-9_.-]+", "_", cell_id)
    return f"{safe}__{crc32(cell_id.encode('utf-8')):08x}.csv"


def _read_rows(path: Path) -> list[list[str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader, None)
        return [row for row in reader if row]


class ExperimentRunner:
    """Executes the cells of one configured experiment."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.datasets = validate_datasets(config)
        self.methods = {m.label: m for m in config.methods}
        self.horizons = {d.name: d.horizon for d in config.datasets}
        self.run_dir = config.run_dir()
        self.cells_dir = self.run_dir / "cells"
        self.charts_dir = self.run_dir / "charts"

    # ---------------------------------------------------------------- cells

    def eval_cells(self) -> list[EvalCell]:
        cells = []
        for name in sorted(self.datasets):
            for method in sorted(self.methods):
                cells.append(EvalCell(name, ORIGINAL, None, 0, method))
            for kind in self.config.kinds:
                for version in range(self.config.num_versions):
                    for sample in range(self.config.num_samples):
                        for method in sorted(self.methods):
                            cells.append(EvalCell(name, kind, version, sample, method))
        return cells

    def distance_cells(self) -> list[DistanceCell]:
        samples = (tuple(range(self.config.num_samples))
                   if self.config.dtw_all_samples else (0,))
        cells = []
        for name in sorted(self.datasets):
            cells.append(DistanceCell(name, ORIGINAL, None, (0,)))
            for kind in self.config.kinds:
                for version in range(self.config.num_versions):
                    cells.append(DistanceCell(name, kind, version, samples))
        return cells

    def _variant_data(self, dataset_name: str, transformation: str,
                      version: int | None, sample: int):
        dataset = self.datasets[dataset_name]
        if transformation == ORIGINAL:
            return dataset, ORIGINAL
        variant = make_variant(dataset, transformation, version, sample,
                               self.config.master_seed, self.config.base_sigma,
                               self.config.knots)
        return variant.data, variant.provenance

    def _compute_eval_cell(self, cell: EvalCell) -> tuple[list[list[str]], dict]:
        data, key = self._variant_data(cell.dataset, cell.transformation,
                                       cell.version, cell.sample)
        method = self.methods[cell.method]
        horizon = self.horizons[cell.dataset]
        run = run_method(data, method.forecaster, method.reconciliation,
                         horizon, self.config.mint)
        excluded: list[str] = []
        records = evaluate_run(run, data, key, excluded)
        rows = [[r.dataset, r.transformation, r.version_label, str(r.sample),
                 r.method, r.level, _fmt_float(r.mase)] for r in records]
        info: dict = {}
        if method.reconciliation in ("bottom_up", "mint"):
            info["coherence_rel"] = coherence_deviation(run, data.structure)
        if excluded:
            info["excluded"] = sorted(set(excluded))
        if self.config.dump_forecasts:
            dumps = self.run_dir / "forecasts"
            dumps.mkdir(parents=True, exist_ok=True)
            name = (f"{cell.dataset}__{cell.transformation}"
                    f"__v{_version_label(cell.version)}__s{cell.sample}"
                    f"__{cell.method}.csv")
            write_forecast_csv(run, data.structure, dumps / name)
        return rows, info

    def _compute_distance_cell(self, cell: DistanceCell) -> tuple[list[list[str]], dict]:
        rows = []
        for sample in cell.samples:
            data, _ = self._variant_data(cell.dataset, cell.transformation,
                                         cell.version, sample)
            dist = pairwise_distribution(data, self.config.dtw, level=LEVEL_BOTTOM,
                                         normalize=self.config.dtw_normalize)
            for (a, b), value in zip(dist.pairs, dist.values):
                rows.append([cell.dataset, cell.transformation,
                             _version_label(cell.version), a, b, _fmt_float(value)])
        return rows, {}

    # ------------------------------------------------------------ execution

    def execute(self, cells, resume: bool = False, jobs: int = 1) -> RunManifest:
        self.run_dir.mkdir(parents=True, exist_ok=True)
        self.cells_dir.mkdir(parents=True, exist_ok=True)
        manifest = RunManifest(config_hash=self.config.hash(),
                               started=datetime.now(timezone.utc).isoformat())

        def work(cell):
            path = self.cells_dir / _staging_name(cell.cell_id)
            if resume and path.exists():
                return {"status": "done", "reused": True}
            begin = time.perf_counter()
            if isinstance(cell, EvalCell):
                header = RESULTS_HEADER
                rows, info = self._compute_eval_cell(cell)
            else:
                header = DISTANCES_HEADER
                rows, info = self._compute_distance_cell(cell)
            _atomic_write_rows(path, header, rows)
            info.update(status="done", seconds=round(time.perf_counter() - begin, 4))
            return info

        def failure(cell, exc) -> dict:
            log.warning("cell %s failed: %s", cell.cell_id, exc)
            return {"status": "failed", "reason": f"{type(exc).__name__}: {exc}"}

        jobs = max(1, int(jobs))
        if jobs == 1:
            for cell in cells:
                try:
                    info = work(cell)
                except Exception as exc:  # cell failures never abort the sweep
                    info = failure(cell, exc)
                manifest.cells[cell.cell_id] = info
        else:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                futures = {pool.submit(work, cell): cell for cell in cells}
                for future in as_completed(futures):
                    cell = futures[future]
                    try:
                        info = future.result()
                    except Exception as exc:
                        info = failure(cell, exc)
                    manifest.cells[cell.cell_id] = info
        manifest.finished = datetime.now(timezone.utc).isoformat()
        return manifest

    # ---------------------------------------------------------- aggregation

    def _staged_rows(self, cells) -> list[list[str]]:
        rows: list[list[str]] = []
        for cell in cells:
            path = self.cells_dir / _staging_name(cell.cell_id)
            if path.exists():
                rows.extend(_read_rows(path))
        return rows

    def _level_order(self, dataset: str) -> dict[str, int]:
        schema = self.datasets[dataset].schema
        levels = [LEVEL_BOTTOM] + [group_level(d) for d in schema.dimensions] + [LEVEL_TOP]
        return {level: i for i, level in enumerate(levels)}

    def _transform_order(self, transformation: str) -> int:
        if transformation == ORIGINAL:
            return -1
        return KINDS.index(transformation) if transformation in KINDS else len(KINDS)

    def _sorted_eval_rows(self, rows: list[list[str]]) -> list[list[str]]:
        orders = {name: self._level_order(name) for name in self.datasets}

        def key(row):
            dataset, transformation, version, sample, method, level, _ = row
            return (dataset, self._transform_order(transformation),
                    -1 if version == ORIGINAL else int(version), int(sample),
                    method, orders[dataset].get(level, 99))

        return sorted(rows, key=key)

    def _records_from_rows(self, rows: list[list[str]]) -> list[EvalRecord]:
        records = []
        for dataset, transformation, version, sample, method, level, mase in rows:
            records.append(EvalRecord(
                dataset=dataset, transformation=transformation,
                version=None if version == ORIGINAL else int(version),
                sample=int(sample), method=method, level=level, mase=float(mase)))
        return records

    def _rank_tables(self, records: list[EvalRecord]) -> tuple[list[RankTable], list[str]]:
        tables = []
        gaps = []
        for name in sorted(self.datasets):
            keys: list[tuple[str, int | None]] = [(ORIGINAL, None)]
            for kind in self.config.kinds:
                keys.extend((kind, v) for v in range(self.config.num_versions))
            for transformation, version in keys:
                try:
                    tables.append(rank_methods(records, name, transformation, version))
                except ValueError as exc:
                    gaps.append(f"{name}/{transformation}/{_version_label(version)}: {exc}")
        return tables, gaps

    def _distance_distributions(self, rows: list[list[str]]):
        grouped: dict[tuple[str, str, str], list[tuple[str, str, float]]] = {}
        for dataset, transformation, version, a, b, value in rows:
            grouped.setdefault((dataset, transformation, version), []).append(
                (a, b, float(value)))
        out: dict[tuple[str, str, str], DistanceDistribution] = {}
        for key, entries in grouped.items():
            entries.sort(key=lambda e: (e[0], e[1]))
            out[key] = DistanceDistribution(
                pairs=tuple((a, b) for a, b, _ in entries),
                values=np.array([v for _, _, v in entries]))
        return out

    def _summary_rows(self, distributions) -> list[dict]:
        rows: list[dict] = []
        for name in sorted(self.datasets):
            local = {key: dist for key, dist in distributions.items() if key[0] == name}
            if not local:
                continue
            edges = pooled_bin_edges(local.values(), bins=HISTOGRAM_BINS)
            ordered = sorted(local, key=lambda k: (self._transform_order(k[1]),
                                                   -1 if k[2] == ORIGINAL else int(k[2])))
            for key in ordered:
                dist = local[key]
                counts = dist.histogram(edges)
                for i, count in enumerate(counts):
                    rows.append({"dataset": key[0], "transformation": key[1],
                                 "version": key[2], "mean": _fmt_float(dist.mean),
                                 "sd": _fmt_float(dist.sd),
                                 "bin_lo": _fmt_float(edges[i]),
                                 "bin_hi": _fmt_float(edges[i + 1]),
                                 "count": str(int(count))})
        return rows

    def write_eval_outputs(self, eval_cells) -> list[EvalRecord]:
        rows = self._sorted_eval_rows(self._staged_rows(eval_cells))
        _atomic_write_rows(self.run_dir / "results.csv", RESULTS_HEADER, rows)
        records = self._records_from_rows(rows)
        self.write_rank_outputs(records)
        self._write_results_tables(records)
        return records

    def write_rank_outputs(self, records: list[EvalRecord]) -> list[RankTable]:
        tables, gaps = self._rank_tables(records)
        if gaps:
            log.warning("rank gaps: %s", "; ".join(gaps))
        rank_rows = []
        for table in tables:
            for method in sorted(table.ranks):
                rank_rows.append([table.dataset, table.transformation,
                                  _version_label(table.version), method,
                                  _fmt_float(table.ranks[method])])
        rank_rows.sort(key=lambda r: (r[0], self._transform_order(r[1]),
                                      -1 if r[2] == ORIGINAL else int(r[2]), r[3]))
        _atomic_write_rows(self.run_dir / "ranks.csv", RANKS_HEADER, rank_rows)

        mean_rows = []
        if tables:
            for (transformation, version), per_method in aggregate_ranks(tables).items():
                for method, mean_rank in per_method.items():
                    mean_rows.append([transformation, version, method,
                                      _fmt_float(mean_rank)])
            mean_rows.sort(key=lambda r: (self._transform_order(r[0]),
                                          -1 if r[1] == ORIGINAL else int(r[1]), r[2]))
        _atomic_write_rows(self.run_dir / "mean_ranks.csv", MEAN_RANKS_HEADER, mean_rows)
        return tables

    def _write_results_tables(self, records: list[EvalRecord]) -> None:
        for name in sorted(self.datasets):
            schema = self.datasets[name].schema
            levels = [LEVEL_BOTTOM] + [group_level(d) for d in schema.dimensions] + [LEVEL_TOP]
            header = ["dataset", "method", "bottom", *schema.dimensions, "top"]
            scores: dict[str, dict[str, float]] = {}
            for record in records:
                if record.dataset == name and record.transformation == ORIGINAL:
                    scores.setdefault(record.method, {})[record.level] = record.mase
            rows = []
            for method in sorted(scores):
                per_level = scores[method]
                rows.append([name, method] + [
                    _fmt_float(per_level[level]) if level in per_level else ""
                    for level in levels])
            _atomic_write_rows(self.run_dir / f"results_table__{name}.csv", header, rows)

    def write_distance_outputs(self, distance_cells) -> list[dict]:
        rows = self._staged_rows(distance_cells)
        rows.sort(key=lambda r: (r[0], self._transform_order(r[1]),
                                 -1 if r[2] == ORIGINAL else int(r[2]), r[3], r[4]))
        _atomic_write_rows(self.run_dir / "distances.csv", DISTANCES_HEADER, rows)
        summary = self._summary_rows(self._distance_distributions(rows))
        _atomic_write_rows(self.run_dir / "distance_summary.csv",
                           [*summary[0].keys()] if summary else
                           ["dataset", "transformation", "version", "mean", "sd",
                            "bin_lo", "bin_hi", "count"],
                           [list(row.values()) for row in summary])
        return summary

    def write_charts(self, records: list[EvalRecord], tables: list[RankTable],
                     summary_rows: list[dict]) -> None:
        self.charts_dir.mkdir(parents=True, exist_ok=True)
        by_key = {(t.dataset, t.transformation, t.version): t for t in tables}
        axis_labels = [ORIGINAL] + [f"v{v}" for v in range(self.config.num_versions)]
        for name in sorted(self.datasets):
            if any(r.dataset == name and r.transformation != ORIGINAL for r in records):
                emit_line_chart(records, name, self.charts_dir / f"lines__{name}.svg")
            for kind in self.config.kinds:
                keys = [(name, ORIGINAL, None)] + [
                    (name, kind, v) for v in range(self.config.num_versions)]
                if not all(key in by_key for key in keys):
                    continue
                methods = sorted(by_key[keys[0]].ranks)
                ranks = {m: [by_key[key].ranks[m] for key in keys] for m in methods}
                if len(axis_labels) >= 3:
                    emit_radar_chart(ranks, axis_labels,
                                     self.charts_dir / f"radar__{name}__{kind}.svg",
                                     title=f"{name}: ranks under {kind}")
        if tables:
            mean_ranks = aggregate_ranks(tables)
            agg_axes = []
            keys = []
            if (ORIGINAL, ORIGINAL) in mean_ranks:
                agg_axes.append(ORIGINAL)
                keys.append((ORIGINAL, ORIGINAL))
            for kind in self.config.kinds:
                for v in range(self.config.num_versions):
                    key = (kind, str(v))
                    if key in mean_ranks:
                        agg_axes.append(f"{kind}:v{v}")
                        keys.append(key)
            methods = sorted({m for key in keys for m in mean_ranks[key]})
            if len(agg_axes) >= 3 and methods and all(
                    set(mean_ranks[key]) == set(methods) for key in keys):
                ranks = {m: [mean_ranks[key][m] for key in keys] for m in methods}
                emit_radar_chart(ranks, agg_axes,
                                 self.charts_dir / "radar__aggregate.svg",
                                 title="mean ranks across datasets")
        if summary_rows:
            emit_ridge_data(summary_rows, self.charts_dir / "ridge.svg",
                            self.charts_dir / "ridge.csv")


def run_experiment(config: ExperimentConfig, *, resume: bool = False,
                   jobs: int = 1) -> RunManifest:
    """Execute the full pipeline for one config; returns the manifest.

    Evaluates every method on the original and every variant dataset,
    computes DTW distance distributions, and writes all report CSVs, charts,
    and ``manifest.json`` into the hash-keyed run directory. Deterministic
    given the config's master seed; per-cell failures are recorded without
    aborting the sweep.
    """
    runner = ExperimentRunner(config)
    eval_cells = runner.eval_cells()
    distance_cells = runner.distance_cells()
    manifest = runner.execute([*eval_cells, *distance_cells],
                              resume=resume, jobs=jobs)
    records = runner.write_eval_outputs(eval_cells)
    summary_rows = runner.write_distance_outputs(distance_cells)
    tables, _ = runner._rank_tables(records)
    runner.write_charts(records, tables, summary_rows)
    manifest.save(runner.run_dir / "manifest.json")
    return manifest


def run_transform_only(config: ExperimentConfig) -> list[Path]:
    """Write every variant dataset as a CSV under <run_dir>/variants."""
    runner = ExperimentRunner(config)
    out_dir = runner.run_dir / "variants"
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name in sorted(runner.datasets):
        dataset = runner.datasets[name]
        for variant in generate_variants(dataset, config.kinds, config.num_versions,
                                         config.num_samples, config.master_seed,
                                         config.base_sigma, config.knots):
            path = out_dir / variant.provenance.filename(name)
            write_data_csv(variant.data, path)
            written.append(path)
    return written


def run_distances_only(config: ExperimentConfig, *, resume: bool = False,
                       jobs: int = 1) -> RunManifest:
    """Compute only the DTW distance distributions and their CSVs."""
    runner = ExperimentRunner(config)
    cells = runner.distance_cells()
    manifest = runner.execute(cells, resume=resume, jobs=jobs)
    runner.write_distance_outputs(cells)
    manifest.save(runner.run_dir / "manifest.json")
    return manifest


def read_results_csv(path) -> list[EvalRecord]:
    """Parse a results.csv back into evaluation records."""
    records = []
    for row in _read_rows(Path(path)):
        dataset, transformation, version, sample, method, level, mase = row
        records.append(EvalRecord(
            dataset=dataset, transformation=transformation,
            version=None if version == ORIGINAL else int(version),
            sample=int(sample), method=method, level=level, mase=float(mase)))
    return records


def read_distance_summary_csv(path) -> list[dict]:
    with open(Path(path), newline="", encoding="utf-8") as fh:
        return [dict(row) for row in csv.DictReader(fh)]


def rerank_from_results(config: ExperimentConfig) -> None:
    """Recompute ranks.csv and mean_ranks.csv from an existing results.csv."""
    runner = ExperimentRunner(config)
    results = runner.run_dir / "results.csv"
    if not results.exists():
        raise FileNotFoundError(f"no results.csv under {runner.run_dir}; run first")
    runner.write_rank_outputs(read_results_csv(results))


def plot_from_outputs(config: ExperimentConfig) -> None:
    """Re-emit every chart from the CSVs of a completed run."""
    runner = ExperimentRunner(config)
    results = runner.run_dir / "results.csv"
    if not results.exists():
        raise FileNotFoundError(f"no results.csv under {runner.run_dir}; run first")
    records = read_results_csv(results)
    tables, _ = runner._rank_tables(records)
    summary_path = runner.run_dir / "distance_summary.csv"
    summary_rows = read_distance_summary_csv(summary_path) if summary_path.exists() else []
    runner.write_charts(records, tables, summary_rows)
