"""Synthetic grouped datasets for demos and the acceptance suite.

Each bottom series is trend + seasonal cycle + Gaussian noise with
per-series parameters drawn from a seeded substream, so the whole dataset
is a pure function of the master seed.
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from .hts import GroupSchema, HtsDataset, TimeSeries, write_data_csv, write_schema_csv
from .seeding import substream


def make_synthetic_dataset(name: str = "synthetic", first_elements: int = 4,
                           second_elements: int = 6, length: int = 120,
                           seasonal_period: int = 12, seed: int = 42,
                           dimensions: tuple[str, str] = ("region", "category")) -> HtsDataset:
    """Grouped dataset with first_elements x second_elements bottom series."""
    dim1, dim2 = dimensions
    membership: dict[str, dict[str, str]] = {}
    bottom: dict[str, TimeSeries] = {}
    t = np.arange(length, dtype=np.float64)
    for i in range(first_elements):
        for j in range(second_elements):
            e1 = f"{dim1[0]}{i + 1}"
            e2 = f"{dim2[0]}{j + 1}"
            sid = f"{e1}_{e2}"
            rng = substream(seed, name, sid)
            base = rng.uniform(20.0, 80.0)
            slope = rng.uniform(-0.02, 0.06)
            amplitude = rng.uniform(3.0, 12.0)
            # Mostly shared seasonal phase: related series move together.
            phase = rng.uniform(0.0, 2.0)
            noise_sd = rng.uniform(0.5, 2.0)
            values = (base + slope * t
                      + amplitude * np.sin(2.0 * np.pi * (t + phase) / seasonal_period)
                      + rng.normal(0.0, noise_sd, size=length))
            membership[sid] = {dim1: e1, dim2: e2}
            bottom[sid] = TimeSeries(sid, values, seasonal_period=seasonal_period)
    schema = GroupSchema(dimensions=[dim1, dim2], membership=membership)
    return HtsDataset(name=name, bottom=bottom, schema=schema)


def write_synthetic_csvs(directory, **kwargs) -> tuple[Path, Path]:
    """Write a synthetic dataset's data and schema CSVs; returns the paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    dataset = make_synthetic_dataset(**kwargs)
    data_path = directory / f"{dataset.name}.csv"
    schema_path = directory / f"{dataset.name}_schema.csv"
    write_data_csv(dataset, data_path)
    write_schema_csv(dataset.schema, schema_path)
    return data_path, schema_path


if __name__ == "__main__":
    target = sys.argv[1] if len(sys.argv) > 1 else "."
    data, schema = write_synthetic_csvs(target)
    print(f"wrote {data} and {schema}")
