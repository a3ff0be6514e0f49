from pathlib import Path

import numpy as np
import pytest

from htsbench.hts import GroupSchema, HtsDataset, TimeSeries


def build_dataset(values_by_id, membership, dimensions, name="tiny",
                  seasonal_period=1):
    """Assemble an HtsDataset from plain dicts of lists."""
    bottom = {sid: TimeSeries(sid, np.asarray(vals, dtype=float),
                              seasonal_period=seasonal_period)
              for sid, vals in values_by_id.items()}
    schema = GroupSchema(dimensions=list(dimensions), membership=membership)
    return HtsDataset(name=name, bottom=bottom, schema=schema)


@pytest.fixture
def two_series_dataset():
    """a=[1,2,3], b=[3,4,5]; one dimension U with elements x (a) and y (b)."""
    return build_dataset(
        {"a": [1.0, 2.0, 3.0], "b": [3.0, 4.0, 5.0]},
        {"a": {"U": "x"}, "b": {"U": "y"}},
        ["U"],
    )


@pytest.fixture
def retailer_dataset():
    """Four bottom series crossing states {a, b} with products {x, y}."""
    return build_dataset(
        {
            "ax": [1.0, 2.0, 3.0, 4.0],
            "ay": [2.0, 1.0, 2.0, 1.0],
            "bx": [5.0, 5.0, 5.0, 6.0],
            "by": [0.5, 1.5, 2.5, 3.5],
        },
        {
            "ax": {"state": "a", "product": "x"},
            "ay": {"state": "a", "product": "y"},
            "bx": {"state": "b", "product": "x"},
            "by": {"state": "b", "product": "y"},
        },
        ["state", "product"],
    )


@pytest.fixture
def seasonal_dataset():
    """2x2 hierarchy of seasonal series long enough to fit every forecaster."""
    rng = np.random.default_rng(7)
    t = np.arange(60, dtype=float)
    values = {}
    for i, sid in enumerate(["a_x", "a_y", "b_x", "b_y"]):
        values[sid] = (30 + 3 * i + 0.05 * t
                       + (4 + i) * np.sin(2 * np.pi * t / 12)
                       + rng.normal(0, 0.8, t.size))
    return build_dataset(
        values,
        {
            "a_x": {"g1": "a", "g2": "x"},
            "a_y": {"g1": "a", "g2": "y"},
            "b_x": {"g1": "b", "g2": "x"},
            "b_y": {"g1": "b", "g2": "y"},
        },
        ["g1", "g2"],
        seasonal_period=12,
    )


def write_csvs(tmp_path: Path, data_rows, schema_rows):
    data = tmp_path / "data.csv"
    schema = tmp_path / "schema.csv"
    data.write_text("\n".join(data_rows) + "\n", encoding="utf-8")
    schema.write_text("\n".join(schema_rows) + "\n", encoding="utf-8")
    return data, schema
