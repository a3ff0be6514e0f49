import re

import numpy as np
import pytest

from htsbench.charts import emit_line_chart, emit_radar_chart, emit_ridge_data
from htsbench.evaluate import EvalRecord


def record(method, transformation, version, sample, mase, level="top", dataset="d"):
    return EvalRecord(dataset=dataset, transformation=transformation,
                      version=version, sample=sample, method=method,
                      level=level, mase=mase)


@pytest.fixture
def flat_records():
    records = [record("m1", "orig", None, 0, 1.5)]
    records += [record("m1", "jitter", v, 0, 1.5) for v in range(4)]
    return records


class TestLineChart:
    def test_flat_curve_is_horizontal(self, flat_records, tmp_path):
        path = emit_line_chart(flat_records, "d", tmp_path / "lines.svg")
        svg = path.read_text()
        points = re.search(r'class="level-line"[^>]*points="([^"]+)"', svg).group(1)
        ys = {pair.split(",")[1] for pair in points.split()}
        assert len(ys) == 1

    def test_rerender_is_byte_identical(self, flat_records, tmp_path):
        a = emit_line_chart(flat_records, "d", tmp_path / "a.svg").read_bytes()
        b = emit_line_chart(flat_records, "d", tmp_path / "b.svg").read_bytes()
        assert a == b

    def test_panel_and_line_counts(self, tmp_path):
        records = []
        for method in ("m1", "m2", "m3"):
            for level in ("bottom", "top"):
                records.append(record(method, "orig", None, 0, 1.0, level))
                for kind in ("jitter", "scaling"):
                    for v in range(3):
                        records.append(record(method, kind, v, 0,
                                              1.0 + 0.1 * v, level))
        svg = emit_line_chart(records, "d", tmp_path / "grid.svg").read_text()
        assert svg.count('class="panel"') == 3 * 2
        assert svg.count('class="level-line"') == 3 * 2 * 2

    def test_empty_selection_is_error(self, tmp_path):
        with pytest.raises(ValueError):
            emit_line_chart([], "d", tmp_path / "x.svg")


class TestRadarChart:
    def test_needs_three_axes(self, tmp_path):
        with pytest.raises(ValueError):
            emit_radar_chart({"m": [1.0, 2.0]}, ["orig", "v0"], tmp_path / "r.svg")

    def test_axis_count(self, tmp_path):
        ranks = {"m1": [1.0] * 7, "m2": [2.0] * 7}
        labels = ["orig"] + [f"v{v}" for v in range(6)]
        svg = emit_radar_chart(ranks, labels, tmp_path / "r.svg").read_text()
        assert svg.count('class="axis"') == 7

    def test_best_method_polygon_is_smallest_regular(self, tmp_path):
        ranks = {"best": [1.0, 1.0, 1.0, 1.0], "worst": [2.0, 2.0, 2.0, 2.0]}
        svg = emit_radar_chart(ranks, ["a", "b", "c", "d"],
                               tmp_path / "r.svg").read_text()
        polys = {m.group(1): m.group(2) for m in re.finditer(
            r'class="method-polygon" data-method="([^"]+)" points="([^"]+)"', svg)}
        cx, cy = None, None
        circle = re.search(r'<circle cx="([\d.]+)" cy="([\d.]+)"', svg)
        cx, cy = float(circle.group(1)), float(circle.group(2))

        def radii(points):
            coords = [float(v) for v in points.replace(",", " ").split()]
            pts = list(zip(coords[::2], coords[1::2]))
            return [np.hypot(x - cx, y - cy) for x, y in pts]

        best = radii(polys["best"])
        worst = radii(polys["worst"])
        assert np.allclose(best, best[0], atol=0.01)     # regular polygon
        assert max(best) < min(worst)                    # closest to center


def summary_row(dataset, transformation, version, bin_lo, bin_hi, count,
                mean=1.0, sd=0.5):
    return {"dataset": dataset, "transformation": transformation,
            "version": version, "mean": mean, "sd": sd,
            "bin_lo": bin_lo, "bin_hi": bin_hi, "count": count}


class TestRidge:
    def test_orig_only_single_silhouette(self, tmp_path):
        rows = [summary_row("d", "orig", "orig", 0.0, 1.0, 3),
                summary_row("d", "orig", "orig", 1.0, 2.0, 5)]
        csv_path, svg_path = emit_ridge_data(rows, tmp_path / "r.svg",
                                             tmp_path / "r.csv")
        svg = svg_path.read_text()
        assert svg.count('class="silhouette"') == 1

    def test_identical_distributions_identical_silhouettes(self, tmp_path):
        bins = [(0.0, 1.0, 3), (1.0, 2.0, 5), (2.0, 3.0, 2)]
        rows = [summary_row("d", "orig", "orig", lo, hi, c) for lo, hi, c in bins]
        rows += [summary_row("d", "jitter", "0", lo, hi, c) for lo, hi, c in bins]
        _, svg_path = emit_ridge_data(rows, tmp_path / "r.svg", tmp_path / "r.csv")
        svg = svg_path.read_text()
        points = re.findall(r'<g class="silhouette"[^>]*>'
                            r'<polygon points="([^"]+)"', svg)
        assert len(points) == 2
        assert points[0] == points[1]

    def test_silhouette_drawn_from_bins_exactly(self, tmp_path):
        rows = [summary_row("d", "orig", "orig", 0.0, 2.0, 4),
                summary_row("d", "orig", "orig", 2.0, 4.0, 8)]
        csv_path, svg_path = emit_ridge_data(rows, tmp_path / "r.svg",
                                             tmp_path / "r.csv")
        svg = svg_path.read_text()
        points = re.search(r'<g class="silhouette"[^>]*><polygon points="([^"]+)"',
                           svg).group(1).split()
        # baseline start, one apex per bin, baseline end
        assert len(points) == 4
        xs = [float(p.split(",")[0]) for p in points]
        ys = [float(p.split(",")[1]) for p in points]
        assert xs[0] == 0.0                 # left edge of first bin
        assert xs[1] == pytest.approx(60.0)  # mid of [0,2] over [0,4] * 240 panel
        assert xs[2] == pytest.approx(180.0)
        # peak bin twice as tall as the half-count bin, measured from baseline
        assert ys[0] - ys[2] == pytest.approx(2 * (ys[0] - ys[1]), rel=1e-6)
        # the CSV mirrors the input rows
        assert csv_path.read_text().count("orig") >= 2

    def test_empty_rows_error(self, tmp_path):
        with pytest.raises(ValueError):
            emit_ridge_data([], tmp_path / "r.svg", tmp_path / "r.csv")
