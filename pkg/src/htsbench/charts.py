"""Deterministic SVG report charts.

Charts are emitted as plain SVG text with fixed element ids and no
timestamps, so rendering the same data twice produces byte-identical files.
Three chart families mirror the result tables: small-multiple robustness
lines (method x transformation panels), rank radars, and ridge silhouettes
of the DTW distance distributions drawn directly from the exported
histogram bins.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .evaluate import EvalRecord, robustness_curve
from .transforms import KINDS, ORIGINAL

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#8c564b", "#17becf", "#7f7f7f", "#bcbd22", "#e377c2")
ORIG_COLOR = "#e08214"
RIDGE_BLUES = ("#08306b", "#2f6db2", "#5b97c9", "#87b7dc", "#b3d3ec", "#d7e6f5")

_FONT = 'font-family="Helvetica, Arial, sans-serif"'


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _svg_document(width: int, height: int, body: list[str]) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{height}" viewBox="0 0 {width} {height}">')
    return "\n".join([head, *body, "</svg>"]) + "\n"


def _text(x: float, y: float, content: str, size: int = 10,
          anchor: str = "start", color: str = "#333333") -> str:
    return (f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-size="{size}" '
            f'text-anchor="{anchor}" fill="{color}" {_FONT}>{content}</text>')


def _ordered_kinds(found: set[str]) -> list[str]:
    known = [k for k in KINDS if k in found]
    return known + sorted(found - set(KINDS))


def _version_sort_key(label: str):
    return (0, 0) if label == ORIGINAL else (1, int(label.lstrip("v")))


def emit_line_chart(records: Iterable[EvalRecord], dataset: str, path) -> Path:
    """Small-multiples grid of robustness curves for one dataset.

    Columns are methods, rows are transformations, one polyline per
    hierarchy level; the x axis runs orig, v0, ... in intensity order.
    """
    records = [r for r in records if r.dataset == dataset]
    if not records:
        raise ValueError(f"no records for dataset {dataset!r}")
    methods = sorted({r.method for r in records})
    kinds = _ordered_kinds({r.transformation for r in records} - {ORIGINAL})
    if not kinds:
        raise ValueError(f"no transformed records for dataset {dataset!r}")
    levels = sorted({r.level for r in records})

    panel_w, panel_h = 190, 130
    margin_left, margin_top = 90, 58
    pad = 14
    width = margin_left + len(methods) * (panel_w + pad) + 20
    height = margin_top + len(kinds) * (panel_h + pad) + 40

    body: list[str] = [f'<rect width="{width}" height="{height}" fill="#ffffff"/>']
    body.append(_text(margin_left, 20, f"MASE by transformation intensity: {dataset}",
                      size=13, color="#111111"))
    for i, level in enumerate(levels):
        x = margin_left + i * 130
        color = PALETTE[i % len(PALETTE)]
        body.append(f'<line x1="{_fmt(x)}" y1="32" x2="{_fmt(x + 18)}" y2="32" '
                    f'stroke="{color}" stroke-width="2"/>')
        body.append(_text(x + 22, 35, level, size=9))

    for col, method in enumerate(methods):
        x0 = margin_left + col * (panel_w + pad)
        body.append(_text(x0 + panel_w / 2, margin_top - 6, method, size=10,
                          anchor="middle", color="#111111"))
    for row, kind in enumerate(kinds):
        y0 = margin_top + row * (panel_h + pad)
        body.append(_text(margin_left - 8, y0 + panel_h / 2, kind, size=9,
                          anchor="end"))

    for row, kind in enumerate(kinds):
        for col, method in enumerate(methods):
            x0 = margin_left + col * (panel_w + pad)
            y0 = margin_top + row * (panel_h + pad)
            curves = [robustness_curve(records, dataset, kind, method, level)
                      for level in levels]
            labels = max((c.labels for c in curves), key=len)
            lo = min(min(c.means) for c in curves)
            hi = max(max(c.means) for c in curves)
            span = hi - lo

            def sx(i: int) -> float:
                if len(labels) == 1:
                    return x0 + panel_w / 2
                return x0 + 6 + (panel_w - 12) * i / (len(labels) - 1)

            def sy(value: float) -> float:
                if span == 0:
                    return y0 + panel_h / 2
                return y0 + panel_h - 10 - (panel_h - 20) * (value - lo) / span

            panel = [f'<g class="panel" id="panel-{method}-{kind}">']
            panel.append(f'<rect x="{_fmt(x0)}" y="{_fmt(y0)}" width="{panel_w}" '
                         f'height="{panel_h}" fill="#fbfbfb" stroke="#cccccc"/>')
            for i, level in enumerate(levels):
                curve = curves[i]
                offset = {label: k for k, label in enumerate(labels)}
                points = " ".join(
                    f"{_fmt(sx(offset[label]))},{_fmt(sy(mean))}"
                    for label, mean in zip(curve.labels, curve.means))
                panel.append(f'<polyline class="level-line" data-level="{level}" '
                             f'fill="none" stroke="{PALETTE[i % len(PALETTE)]}" '
                             f'stroke-width="1.5" points="{points}"/>')
            panel.append(_text(x0 + 4, y0 + 12, _fmt(hi), size=8, color="#888888"))
            panel.append(_text(x0 + 4, y0 + panel_h - 3, _fmt(lo), size=8,
                               color="#888888"))
            if row == len(kinds) - 1:
                for i, label in enumerate(labels):
                    panel.append(_text(sx(i), y0 + panel_h + 12, label, size=8,
                                       anchor="middle"))
            panel.append("</g>")
            body.extend(panel)

    path = Path(path)
    path.write_text(_svg_document(width, height, body), encoding="utf-8")
    return path


def emit_radar_chart(ranks_by_method: Mapping[str, Sequence[float]],
                     axis_labels: Sequence[str], path, title: str = "") -> Path:
    """Radar of method ranks: one axis per intensity step, one polygon per

    method, radius proportional to rank (rank 1 sits closest to the center).
    """
    axis_labels = list(axis_labels)
    if len(axis_labels) < 3:
        raise ValueError("radar chart needs at least 3 axes")
    methods = sorted(ranks_by_method)
    if not methods:
        raise ValueError("radar chart needs at least one method")
    for method in methods:
        if len(ranks_by_method[method]) != len(axis_labels):
            raise ValueError(f"method {method!r}: one rank per axis required")

    n_axes = len(axis_labels)
    n_methods = len(methods)
    radius = 150.0
    cx = radius + 80
    cy = radius + 50
    width = int(2 * cx)
    height = int(cy + radius + 30 + 14 * n_methods)

    def point(axis: int, rank: float) -> tuple[float, float]:
        angle = -math.pi / 2 + 2 * math.pi * axis / n_axes
        r = radius * rank / n_methods
        return cx + r * math.cos(angle), cy + r * math.sin(angle)

    body: list[str] = [f'<rect width="{width}" height="{height}" fill="#ffffff"/>']
    if title:
        body.append(_text(cx, 22, title, size=13, anchor="middle", color="#111111"))
    for ring in range(1, n_methods + 1):
        r = radius * ring / n_methods
        body.append(f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(r)}" '
                    f'fill="none" stroke="#dddddd" stroke-dasharray="3,3"/>')
        body.append(_text(cx + 3, cy - r - 2, str(ring), size=8, color="#aaaaaa"))
    for axis, label in enumerate(axis_labels):
        x, y = point(axis, n_methods)
        body.append(f'<line class="axis" x1="{_fmt(cx)}" y1="{_fmt(cy)}" '
                    f'x2="{_fmt(x)}" y2="{_fmt(y)}" stroke="#bbbbbb"/>')
        lx, ly = point(axis, n_methods * 1.12)
        body.append(_text(lx, ly + 3, label, size=9, anchor="middle"))
    for i, method in enumerate(methods):
        color = PALETTE[i % len(PALETTE)]
        points = " ".join(_fmt(c) for axis, rank in enumerate(ranks_by_method[method])
                          for c in point(axis, rank))
        body.append(f'<polygon class="method-polygon" data-method="{method}" '
                    f'points="{points}" fill="{color}" fill-opacity="0.08" '
                    f'stroke="{color}" stroke-width="1.5"/>')
        ly = cy + radius + 24 + 14 * i
        body.append(f'<line x1="{_fmt(cx - radius)}" y1="{_fmt(ly - 3)}" '
                    f'x2="{_fmt(cx - radius + 18)}" y2="{_fmt(ly - 3)}" '
                    f'stroke="{color}" stroke-width="2"/>')
        body.append(_text(cx - radius + 24, ly, method, size=9))

    path = Path(path)
    path.write_text(_svg_document(width, height, body), encoding="utf-8")
    return path


def emit_ridge_data(summary_rows: Iterable[Mapping], svg_path, csv_path) -> tuple[Path, Path]:
    """Ridge silhouettes of DTW distance distributions plus their data CSV.

    ``summary_rows`` are mappings with keys dataset, transformation, version,
    mean, sd, bin_lo, bin_hi, count (one row per histogram bin). Silhouettes
    are drawn from these bins exactly; the original distribution is colored
    distinctly and versions stack upward in intensity order.
    """
    rows = [dict(r) for r in summary_rows]
    if not rows:
        raise ValueError("no distribution summaries to plot")

    csv_path = Path(csv_path)
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset", "transformation", "version", "mean", "sd",
                         "bin_lo", "bin_hi", "count"])
        for row in rows:
            writer.writerow([row["dataset"], row["transformation"], row["version"],
                             row["mean"], row["sd"], row["bin_lo"], row["bin_hi"],
                             row["count"]])

    datasets = sorted({r["dataset"] for r in rows})
    kinds = _ordered_kinds({r["transformation"] for r in rows} - {ORIGINAL})
    panel_w, panel_h = 240, 150
    lane = 16
    margin_left, margin_top = 110, 50
    pad = 16
    n_rows = max(len(kinds), 1)
    width = margin_left + len(datasets) * (panel_w + pad) + 20
    height = margin_top + n_rows * (panel_h + pad) + 30

    body: list[str] = [f'<rect width="{width}" height="{height}" fill="#ffffff"/>']
    body.append(_text(margin_left, 20, "Pairwise DTW distance distributions",
                      size=13, color="#111111"))
    for col, dataset in enumerate(datasets):
        x0 = margin_left + col * (panel_w + pad)
        body.append(_text(x0 + panel_w / 2, margin_top - 6, dataset, size=10,
                          anchor="middle", color="#111111"))

    for row_i, kind in enumerate(kinds or [ORIGINAL]):
        y0 = margin_top + row_i * (panel_h + pad)
        body.append(_text(margin_left - 8, y0 + panel_h / 2, kind, size=9, anchor="end"))
        for col, dataset in enumerate(datasets):
            x0 = margin_left + col * (panel_w + pad)
            members = [r for r in rows if r["dataset"] == dataset
                       and r["transformation"] in (kind, ORIGINAL)]
            if not members:
                continue
            versions = sorted({str(r["version"]) for r in members},
                              key=lambda v: (0, 0) if v == ORIGINAL else (1, int(v)))
            lo = min(float(r["bin_lo"]) for r in members)
            hi = max(float(r["bin_hi"]) for r in members)
            span = (hi - lo) or 1.0
            max_count = max(int(r["count"]) for r in members) or 1
            body.append(f'<rect x="{_fmt(x0)}" y="{_fmt(y0)}" width="{panel_w}" '
                        f'height="{panel_h}" fill="#fbfbfb" stroke="#cccccc"/>')
            for v_i, version in enumerate(versions):
                bins = [r for r in members if str(r["version"]) == version]
                bins.sort(key=lambda r: float(r["bin_lo"]))
                baseline = panel_h - 12 - v_i * lane
                amplitude = lane * 2.2
                # Points are baseline-relative so identical distributions
                # yield identical polygons regardless of stacking offset.
                points = [f"{_fmt((float(bins[0]['bin_lo']) - lo) / span * panel_w)},0.00"]
                for b in bins:
                    x_mid = ((float(b["bin_lo"]) + float(b["bin_hi"])) / 2 - lo) / span * panel_w
                    y = -amplitude * int(b["count"]) / max_count
                    points.append(f"{_fmt(x_mid)},{_fmt(y)}")
                points.append(f"{_fmt((float(bins[-1]['bin_hi']) - lo) / span * panel_w)},0.00")
                if version == ORIGINAL:
                    color = ORIG_COLOR
                else:
                    color = RIDGE_BLUES[min(int(version), len(RIDGE_BLUES) - 1)]
                body.append(
                    f'<g class="silhouette" data-dataset="{dataset}" '
                    f'data-transformation="{kind}" data-version="{version}" '
                    f'transform="translate({_fmt(x0)},{_fmt(y0 + baseline)})">'
                    f'<polygon points="{" ".join(points)}" fill="{color}" '
                    f'fill-opacity="0.55" stroke="{color}"/></g>')

    svg_path = Path(svg_path)
    svg_path.write_text(_svg_document(width, height, body), encoding="utf-8")
    return csv_path, svg_path
