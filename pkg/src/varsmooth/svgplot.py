"""Deterministic SVG line plots for benchmark CSV files.

The emitted SVG contains no timestamps, ids, or environment-dependent
content, so rerunning a benchmark reproduces the plot byte for byte.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

EPS = 2.220446049250313e-16  # double-precision machine epsilon

PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#17becf",
    "#7f7f7f",
)

WIDTH, HEIGHT = 640, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 80, 24, 36, 56


class PlotDataError(ValueError):
    """CSV content does not match the declared plot schema."""


@dataclass(frozen=True)
class PlotSpec:
    """Declarative description of a line plot over a CSV file.

    mode "wide": ``x_column`` plus one series per remaining column (or per
    ``series_columns`` when given).  mode "grouped_mean": rows are grouped by
    ``group_column``, y values averaged per (group, x).
    """

    mode: str  # "wide" | "grouped_mean"
    x_column: str
    y_column: Optional[str] = None
    group_column: Optional[str] = None
    series_columns: Optional[Tuple[str, ...]] = None
    x_label: str = ""
    y_label: str = ""
    title: str = ""
    y_log: bool = False
    floor_at_eps: bool = False  # replace zeros by machine epsilon (log plots)
    marker_every: int = 0  # 0 disables markers

    def __post_init__(self):
        if self.mode not in ("wide", "grouped_mean"):
            raise ValueError(f"unknown plot mode {self.mode!r}")
        if self.mode == "grouped_mean" and not (self.y_column and self.group_column):
            raise ValueError("grouped_mean mode needs y_column and group_column")


def read_csv_table(path):
    """Parse a CSV with a '# key=value' metadata block.

    Returns (metadata dict, header list, data rows, line number of header).
    """
    metadata = {}
    header = None
    header_line = 0
    rows = []
    with open(path, "r") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, value = body.split("=", 1)
                    metadata[key.strip()] = value.strip()
                continue
            cells = line.split(",")
            if header is None:
                header = cells
                header_line = lineno
            else:
                if len(cells) != len(header):
                    raise PlotDataError(
                        f"{path}: line {lineno}: expected {len(header)} cells, "
                        f"got {len(cells)}"
                    )
                rows.append((lineno, cells))
    if header is None:
        raise PlotDataError(f"{path}: no header row found")
    return metadata, header, rows, header_line


def _column_index(header, name, path, header_line):
    try:
        return header.index(name)
    except ValueError:
        raise PlotDataError(
            f"{path}: line {header_line}: column {name!r} not in header {header}"
        ) from None


def _parse_float(cell, path, lineno, column):
    try:
        return float(cell)
    except ValueError:
        raise PlotDataError(
            f"{path}: line {lineno}: cannot parse {cell!r} in column {column!r}"
        ) from None


def _extract_series(csv_path, spec: PlotSpec):
    """Returns list of (label, xs, ys) from the CSV per the spec."""
    _, header, rows, header_line = read_csv_table(csv_path)
    xi = _column_index(header, spec.x_column, csv_path, header_line)
    series = []
    if spec.mode == "wide":
        names = spec.series_columns or tuple(
            c for c in header if c != spec.x_column
        )
        for name in names:
            yi = _column_index(header, name, csv_path, header_line)
            xs, ys = [], []
            for lineno, cells in rows:
                xs.append(_parse_float(cells[xi], csv_path, lineno, spec.x_column))
                ys.append(_parse_float(cells[yi], csv_path, lineno, name))
            series.append((name, xs, ys))
    else:
        yi = _column_index(header, spec.y_column, csv_path, header_line)
        gi = _column_index(header, spec.group_column, csv_path, header_line)
        groups: dict = {}
        for lineno, cells in rows:
            x = _parse_float(cells[xi], csv_path, lineno, spec.x_column)
            y = _parse_float(cells[yi], csv_path, lineno, spec.y_column)
            bucket = groups.setdefault(cells[gi], {})
            bucket.setdefault(x, []).append(y)
        for name, bucket in groups.items():
            xs = sorted(bucket)
            ys = [sum(bucket[x]) / len(bucket[x]) for x in xs]
            series.append((name, xs, ys))
    return series


def _nice_ticks(lo, hi, count=5):
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        return [lo]
    span = hi - lo
    return [lo + span * i / (count - 1) for i in range(count)]


def _fmt(v):
    return f"{v:.6g}"


def _axis_transforms(series, spec: PlotSpec):
    xs_all = [x for _, xs, _ in series for x in xs]
    ys_all = [y for _, _, ys in series for y in ys]
    if spec.floor_at_eps:
        ys_all = [max(y, EPS) for y in ys_all]
    ys_all = [y for y in ys_all if math.isfinite(y)]
    xs_all = [x for x in xs_all if math.isfinite(x)]
    if not xs_all or not ys_all:
        return None
    x_lo, x_hi = min(xs_all), max(xs_all)
    if spec.y_log:
        ys_pos = [y for y in ys_all if y > 0]
        if not ys_pos:
            return None
        y_lo, y_hi = math.log10(min(ys_pos)), math.log10(max(ys_pos))
    else:
        y_lo, y_hi = min(ys_all), max(ys_all)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad_x = 0.03 * (x_hi - x_lo)
    pad_y = 0.05 * (y_hi - y_lo)
    return (x_lo - pad_x, x_hi + pad_x, y_lo - pad_y, y_hi + pad_y)


def emit_plot(csv_path, spec: PlotSpec, out_path) -> None:
    """Render the CSV as a deterministic SVG line plot.

    An empty data table produces an axes-only SVG and a warning on stderr;
    schema problems raise PlotDataError with the offending line number.
    """
    series = _extract_series(csv_path, spec)
    extent = _axis_transforms(series, spec)
    if extent is None:
        print(f"warning: {csv_path}: no plottable data, drawing axes only",
              file=sys.stderr)

    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B

    def sx(x):
        x_lo, x_hi = extent[0], extent[1]
        return MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w

    def sy(y):
        y_lo, y_hi = extent[2], extent[3]
        if spec.y_log:
            y = math.log10(max(y, EPS))
        return MARGIN_T + (1.0 - (y - y_lo) / (y_hi - y_lo)) * plot_h

    parts: List[str] = []
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">'
    )
    parts.append(f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>')
    axis_style = 'stroke="black" stroke-width="1"'
    x0, y0 = MARGIN_L, HEIGHT - MARGIN_B
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{WIDTH - MARGIN_R}" y2="{y0}" {axis_style}/>')
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{MARGIN_T}" {axis_style}/>')
    if spec.title:
        parts.append(
            f'<text x="{WIDTH // 2}" y="{MARGIN_T - 12}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{spec.title}</text>'
        )
    if spec.x_label:
        parts.append(
            f'<text x="{(MARGIN_L + WIDTH - MARGIN_R) // 2}" y="{HEIGHT - 12}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="12">'
            f"{spec.x_label}</text>"
        )
    if spec.y_label:
        parts.append(
            f'<text x="18" y="{(MARGIN_T + HEIGHT - MARGIN_B) // 2}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="12" '
            f'transform="rotate(-90 18 {(MARGIN_T + HEIGHT - MARGIN_B) // 2})">'
            f"{spec.y_label}</text>"
        )

    if extent is not None:
        for tick in _nice_ticks(extent[0], extent[1]):
            px = sx(tick)
            parts.append(
                f'<line x1="{px:.2f}" y1="{y0}" x2="{px:.2f}" y2="{y0 + 5}" {axis_style}/>'
            )
            parts.append(
                f'<text x="{px:.2f}" y="{y0 + 20}" text-anchor="middle" '
                f'font-family="sans-serif" font-size="11">{_fmt(tick)}</text>'
            )
        for tick in _nice_ticks(extent[2], extent[3]):
            py = MARGIN_T + (1.0 - (tick - extent[2]) / (extent[3] - extent[2])) * plot_h
            label = f"1e{tick:.2f}" if spec.y_log else _fmt(tick)
            parts.append(
                f'<line x1="{x0 - 5}" y1="{py:.2f}" x2="{x0}" y2="{py:.2f}" {axis_style}/>'
            )
            parts.append(
                f'<text x="{x0 - 8}" y="{py + 4:.2f}" text-anchor="end" '
                f'font-family="sans-serif" font-size="11">{label}</text>'
            )
        for idx, (name, xs, ys) in enumerate(series):
            color = PALETTE[idx % len(PALETTE)]
            pts = []
            for x, y in zip(xs, ys):
                if spec.floor_at_eps:
                    y = max(y, EPS)
                if not (math.isfinite(x) and math.isfinite(y)):
                    continue
                if spec.y_log and y <= 0:
                    continue
                pts.append(f"{sx(x):.2f},{sy(y):.2f}")
            if pts:
                parts.append(
                    f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                    f'points="{" ".join(pts)}"/>'
                )
                if spec.marker_every > 0:
                    for j, pt in enumerate(pts):
                        if j % spec.marker_every == 0:
                            px, py = pt.split(",")
                            parts.append(
                                f'<circle cx="{px}" cy="{py}" r="3" fill="{color}"/>'
                            )
            lx = WIDTH - MARGIN_R - 150
            ly = MARGIN_T + 16 + 16 * idx
            parts.append(
                f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 24}" y2="{ly - 4}" '
                f'stroke="{color}" stroke-width="2"/>'
            )
            parts.append(
                f'<text x="{lx + 30}" y="{ly}" font-family="sans-serif" '
                f'font-size="11">{name}</text>'
            )

    parts.append("</svg>")
    with open(out_path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
