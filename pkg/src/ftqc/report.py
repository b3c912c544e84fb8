"""Report serialization: JSON, CSV rows with a fixed column order, SVG line charts.

Output is byte-for-byte deterministic for identical inputs: floats are
written with ``repr`` (shortest round-tripping form), keys keep their
insertion order, and the SVG carries no timestamps.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Iterable, Mapping, Sequence

from .concat import CONCAT_CSV_COLUMNS
from .surface import SURFACE_CSV_COLUMNS

ERROR_COLUMN = "error"

_INT_COLUMNS = {
    "N", "M", "k0", "N_T", "N_S", "N_H", "d", "Q", "distill_level",
    "factory_logical_qubits", "physical_qubits", "level", "S_R_int",
}
_FLOAT_COLUMNS = {"r", "p_ratio", "S_R", "K", "wall_seconds"}
_BOOL_COLUMNS = {"ec_needed"}


def columns_for(code: str) -> tuple[str, ...]:
    return (SURFACE_CSV_COLUMNS if code == "surface" else CONCAT_CSV_COLUMNS) + (ERROR_COLUMN,)


def to_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(rows: Iterable[Mapping], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def _parse(column: str, text: str, code: str):
    if text == "":
        return None
    if column == ERROR_COLUMN:
        return text
    if column in _BOOL_COLUMNS:
        return text == "true"
    if column == "S_R" and code == "concat":
        return int(text)
    if column in _INT_COLUMNS:
        return int(text)
    if column in _FLOAT_COLUMNS:
        return float(text)
    return text


def csv_to_rows(text: str, code: str) -> list[dict]:
    """Inverse of :func:`rows_to_csv` for the sweep columns of ``code``."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    expected = list(columns_for(code))
    if header != expected:
        raise ValueError(f"unexpected CSV header {header}; expected {expected}")
    return [{c: _parse(c, v, code) for c, v in zip(header, line)} for line in reader]


# -- SVG ------------------------------------------------------------------------

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
_W, _H = 640, 400
_ML, _MR, _MT, _MB = 80, 130, 40, 50


def _fmt_tick(v: float, log: bool) -> str:
    if log:
        return f"1e{int(round(v))}"
    return f"{v:g}"


def svg_line_chart(
    series: Mapping[str, Sequence[tuple[float, float]]],
    title: str,
    xlabel: str,
    ylabel: str,
    log_y: bool = False,
) -> str:
    """Minimal standalone SVG: one polyline per series, fixed size and colors.

    Non-positive values are dropped on a log axis.
    """
    pts = {
        name: [(x, math.log10(y) if log_y else y) for x, y in data if not (log_y and y <= 0)]
        for name, data in series.items()
    }
    xs = [x for data in pts.values() for x, _ in data]
    ys = [y for data in pts.values() for _, y in data]
    if not xs:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if log_y:
        y0, y1 = math.floor(y0), math.ceil(y1)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    pw, ph = _W - _ML - _MR, _H - _MT - _MB

    def sx(x):
        return _ML + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return _MT + (1 - (y - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.1f}" y="22" text-anchor="middle" font-size="14">{_esc(title)}</text>',
        f'<rect x="{_ML}" y="{_MT}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    if log_y:
        yticks = [float(v) for v in range(int(y0), int(y1) + 1)]
    else:
        yticks = [y0 + i * (y1 - y0) / 4 for i in range(5)]
    for y in yticks:
        out.append(f'<line x1="{_ML - 4}" y1="{sy(y):.1f}" x2="{_ML}" y2="{sy(y):.1f}" stroke="black"/>')
        out.append(
            f'<text x="{_ML - 6}" y="{sy(y) + 4:.1f}" text-anchor="end">{_fmt_tick(y, log_y)}</text>'
        )
    for x in sorted(set(xs)):
        out.append(f'<line x1="{sx(x):.1f}" y1="{_MT + ph}" x2="{sx(x):.1f}" y2="{_MT + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{sx(x):.1f}" y="{_MT + ph + 18}" text-anchor="middle">{x:g}</text>')
    out.append(f'<text x="{_ML + pw / 2:.1f}" y="{_H - 10}" text-anchor="middle">{_esc(xlabel)}</text>')
    out.append(
        f'<text x="18" y="{_MT + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {_MT + ph / 2:.1f})">{_esc(ylabel)}</text>'
    )
    for i, (name, data) in enumerate(pts.items()):
        color = _PALETTE[i % len(_PALETTE)]
        if data:
            path = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in data)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="2"/>')
            for x, y in data:
                out.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="3" fill="{color}"/>')
        ly = _MT + 16 * (i + 1)
        out.append(f'<line x1="{_W - _MR + 10}" y1="{ly}" x2="{_W - _MR + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{_W - _MR + 36}" y="{ly + 4}">{_esc(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(text: str) -> str:
    return str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
