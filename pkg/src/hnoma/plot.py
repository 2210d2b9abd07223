"""Dependency-free semilog SVG charts of BER curves.

The output is a pure function of the input rows: coordinates are printed
with fixed precision and series are ordered by (scheme, user), so the same
CSV always renders to the same bytes.
"""
from __future__ import annotations

import csv
import math
from xml.sax.saxutils import escape

__all__ = ["PlotError", "read_curve_csv", "render_svg"]

WIDTH, HEIGHT = 640, 440
LEFT, RIGHT, TOP, BOTTOM = 70, 160, 20, 50
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
          "#e377c2", "#7f7f7f")
REQUIRED = ("scheme", "user", "snr_db", "ber")


class PlotError(ValueError):
    pass


def read_curve_csv(path) -> dict:
    """``{(scheme, user): [(snr_db, ber), ...]}`` from an emitted CSV."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or []
        missing = [c for c in REQUIRED if c not in cols]
        if missing:
            raise PlotError(f"{path}: missing columns {missing}")
        series: dict = {}
        for i, row in enumerate(reader, start=2):
            try:
                key = (row["scheme"], int(row["user"]))
                pt = (float(row["snr_db"]), float(row["ber"]))
            except (TypeError, ValueError) as exc:
                raise PlotError(f"{path}: line {i}: {exc}") from exc
            series.setdefault(key, []).append(pt)
    if not series:
        raise PlotError(f"{path}: no data rows")
    return series


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def render_svg(series: dict, title: str = "BER vs SNR") -> str:
    pts = [p for s in series.values() for p in s]
    xs = [p[0] for p in pts]
    pos = [p[1] for p in pts if p[1] > 0]
    x0, x1 = min(xs), max(xs)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    lo = math.floor(math.log10(min(pos))) if pos else -6
    hi = max(0, math.ceil(math.log10(max(pos)))) if pos else 0
    if hi == lo:
        lo -= 1
    floor_val = 10.0**lo
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def sx(x):
        return LEFT + (x - x0) / (x1 - x0) * pw

    def sy(b):
        b = max(b, floor_val)
        return TOP + (hi - math.log10(b)) / (hi - lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.0f}" y="14" text-anchor="middle">{escape(title)}</text>',
    ]
    for e in range(lo, hi + 1):
        y = sy(10.0**e)
        out.append(f'<line x1="{LEFT}" y1="{_fmt(y)}" x2="{LEFT + pw}" y2="{_fmt(y)}" '
                   'stroke="#ddd"/>')
        out.append(f'<text x="{LEFT - 6}" y="{_fmt(y + 4)}" text-anchor="end">1e{e}</text>')
    for i in range(6):
        x = x0 + (x1 - x0) * i / 5
        out.append(f'<text x="{_fmt(sx(x))}" y="{TOP + ph + 16}" '
                   f'text-anchor="middle">{x:g}</text>')
    out.append(f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" '
               'stroke="black"/>')
    out.append(f'<text x="{LEFT + pw / 2:.0f}" y="{HEIGHT - 10}" '
               'text-anchor="middle">SNR (dB)</text>')
    out.append(f'<text x="16" y="{TOP + ph / 2:.0f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {TOP + ph / 2:.0f})">BER</text>')
    for i, key in enumerate(sorted(series)):
        color = COLORS[i % len(COLORS)]
        coords = " ".join(f"{_fmt(sx(x))},{_fmt(sy(b))}" for x, b in sorted(series[key]))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                   f'points="{coords}"/>')
        ly = TOP + 14 + 16 * i
        out.append(f'<line x1="{LEFT + pw + 10}" y1="{ly}" x2="{LEFT + pw + 30}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="1.5"/>')
        out.append(f'<text x="{LEFT + pw + 34}" y="{ly + 4}">'
                   f'{escape(key[0])} user {key[1]}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
