"""Write metric tables and series as CSV files and SVG charts.

Output bytes depend only on the input values.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from xml.sax.saxutils import escape

from .metrics import MetricsTable, SeriesSet

WIDTH, HEIGHT = 800, 420
MARGIN = {"left": 70, "right": 200, "top": 40, "bottom": 90}
PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def stem(name: str, group_keys) -> str:
    return f"{name}__{'-'.join(sorted(group_keys)) or 'all'}"


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return repr(round(value, 10))
    return str(value)


def series_table(series: SeriesSet) -> MetricsTable:
    table = MetricsTable(series.name, series.group_keys, ("round", "mean", "n"))
    for gkey, points in series.groups.items():
        for p in points:
            row = dict(zip(series.group_keys, gkey))
            row.update(round=p.round_index, mean=p.mean_value, n=p.n)
            table.rows.append(row)
    return table


def to_csv(table: MetricsTable | SeriesSet) -> str:
    if isinstance(table, SeriesSet):
        table = series_table(table)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([fmt(row.get(c)) for c in table.columns])
    return buf.getvalue()


def _label(keys, gkey) -> str:
    if not keys:
        return "all"
    return " / ".join(f"{fmt(v)}" for v in gkey)


def _num(x: float) -> str:
    return f"{x:.2f}"


def _frame(title: str, y_lo: float, y_hi: float, ticks: int = 5) -> list[str]:
    plot_w = WIDTH - MARGIN["left"] - MARGIN["right"]
    plot_h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    x0, y0 = MARGIN["left"], MARGIN["top"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.0f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<line x1="{x0}" y1="{y0 + plot_h}" x2="{x0 + plot_w}" y2="{y0 + plot_h}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y0 + plot_h}" stroke="black"/>',
    ]
    for i in range(ticks + 1):
        v = y_lo + (y_hi - y_lo) * i / ticks
        y = y0 + plot_h - plot_h * i / ticks
        parts.append(f'<text x="{x0 - 6}" y="{_num(y + 4)}" text-anchor="end">{fmt(round(v, 3))}</text>')
        parts.append(f'<line x1="{x0}" y1="{_num(y)}" x2="{x0 + plot_w}" y2="{_num(y)}" '
                     f'stroke="#dddddd"/>')
    return parts


def _y_scale(lo: float, hi: float):
    plot_h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    span = (hi - lo) or 1.0
    return lambda v: MARGIN["top"] + plot_h - plot_h * (v - lo) / span


def bar_chart(table: MetricsTable, value: str = "mean", low: str = "ci_low",
              high: str = "ci_high") -> str:
    """Bars of ``value`` per group with whiskers from ``low`` to ``high``."""
    vals = []
    for row in table.rows:
        vals.extend(v for v in (row.get(value), row.get(low), row.get(high))
                    if isinstance(v, (int, float)) and not math.isnan(v))
    y_lo = min([0.0] + vals)
    y_hi = max([1.0] + vals)
    y = _y_scale(y_lo, y_hi)
    parts = _frame(table.name, y_lo, y_hi)
    plot_w = WIDTH - MARGIN["left"] - MARGIN["right"]
    n = max(1, len(table.rows))
    slot = plot_w / n
    for i, row in enumerate(table.rows):
        cx = MARGIN["left"] + slot * (i + 0.5)
        bw = slot * 0.6
        top, base = y(row[value]), y(0.0)
        parts.append(f'<rect x="{_num(cx - bw / 2)}" y="{_num(min(top, base))}" width="{_num(bw)}" '
                     f'height="{_num(abs(base - top))}" fill="{PALETTE[i % len(PALETTE)]}"/>')
        lo_v, hi_v = row.get(low), row.get(high)
        if isinstance(lo_v, float) and not math.isnan(lo_v):
            parts.append(f'<line class="whisker" x1="{_num(cx)}" y1="{_num(y(lo_v))}" x2="{_num(cx)}" '
                         f'y2="{_num(y(hi_v))}" stroke="black"/>')
            for v in (lo_v, hi_v):
                parts.append(f'<line x1="{_num(cx - bw / 4)}" y1="{_num(y(v))}" '
                             f'x2="{_num(cx + bw / 4)}" y2="{_num(y(v))}" stroke="black"/>')
        label = escape(_label(table.group_keys, tuple(row[k] for k in table.group_keys)))
        ly = HEIGHT - MARGIN["bottom"] + 12
        parts.append(f'<text x="{_num(cx)}" y="{ly}" text-anchor="end" '
                     f'transform="rotate(-35 {_num(cx)} {ly})">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def line_chart(series: SeriesSet) -> str:
    """One polyline per group; x is the round index."""
    points = [p for pts in series.groups.values() for p in pts]
    if series.y_range:
        y_lo, y_hi = series.y_range
    else:
        y_lo = min([0.0] + [p.mean_value for p in points])
        y_hi = max([1.0] + [p.mean_value for p in points])
    y = _y_scale(y_lo, y_hi)
    max_round = max([1] + [p.round_index for p in points])
    plot_w = WIDTH - MARGIN["left"] - MARGIN["right"]

    def x(r: int) -> float:
        if max_round == 1:
            return MARGIN["left"] + plot_w / 2
        return MARGIN["left"] + plot_w * (r - 1) / (max_round - 1)

    parts = _frame(series.name, y_lo, y_hi)
    for r in range(1, max_round + 1):
        parts.append(f'<text x="{_num(x(r))}" y="{HEIGHT - MARGIN["bottom"] + 16}" '
                     f'text-anchor="middle">{r}</text>')
    for i, (gkey, pts) in enumerate(series.groups.items()):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{_num(x(p.round_index))},{_num(y(p.mean_value))}" for p in pts)
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>')
        ly = MARGIN["top"] + 14 * i
        lx = WIDTH - MARGIN["right"] + 10
        parts.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 16}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 20}" y="{ly + 4}">{escape(_label(series.group_keys, gkey))}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit(item: MetricsTable | SeriesSet, out_dir: Path | str, fmt_: str = "csv") -> Path:
    """Write ``item`` under ``out_dir`` as ``<metric>__<groupkeys>.<fmt>``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{stem(item.name, item.group_keys)}.{fmt_}"
    if fmt_ == "csv":
        text = to_csv(item)
    elif fmt_ == "svg":
        text = line_chart(item) if isinstance(item, SeriesSet) else bar_chart(item)
    else:
        raise ValueError(f"unknown format {fmt_!r}")
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path
