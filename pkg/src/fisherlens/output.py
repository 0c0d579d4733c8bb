"""CSV and SVG emitters for sweep results."""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import __version__

__all__ = ["SweepResult", "provenance_line", "format_number", "csv_text", "write_csv", "svg_plot"]


@dataclass
class SweepResult:
    """Ordered rows of a sweep plus the parameter set that produced them."""

    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [row[i] for row in self.rows]


def canonical_config(config: dict) -> str:
    return json.dumps(config, sort_keys=True, separators=(",", ":"))


def provenance_line(config: dict) -> str:
    return f"# fisherlens {__version__} config={canonical_config(config)}"


def format_number(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    v = float(v)
    if v == 0.0:
        return "0"
    return f"{v:.12g}"


def csv_text(result: SweepResult) -> str:
    buf = io.StringIO()
    buf.write(provenance_line(result.meta) + "\n")
    buf.write(",".join(result.columns) + "\n")
    for row in result.rows:
        buf.write(",".join(format_number(v) for v in row) + "\n")
    return buf.getvalue()


def write_csv(path: str | Path, result: SweepResult) -> Path:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(csv_text(result))
    return path


_PALETTE = ("#000000", "#1f77b4", "#2ca02c", "#d62728", "#9467bd", "#ff7f0e")


def svg_plot(
    curves: Sequence[tuple[str, Sequence[float], Sequence[float]]],
    xlabel: str = "s",
    ylabel: str = "F",
    title: str = "",
    width: int = 640,
    height: int = 420,
) -> str:
    """Polyline plot of ``(label, xs, ys)`` curves with axes and a legend."""
    margin_l, margin_r, margin_t, margin_b = 70, 20, 40, 55
    xs_all = [x for _, xs, _ in curves for x in xs]
    ys_all = [y for _, _, ys in curves for y in ys if math.isfinite(y)]
    x0, x1 = min(xs_all), max(xs_all)
    y0, y1 = min(0.0, min(ys_all)), max(ys_all)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pw, ph = width - margin_l - margin_r, height - margin_t - margin_b

    def px(x):
        return margin_l + (x - x0) / (x1 - x0) * pw

    def py(y):
        return margin_t + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<line x1="{margin_l}" y1="{margin_t + ph}" x2="{margin_l + pw}" y2="{margin_t + ph}" stroke="black"/>',
        f'<line x1="{margin_l}" y1="{margin_t}" x2="{margin_l}" y2="{margin_t + ph}" stroke="black"/>',
    ]
    for i in range(6):
        xv = x0 + (x1 - x0) * i / 5
        yv = y0 + (y1 - y0) * i / 5
        out.append(
            f'<text x="{px(xv):.1f}" y="{margin_t + ph + 18}" font-size="11" '
            f'text-anchor="middle">{xv:.3g}</text>'
        )
        out.append(
            f'<text x="{margin_l - 6}" y="{py(yv) + 4:.1f}" font-size="11" '
            f'text-anchor="end">{yv:.3g}</text>'
        )
    out.append(
        f'<text x="{margin_l + pw / 2}" y="{height - 12}" font-size="13" text-anchor="middle">{xlabel}</text>'
    )
    out.append(
        f'<text x="16" y="{margin_t + ph / 2}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 16 {margin_t + ph / 2})">{ylabel}</text>'
    )
    if title:
        out.append(f'<text x="{width / 2}" y="22" font-size="14" text-anchor="middle">{title}</text>')
    for i, (label, xs, ys) in enumerate(curves):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys) if math.isfinite(y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = margin_t + 14 + 16 * i
        out.append(
            f'<line x1="{margin_l + pw - 120}" y1="{ly - 4}" x2="{margin_l + pw - 100}" '
            f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>'
        )
        out.append(f'<text x="{margin_l + pw - 95}" y="{ly}" font-size="11">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
