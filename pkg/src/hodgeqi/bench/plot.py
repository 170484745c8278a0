"""Deterministic log-log SVG chart of a convergence report (no plotting library)."""

from __future__ import annotations

import math

import numpy as np

from .report import COLUMNS, ConvergenceReport


class EmptyReport(ValueError):
    pass


W, H = 640, 440
LEFT, RIGHT, TOP, BOTTOM = 80, 170, 40, 60
COLORS = {"error_div": "#1f77b4", "error_curl": "#d62728", "error_full": "#2ca02c"}
MARKERS = {"error_div": "circle", "error_curl": "square", "error_full": "triangle"}


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _marker(kind: str, x: float, y: float, color: str, cls: str = "marker") -> str:
    if kind == "circle":
        return f'<circle class="{cls}" cx="{_fmt(x)}" cy="{_fmt(y)}" r="4" fill="{color}"/>'
    if kind == "square":
        return f'<rect class="{cls}" x="{_fmt(x - 4)}" y="{_fmt(y - 4)}" width="8" height="8" fill="{color}"/>'
    pts = f"{_fmt(x)},{_fmt(y - 5)} {_fmt(x - 5)},{_fmt(y + 4)} {_fmt(x + 5)},{_fmt(y + 4)}"
    return f'<polygon class="{cls}" points="{pts}" fill="{color}"/>'


def render_svg(report: ConvergenceReport, title: str | None = None) -> str:
    if not report.rows:
        raise EmptyReport("report has no rows")
    hs = report.hs
    series = {c: report.column(c) for c in COLUMNS}
    series = {c: v for c, v in series.items() if np.any(np.isfinite(v) & (v > 0))}
    if not series:
        raise EmptyReport("report has no positive errors")
    allv = np.concatenate([v[np.isfinite(v) & (v > 0)] for v in series.values()])
    lx0, lx1 = math.log10(hs.min()), math.log10(hs.max())
    ly0, ly1 = math.floor(math.log10(allv.min())), math.ceil(math.log10(allv.max()))
    if lx1 == lx0:
        lx0, lx1 = lx0 - 0.5, lx1 + 0.5
    if ly1 == ly0:
        ly1 = ly0 + 1
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def px(h):
        return LEFT + (math.log10(h) - lx0) / (lx1 - lx0) * pw

    def py(e):
        return TOP + (ly1 - math.log10(e)) / (ly1 - ly0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for e in range(ly0, ly1 + 1):
        y = py(10.0**e)
        out.append(f'<line x1="{LEFT}" y1="{_fmt(y)}" x2="{LEFT + pw}" y2="{_fmt(y)}" stroke="#dddddd"/>')
        out.append(f'<text x="{LEFT - 8}" y="{_fmt(y + 4)}" font-size="11" text-anchor="end">1e{e}</text>')
    for h in hs:
        out.append(f'<text x="{_fmt(px(h))}" y="{TOP + ph + 16}" font-size="10" text-anchor="middle">{h:.3g}</text>')
    out.append(f'<text x="{LEFT + pw / 2}" y="{H - 16}" font-size="12" text-anchor="middle">h</text>')
    out.append(f'<text x="20" y="{TOP + ph / 2}" font-size="12" transform="rotate(-90 20 {TOP + ph / 2})" '
               f'text-anchor="middle">RMSE</text>')
    if title:
        out.append(f'<text x="{LEFT + pw / 2}" y="24" font-size="14" text-anchor="middle">{title}</text>')
    slopes = report.slopes()
    for n, (name, vals) in enumerate(series.items()):
        color = COLORS[name]
        ok = [(h, v) for h, v in zip(hs, vals) if np.isfinite(v) and v > 0]
        path = " ".join(f"{_fmt(px(h))},{_fmt(py(v))}" for h, v in ok)
        out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for h, v in ok:
            out.append(_marker(MARKERS[name], px(h), py(v), color))
        ly = TOP + 20 + 22 * n
        out.append(_marker(MARKERS[name], LEFT + pw + 16, ly - 4, color, "legend"))
        s = slopes[name]
        label = f"{name} slope {s:.2f}" if np.isfinite(s) else name
        out.append(f'<text x="{LEFT + pw + 26}" y="{ly}" font-size="11">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(report: ConvergenceReport, path, title: str | None = None) -> None:
    svg = render_svg(report, title)
    with open(path, "w", newline="\n") as fh:
        fh.write(svg)
