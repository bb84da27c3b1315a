"""Minimal deterministic SVG line charts."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

WIDTH, HEIGHT = 640, 400
MARGIN = dict(left=60, right=20, top=20, bottom=50)
DASHES = ("", "6,4", "2,3", "8,3,2,3")
COLORS = ("#1f3a93", "#b03a2e", "#1e8449", "#7d3c98")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def line_chart(times: Sequence[float], series: Mapping[str, Sequence[float]],
               xlabel: str = "t", ylabel: str = "dispersion") -> str:
    t = np.asarray(times, dtype=float)
    if t.size == 0 or not series:
        raise ValueError("nothing to plot")
    ys = {k: np.asarray(v, dtype=float) for k, v in series.items()}
    for k, v in ys.items():
        if v.shape != t.shape:
            raise ValueError(f"series {k!r} does not match the time axis")
    lo = min(float(v.min()) for v in ys.values())
    hi = max(float(v.max()) for v in ys.values())
    lo = min(lo, 0.0)
    if hi <= lo:
        hi = lo + 1.0
    t0, t1 = float(t[0]), float(t[-1])
    if t1 <= t0:
        t1 = t0 + 1.0
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(v):
        return MARGIN["left"] + (v - t0) / (t1 - t0) * pw

    def sy(v):
        return MARGIN["top"] + (1 - (v - lo) / (hi - lo)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<g stroke="black" stroke-width="1">'
        f'<line x1="{MARGIN["left"]}" y1="{_fmt(sy(lo))}" x2="{WIDTH - MARGIN["right"]}" y2="{_fmt(sy(lo))}"/>'
        f'<line x1="{MARGIN["left"]}" y1="{MARGIN["top"]}" x2="{MARGIN["left"]}" y2="{_fmt(sy(lo))}"/></g>',
        f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 10}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{xlabel}</text>',
        f'<text x="15" y="{MARGIN["top"] + ph / 2:.1f}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="14" transform="rotate(-90 15 {MARGIN["top"] + ph / 2:.1f})">{ylabel}</text>',
    ]
    for v, anchor in ((lo, "start"), (hi, "end")):
        out.append(f'<text x="{MARGIN["left"] - 5}" y="{_fmt(sy(v))}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="10">{v:.3g}</text>')
    for v in (t0, t1):
        out.append(f'<text x="{_fmt(sx(v))}" y="{_fmt(sy(lo) + 15)}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="10">{v:.3g}</text>')
    for i, (name, v) in enumerate(ys.items()):
        pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(t, v))
        dash = DASHES[i % len(DASHES)]
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<polyline fill="none" stroke="{COLORS[i % len(COLORS)]}" stroke-width="1.5"'
                   f'{dash_attr} points="{pts}"><title>{name}</title></polyline>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_figures(times, series: Mapping[str, Sequence[float]], path, **labels) -> Path:
    """Write one chart; first series solid, the rest dashed."""
    path = Path(path)
    text = line_chart(times, series, **labels)
    path.write_text(text, encoding="utf-8")
    return path
