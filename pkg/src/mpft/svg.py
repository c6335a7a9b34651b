"""Minimal SVG scatter of a tracked front.

Points are colored by provenance tag and detected sparse regions are shaded.
Two objectives give one panel; three give the three coordinate-pair panels.
"""

from __future__ import annotations

from itertools import combinations
from xml.sax.saxutils import escape

import numpy as np

PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)
PANEL = 360
MARGIN = 48


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _scale(lo: float, hi: float, a: float, b: float):
    span = hi - lo if hi > lo else 1.0

    def f(x):
        return a + (x - lo) / span * (b - a)

    return f


def _panel(pts, regions, colors, dims, x0) -> list[str]:
    i, j = dims
    xs, ys = pts[:, i], pts[:, j]
    pad_x = 0.05 * (np.ptp(xs) or 1.0)
    pad_y = 0.05 * (np.ptp(ys) or 1.0)
    sx = _scale(xs.min() - pad_x, xs.max() + pad_x, x0 + MARGIN, x0 + PANEL - 10)
    sy = _scale(ys.min() - pad_y, ys.max() + pad_y, PANEL - MARGIN, 10)
    out = [
        f'<rect x="{x0 + MARGIN}" y="10" width="{PANEL - MARGIN - 10}" height="{PANEL - MARGIN - 10}" '
        'fill="none" stroke="#333"/>',
        f'<text x="{x0 + PANEL / 2 + MARGIN / 2 - 5}" y="{PANEL - 12}" text-anchor="middle" '
        f'font-size="12">obj_{i + 1}</text>',
        f'<text x="{x0 + 14}" y="{PANEL / 2 - MARGIN / 2 + 5}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 {x0 + 14} {PANEL / 2 - MARGIN / 2 + 5})">obj_{j + 1}</text>',
    ]
    tick_y = PANEL - MARGIN + 14
    out.append(f'<text x="{x0 + MARGIN}" y="{tick_y}" font-size="10">{xs.min():.3g}</text>')
    out.append(f'<text x="{x0 + PANEL - 10}" y="{tick_y}" font-size="10" text-anchor="end">{xs.max():.3g}</text>')
    out.append(f'<text x="{x0 + MARGIN - 4}" y="{PANEL - MARGIN}" font-size="10" text-anchor="end">{ys.min():.3g}</text>')
    out.append(f'<text x="{x0 + MARGIN - 4}" y="20" font-size="10" text-anchor="end">{ys.max():.3g}</text>')
    for reg in regions:
        bp = np.array(reg.boundary_points)
        if len(bp) == 2:
            xa, xb = sorted((sx(bp[0, i]), sx(bp[1, i])))
            ya, yb = sorted((sy(bp[0, j]), sy(bp[1, j])))
            out.append(
                f'<rect x="{_fmt(xa)}" y="{_fmt(ya)}" width="{_fmt(max(xb - xa, 1))}" '
                f'height="{_fmt(max(yb - ya, 1))}" fill="#ffcc00" fill-opacity="0.3"/>'
            )
        else:
            poly = " ".join(f"{_fmt(sx(p[i]))},{_fmt(sy(p[j]))}" for p in bp)
            out.append(f'<polygon points="{poly}" fill="#ffcc00" fill-opacity="0.3"/>')
    for p, c in zip(pts, colors):
        out.append(f'<circle cx="{_fmt(sx(p[i]))}" cy="{_fmt(sy(p[j]))}" r="3" fill="{c}"/>')
    return out


def front_svg(archive, regions=()) -> str:
    """Render an archive (and optional sparse regions) as an SVG document."""
    members = archive.sorted_members()
    if not members:
        return '<svg xmlns="http://www.w3.org/2000/svg" width="10" height="10"></svg>\n'
    pts = np.array([p.objectives for p in members])
    m = pts.shape[1]
    tags = sorted({p.provenance for p in members})
    color_of = {t: PALETTE[n % len(PALETTE)] for n, t in enumerate(tags)}
    colors = [color_of[p.provenance] for p in members]
    pairs = [(0, 1)] if m == 2 else list(combinations(range(m), 2))
    legend_h = 16 * len(tags) + 10
    width, height = PANEL * len(pairs), PANEL + legend_h
    body: list[str] = []
    for n, dims in enumerate(pairs):
        body += _panel(pts, regions, colors, dims, n * PANEL)
    for n, t in enumerate(tags):
        y = PANEL + 12 + 16 * n
        body.append(f'<circle cx="{MARGIN}" cy="{y}" r="4" fill="{color_of[t]}"/>')
        body.append(f'<text x="{MARGIN + 10}" y="{y + 4}" font-size="11">{escape(t)}</text>')
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif">'
    )
    return "\n".join([head, '<rect width="100%" height="100%" fill="white"/>', *body, "</svg>"]) + "\n"
