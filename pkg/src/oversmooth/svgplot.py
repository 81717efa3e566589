"""Minimal SVG scatter plots with an identity reference line."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd")


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def scatter_svg(series: Sequence[tuple[str, Sequence[float], Sequence[float]]], title: str = "",
                xlabel: str = "", ylabel: str = "", width: int = 480, height: int = 480,
                identity: bool = True) -> str:
    """Render ``(label, xs, ys)`` series on shared axes, both axes on one range."""
    margin_l, margin_r, margin_t, margin_b = 70, 20, 40, 55
    pw, ph = width - margin_l - margin_r, height - margin_t - margin_b
    values = np.concatenate([np.asarray(v, dtype=float) for _, xs, ys in series for v in (xs, ys)]
                            + [np.zeros(0)])
    values = values[np.isfinite(values)]
    lo, hi = (float(values.min()), float(values.max())) if len(values) else (0.0, 1.0)
    if hi - lo <= 1e-300:
        lo, hi = lo - 0.5 * max(abs(lo), 1.0), hi + 0.5 * max(abs(hi), 1.0)
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad

    def sx(v):
        return margin_l + (v - lo) / (hi - lo) * pw

    def sy(v):
        return margin_t + ph - (v - lo) / (hi - lo) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<rect x="{margin_l}" y="{margin_t}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    if title:
        out.append(f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" font-size="14">'
                   f'{escape(title)}</text>')
    for t in _ticks(lo, hi):
        x, y = sx(t), sy(t)
        out.append(f'<line x1="{x:.2f}" y1="{margin_t + ph}" x2="{x:.2f}" y2="{margin_t + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{margin_t + ph + 18}" text-anchor="middle" font-size="10">{t:.3g}</text>')
        out.append(f'<line x1="{margin_l - 5}" y1="{y:.2f}" x2="{margin_l}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{margin_l - 8}" y="{y + 3:.2f}" text-anchor="end" font-size="10">{t:.3g}</text>')
    if xlabel:
        out.append(f'<text x="{margin_l + pw / 2:.1f}" y="{height - 12}" text-anchor="middle" '
                   f'font-size="12">{escape(xlabel)}</text>')
    if ylabel:
        cy = margin_t + ph / 2
        out.append(f'<text x="16" y="{cy:.1f}" text-anchor="middle" font-size="12" '
                   f'transform="rotate(-90 16 {cy:.1f})">{escape(ylabel)}</text>')
    if identity:
        out.append(f'<line class="identity" x1="{sx(lo):.2f}" y1="{sy(lo):.2f}" x2="{sx(hi):.2f}" '
                   f'y2="{sy(hi):.2f}" stroke="gray" stroke-dasharray="4 3"/>')
    for n, (label, xs, ys) in enumerate(series):
        color = COLORS[n % len(COLORS)]
        out.append(f'<g class="series" fill="{color}">')
        for x, y in zip(xs, ys):
            if np.isfinite(x) and np.isfinite(y):
                out.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="2.5"/>')
        out.append("</g>")
        ly = margin_t + 14 + 14 * n
        out.append(f'<circle cx="{margin_l + 12}" cy="{ly - 4}" r="3" fill="{color}"/>')
        out.append(f'<text x="{margin_l + 20}" y="{ly}" font-size="11">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_scatter_svg(path, series, **kwargs) -> None:
    Path(path).write_text(scatter_svg(series, **kwargs))
