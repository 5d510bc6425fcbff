"""Minimal deterministic SVG emission for log2-log2 wavelet-variance plots.

No plotting dependency: axes, tick grid, polylines and translucent
confidence polygons are written directly. Output depends only on the data,
so identical inputs produce byte-identical files.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["wv_figure"]

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b")

_FLOOR = 1e-300


def _log2(values):
    v = np.maximum(np.asarray(values, dtype=float), _FLOOR)
    return np.log2(v)


def _fmt(x):
    return f"{x:.3f}"


class _Frame:
    """Maps data coordinates onto the pixel viewport."""

    def __init__(self, x_range, y_range, width, height, margin):
        self.x0, self.x1 = x_range
        self.y0, self.y1 = y_range
        left, right, top, bottom = margin
        self.left, self.top = left, top
        self.plot_w = width - left - right
        self.plot_h = height - top - bottom

    def x(self, v):
        span = self.x1 - self.x0 or 1.0
        return self.left + (v - self.x0) / span * self.plot_w

    def y(self, v):
        span = self.y1 - self.y0 or 1.0
        return self.top + (self.y1 - v) / span * self.plot_h


def wv_figure(curves, bands=(), *, title="", width=720, height=480,
              xlabel="scale tau (log2)", ylabel="wavelet variance (log2)"):
    """Render curves and confidence bands on log2-log2 axes.

    ``curves``: iterables of dicts with keys label, scales, values and
    optional color/dash. ``bands``: dicts with scales, low, high, color.
    Returns the SVG document as a string.
    """
    curves = list(curves)
    bands = list(bands)
    xs = np.concatenate([_log2(c["scales"]) for c in curves]) \
        if curves else np.array([0.0, 1.0])
    ys = [_log2(c["values"]) for c in curves]
    for band in bands:
        ys.append(_log2(band["low"]))
        ys.append(_log2(band["high"]))
    ys = np.concatenate(ys) if ys else np.array([0.0, 1.0])
    finite = ys[np.isfinite(ys) & (ys > math.log2(_FLOOR) + 1)]
    if finite.size == 0:
        finite = np.array([-1.0, 1.0])
    x_rng = (float(xs.min()) - 0.5, float(xs.max()) + 0.5)
    y_pad = 0.05 * (float(finite.max()) - float(finite.min()) or 1.0) + 0.3
    y_rng = (float(finite.min()) - y_pad, float(finite.max()) + y_pad)
    frame = _Frame(x_rng, y_rng, width, height, (64, 24, 36, 48))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        parts.append(
            f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" '
            f'font-family="sans-serif" font-size="15">{escape(title)}</text>')

    # gridlines and ticks at integer log2 positions
    for tick in range(math.ceil(x_rng[0]), math.floor(x_rng[1]) + 1):
        px = frame.x(tick)
        parts.append(
            f'<line x1="{px:.1f}" y1="{frame.top:.1f}" x2="{px:.1f}" '
            f'y2="{frame.top + frame.plot_h:.1f}" stroke="#dddddd" '
            'stroke-width="1"/>')
        parts.append(
            f'<text x="{px:.1f}" y="{frame.top + frame.plot_h + 16:.1f}" '
            'text-anchor="middle" font-family="sans-serif" font-size="11">'
            f'{tick}</text>')
    for tick in range(math.ceil(y_rng[0]), math.floor(y_rng[1]) + 1):
        py = frame.y(tick)
        parts.append(
            f'<line x1="{frame.left:.1f}" y1="{py:.1f}" '
            f'x2="{frame.left + frame.plot_w:.1f}" y2="{py:.1f}" '
            'stroke="#dddddd" stroke-width="1"/>')
        parts.append(
            f'<text x="{frame.left - 6:.1f}" y="{py + 4:.1f}" '
            'text-anchor="end" font-family="sans-serif" font-size="11">'
            f'{tick}</text>')

    # frame box and axis labels
    parts.append(
        f'<rect x="{frame.left:.1f}" y="{frame.top:.1f}" '
        f'width="{frame.plot_w:.1f}" height="{frame.plot_h:.1f}" '
        'fill="none" stroke="#333333" stroke-width="1"/>')
    parts.append(
        f'<text x="{frame.left + frame.plot_w / 2:.1f}" y="{height - 10}" '
        'text-anchor="middle" font-family="sans-serif" font-size="12">'
        f'{escape(xlabel)}</text>')
    parts.append(
        f'<text x="16" y="{frame.top + frame.plot_h / 2:.1f}" '
        'text-anchor="middle" font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {frame.top + frame.plot_h / 2:.1f})">'
        f'{escape(ylabel)}</text>')

    for i, band in enumerate(bands):
        color = band.get("color", PALETTE[i % len(PALETTE)])
        lx = _log2(band["scales"])
        lo = _log2(band["low"])
        hi = _log2(band["high"])
        points = [f"{frame.x(x):.3f},{frame.y(y):.3f}" for x, y in zip(lx, hi)]
        points += [f"{frame.x(x):.3f},{frame.y(y):.3f}"
                   for x, y in zip(lx[::-1], lo[::-1])]
        parts.append(
            f'<polygon points="{" ".join(points)}" fill="{color}" '
            'fill-opacity="0.2" stroke="none"/>')

    for i, curve in enumerate(curves):
        color = curve.get("color", PALETTE[i % len(PALETTE)])
        dash = ' stroke-dasharray="6,4"' if curve.get("dash") else ""
        lx = _log2(curve["scales"])
        ly = _log2(curve["values"])
        points = " ".join(
            f"{frame.x(x):.3f},{frame.y(y):.3f}" for x, y in zip(lx, ly))
        parts.append(
            f'<polyline points="{points}" fill="none" stroke="{color}" '
            f'stroke-width="2"{dash}/>')

    # legend, top-right inside the frame
    if any(c.get("label") for c in curves):
        lx0 = frame.left + frame.plot_w - 170
        ly0 = frame.top + 10
        box_h = 18 * len(curves) + 8
        parts.append(
            f'<rect x="{lx0 - 8:.1f}" y="{ly0 - 4:.1f}" width="178" '
            f'height="{box_h}" fill="white" fill-opacity="0.85" '
            'stroke="#999999" stroke-width="0.5"/>')
        for i, curve in enumerate(curves):
            color = curve.get("color", PALETTE[i % len(PALETTE)])
            dash = ' stroke-dasharray="6,4"' if curve.get("dash") else ""
            y = ly0 + 12 + 18 * i
            parts.append(
                f'<line x1="{lx0:.1f}" y1="{y - 4:.1f}" x2="{lx0 + 26:.1f}" '
                f'y2="{y - 4:.1f}" stroke="{color}" stroke-width="2"{dash}/>')
            parts.append(
                f'<text x="{lx0 + 32:.1f}" y="{y:.1f}" '
                'font-family="sans-serif" font-size="11">'
                f'{escape(str(curve.get("label", "")))}</text>')

    parts.append("</svg>")
    return "\n".join(parts) + "\n"
