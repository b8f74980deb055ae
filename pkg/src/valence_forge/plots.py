"""Static SVG figures written by hand; coordinates are printed with fixed precision."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

_W, _H, _PAD = 480, 480, 40


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _frame(lo_x, hi_x, lo_y, hi_y):
    """Map data coordinates into the padded canvas, y pointing up."""
    sx = (_W - 2 * _PAD) / (hi_x - lo_x) if hi_x > lo_x else 1.0
    sy = (_H - 2 * _PAD) / (hi_y - lo_y) if hi_y > lo_y else 1.0

    def to(x, y):
        return _PAD + (x - lo_x) * sx, _H - _PAD - (y - lo_y) * sy

    return to


def _doc(body: list[str], title: str) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
            f'viewBox="0 0 {_W} {_H}">')
    return "\n".join([head, f"<title>{title}</title>",
                      f'<rect width="{_W}" height="{_H}" fill="white"/>', *body, "</svg>", ""])


def loop_svg(values: np.ndarray, target: complex, title: str = "image loop") -> str:
    """Polyline through the loop values with the target marked by a cross."""
    v = np.asarray(values, dtype=complex)
    xs = np.append(v.real, target.real)
    ys = np.append(v.imag, target.imag)
    span = max(xs.max() - xs.min(), ys.max() - ys.min()) or 1.0
    cx, cy = 0.5 * (xs.max() + xs.min()), 0.5 * (ys.max() + ys.min())
    to = _frame(cx - 0.55 * span, cx + 0.55 * span, cy - 0.55 * span, cy + 0.55 * span)
    pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in (to(z.real, z.imag) for z in v))
    tx, ty = to(target.real, target.imag)
    body = [
        f'<polyline points="{pts}" fill="none" stroke="black" stroke-width="1"/>',
        f'<path d="M{_fmt(tx - 5)},{_fmt(ty - 5)} L{_fmt(tx + 5)},{_fmt(ty + 5)} '
        f'M{_fmt(tx - 5)},{_fmt(ty + 5)} L{_fmt(tx + 5)},{_fmt(ty - 5)}" stroke="red" stroke-width="2"/>',
        f'<text x="{_PAD}" y="{_PAD - 15}" font-size="12">{title}</text>',
    ]
    return _doc(body, title)


def loglog_svg(levels: Sequence[tuple[int, float]], slope: float, title: str = "covering counts") -> str:
    """``log n`` against ``log(1/s)`` for each level with the fitted slope drawn through the first point."""
    lx = [math.log(1.0 / s) for _, s in levels]
    ly = [math.log(c) for c, _ in levels]
    lo_x, hi_x = min(lx), max(lx)
    lo_y, hi_y = min(0.0, min(ly)), max(ly)
    if hi_x == lo_x:
        hi_x = lo_x + 1.0
    if hi_y == lo_y:
        hi_y = lo_y + 1.0
    to = _frame(lo_x, hi_x, lo_y, hi_y)
    body = []
    x0, y0 = to(lx[0], ly[0])
    x1, y1 = to(hi_x, ly[0] + slope * (hi_x - lx[0]))
    body.append(f'<line x1="{_fmt(x0)}" y1="{_fmt(y0)}" x2="{_fmt(x1)}" y2="{_fmt(y1)}" '
                f'stroke="gray" stroke-dasharray="4 3"/>')
    for a, b in zip(lx, ly):
        px, py = to(a, b)
        body.append(f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="4" fill="black"/>')
    body.append(f'<text x="{_PAD}" y="{_PAD - 15}" font-size="12">{title}: slope {slope:.6f}</text>')
    body.append(f'<text x="{_W // 2 - 30}" y="{_H - 10}" font-size="12">log(1/scale)</text>')
    body.append(f'<text x="5" y="{_H // 2}" font-size="12">log count</text>')
    return _doc(body, title)
