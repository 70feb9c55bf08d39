"""Profile curves to CSV and to a dependency-free SVG line chart."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Dict
from xml.sax.saxutils import escape

from .profiles import ProfileCurve

__all__ = ["write_profile_csv", "profile_svg", "write_profile_svg"]

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def write_profile_csv(curves: Dict[str, ProfileCurve], path) -> None:
    """One row per grid point, one column per solver (curves share a grid)."""
    solvers = list(curves)
    grids = {curves[s].grid for s in solvers}
    if len(grids) > 1:
        raise ValueError("curves must share one grid")
    grid = grids.pop() if grids else ()
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["grid"] + solvers)
        for i, g in enumerate(grid):
            w.writerow([repr(g)] + [repr(curves[s].fraction[i]) for s in solvers])


def profile_svg(curves: Dict[str, ProfileCurve], title: str = "", xlabel: str = "", log_x: bool = False) -> str:
    """Render step curves as a standalone SVG document."""
    W, H = 640, 420
    left, right, top, bottom = 60, 150, 40, 50
    pw, ph = W - left - right, H - top - bottom
    xs = [g for c in curves.values() for g in c.grid if math.isfinite(g)]
    if log_x:
        xs = [math.log2(x) for x in xs if x > 0]
    x_lo = min(xs) if xs else 0.0
    x_hi = max(xs) if xs else 1.0
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0

    def px(x):
        if log_x:
            x = math.log2(x)
        return left + (x - x_lo) / (x_hi - x_lo) * pw

    def py(y):
        return top + (1.0 - y) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{left + pw / 2}" y="22" text-anchor="middle" font-family="sans-serif" font-size="14">{escape(title)}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in range(6):
        y = t / 5
        parts.append(f'<line x1="{left}" x2="{left + pw}" y1="{py(y):.1f}" y2="{py(y):.1f}" stroke="#ddd"/>')
        parts.append(
            f'<text x="{left - 6}" y="{py(y) + 4:.1f}" text-anchor="end" font-family="sans-serif" font-size="11">{y:.1f}</text>'
        )
    for t in range(6):
        xv = x_lo + (x_hi - x_lo) * t / 5
        label = f"{2 ** xv:.3g}" if log_x else f"{xv:.3g}"
        xp = left + pw * t / 5
        parts.append(
            f'<text x="{xp:.1f}" y="{top + ph + 16}" text-anchor="middle" font-family="sans-serif" font-size="11">{label}</text>'
        )
    parts.append(
        f'<text x="{left + pw / 2}" y="{H - 12}" text-anchor="middle" font-family="sans-serif" font-size="12">{escape(xlabel)}</text>'
    )
    for i, (name, c) in enumerate(curves.items()):
        color = _COLORS[i % len(_COLORS)]
        pts = []
        prev = None
        for g, f in zip(c.grid, c.fraction):
            if not math.isfinite(g) or (log_x and g <= 0):
                continue
            if prev is not None:
                pts.append(f"{px(g):.1f},{py(prev):.1f}")
            pts.append(f"{px(g):.1f},{py(f):.1f}")
            prev = f
        if pts:
            parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{" ".join(pts)}"/>')
        ly = top + 16 + 18 * i
        parts.append(f'<line x1="{left + pw + 12}" x2="{left + pw + 36}" y1="{ly}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        parts.append(
            f'<text x="{left + pw + 42}" y="{ly + 4}" font-family="sans-serif" font-size="12">{escape(name)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_profile_svg(curves: Dict[str, ProfileCurve], path, **kw) -> None:
    Path(path).write_text(profile_svg(curves, **kw))
