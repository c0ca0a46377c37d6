"""Deterministic SVG rendering of trace curves.

The viewport is fixed by the data bounding box plus a 5 percent margin and
coordinates are written with fixed precision, so identical inputs produce
byte-identical documents.  Curve segments with t < 0 are drawn dashed and
share the t = 0 sample with the solid part, following the usual figure
convention for two-sided geodesics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .integrate import Trace

_COLORS = ("#1f6fb2", "#b23a1f", "#3a8c3f", "#7d3ab2", "#b2901f", "#1fb2a4")


@dataclass
class Curve:
    points: np.ndarray  # (N, 2)
    dashed: bool = False
    color: str = _COLORS[0]


def trace_curves(trace: Trace, color: str = _COLORS[0],
                 points: np.ndarray | None = None) -> list[Curve]:
    """Split a trace into solid (t >= 0) and dashed (t < 0) polylines.

    ``points`` overrides the plotted coordinates (e.g. a 3D projection)
    while the split still follows the trace times.
    """
    pts = trace.positions if points is None else np.asarray(points, dtype=float)
    if len(pts) == 0:
        raise ValueError("cannot plot an empty trace")
    neg = trace.t <= 0.0
    pos = trace.t >= 0.0
    curves = []
    if pos.sum() >= 2:
        curves.append(Curve(points=pts[pos], dashed=False, color=color))
    if neg.sum() >= 2:
        curves.append(Curve(points=pts[neg], dashed=True, color=color))
    if not curves:
        curves.append(Curve(points=pts, dashed=False, color=color))
    return curves


def project_orthographic(points3: np.ndarray, azimuth_deg: float = 35.0,
                         elevation_deg: float = 25.0) -> np.ndarray:
    """Orthographic projection of (N, 3) points onto the viewing plane."""
    a = math.radians(azimuth_deg)
    e = math.radians(elevation_deg)
    ca, sa = math.cos(a), math.sin(a)
    ce, se = math.cos(e), math.sin(e)
    x, y, z = np.asarray(points3, dtype=float).T
    xr = ca * x + sa * y
    yr = -sa * x + ca * y
    return np.column_stack([xr, ce * yr + se * z])


def render_svg(curves: list[Curve], size: int = 720, margin: float = 0.05,
               stroke_width: float = 1.5) -> str:
    """Render polyline curves into a standalone SVG document."""
    if not curves:
        raise ValueError("no curves to render")
    allpts = np.vstack([c.points for c in curves])
    if len(allpts) < 2:
        raise ValueError("curves carry fewer than two points")
    x0, y0 = allpts.min(axis=0)
    x1, y1 = allpts.max(axis=0)
    w = max(x1 - x0, 1e-12)
    h = max(y1 - y0, 1e-12)
    pad = margin * max(w, h)
    x0 -= pad
    y0 -= pad
    w += 2 * pad
    h += 2 * pad
    scale = size / max(w, h)

    def to_px(p: np.ndarray) -> np.ndarray:
        # SVG y axis points down
        px = (p[:, 0] - x0) * scale
        py = (y0 + h - p[:, 1]) * scale
        return np.column_stack([px, py])

    width = w * scale
    height = h * scale
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.3f}" '
        f'height="{height:.3f}" viewBox="0 0 {width:.3f} {height:.3f}">',
        f'<rect x="0" y="0" width="{width:.3f}" height="{height:.3f}" fill="#ffffff"/>',
    ]
    for c in curves:
        px = to_px(c.points)
        coords = " ".join(f"{x:.3f},{y:.3f}" for x, y in px)
        dash = ' stroke-dasharray="6,4"' if c.dashed else ""
        lines.append(
            f'<polyline points="{coords}" fill="none" stroke="{c.color}" '
            f'stroke-width="{stroke_width:.2f}"{dash}/>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def plot_traces(traces: list[Trace], size: int = 720) -> str:
    """Standard 2D chart-coordinate plot of one or more traces."""
    if not traces:
        raise ValueError("no traces to plot")
    curves: list[Curve] = []
    for i, tr in enumerate(traces):
        curves.extend(trace_curves(tr, color=_COLORS[i % len(_COLORS)]))
    return render_svg(curves, size=size)
