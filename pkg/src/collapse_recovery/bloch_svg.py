"""Standalone SVG rendering of Bloch-sphere trajectories.

Orthographic projection with a fixed camera; output bytes depend only on the
input points, so identical runs produce identical files.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import FileError, ValidationError

_SIZE = 480
_RADIUS = 200.0
_CENTER = _SIZE / 2.0
_AZIMUTH = np.deg2rad(35.0)
_ELEVATION = np.deg2rad(20.0)

_RIGHT = np.array([-np.sin(_AZIMUTH), np.cos(_AZIMUTH), 0.0])
_UP = np.array(
    [-np.cos(_AZIMUTH) * np.sin(_ELEVATION), -np.sin(_AZIMUTH) * np.sin(_ELEVATION), np.cos(_ELEVATION)]
)


def project(point) -> tuple:
    """Map a Bloch-space point to SVG canvas coordinates."""
    v = np.asarray(point, dtype=float)
    u = float(v @ _RIGHT)
    w = float(v @ _UP)
    return (_CENTER + _RADIUS * u, _CENTER - _RADIUS * w)


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _polyline(points, style: str) -> str:
    coords = " ".join(f"{_fmt(px)},{_fmt(py)}" for px, py in points)
    return f'<polyline fill="none" {style} points="{coords}"/>'


def _circle_points(axis_fixed: str, steps: int = 90):
    t = np.linspace(0.0, 2.0 * np.pi, steps + 1)
    if axis_fixed == "z":  # equator
        pts = np.column_stack([np.cos(t), np.sin(t), np.zeros_like(t)])
    elif axis_fixed == "x":
        pts = np.column_stack([np.zeros_like(t), np.cos(t), np.sin(t)])
    else:
        pts = np.column_stack([np.cos(t), np.zeros_like(t), np.sin(t)])
    return [project(p) for p in pts]


def render_bloch_svg(trajectory, path, title: str = "Bloch trajectory") -> str:
    """Write an SVG of the given Bloch vectors with a guide polyline.

    ``trajectory`` is a nonempty sequence of BlochVector (or length-3
    iterables). Returns the path written.
    """
    points = [np.asarray(getattr(p, "as_array", lambda: p)(), dtype=float) for p in trajectory]
    if not points:
        raise ValidationError("trajectory must contain at least one point")
    for v in points:
        if v.shape != (3,):
            raise ValidationError("trajectory entries must be 3-vectors")

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SIZE}" height="{_SIZE}" '
        f'viewBox="0 0 {_SIZE} {_SIZE}">',
        f"<title>{title}</title>",
        f'<rect width="{_SIZE}" height="{_SIZE}" fill="white"/>',
        f'<circle cx="{_fmt(_CENTER)}" cy="{_fmt(_CENTER)}" r="{_fmt(_RADIUS)}" '
        'fill="none" stroke="#888" stroke-width="1.5"/>',
        _polyline(_circle_points("z"), 'stroke="#bbb" stroke-width="0.8" stroke-dasharray="4,3"'),
        _polyline(_circle_points("x"), 'stroke="#ddd" stroke-width="0.8" stroke-dasharray="4,3"'),
    ]
    # axes: +x, +y, +z from the center
    for tip, name in (((1, 0, 0), "x"), ((0, 1, 0), "y"), ((0, 0, 1), "z")):
        tx, ty = project(tip)
        parts.append(
            f'<line x1="{_fmt(_CENTER)}" y1="{_fmt(_CENTER)}" x2="{_fmt(tx)}" y2="{_fmt(ty)}" '
            'stroke="#999" stroke-width="0.8"/>'
        )
        parts.append(f'<text x="{_fmt(tx + 4)}" y="{_fmt(ty - 4)}" font-size="12">{name}</text>')

    projected = [project(v) for v in points]
    if len(projected) > 1:
        parts.append(_polyline(projected, 'stroke="#1f6fb2" stroke-width="1.2"'))
    for i, (px, py) in enumerate(projected):
        fill = "#d62728" if i == 0 else "#1f6fb2"
        parts.append(f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="4.0" fill="{fill}"/>')
    parts.append("</svg>")
    text = "\n".join(parts) + "\n"

    path = os.fspath(path)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise FileError(f"cannot write SVG to {path}: {exc}") from exc
    return path
