"""Minimal SVG emitters for run artifacts.

Every figure is a single self-contained file: a frame, one polyline per
curve, and small circles on profile corners.  No axes machinery; the
corner markers and the time ramp carry the information these files exist
for (eyeballing a run without any plotting stack).
"""

from __future__ import annotations

import numpy as np

__all__ = ["profile_snapshots_svg", "frank_diagram_svg", "wulff_polygon_svg"]

_W, _H, _PAD = 640.0, 420.0, 24.0


def _fmt(x: float) -> str:
    return f"{x:.4f}".rstrip("0").rstrip(".")


def _map(xs, ys, xlim, ylim):
    x0, x1 = xlim
    y0, y1 = ylim
    sx = (_W - 2 * _PAD) / (x1 - x0)
    sy = (_H - 2 * _PAD) / (y1 - y0)
    px = _PAD + (np.asarray(xs) - x0) * sx
    py = _H - _PAD - (np.asarray(ys) - y0) * sy  # svg y grows downward
    return px, py


def _open(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_W:g} {_H:g}">',
        f"<title>{title}</title>",
        f'<rect x="0" y="0" width="{_W:g}" height="{_H:g}" fill="white"/>',
    ]


def _frame() -> str:
    return (
        f'<rect x="{_PAD:g}" y="{_PAD:g}" width="{_W - 2 * _PAD:g}" '
        f'height="{_H - 2 * _PAD:g}" fill="none" stroke="#ccc"/>'
    )


def _polyline(px, py, color: str, width: float, opacity: float = 1.0) -> str:
    pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(px, py))
    return (
        f'<polyline points="{pts}" fill="none" stroke="{color}" '
        f'stroke-width="{width:g}" stroke-opacity="{opacity:g}"/>'
    )


def profile_snapshots_svg(snapshots, path) -> None:
    """Overlay of corner polylines, early times faint, final time full.

    snapshots: iterable of (t, profile) as stored on a trajectory.
    """
    snaps = list(snapshots)
    if not snaps:
        raise ValueError("no snapshots to draw")
    vals = [p.corner_values() for _, p in snaps]
    ymin = min(float(v.min()) for v in vals)
    ymax = max(float(v.max()) for v in vals)
    if ymax - ymin < 1e-12:
        ymin, ymax = ymin - 0.5, ymax + 0.5
    xlim, ylim = (0.0, 1.0), (ymin, ymax)

    out = _open("profile snapshots")
    out.append(_frame())
    n = len(snaps)
    for j, ((_, prof), v) in enumerate(zip(snaps, vals)):
        px, py = _map(prof.corners, v, xlim, ylim)
        last = j == n - 1
        opacity = 1.0 if last else 0.15 + 0.55 * (j / max(n - 1, 1))
        out.append(_polyline(px, py, "#1f4e8c", 1.6 if last else 1.0, opacity))
        if last:
            for a, b in zip(px, py):
                out.append(f'<circle cx="{_fmt(a)}" cy="{_fmt(b)}" r="2.4" fill="#c0392b"/>')
    out.append(
        f'<text x="{_PAD:g}" y="{_H - 6:g}" font-family="monospace" font-size="11" fill="#555">'
        f"t = {snaps[0][0]:.6g} .. {snaps[-1][0]:.6g}, final corners marked</text>"
    )
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")


def _closed_curve_svg(xs, ys, title: str, color: str, path, markers: bool = False) -> None:
    xs = np.append(np.asarray(xs, dtype=float), xs[0])
    ys = np.append(np.asarray(ys, dtype=float), ys[0])
    span = max(float(xs.max() - xs.min()), float(ys.max() - ys.min()), 1e-12)
    cx = 0.5 * (xs.max() + xs.min())
    cy = 0.5 * (ys.max() + ys.min())
    half = 0.55 * span
    xlim, ylim = (cx - half, cx + half), (cy - half, cy + half)
    px, py = _map(xs, ys, xlim, ylim)
    # keep the aspect ratio square inside the landscape canvas
    px = px * (_H / _W) + 0.5 * (_W - _H)

    out = _open(title)
    out.append(_polyline(px, py, color, 1.4))
    if markers:
        for a, b in zip(px[:-1], py[:-1]):
            out.append(f'<circle cx="{_fmt(a)}" cy="{_fmt(b)}" r="2.2" fill="#c0392b"/>')
    ax_x, ax_y = _map(np.array([cx - half, cx + half, cx, cx]), np.array([cy, cy, cy - half, cy + half]), xlim, ylim)
    ax_x = ax_x * (_H / _W) + 0.5 * (_W - _H)
    out.append(_polyline(ax_x[:2], ax_y[:2], "#ddd", 0.8))
    out.append(_polyline(ax_x[2:], ax_y[2:], "#ddd", 0.8))
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")


def frank_diagram_svg(points: np.ndarray, path) -> None:
    """Polar plot of 1 / f, one row per angle, columns (x, y)."""
    _closed_curve_svg(points[:, 0], points[:, 1], "frank diagram", "#1f4e8c", path)


def wulff_polygon_svg(vertices: np.ndarray, path) -> None:
    """The equilibrium polygon with its vertices marked."""
    _closed_curve_svg(vertices[:, 0], vertices[:, 1], "wulff polygon", "#2e7d32", path, markers=True)
