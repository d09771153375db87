"""Minimal SVG line plots of trajectories, one panel per column."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

WIDTH, PANEL_H, MARGIN_L, MARGIN_R, GAP = 640, 140, 90, 20, 30


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _thin(t: np.ndarray, y: np.ndarray, limit: int = 4000):
    if len(t) <= limit:
        return t, y
    idx = np.unique(np.linspace(0, len(t) - 1, limit).astype(int))
    return t[idx], y[idx]


def svg_document(columns: dict, title: str = "") -> str:
    t = np.asarray(columns["t"], dtype=float)
    names = [k for k in columns if k != "t"]
    height = GAP + len(names) * (PANEL_H + GAP)
    inner_w = WIDTH - MARGIN_L - MARGIN_R
    t0, t1 = (float(t[0]), float(t[-1])) if len(t) else (0.0, 1.0)
    span_t = t1 - t0 or 1.0
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" '
        f'viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
    ]
    for k, name in enumerate(names):
        y = np.asarray(columns[name], dtype=float)
        top = GAP + k * (PANEL_H + GAP)
        lo, hi = (float(np.min(y)), float(np.max(y))) if len(y) else (0.0, 1.0)
        if hi == lo:
            lo, hi = lo - 0.5 * (abs(lo) or 1.0), hi + 0.5 * (abs(hi) or 1.0)
        tt, yy = _thin(t, y)
        xs = MARGIN_L + (tt - t0) / span_t * inner_w
        ys = top + PANEL_H - (yy - lo) / (hi - lo) * PANEL_H
        pts = " ".join(f"{x:.2f},{v:.2f}" for x, v in zip(xs, ys))
        parts += [
            f'<rect x="{MARGIN_L}" y="{top}" width="{inner_w}" height="{PANEL_H}" '
            'fill="none" stroke="#999"/>',
            f'<polyline fill="none" stroke="#1f4e9c" stroke-width="1" points="{pts}"/>',
            f'<text x="{MARGIN_L - 6}" y="{top + 10}" text-anchor="end">{_fmt(hi)}</text>',
            f'<text x="{MARGIN_L - 6}" y="{top + PANEL_H}" text-anchor="end">{_fmt(lo)}</text>',
            f'<text x="8" y="{top + PANEL_H / 2}">{escape(name)}</text>',
        ]
    bottom = GAP + len(names) * (PANEL_H + GAP) - GAP + 14
    parts += [
        f'<text x="{MARGIN_L}" y="{bottom}">{_fmt(t0)} s</text>',
        f'<text x="{WIDTH - MARGIN_R}" y="{bottom}" text-anchor="end">{_fmt(t1)} s</text>',
        "</svg>",
    ]
    return "\n".join(parts) + "\n"


def write_svg(traj, path, title: str = "") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(svg_document(traj.columns(), title))
