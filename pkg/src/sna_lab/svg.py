"""Hand-written SVG renderings of boundary lines and point clouds."""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .io import fmt

__all__ = ["lines_svg", "cloud_svg", "write_svg"]

WIDTH, HEIGHT = 1000, 600
STROKE = 0.5
UPPER_COLOR = "red"
LOWER_COLOR = "blue"


def _grid_for(n_panels: int) -> tuple[int, int]:
    cols = min(3, max(1, n_panels))
    rows = (n_panels + cols - 1) // cols
    return rows, cols


def _points(xs, ys, box, y_range) -> str:
    x0, y0, w, h = box
    lo, hi = y_range
    span = hi - lo if hi > lo else 1.0
    px = x0 + np.asarray(xs) * w
    py = y0 + h - (np.asarray(ys) - lo) / span * h
    return " ".join(f"{fmt(a)},{fmt(b)}" for a, b in zip(px, py))


def lines_svg(panels) -> str:
    """One panel per ``(label, thetas, upper, lower)``; exactly two polylines each."""
    panels = list(panels)
    rows, cols = _grid_for(len(panels))
    pw, ph = WIDTH / cols, HEIGHT / rows
    pad = 12.0
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    for i, (label, thetas, upper, lower) in enumerate(panels):
        r, c = divmod(i, cols)
        box = (c * pw + pad, r * ph + pad, pw - 2 * pad, ph - 2 * pad)
        both = np.concatenate([np.asarray(upper), np.asarray(lower)])
        lo, hi = float(both.min()), float(both.max())
        if hi - lo < 1e-12:
            lo, hi = lo - 0.5, hi + 0.5
        margin = 0.05 * (hi - lo)
        yr = (lo - margin, hi + margin)
        out.append(f'<g id="panel-{i}">')
        out.append(f'<rect x="{fmt(box[0])}" y="{fmt(box[1])}" width="{fmt(box[2])}" '
                   f'height="{fmt(box[3])}" fill="none" stroke="black" stroke-width="{STROKE}"/>')
        out.append(f'<text x="{fmt(box[0] + 4)}" y="{fmt(box[1] + 12)}" font-size="10">{escape(str(label))}</text>')
        for values, color in ((upper, UPPER_COLOR), (lower, LOWER_COLOR)):
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="{STROKE}" '
                       f'points="{_points(thetas, values, box, yr)}"/>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cloud_svg(thetas, xs, label: str = "", max_points: int = 20000) -> str:
    """Scatter of a point cloud, evenly thinned to at most ``max_points`` dots."""
    thetas = np.asarray(thetas)
    xs = np.asarray(xs)
    if thetas.size > max_points:
        idx = np.linspace(0, thetas.size - 1, max_points).astype(np.int64)
        thetas, xs = thetas[idx], xs[idx]
    pad = 12.0
    box = (pad, pad, WIDTH - 2 * pad, HEIGHT - 2 * pad)
    lo, hi = (float(xs.min()), float(xs.max())) if xs.size else (0.0, 1.0)
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    x0, y0, w, h = box
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{fmt(x0 + 4)}" y="{fmt(y0 + 12)}" font-size="10">{escape(label)}</text>',
        f'<g fill="{UPPER_COLOR}" stroke="none">',
    ]
    px = x0 + thetas * w
    py = y0 + h - (xs - lo) / (hi - lo) * h
    out.extend(f'<circle cx="{fmt(a)}" cy="{fmt(b)}" r="{STROKE}"/>' for a, b in zip(px, py))
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, text: str) -> Path:
    path = Path(path)
    try:
        path.write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    return path
