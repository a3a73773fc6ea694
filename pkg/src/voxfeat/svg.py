"""Plain-SVG figures: correlation heatmap, grouped boxplots, LDA/SVM scatter.

Output is deterministic: fixed layout, fixed palette, coordinates printed
with two decimals. The only run-dependent line is the version comment.
"""
from __future__ import annotations

import html
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .stats import BoxplotStats

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b")
BACKGROUND = ("#c6dbef", "#fdd0a2", "#c7e9c0", "#fcbba1", "#dadaeb", "#e7cbc0")


def _n(v: float) -> str:
    return f"{v:.2f}"


def _text(x, y, s, size=11, anchor="middle", weight="normal", rotate=None) -> str:
    rot = f' transform="rotate({rotate} {_n(x)} {_n(y)})"' if rotate is not None else ""
    return (
        f'<text x="{_n(x)}" y="{_n(y)}" font-size="{size}" text-anchor="{anchor}" '
        f'font-weight="{weight}" font-family="sans-serif"{rot}>{html.escape(str(s))}</text>'
    )


def _doc(width: float, height: float, body: list[str]) -> str:
    head = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_n(width)}" height="{_n(height)}" '
        f'viewBox="0 0 {_n(width)} {_n(height)}">',
        f"<!-- voxfeat {__version__} -->",
        f'<rect x="0" y="0" width="{_n(width)}" height="{_n(height)}" fill="white"/>',
    ]
    return "\n".join(head + body + ["</svg>"]) + "\n"


def save(svg: str, path) -> Path:
    path = Path(path)
    path.write_text(svg, encoding="utf-8", newline="\n")
    return path


def _diverging(v: float) -> str:
    """-1 blue, 0 white, +1 red."""
    v = max(-1.0, min(1.0, float(v)))
    if v >= 0:
        r, g, b = 255, int(round(255 * (1 - v))), int(round(255 * (1 - v)))
    else:
        r, g, b = int(round(255 * (1 + v))), int(round(255 * (1 + v))), 255
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap(names: Sequence[str], matrix: np.ndarray, split: int | None = None, title: str = "") -> str:
    """Annotated correlation heatmap; a thick rule follows the first ``split`` rows/columns."""
    k = len(names)
    cell, left, top = 46.0, 90.0, 40.0 + 80.0
    width = left + k * cell + 20
    height = top + k * cell + 20
    body = [_text(width / 2, 22, title, size=14, weight="bold")] if title else []
    for j, name in enumerate(names):
        body.append(_text(left + (j + 0.5) * cell, top - 8, name, size=10, anchor="start", rotate=-60))
    for i, name in enumerate(names):
        y = top + i * cell
        body.append(_text(left - 6, y + cell / 2 + 4, name, size=10, anchor="end"))
        for j in range(k):
            v = float(matrix[i, j])
            x = left + j * cell
            body.append(
                f'<rect x="{_n(x)}" y="{_n(y)}" width="{_n(cell)}" height="{_n(cell)}" '
                f'fill="{_diverging(v)}" stroke="#888" stroke-width="0.5"/>'
            )
            body.append(_text(x + cell / 2, y + cell / 2 + 4, f"{v:.2f}", size=10))
    if split:
        s = split * cell
        body.append(f'<line x1="{_n(left + s)}" y1="{_n(top)}" x2="{_n(left + s)}" y2="{_n(top + k * cell)}" stroke="black" stroke-width="3"/>')
        body.append(f'<line x1="{_n(left)}" y1="{_n(top + s)}" x2="{_n(left + k * cell)}" y2="{_n(top + s)}" stroke="black" stroke-width="3"/>')
    return _doc(width, height, body)


def _scale(lo: float, hi: float, a: float, b: float):
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    return lambda v: a + (float(v) - lo) / (hi - lo) * (b - a), lo, hi


def boxplots(panels: Sequence[tuple[str, Sequence[BoxplotStats]]], group_name: str, columns: int = 3) -> str:
    """One panel per feature, one box per group."""
    pw, ph = 240.0, 220.0
    rows = (len(panels) + columns - 1) // columns
    width, height = columns * pw + 20, rows * ph + 40
    body = []
    for p, (feature, boxes) in enumerate(panels):
        ox = 10 + (p % columns) * pw
        oy = 30 + (p // columns) * ph
        x0, x1, y0, y1 = ox + 50, ox + pw - 10, oy + 20, oy + ph - 40
        values = [v for b in boxes for v in (b.whisker_low, b.whisker_high, *b.outliers)]
        ys, lo, hi = _scale(min(values), max(values), y1, y0)
        body.append(f'<rect x="{_n(x0)}" y="{_n(y0)}" width="{_n(x1 - x0)}" height="{_n(y1 - y0)}" fill="none" stroke="black"/>')
        body.append(_text((x0 + x1) / 2, oy + 12, f"({chr(65 + p)}) {feature}", size=12, weight="bold"))
        for t in np.linspace(lo, hi, 5):
            body.append(_text(x0 - 4, ys(t) + 4, f"{t:.3g}", size=9, anchor="end"))
        slot = (x1 - x0) / max(1, len(boxes))
        for g, b in enumerate(boxes):
            cx = x0 + (g + 0.5) * slot
            hw = slot * 0.3
            color = PALETTE[g % len(PALETTE)]
            body.append(f'<line x1="{_n(cx)}" y1="{_n(ys(b.whisker_low))}" x2="{_n(cx)}" y2="{_n(ys(b.whisker_high))}" stroke="black"/>')
            for w in (b.whisker_low, b.whisker_high):
                body.append(f'<line x1="{_n(cx - hw / 2)}" y1="{_n(ys(w))}" x2="{_n(cx + hw / 2)}" y2="{_n(ys(w))}" stroke="black"/>')
            top, bot = ys(b.q3), ys(b.q1)
            body.append(
                f'<rect x="{_n(cx - hw)}" y="{_n(top)}" width="{_n(2 * hw)}" height="{_n(max(bot - top, 0.5))}" '
                f'fill="{color}" fill-opacity="0.6" stroke="black"/>'
            )
            body.append(f'<line x1="{_n(cx - hw)}" y1="{_n(ys(b.median))}" x2="{_n(cx + hw)}" y2="{_n(ys(b.median))}" stroke="black" stroke-width="2"/>')
            for o in b.outliers:
                body.append(f'<circle cx="{_n(cx)}" cy="{_n(ys(o))}" r="3" fill="none" stroke="black"/>')
            body.append(_text(cx, y1 + 14, b.group, size=10))
        body.append(_text((x0 + x1) / 2, y1 + 30, group_name, size=10))
    return _doc(width, height, body)


def lda_scatter(
    points: np.ndarray,
    true_labels: Sequence,
    predicted: Sequence,
    classes: Sequence,
    grid=None,
    strip=None,
    title: str = "",
    axis_names: Sequence[str] = ("LD1", "LD2"),
) -> str:
    """Projected samples over the classifier's label regions.

    Inner dot: true class; ring: predicted class. ``grid`` is a 2-D
    :class:`~voxfeat.ml.DecisionGrid`; for 1-D projections pass ``strip`` as
    ``(xs, labels)`` and the points are drawn on a horizontal line.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    classes = list(classes)
    color = {c: i for i, c in enumerate(classes)}
    w, h = 520.0, 440.0 if points.shape[1] == 2 else 200.0
    x0, x1, y0, y1 = 60.0, w - 20.0, 40.0, h - 50.0
    body = [_text(w / 2, 22, title, size=14, weight="bold")] if title else []

    if grid is not None:
        xs_, ys_ = grid.xs, grid.ys
    elif strip is not None:
        xs_ = np.asarray(strip[0])
        ys_ = None
    else:
        xs_ = points[:, 0]
        ys_ = points[:, 1] if points.shape[1] == 2 else None
    sx, *_ = _scale(min(xs_.min(), points[:, 0].min()), max(xs_.max(), points[:, 0].max()), x0, x1)
    if points.shape[1] == 2:
        ymin = min(ys_.min(), points[:, 1].min())
        ymax = max(ys_.max(), points[:, 1].max())
        sy, *_ = _scale(ymin, ymax, y1, y0)
    else:
        sy = lambda v: (y0 + y1) / 2  # noqa: E731

    if grid is not None:
        dx = (grid.xs[1] - grid.xs[0]) / 2
        dy = (grid.ys[1] - grid.ys[0]) / 2
        for r, yv in enumerate(grid.ys):
            for c, xv in enumerate(grid.xs):
                lab = grid.labels[r, c]
                left, right = sx(xv - dx), sx(xv + dx)
                top, bottom = sy(yv + dy), sy(yv - dy)
                body.append(
                    f'<rect x="{_n(left)}" y="{_n(top)}" width="{_n(right - left)}" height="{_n(bottom - top)}" '
                    f'fill="{BACKGROUND[color[lab] % len(BACKGROUND)]}" stroke="none"/>'
                )
    elif strip is not None:
        sxs, slabels = np.asarray(strip[0]), list(strip[1])
        half = (sxs[1] - sxs[0]) / 2
        for xv, lab in zip(sxs, slabels):
            body.append(
                f'<rect x="{_n(sx(xv - half))}" y="{_n(y0)}" width="{_n(sx(xv + half) - sx(xv - half))}" '
                f'height="{_n(y1 - y0)}" fill="{BACKGROUND[color[lab] % len(BACKGROUND)]}" stroke="none"/>'
            )

    body.append(f'<rect x="{_n(x0)}" y="{_n(y0)}" width="{_n(x1 - x0)}" height="{_n(y1 - y0)}" fill="none" stroke="black"/>')
    body.append(_text((x0 + x1) / 2, h - 14, axis_names[0], size=11))
    if points.shape[1] == 2:
        body.append(_text(18, (y0 + y1) / 2, axis_names[1], size=11, rotate=-90))
    for p, t, q in zip(points, true_labels, predicted):
        cx = sx(p[0])
        cy = sy(p[1]) if points.shape[1] == 2 else sy(0)
        body.append(f'<circle cx="{_n(cx)}" cy="{_n(cy)}" r="7" fill="none" stroke="{PALETTE[color[q] % len(PALETTE)]}" stroke-width="3"/>')
        body.append(f'<circle cx="{_n(cx)}" cy="{_n(cy)}" r="3.5" fill="{PALETTE[color[t] % len(PALETTE)]}"/>')
    for i, c in enumerate(classes):
        lx = x0 + 10 + i * 90
        body.append(f'<circle cx="{_n(lx)}" cy="{_n(y0 - 10)}" r="4" fill="{PALETTE[i % len(PALETTE)]}"/>')
        body.append(_text(lx + 8, y0 - 6, c, size=10, anchor="start"))
    return _doc(w, h, body)
