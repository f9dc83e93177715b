"""Tiny deterministic SVG writer for heatmaps and line plots."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 480, 360
MARGIN = 50
_COLORS = ("#1f4e9c", "#c0392b", "#27ae60", "#8e44ad")


def _f(x: float) -> str:
    return f"{x:.2f}"


def _frame(title: str, xlabel: str, ylabel: str, xlim, ylim) -> list:
    w, h, m = WIDTH, HEIGHT, MARGIN
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>',
        f'<text x="{w / 2}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<text x="{w / 2}" y="{h - 8}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="14" y="{h / 2}" text-anchor="middle" '
        f'transform="rotate(-90 14 {h / 2})">{escape(ylabel)}</text>',
        f'<text x="{m}" y="{h - m + 14}" text-anchor="middle">{xlim[0]:.4g}</text>',
        f'<text x="{w - m}" y="{h - m + 14}" text-anchor="middle">{xlim[1]:.4g}</text>',
        f'<text x="{m - 4}" y="{h - m}" text-anchor="end">{ylim[0]:.4g}</text>',
        f'<text x="{m - 4}" y="{m + 4}" text-anchor="end">{ylim[1]:.4g}</text>',
    ]
    return parts


def _scale(v, lo, hi, a, b):
    span = hi - lo if hi > lo else 1.0
    return a + (np.asarray(v, dtype=float) - lo) / span * (b - a)


def heatmap(path, values, x_axis, y_axis, title="", xlabel="", ylabel="") -> None:
    """Grey-scale map of ``values[row, col]``; rows run along ``y_axis``.

    Large matrices are block-averaged to at most 64 x 64 cells.
    """
    v = np.asarray(values, dtype=float)
    x_axis = np.asarray(x_axis, dtype=float)
    y_axis = np.asarray(y_axis, dtype=float)
    ry = max(1, v.shape[0] // 64)
    rx = max(1, v.shape[1] // 64)
    ny, nx = v.shape[0] // ry, v.shape[1] // rx
    v = v[: ny * ry, : nx * rx].reshape(ny, ry, nx, rx).mean(axis=(1, 3))
    vmax = float(v.max()) if v.size and v.max() > 0 else 1.0
    xlim = (float(x_axis.min()), float(x_axis.max()))
    ylim = (float(y_axis.min()), float(y_axis.max()))
    parts = _frame(title, xlabel, ylabel, xlim, ylim)
    m = MARGIN
    cw = (WIDTH - 2 * m) / nx
    ch = (HEIGHT - 2 * m) / ny
    for i in range(ny):
        for j in range(nx):
            level = int(round(255 * (1.0 - v[i, j] / vmax)))
            if level >= 255:
                continue
            y = HEIGHT - m - (i + 1) * ch
            parts.append(
                f'<rect x="{_f(m + j * cw)}" y="{_f(y)}" width="{_f(cw)}" height="{_f(ch)}" '
                f'fill="rgb({level},{level},{level})"/>'
            )
    parts.append("</svg>")
    _write(path, parts)


def line_plot(path, x, series: dict, title="", xlabel="", ylabel="") -> None:
    """One polyline per entry of ``series`` (label -> y values), drawn in key order."""
    x = np.asarray(x, dtype=float)
    ys = [np.asarray(series[k], dtype=float) for k in series]
    lo = min(float(y.min()) for y in ys)
    hi = max(float(y.max()) for y in ys)
    xlim = (float(x.min()), float(x.max()))
    parts = _frame(title, xlabel, ylabel, xlim, (lo, hi))
    m = MARGIN
    px = _scale(x, *xlim, m, WIDTH - m)
    for k, (label, y) in enumerate(zip(series, ys)):
        py = _scale(y, lo, hi, HEIGHT - m, m)
        pts = " ".join(f"{_f(a)},{_f(b)}" for a, b in zip(px, py))
        color = _COLORS[k % len(_COLORS)]
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        parts.append(f'<text x="{WIDTH - m}" y="{m + 14 * k}" text-anchor="end" '
                     f'fill="{color}">{escape(str(label))}</text>')
    parts.append("</svg>")
    _write(path, parts)


def _write(path, parts) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")
