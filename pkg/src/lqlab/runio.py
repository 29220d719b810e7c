"""Artifact writers: CSV logs, JSON reports, and SVG overlay plots.

Numbers are written with the shortest round-trip decimal representation and
LF line endings, so re-running an identical config produces byte-identical
CSV content; SVG output carries no timestamps for the same reason.
"""

from __future__ import annotations

import json
import math
import os
from typing import Iterable, Sequence

import numpy as np


def format_number(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_number(cell) for cell in row))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def write_fields_csv(path: str, grid, values, controls, analytic_v, analytic_u) -> None:
    x = grid.nodes()
    rows = [
        (i, x[i], values[i], controls[i], analytic_v[i], analytic_u[i])
        for i in range(grid.n_nodes)
    ]
    write_csv(
        path,
        ("node", "x", "value", "policy", "analytic_value", "analytic_policy"),
        rows,
    )


def write_report(path: str, report: dict) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


# ---------------------------------------------------------------------------
# SVG overlay plots
# ---------------------------------------------------------------------------

_WIDTH, _HEIGHT, _PAD = 640, 420, 56
_SERIES_COLORS = ("#1f77b4", "#ff7f0e")


def _finite_bounds(arrays):
    lo, hi = math.inf, -math.inf
    for arr in arrays:
        finite = np.asarray(arr)[np.isfinite(arr)]
        if finite.size:
            lo = min(lo, float(finite.min()))
            hi = max(hi, float(finite.max()))
    if not math.isfinite(lo):
        lo, hi = 0.0, 1.0
    if hi - lo < 1e-12:
        hi = lo + 1.0
    return lo, hi


def write_overlay_svg(path: str, x, series: Sequence[tuple[str, np.ndarray]],
                      title: str, xlabel: str, ylabel: str) -> None:
    """Polyline plot of up to two series over ``x`` with a small legend.

    Non-finite samples break the polyline instead of being drawn, so diverged
    runs still render.
    """
    x = np.asarray(x, dtype=float)
    x_lo, x_hi = float(x.min()), float(x.max())
    y_lo, y_hi = _finite_bounds([vals for _, vals in series])

    def sx(v):
        return _PAD + (v - x_lo) / (x_hi - x_lo) * (_WIDTH - 2 * _PAD)

    def sy(v):
        return _HEIGHT - _PAD - (v - y_lo) / (y_hi - y_lo) * (_HEIGHT - 2 * _PAD)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<text x="{_WIDTH / 2:.1f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>',
        f'<line x1="{_PAD}" y1="{_HEIGHT - _PAD}" x2="{_WIDTH - _PAD}" '
        f'y2="{_HEIGHT - _PAD}" stroke="black"/>',
        f'<line x1="{_PAD}" y1="{_PAD}" x2="{_PAD}" y2="{_HEIGHT - _PAD}" stroke="black"/>',
        f'<text x="{_WIDTH / 2:.1f}" y="{_HEIGHT - 14}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{xlabel}</text>',
        f'<text x="16" y="{_HEIGHT / 2:.1f}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="12" transform="rotate(-90 16,{_HEIGHT / 2:.1f})">{ylabel}</text>',
        f'<text x="{_PAD}" y="{_HEIGHT - _PAD + 16}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="10">{x_lo:.3g}</text>',
        f'<text x="{_WIDTH - _PAD}" y="{_HEIGHT - _PAD + 16}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="10">{x_hi:.3g}</text>',
        f'<text x="{_PAD - 6}" y="{_HEIGHT - _PAD + 4}" text-anchor="end" '
        f'font-family="sans-serif" font-size="10">{y_lo:.3g}</text>',
        f'<text x="{_PAD - 6}" y="{_PAD + 4}" text-anchor="end" '
        f'font-family="sans-serif" font-size="10">{y_hi:.3g}</text>',
    ]
    for idx, (label, vals) in enumerate(series):
        color = _SERIES_COLORS[idx % len(_SERIES_COLORS)]
        vals = np.asarray(vals, dtype=float)
        segment: list[str] = []
        chunks = []
        for xi, yi in zip(x, vals):
            if math.isfinite(yi):
                segment.append(f"{sx(xi):.2f},{sy(yi):.2f}")
            elif segment:
                chunks.append(segment)
                segment = []
        if segment:
            chunks.append(segment)
        for seg in chunks:
            if len(seg) > 1:
                parts.append(
                    f'<polyline points="{" ".join(seg)}" fill="none" '
                    f'stroke="{color}" stroke-width="1.5"/>'
                )
        ly = _PAD + 16 + 18 * idx
        parts.append(
            f'<rect x="{_WIDTH - _PAD - 110}" y="{ly - 9}" width="18" height="4" fill="{color}"/>'
        )
        parts.append(
            f'<text x="{_WIDTH - _PAD - 86}" y="{ly - 3}" font-family="sans-serif" '
            f'font-size="11">{label}</text>'
        )
    parts.append("</svg>")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(parts) + "\n")
