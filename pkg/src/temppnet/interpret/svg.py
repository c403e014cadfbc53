"""Minimal hand-emitted SVG line charts for trend curves and symptom segments."""

from __future__ import annotations

import html as html_lib
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

WIDTH = 640
HEIGHT = 320
MARGIN = 40
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


@dataclass(frozen=True, slots=True)
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray


def _scale(values: np.ndarray, lo: float, hi: float, out_lo: float, out_hi: float) -> np.ndarray:
    span = hi - lo if hi > lo else 1.0
    return out_lo + (np.asarray(values, dtype=np.float64) - lo) / span * (out_hi - out_lo)


def _polyline(xs: np.ndarray, ys: np.ndarray, color: str) -> str:
    points = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys, strict=True))
    return f"<polyline fill='none' stroke='{color}' stroke-width='1.5' points='{points}'/>"


def line_chart(
    series: Sequence[Series],
    *,
    title: str,
    x_label: str,
    y_range: tuple[float, float] | None = None,
    band: np.ndarray | None = None,
) -> str:
    """One polyline per series; ``band`` (same length as x, values >= 0) shades the
    background with opacity proportional to its normalized value."""

    if not series:
        raise ValueError("line_chart needs at least one series")
    x_all = np.concatenate([s.x for s in series])
    y_all = np.concatenate([s.y for s in series])
    x_lo, x_hi = float(x_all.min()), float(x_all.max())
    y_lo, y_hi = y_range if y_range is not None else (float(y_all.min()), float(y_all.max()))
    left, right = MARGIN, WIDTH - MARGIN
    top, bottom = MARGIN, HEIGHT - MARGIN

    parts = [
        f"<svg xmlns='http://www.w3.org/2000/svg' width='{WIDTH}' height='{HEIGHT}' "
        f"viewBox='0 0 {WIDTH} {HEIGHT}'>",
        "<rect width='100%' height='100%' fill='white'/>",
        f"<text x='{WIDTH / 2:.0f}' y='20' text-anchor='middle' font-size='14'>"
        f"{html_lib.escape(title)}</text>",
    ]

    if band is not None:
        weights = np.asarray(band, dtype=np.float64)
        peak = float(weights.max()) if weights.size else 0.0
        xs = _scale(series[0].x, x_lo, x_hi, left, right)
        step = (right - left) / max(len(xs) - 1, 1)
        for x, w in zip(xs, weights, strict=True):
            if peak <= 0.0 or w <= 0.0:
                continue
            parts.append(
                f"<rect x='{x - step / 2:.2f}' y='{top}' width='{step:.2f}' "
                f"height='{bottom - top}' fill='#f4a261' fill-opacity='{0.6 * w / peak:.3f}'/>"
            )

    parts.append(
        f"<line x1='{left}' y1='{bottom}' x2='{right}' y2='{bottom}' stroke='black'/>"
        f"<line x1='{left}' y1='{top}' x2='{left}' y2='{bottom}' stroke='black'/>"
    )
    parts.append(
        f"<text x='{left}' y='{HEIGHT - 10}' font-size='11'>{x_lo:g}</text>"
        f"<text x='{right}' y='{HEIGHT - 10}' font-size='11' text-anchor='end'>{x_hi:g}</text>"
        f"<text x='{WIDTH / 2:.0f}' y='{HEIGHT - 10}' font-size='11' text-anchor='middle'>"
        f"{html_lib.escape(x_label)}</text>"
        f"<text x='4' y='{bottom}' font-size='11'>{y_lo:.2g}</text>"
        f"<text x='4' y='{top + 4}' font-size='11'>{y_hi:.2g}</text>"
    )

    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        xs = _scale(s.x, x_lo, x_hi, left, right)
        ys = _scale(s.y, y_lo, y_hi, bottom, top)
        parts.append(_polyline(xs, ys, color))
        parts.append(
            f"<text x='{right}' y='{top + 12 * (i + 1)}' font-size='10' fill='{color}' "
            "text-anchor='end'>"
            f"{html_lib.escape(s.label)}</text>"
        )

    parts.append("</svg>")
    return "\n".join(parts) + "\n"
