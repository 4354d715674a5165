"""Minimal self-contained SVG plots: no plotting dependency, fully
deterministic output bytes for a given input.

Two chart types cover the experiment outputs: log-x line charts with
standard-error bands (regret curves, bound overlays) and overlaid
histograms with an optional vertical truth line (offline-evaluation
estimate distributions).  Coordinates are formatted to fixed precision
so rerunning an experiment rewrites identical files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

__all__ = ["Series", "line_plot", "histogram"]

PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#17becf",
    "#7f7f7f",
)

WIDTH, HEIGHT = 760, 500
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 72, 24, 48, 56


@dataclass(frozen=True)
class Series:
    label: str
    xs: Sequence[float]
    ys: Sequence[float]
    band_lo: Optional[Sequence[float]] = None
    band_hi: Optional[Sequence[float]] = None
    dashed: bool = False


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _nice_ticks(lo: float, hi: float, n: int = 6) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + 1e-9 * step:
        ticks.append(round(v, 12))
        v += step
    return ticks


def _tick_label(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 10000 or abs(v) < 0.01:
        return f"{v:.0e}".replace("e+0", "e").replace("e-0", "e-")
    if v == int(v):
        return str(int(v))
    return f"{v:g}"


class _Frame:
    """Maps data coordinates into the plot rectangle."""

    def __init__(self, x_lo, x_hi, y_lo, y_hi, log_x):
        self.log_x = log_x
        if log_x:
            x_lo, x_hi = math.log10(x_lo), math.log10(x_hi)
        if x_hi <= x_lo:
            x_hi = x_lo + 1.0
        if y_hi <= y_lo:
            y_hi = y_lo + 1.0
        self.x_lo, self.x_hi = x_lo, x_hi
        self.y_lo, self.y_hi = y_lo, y_hi

    def x(self, v: float) -> float:
        if self.log_x:
            v = math.log10(v)
        frac = (v - self.x_lo) / (self.x_hi - self.x_lo)
        return MARGIN_L + frac * (WIDTH - MARGIN_L - MARGIN_R)

    def y(self, v: float) -> float:
        frac = (v - self.y_lo) / (self.y_hi - self.y_lo)
        return HEIGHT - MARGIN_B - frac * (HEIGHT - MARGIN_T - MARGIN_B)


def _header(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="Helvetica, Arial, sans-serif">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.0f}" y="24" font-size="15" text-anchor="middle">{title}</text>',
    ]


def _axes(parts: list[str], frame: _Frame, xlabel: str, ylabel: str, x_ticks, y_ticks):
    x0, x1 = MARGIN_L, WIDTH - MARGIN_R
    y0, y1 = HEIGHT - MARGIN_B, MARGIN_T
    parts.append(
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black" stroke-width="1"/>'
    )
    for v, label in x_ticks:
        px = frame.x(v)
        parts.append(
            f'<line x1="{_fmt(px)}" y1="{y0}" x2="{_fmt(px)}" y2="{y0 + 5}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{_fmt(px)}" y="{y0 + 18}" font-size="11" text-anchor="middle">{label}</text>'
        )
    for v in y_ticks:
        py = frame.y(v)
        parts.append(
            f'<line x1="{x0 - 5}" y1="{_fmt(py)}" x2="{x0}" y2="{_fmt(py)}" stroke="black"/>'
        )
        parts.append(
            f'<line x1="{x0}" y1="{_fmt(py)}" x2="{x1}" y2="{_fmt(py)}" '
            f'stroke="#dddddd" stroke-width="0.5"/>'
        )
        parts.append(
            f'<text x="{x0 - 8}" y="{_fmt(py + 4)}" font-size="11" '
            f'text-anchor="end">{_tick_label(v)}</text>'
        )
    parts.append(
        f'<text x="{(x0 + x1) / 2:.0f}" y="{HEIGHT - 14}" font-size="12" '
        f'text-anchor="middle">{xlabel}</text>'
    )
    parts.append(
        f'<text x="20" y="{(y0 + y1) / 2:.0f}" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 20 {(y0 + y1) / 2:.0f})">{ylabel}</text>'
    )


def _legend(parts: list[str], entries: list[tuple[str, str, bool]]):
    lx, ly = MARGIN_L + 12, MARGIN_T + 8
    for i, (label, color, dashed) in enumerate(entries):
        y = ly + 16 * i
        dash = ' stroke-dasharray="6 3"' if dashed else ""
        parts.append(
            f'<line x1="{lx}" y1="{y}" x2="{lx + 24}" y2="{y}" stroke="{color}" '
            f'stroke-width="2"{dash}/>'
        )
        parts.append(
            f'<text x="{lx + 30}" y="{y + 4}" font-size="11">{label}</text>'
        )


def line_plot(
    title: str,
    xlabel: str,
    ylabel: str,
    series: Sequence[Series],
    log_x: bool = True,
) -> str:
    if not series:
        raise ValueError("need at least one series")
    xs_all = [x for s in series for x in s.xs]
    ys_all = [y for s in series for y in s.ys]
    for s in series:
        if s.band_hi is not None:
            ys_all.extend(s.band_hi)
    if log_x and min(xs_all) <= 0:
        raise ValueError("log-x plot needs positive x values")
    y_lo = min(0.0, min(ys_all))
    y_hi = max(ys_all) * 1.05 if max(ys_all) > 0 else 1.0
    frame = _Frame(min(xs_all), max(xs_all), y_lo, y_hi, log_x)

    if log_x:
        j_lo = math.floor(math.log10(min(xs_all)))
        j_hi = math.ceil(math.log10(max(xs_all)))
        x_ticks = [
            (10.0**j, _tick_label(10.0**j))
            for j in range(int(j_lo), int(j_hi) + 1)
            if min(xs_all) <= 10.0**j <= max(xs_all)
        ]
    else:
        x_ticks = [(v, _tick_label(v)) for v in _nice_ticks(min(xs_all), max(xs_all))]

    parts = _header(title)
    _axes(parts, frame, xlabel, ylabel, x_ticks, _nice_ticks(y_lo, y_hi))

    entries = []
    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        if s.band_lo is not None and s.band_hi is not None:
            pts = [f"{_fmt(frame.x(x))},{_fmt(frame.y(y))}" for x, y in zip(s.xs, s.band_hi)]
            pts += [
                f"{_fmt(frame.x(x))},{_fmt(frame.y(y))}"
                for x, y in zip(reversed(list(s.xs)), reversed(list(s.band_lo)))
            ]
            parts.append(
                f'<polygon points="{" ".join(pts)}" fill="{color}" fill-opacity="0.15" '
                f'stroke="none"/>'
            )
        pts = " ".join(f"{_fmt(frame.x(x))},{_fmt(frame.y(y))}" for x, y in zip(s.xs, s.ys))
        dash = ' stroke-dasharray="6 3"' if s.dashed else ""
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.8"{dash}/>'
        )
        entries.append((s.label, color, s.dashed))
    _legend(parts, entries)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def histogram(
    title: str,
    xlabel: str,
    ylabel: str,
    datasets: Sequence[tuple[str, Sequence[float]]],
    truth: Optional[float] = None,
    truth_label: str = "truth",
    bins: int = 40,
) -> str:
    if not datasets or all(len(values) == 0 for _, values in datasets):
        raise ValueError("need at least one nonempty dataset")
    values_all = [v for _, values in datasets for v in values]
    v_lo, v_hi = min(values_all), max(values_all)
    if truth is not None:
        v_lo, v_hi = min(v_lo, truth), max(v_hi, truth)
    if v_hi <= v_lo:
        v_lo, v_hi = v_lo - 0.5, v_hi + 0.5
    pad = 0.03 * (v_hi - v_lo)
    v_lo, v_hi = v_lo - pad, v_hi + pad
    width = (v_hi - v_lo) / bins

    counts = []
    for _, values in datasets:
        c = [0] * bins
        for v in values:
            idx = min(int((v - v_lo) / width), bins - 1)
            c[idx] += 1
        counts.append(c)
    y_hi = max(max(c) for c in counts) * 1.08

    frame = _Frame(v_lo, v_hi, 0.0, y_hi, log_x=False)
    parts = _header(title)
    x_ticks = [(v, _tick_label(v)) for v in _nice_ticks(v_lo, v_hi)]
    _axes(parts, frame, xlabel, ylabel, x_ticks, _nice_ticks(0.0, y_hi))

    entries = []
    for i, ((label, _), c) in enumerate(zip(datasets, counts)):
        color = PALETTE[i % len(PALETTE)]
        for b, count in enumerate(c):
            if count == 0:
                continue
            x0 = frame.x(v_lo + b * width)
            x1 = frame.x(v_lo + (b + 1) * width)
            y0 = frame.y(count)
            y_base = frame.y(0.0)
            parts.append(
                f'<rect x="{_fmt(x0)}" y="{_fmt(y0)}" width="{_fmt(x1 - x0)}" '
                f'height="{_fmt(y_base - y0)}" fill="{color}" fill-opacity="0.45"/>'
            )
        entries.append((label, color, False))
    if truth is not None:
        px = frame.x(truth)
        parts.append(
            f'<line x1="{_fmt(px)}" y1="{HEIGHT - MARGIN_B}" x2="{_fmt(px)}" '
            f'y2="{MARGIN_T}" stroke="black" stroke-width="1.5" stroke-dasharray="5 4"/>'
        )
        entries.append((f"{truth_label} = {truth:g}", "black", True))
    _legend(parts, entries)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
