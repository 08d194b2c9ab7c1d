"""Minimal standalone SVG line plots with deterministic byte output.

Only what the command line needs: axes with tick labels, one polyline per
series, a legend, optional log-log scaling.  No timestamps, no randomness;
identical input yields identical bytes.
"""

from __future__ import annotations

import math

_WIDTH, _HEIGHT = 640, 440
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 70, 20, 20, 50
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _fmt(x: float) -> str:
    return f"{x:.4f}".rstrip("0").rstrip(".")


def _ticks(lo: float, hi: float, n: int = 5):
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    step = min(s * mag for s in (1, 2, 5, 10) if s * mag >= raw)
    first = math.ceil(lo / step) * step
    out = []
    t = first
    while t <= hi + 1e-12 * step:
        out.append(t)
        t += step
    return out


def emit_svg(series, log_x: bool = False, log_y: bool = False,
             x_label: str = "x", y_label: str = "y") -> str:
    """Render labelled (label, points) series as a standalone SVG document.

    Each series is a (label, [(x, y), ...]) pair with finite coordinates;
    log axes require strictly positive values.
    """
    if not series:
        raise ValueError("emit_svg needs at least one series")
    pts_all = []
    for label, pts in series:
        if not pts:
            raise ValueError(f"series {label!r} is empty")
        for x, y in pts:
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ValueError(f"non-finite coordinate in series {label!r}")
            if (log_x and x <= 0) or (log_y and y <= 0):
                raise ValueError(f"log axis needs positive values ({label!r})")
            pts_all.append((x, y))

    tx = (lambda v: math.log10(v)) if log_x else (lambda v: v)
    ty = (lambda v: math.log10(v)) if log_y else (lambda v: v)
    xs = [tx(x) for x, _ in pts_all]
    ys = [ty(y) for _, y in pts_all]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5

    inner_w = _WIDTH - _MARGIN_L - _MARGIN_R
    inner_h = _HEIGHT - _MARGIN_T - _MARGIN_B

    def px(v):
        return _MARGIN_L + (tx(v) - x_lo) / (x_hi - x_lo) * inner_w

    def py(v):
        return _HEIGHT - _MARGIN_B - (ty(v) - y_lo) / (y_hi - y_lo) * inner_h

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{inner_w}" height="{inner_h}" '
        'fill="none" stroke="black"/>',
    ]

    def back(vt, log):
        return 10.0**vt if log else vt

    for t in _ticks(x_lo, x_hi):
        x = _MARGIN_L + (t - x_lo) / (x_hi - x_lo) * inner_w
        out.append(f'<line x1="{x:.2f}" y1="{_HEIGHT - _MARGIN_B}" x2="{x:.2f}" '
                   f'y2="{_HEIGHT - _MARGIN_B + 5}" stroke="black"/>')
        lbl = _fmt(back(t, log_x))
        out.append(f'<text x="{x:.2f}" y="{_HEIGHT - _MARGIN_B + 18}" '
                   f'font-size="11" text-anchor="middle">{lbl}</text>')
    for t in _ticks(y_lo, y_hi):
        y = _HEIGHT - _MARGIN_B - (t - y_lo) / (y_hi - y_lo) * inner_h
        out.append(f'<line x1="{_MARGIN_L - 5}" y1="{y:.2f}" x2="{_MARGIN_L}" '
                   f'y2="{y:.2f}" stroke="black"/>')
        lbl = _fmt(back(t, log_y))
        out.append(f'<text x="{_MARGIN_L - 8}" y="{y + 4:.2f}" font-size="11" '
                   f'text-anchor="end">{lbl}</text>')

    out.append(f'<text x="{_MARGIN_L + inner_w / 2:.2f}" y="{_HEIGHT - 12}" '
               f'font-size="12" text-anchor="middle">{x_label}</text>')
    out.append(f'<text x="16" y="{_MARGIN_T + inner_h / 2:.2f}" font-size="12" '
               f'text-anchor="middle" transform="rotate(-90 16 '
               f'{_MARGIN_T + inner_h / 2:.2f})">{y_label}</text>')

    for i, (label, pts) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
        out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" '
                   'stroke-width="1.5"/>')
        ly = _MARGIN_T + 16 + 16 * i
        lx = _MARGIN_L + inner_w - 150
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 24}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="1.5"/>')
        out.append(f'<text x="{lx + 30}" y="{ly}" font-size="11">{label}</text>')

    out.append("</svg>")
    return "\n".join(out) + "\n"
