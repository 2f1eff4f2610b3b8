"""CSV summaries and a small hand-written SVG plot.

Numbers go out with 17 significant digits (CSV) or fixed decimals (SVG)
so identical runs give identical bytes.
"""

from __future__ import annotations

import csv

import numpy as np

__all__ = ["write_rows_csv", "write_plot_svg", "fmt"]


def fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def write_rows_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
_W, _H = 640, 260
_L, _R, _TOP, _BOT = 70, 20, 30, 40


def _panel(y0, title, t, series, labels):
    t = np.asarray(t, dtype=float)
    ys = [np.asarray(s, dtype=float) for s in series]
    lo = min(float(np.min(s)) for s in ys)
    hi = max(float(np.max(s)) for s in ys)
    if hi - lo < 1e-300:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    ta, tb = float(t[0]), float(t[-1])
    pw, ph = _W - _L - _R, _H - _TOP - _BOT

    def px(v):
        return _L + (v - ta) / (tb - ta) * pw

    def py(v):
        return y0 + _TOP + (hi - v) / (hi - lo) * ph

    out = [f'<text x="{_W / 2:.1f}" y="{y0 + 18:.1f}" text-anchor="middle" font-size="14">{title}</text>']
    out.append(
        f'<rect x="{_L}" y="{y0 + _TOP}" width="{pw}" height="{ph}" fill="none" stroke="#000" stroke-width="1"/>'
    )
    for k in range(5):
        tv = ta + k * (tb - ta) / 4
        out.append(
            f'<text x="{px(tv):.2f}" y="{y0 + _TOP + ph + 16:.2f}" text-anchor="middle" font-size="11">{tv:.3g}</text>'
        )
        yv = lo + k * (hi - lo) / 4
        out.append(
            f'<text x="{_L - 6}" y="{py(yv) + 4:.2f}" text-anchor="end" font-size="11">{yv:.3g}</text>'
        )
    out.append(
        f'<text x="{_W / 2:.1f}" y="{y0 + _H - 4:.1f}" text-anchor="middle" font-size="12">t</text>'
    )
    for i, (s, lab) in enumerate(zip(ys, labels)):
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(t, s))
        color = _COLORS[i % len(_COLORS)]
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        out.append(
            f'<text x="{_L + 8}" y="{y0 + _TOP + 14 + 14 * i:.1f}" font-size="11" fill="{color}">{lab}</text>'
        )
    return out


def write_plot_svg(path, t, x, t_res, residual):
    """Two stacked panels: trajectory components and the residual, versus ``t``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    residual = np.atleast_2d(np.asarray(residual, dtype=float))
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{2 * _H}" viewBox="0 0 {_W} {2 * _H}">']
    parts.append(f'<rect width="{_W}" height="{2 * _H}" fill="#fff"/>')
    parts += _panel(0, "trajectory", t, x.T, [f"x{k + 1}" for k in range(x.shape[1])])
    parts += _panel(
        _H, "residual q - P - c", t_res, residual.T, [f"residual{k + 1}" for k in range(residual.shape[1])]
    )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
