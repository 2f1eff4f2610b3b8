"""Composite Simpson rules on piecewise-smooth intervals."""

import numpy as np

# Points closer than this (relative to the interval length) are merged.
SNAP = 1e-12


def merge_points(points, a, b, snap=SNAP):
    """Sorted unique knots in [a, b], always containing both ends.

    Knots within ``snap * (b - a)`` of their sorted predecessor (or of an
    end) are dropped.
    """
    pts = np.asarray(points, dtype=float).ravel()
    tol = snap * max(b - a, abs(a), abs(b), 1.0)
    pts = pts[(pts > a + tol) & (pts < b - tol)]
    pts = np.concatenate([[a], np.sort(pts), [b]])
    keep = np.concatenate([[True], np.diff(pts) > tol])
    keep[-1] = True
    return pts[keep]


def simpson_rule(knots, subsamples=2):
    """Nodes and weights of composite Simpson between consecutive knots.

    Every piece ``[knots[i], knots[i+1]]`` gets ``subsamples`` (even)
    sub-intervals, so the rule is exact for cubics on each piece.
    Shared end nodes are merged.
    """
    if subsamples < 2 or subsamples % 2:
        raise ValueError(f"subsamples must be even and >= 2, got {subsamples}")
    knots = np.asarray(knots, dtype=float)
    if knots.size < 2:
        return np.empty(0), np.empty(0)
    lo = knots[:-1, None]
    width = (knots[1:] - knots[:-1])[:, None]
    u = np.arange(subsamples + 1) / subsamples
    pts = lo + width * u[None, :]
    # pin the right end to the next knot exactly
    pts[:, -1] = knots[1:]
    base = np.ones(subsamples + 1)
    base[1:-1:2] = 4.0
    base[2:-1:2] = 2.0
    wts = width * base[None, :] / (3.0 * subsamples)
    nodes = np.concatenate([pts[:, :-1].ravel(), knots[-1:]])
    weights = np.zeros(nodes.size)
    body = wts[:, :-1].ravel()
    weights[: body.size] += body
    # right-end weights land on the first node of the following piece
    starts = np.arange(1, knots.size) * subsamples
    weights[starts] += wts[:, -1]
    return nodes, weights


def cumulative_simpson(knots, values_fn, subsamples=2):
    """Running integrals of ``values_fn`` at every knot (first entry 0).

    ``values_fn`` maps an array of points to an array whose leading axis
    follows the points.
    """
    knots = np.asarray(knots, dtype=float)
    nodes, weights = simpson_rule(knots, subsamples)
    vals = np.asarray(values_fn(nodes), dtype=float)
    per_piece = np.zeros((knots.size - 1,) + vals.shape[1:])
    s = subsamples
    base = np.ones(s + 1)
    base[1:-1:2] = 4.0
    base[2:-1:2] = 2.0
    width = knots[1:] - knots[:-1]
    for i in range(knots.size - 1):
        seg = vals[i * s : i * s + s + 1]
        per_piece[i] = np.tensordot(base, seg, axes=(0, 0)) * width[i] / (3.0 * s)
    out = np.zeros((knots.size,) + vals.shape[1:])
    out[1:] = np.cumsum(per_piece, axis=0)
    return out
