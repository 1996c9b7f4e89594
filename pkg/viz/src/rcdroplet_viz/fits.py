"""Shared fitting helper for the scaling and tail plots."""

from __future__ import annotations

import math


def least_squares_slope(xs, ys):
    """(slope, intercept, stderr) of an ordinary least-squares line."""
    n = len(xs)
    if n < 3:
        raise ValueError("need at least 3 points to fit")
    mx = sum(xs) / n
    my = sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    slope = sxy / sxx
    intercept = my - slope * mx
    if n > 2:
        resid = sum((y - slope * x - intercept) ** 2 for x, y in zip(xs, ys))
        stderr = math.sqrt(resid / (n - 2) / sxx) if sxx > 0 else float("nan")
    else:
        stderr = float("nan")
    return slope, intercept, stderr
