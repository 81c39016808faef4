"""Small least-squares helpers shared by the decay and envelope checks."""

from __future__ import annotations

import numpy as np


def linear_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Fit y = slope*x + intercept by least squares.

    Returns:
        (slope, intercept, r_squared).  r_squared is 1 for a perfect fit
        and 1.0 exactly when y is constant and matched exactly.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two points to fit a line")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(np.dot(resid, resid))
    centered = y - y.mean()
    ss_tot = float(np.dot(centered, centered))
    if ss_tot == 0.0:
        r_squared = 1.0 if ss_res == 0.0 else 0.0
    else:
        r_squared = 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r_squared


def loglog_slope(t: np.ndarray, y: np.ndarray) -> float:
    """Fitted exponent p in y ~ (1+t)**p over the given samples."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0.0):
        raise ValueError("log-log fit needs positive values")
    slope, _, _ = linear_fit(np.log1p(t), np.log(y))
    return slope
