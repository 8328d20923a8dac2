"""Least-squares line fits with goodness-of-fit diagnostics."""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    r_squared: float


def linear_fit(x, y):
    """Ordinary least squares y ~ slope*x + intercept.

    R^2 is reported as 1 when the residual is zero (including the
    degenerate constant-y case, where the slope is 0).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise InvalidArgumentError("need two equal-length 1-d samples")
    if np.ptp(x) == 0:
        raise InvalidArgumentError("degenerate abscissae: all x values equal")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(np.dot(resid, resid))
    ss_tot = float(np.dot(y - y.mean(), y - y.mean()))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return LineFit(slope=float(slope), intercept=float(intercept), r_squared=r2)
