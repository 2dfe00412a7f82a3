"""Small estimation helpers: least-squares slopes, bootstrap errors, block bootstrap CIs."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    se: float
    n: int


def ols_line(x, y) -> LineFit:
    """Least-squares line with the classical slope standard error."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3:
        raise ValueError("need at least three points")
    A = np.vstack([x, np.ones_like(x)]).T
    (b, a), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (a + b * x)
    s2 = resid @ resid / (x.size - 2)
    se = math.sqrt(s2 / np.sum((x - x.mean()) ** 2))
    return LineFit(float(b), float(a), se, int(x.size))


def bootstrap_slope(x, y, n_boot: int = 200, rng: np.random.Generator | None = None) -> LineFit:
    """Least-squares slope with SE from a residual bootstrap."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    fit = ols_line(x, y)
    rng = np.random.default_rng(0) if rng is None else rng
    fitted = fit.intercept + fit.slope * x
    resid = y - fitted
    xc = x - x.mean()
    denom = np.sum(xc * xc)
    idx = rng.integers(0, x.size, size=(n_boot, x.size))
    ystar = fitted + resid[idx]
    slopes = (ystar @ xc) / denom
    return LineFit(fit.slope, fit.intercept, float(np.std(slopes, ddof=1)), fit.n)


def block_bootstrap_ci(series, block: int | None = None, n_boot: int = 2000, level: float = 0.95,
                       rng: np.random.Generator | None = None) -> tuple[float, float, float]:
    """Mean of a correlated series with a moving-block bootstrap percentile interval.

    Returns ``(mean, lo, hi)``.  The default block length is ``ceil(sqrt(n))``.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("need at least two samples")
    L = int(block) if block else int(math.ceil(math.sqrt(n)))
    L = max(1, min(L, n))
    rng = np.random.default_rng(0) if rng is None else rng
    n_blocks = int(math.ceil(n / L))
    csum = np.concatenate([[0.0], np.cumsum(x)])
    starts = rng.integers(0, n - L + 1, size=(n_boot, n_blocks))
    block_sums = csum[starts + L] - csum[starts]
    # the last block is only partly used when L does not divide n
    tail = n - (n_blocks - 1) * L
    last = csum[starts[:, -1] + tail] - csum[starts[:, -1]]
    means = (block_sums[:, :-1].sum(axis=1) + last) / n
    a = (1.0 - level) / 2.0
    lo, hi = np.quantile(means, [a, 1.0 - a])
    return float(x.mean()), float(lo), float(hi)


def mean_se(samples, axis: int = 0):
    """Sample mean and its standard error along ``axis``."""
    x = np.asarray(samples)
    n = x.shape[axis]
    return x.mean(axis=axis), x.std(axis=axis, ddof=1) / math.sqrt(n)


def radial_profile_slope(values: np.ndarray, k_abs: np.ndarray, kmin: float = 1.0, kmax: float | None = None) -> LineFit:
    """Slope of ``log values`` against ``log(1+|k|)`` over ``kmin <= |k| <= kmax``."""
    kmax = np.inf if kmax is None else kmax
    sel = (k_abs >= kmin) & (k_abs <= kmax) & (values > 0)
    return ols_line(np.log1p(k_abs[sel]), np.log(values[sel]))
