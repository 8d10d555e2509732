"""Comparing samples with analytic densities: tabulated CDFs, the
Kolmogorov-Smirnov distance and moment estimates with standard errors."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

KS_ALPHA01 = 1.63  # asymptotic critical value of sqrt(n) D at alpha = 0.01
OUTSIDE_MASS_LIMIT = 1e-3


@dataclass(frozen=True)
class TabulatedCdf:
    grid: np.ndarray
    cdf_values: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("CDF grid must be strictly ascending")
        if np.any(np.diff(self.cdf_values) < 0):
            raise ValueError("CDF values must be non-decreasing")

    def __call__(self, x):
        return np.interp(x, self.grid, self.cdf_values, left=0.0, right=1.0)

    @property
    def lo(self) -> float:
        return float(self.grid[0])

    @property
    def hi(self) -> float:
        return float(self.grid[-1])


def cdf_from_density(f, lo: float, hi: float, n_grid: int = 4097) -> TabulatedCdf:
    """Cumulative trapezoid integral of ``f`` scaled so it ends at exactly 1."""
    if n_grid < 128:
        raise ValueError("n_grid must be at least 128")
    x = np.linspace(lo, hi, n_grid)
    y = np.asarray(f(x), dtype=float)
    if y.shape != x.shape:
        y = np.array([float(f(t)) for t in x])
    if np.any(y < 0):
        if y.min() < -1e-12 * max(float(y.max()), 1.0):
            raise ValueError(f"negative density encountered (min {y.min():.3g})")
        y = np.clip(y, 0.0, None)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))])
    if not cum[-1] > 0:
        raise ValueError("density integrates to zero")
    return TabulatedCdf(x, cum / cum[-1])


def ks_statistic(samples, cdf: TabulatedCdf) -> float:
    """sup |F_emp - F| evaluated on both sides of every sample point."""
    x = np.sort(np.asarray(samples, dtype=float), kind="stable")
    n = x.size
    if n < 10:
        raise ValueError("need at least 10 samples")
    outside = np.count_nonzero((x < cdf.lo) | (x > cdf.hi)) / n
    if outside > OUTSIDE_MASS_LIMIT:
        raise ValueError(f"{outside:.2%} of samples fall outside the CDF grid")
    f = cdf(x)
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - f)
    d_minus = np.max(f - (i - 1) / n)
    return float(max(d_plus, d_minus, 0.0))


def ks_critical(n: int) -> float:
    return KS_ALPHA01 / math.sqrt(n)


class Moments(NamedTuple):
    mean: float
    variance: float
    std_error_mean: float
    std_error_variance: float


def moments(samples) -> Moments:
    """Sample mean and unbiased variance with asymptotic standard errors.

    The variance's standard error uses sqrt((m4 - s^2 (n-3)/(n-1)) / n), with
    m4 the fourth central moment.
    """
    x = np.asarray(samples, dtype=float).ravel()
    n = x.size
    if n < 2:
        raise ValueError("need at least 2 samples")
    mean = float(x.mean())
    d = x - mean
    var = float(np.dot(d, d) / (n - 1))
    m4 = float(np.mean(d ** 4))
    se_var_sq = (m4 - var * var * (n - 3) / (n - 1)) / n
    return Moments(mean, var, math.sqrt(var / n), math.sqrt(max(se_var_sq, 0.0)))


def correlation(x, y) -> tuple[float, float]:
    """Pearson correlation and its standard error under independence, 1/sqrt(n)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    rho = float(np.corrcoef(x, y)[0, 1])
    return rho, 1.0 / math.sqrt(x.size)
