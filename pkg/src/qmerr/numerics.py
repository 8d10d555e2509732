"""Quadrature and peak finding for one-dimensional densities."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

MAX_DEPTH = 40
INITIAL_PANELS = 32
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
PEAK_REL_HEIGHT = 1e-6


class QuadratureError(ArithmeticError):
    pass


def _checked(f, x):
    y = float(f(x))
    if not math.isfinite(y):
        raise QuadratureError(f"integrand is not finite at x={x!r}")
    return y


def adaptive_simpson(f: Callable[[float], float], lo: float, hi: float,
                     abs_tol: float, max_depth: int = MAX_DEPTH) -> float:
    """Integrate ``f`` over [lo, hi] to absolute tolerance ``abs_tol``.

    The interval is first cut into a fixed number of panels so narrow
    features are not stepped over, then each panel is refined with the usual
    Richardson-corrected Simpson rule. Uses an explicit stack; depth is capped
    at ``max_depth`` bisections.
    """
    if not hi > lo:
        raise ValueError("need lo < hi")
    edges = np.linspace(lo, hi, INITIAL_PANELS + 1)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        a, b = float(a), float(b)
        m = 0.5 * (a + b)
        fa, fm, fb = _checked(f, a), _checked(f, m), _checked(f, b)
        whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
        stack = [(a, b, fa, fm, fb, whole, abs_tol / INITIAL_PANELS, 0)]
        while stack:
            a, b, fa, fm, fb, whole, eps, depth = stack.pop()
            m = 0.5 * (a + b)
            lm, rm = 0.5 * (a + m), 0.5 * (m + b)
            flm, frm = _checked(f, lm), _checked(f, rm)
            left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
            right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
            delta = left + right - whole
            if depth >= max_depth or abs(delta) <= 15.0 * eps:
                total += left + right + delta / 15.0
            else:
                stack.append((a, m, fa, flm, fm, left, 0.5 * eps, depth + 1))
                stack.append((m, b, fm, frm, fb, right, 0.5 * eps, depth + 1))
    return total


def normalize_1d(f: Callable[[float], float], lo: float, hi: float,
                 tol: float = 1e-10) -> float:
    """Return Z = integral of f over [lo, hi] with relative accuracy ``tol``."""
    if not hi > lo:
        raise ValueError("need lo < hi")
    if not tol > 0:
        raise ValueError("tol must be positive")
    # coarse pass fixes the scale for the relative tolerance
    xs = np.linspace(lo, hi, 257)
    ys = np.array([_checked(f, x) for x in xs])
    scale = float(np.trapezoid(np.abs(ys), xs))
    if scale <= 0:
        raise QuadratureError("integrand vanishes on the interval")
    z = adaptive_simpson(f, lo, hi, abs_tol=tol * scale)
    if not z > 0:
        raise QuadratureError(f"normalisation constant is not positive ({z!r})")
    return z


def golden_max(f: Callable[[float], float], lo: float, hi: float,
               width: float = 1e-6) -> float:
    """Golden-section search for the maximiser of a unimodal ``f`` on [lo, hi]."""
    a, b = lo, hi
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > width:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = f(x1)
    return 0.5 * (a + b)


def find_peaks(f: Callable[[float], float], lo: float, hi: float,
               n_scan: int = 2001) -> list[tuple[float, float]]:
    """Local maxima of ``f`` on [lo, hi] as (location, value), sorted by location.

    Maxima are bracketed where the discrete slope changes sign on a uniform
    scan and then refined to an interval narrower than 1e-6. Peaks lower than
    1e-6 of the highest one are dropped.
    """
    if n_scan < 64:
        raise ValueError("n_scan must be at least 64")
    xs = np.linspace(lo, hi, n_scan)
    ys = np.array([float(f(x)) for x in xs])
    slope = np.diff(ys)
    found = []
    for i in range(1, n_scan - 1):
        if slope[i - 1] > 0 and slope[i] <= 0:
            loc = golden_max(f, float(xs[i - 1]), float(xs[i + 1]))
            found.append((loc, float(f(loc))))
    if not found:
        return []
    top = max(v for _, v in found)
    return sorted((p for p in found if p[1] >= PEAK_REL_HEIGHT * top), key=lambda p: p[0])
