"""Analytic eigenvalue distributions for an observable with Gaussian matrix error.

Two-level laws (uniform and mixed state), the N x N joint eigenvalue law in
determinant and permutation-sum form, the 2 x 2 sum/difference factorisation
and the steepest-descent single-outcome marginal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errormodel import ErrorModel
from .hermitian import signed_permutations, vandermonde, vandermonde_batch
from .numerics import normalize_1d

SPECTRUM_MIN_GAP = 1e-9
R_MIN_GAP = 1e-12
NORM_TOL = 1e-11
# half-width beyond the extreme eigenvalues, in units of 1/sqrt(c)
WINDOW = 8.0


class Spectrum:
    """Pairwise-distinct eigenvalues a_1..a_N of the ideal observable."""

    __slots__ = ("_values",)

    def __init__(self, values):
        v = np.array(values, dtype=float).ravel()
        if v.size < 1:
            raise ValueError("spectrum must contain at least one value")
        if not np.all(np.isfinite(v)):
            raise ValueError("spectrum has non-finite values")
        if v.size > 1:
            gaps = np.abs(v[:, None] - v[None, :])[np.triu_indices(v.size, 1)]
            if gaps.min() <= SPECTRUM_MIN_GAP:
                raise ValueError("spectrum values must be pairwise distinct "
                                 f"(closest gap {gaps.min():.3g})")
        v.setflags(write=False)
        self._values = v

    @property
    def values(self) -> np.ndarray:
        return self._values

    def __len__(self) -> int:
        return self._values.size

    def __iter__(self):
        return iter(self._values.tolist())

    def __repr__(self) -> str:
        return f"Spectrum({self._values.tolist()})"


def _as_spectrum(a) -> Spectrum:
    return a if isinstance(a, Spectrum) else Spectrum(a)


@dataclass(frozen=True)
class DensityGrid:
    """A density tabulated on an ascending grid.

    ``values`` are already divided by ``norm_constant``.
    """

    grid: np.ndarray
    values: np.ndarray
    norm_constant: float

    def integral(self) -> float:
        return float(np.trapezoid(self.values, self.grid))


def tabulate(f, lo: float, hi: float, n: int, norm_constant: float = 1.0) -> DensityGrid:
    x = np.linspace(lo, hi, n)
    y = np.asarray(f(x), dtype=float)
    if np.any(y < 0):
        # rounding-level negatives at exact zeros of the density
        if y.min() < -1e-12 * max(y.max(), 1.0):
            raise ValueError("density is negative on the grid")
        y = np.clip(y, 0.0, None)
    return DensityGrid(x, y, float(norm_constant))


def _check_ac(a: float, c: float):
    if not a > 0:
        raise ValueError(f"a must be positive, got {a!r}")
    if not c > 0:
        raise ValueError(f"c must be positive, got {c!r}")


def default_window(values, c: float) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    half = WINDOW / math.sqrt(c)
    return float(v.min() - half), float(v.max() + half)


# --- two-level observable diag(a, -a) -------------------------------------

def pdf2_uniform(r, a: float, c: float):
    """Outcome density for diag(a, -a) in the maximally mixed state.

    (1/a) sqrt(c/pi) r sinh(2acr) exp(-c(r^2 + a^2)); ``c`` is the inverse
    variance of each Bloch component of a traceless error.
    """
    _check_ac(a, c)
    pref = math.sqrt(c / math.pi) / a
    if isinstance(r, (float, int)):  # quadrature hot path
        r = abs(float(r))
        if 2.0 * a * c * r < 700.0:
            return pref * r * math.sinh(2.0 * a * c * r) * math.exp(-c * (r * r + a * a))
        return 0.5 * pref * r * (math.exp(-c * (r - a) ** 2) - math.exp(-c * (r + a) ** 2))
    r = np.asarray(r, dtype=float)
    z = 2.0 * a * c * np.abs(r)
    with np.errstate(over="ignore", invalid="ignore"):
        direct = pref * np.abs(r) * np.sinh(z) * np.exp(-c * (r * r + a * a))
    # sinh overflows long before the product does
    big = 0.5 * pref * np.abs(r) * (np.exp(-c * (np.abs(r) - a) ** 2)
                                    - np.exp(-c * (np.abs(r) + a) ** 2))
    out = np.where(z < 700.0, direct, big)
    return out if out.ndim else float(out)


def pdf2_uniform_peaks(r, a: float, c: float):
    """Same law written as a difference of Gaussians centred at +-a."""
    _check_ac(a, c)
    r = np.asarray(r, dtype=float)
    out = (0.5 / a) * math.sqrt(c / math.pi) * r * (
        np.exp(-c * (r - a) ** 2) - np.exp(-c * (r + a) ** 2))
    return out if out.ndim else float(out)


def pdf2_mixed_raw(x, a: float, c: float, eta: float):
    """Unnormalised outcome density for diag(a, -a) in a state with tr(rho A) = eta."""
    _check_ac(a, c)
    if abs(eta) > a * (1 + 1e-12):
        raise ValueError(f"|eta| = {abs(eta)!r} exceeds a = {a!r}")
    k = 1.0 / (2.0 * a * c)
    if isinstance(x, (float, int)):
        gp = math.exp(-c * (x - a) ** 2)
        gm = math.exp(-c * (x + a) ** 2)
        return x * (gp - gm) + (eta / a) * ((x - k) * gp + (x + k) * gm)
    x = np.asarray(x, dtype=float)
    gp = np.exp(-c * (x - a) ** 2)
    gm = np.exp(-c * (x + a) ** 2)
    out = x * (gp - gm) + (eta / a) * ((x - k) * gp + (x + k) * gm)
    return out if out.ndim else float(out)


def pdf2_mixed_analytic_norm(a: float, c: float) -> float:
    """Integral of :func:`pdf2_mixed_raw` over the real line, independent of eta."""
    return 2.0 * a * math.sqrt(math.pi / c)


@lru_cache(maxsize=1024)
def pdf2_mixed_norm(a: float, c: float, eta: float) -> float:
    half = a + WINDOW / math.sqrt(c)
    return normalize_1d(lambda t: pdf2_mixed_raw(t, a, c, eta), -half, half, NORM_TOL)


def pdf2_mixed(x, a: float, c: float, eta: float):
    z = pdf2_mixed_norm(float(a), float(c), float(eta))
    if isinstance(x, (float, int)):
        return pdf2_mixed_raw(x, a, c, eta) / z
    out = np.asarray(pdf2_mixed_raw(x, a, c, eta)) / z
    return out if out.ndim else float(out)


def eta_from_bloch(rho_vec, a: float) -> float:
    """tr(rho A) for rho = 1/2 + sigma.rho and A = diag(a, -a)."""
    return 2.0 * a * float(np.asarray(rho_vec, dtype=float)[2])


# --- N x N joint eigenvalue law ---------------------------------------------

def _check_r(r: np.ndarray, n: int):
    if r.shape != (n,):
        raise ValueError(f"expected {n} eigenvalues, got shape {r.shape}")
    if n > 1:
        gaps = np.abs(r[:, None] - r[None, :])[np.triu_indices(n, 1)]
        if gaps.min() <= R_MIN_GAP:
            raise ValueError("eigenvalues r must be pairwise distinct")


def joint_pdf_det(r, a, model: ErrorModel) -> float:
    """Unnormalised joint density of the perturbed eigenvalues, determinant form.

    (Delta(r)/Delta(a)) det[exp(2 c1 r_k a_l)]
        * exp(-c1 sum(r^2 + a^2) - c2 (sum r - sum a)^2)

    Each row of the exponential matrix is scaled by its largest entry before
    the LU determinant so large c1 r a products do not overflow.
    """
    a = _as_spectrum(a)
    av = a.values
    r = np.asarray(r, dtype=float).ravel()
    _check_r(r, av.size)
    c1, c2 = model.c1, model.c2
    expo = 2.0 * c1 * np.outer(r, av)
    rowmax = expo.max(axis=1)
    sign, logdet = np.linalg.slogdet(np.exp(expo - rowmax[:, None]))
    if sign == 0:
        return 0.0
    log_gauss = (-c1 * (np.sum(r * r) + np.sum(av * av))
                 - c2 * (r.sum() - av.sum()) ** 2)
    ratio = vandermonde(r) / vandermonde(av)
    return float(sign * ratio * math.exp(logdet + rowmax.sum() + log_gauss))


def joint_pdf_permsum(r, a, model: ErrorModel):
    """Unnormalised joint density as a signed sum over permutations.

    Finite for coincident r (where it vanishes). Accepts a single vector of
    N eigenvalues or a stack of shape (..., N).
    """
    a = _as_spectrum(a)
    av = a.values
    r = np.asarray(r, dtype=float)
    n = av.size
    if r.shape[-1] != n:
        raise ValueError(f"expected {n} eigenvalues, got shape {r.shape}")
    c1, c2 = model.c1, model.c2
    perms = list(signed_permutations(n))
    expo = np.stack([-c1 * np.sum((r - av[list(perm)]) ** 2, axis=-1) for perm, _ in perms])
    top = expo.max(axis=0)
    total = np.zeros(r.shape[:-1])
    for (_, sgn), e in zip(perms, expo):
        total = total + sgn * np.exp(e - top)
    total = total * np.exp(top - c2 * (r.sum(axis=-1) - av.sum()) ** 2)
    out = vandermonde_batch(r) / vandermonde(av) * total
    return out if np.ndim(out) else float(out)


def joint_pdf2_sumdiff(r1, r2, a: float, model: ErrorModel):
    """2 x 2 joint law for A = diag(a, -a) factored into sum and difference."""
    if not a > 0:
        raise ValueError(f"a must be positive, got {a!r}")
    c1, c2 = model.c1, model.c2
    s = np.asarray(r1, dtype=float) + np.asarray(r2, dtype=float)
    d = np.asarray(r1, dtype=float) - np.asarray(r2, dtype=float)
    with np.errstate(over="ignore"):
        out = (np.exp(-(c2 + 0.5 * c1) * s * s)
               * d * np.sinh(2.0 * a * c1 * d) * np.exp(-0.5 * c1 * d * d))
    return out if np.ndim(out) else float(out)


# --- steepest-descent marginal ----------------------------------------------

def marginal_sd_raw(x, a, c: float):
    """sum_k exp(-c (x - a_k)^2) prod_{m != k} |x - a_m| / |a_k - a_m|."""
    if not c > 0:
        raise ValueError(f"c must be positive, got {c!r}")
    av = _as_spectrum(a).values
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for k, ak in enumerate(av):
        term = np.exp(-c * (x - ak) ** 2)
        for m, am in enumerate(av):
            if m != k:
                term = term * (np.abs(x - am) / abs(ak - am))
        total = total + term
    return total if total.ndim else float(total)


@lru_cache(maxsize=256)
def _sd_norm(values: tuple, c: float) -> float:
    lo, hi = default_window(values, c)
    return normalize_1d(lambda t: marginal_sd_raw(t, values, c), lo, hi, NORM_TOL)


def marginal_sd_norm(a, c: float) -> float:
    return _sd_norm(tuple(_as_spectrum(a).values.tolist()), float(c))


def marginal_sd(x, a, c: float):
    """Steepest-descent outcome density, normalised on the default window.

    ``c`` plays the role of c1 + c2.
    """
    a = _as_spectrum(a)
    out = np.asarray(marginal_sd_raw(x, a, c)) / marginal_sd_norm(a, c)
    return out if out.ndim else float(out)


# --- unitary-group integral ----------------------------------------------------

def hciz_det_ratio(r, a, c1: float) -> float:
    """det[exp(2 c1 r_k a_l)] / (Delta(r) Delta(a)), the r/a dependence of the
    Haar average of exp(2 c1 tr(r U a U^dagger))."""
    av = _as_spectrum(a).values
    r = np.asarray(r, dtype=float).ravel()
    _check_r(r, av.size)
    expo = 2.0 * c1 * np.outer(r, av)
    rowmax = expo.max(axis=1)
    sign, logdet = np.linalg.slogdet(np.exp(expo - rowmax[:, None]))
    return float(sign * math.exp(logdet + rowmax.sum()) / (vandermonde(r) * vandermonde(av)))


def hciz_constant(n: int, c1: float) -> float:
    """Known proportionality constant prod_{p<n} p! / (2 c1)^(n(n-1)/2)."""
    num = math.prod(math.factorial(p) for p in range(1, n))
    return num / (2.0 * c1) ** (n * (n - 1) // 2)
