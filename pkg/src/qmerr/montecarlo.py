"""Monte Carlo simulation of measurements with Gaussian matrix error.

Sampling is split into fixed-size chunks; chunk ``j`` always draws from
``RngStream(seed, j)``, so the output does not depend on how many workers
process the chunks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .closedform import Spectrum, hciz_det_ratio
from .errormodel import (
    ErrorModel,
    RngStream,
    box_muller,
    normals_per_sample,
    perturbations_from_normals,
)
from .hermitian import DensityMatrix, HermitianMatrix, born_weights, jacobi_eigh

CHUNK_SIZE = 4096
HCIZ_MAX_EXPONENT = 700.0
NEG_WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class SimulationConfig:
    observable: HermitianMatrix
    state: DensityMatrix
    model: ErrorModel
    n_samples: int
    seed: int = 0
    n_workers: int = 1

    def __post_init__(self):
        if self.observable.dim != self.state.dim:
            raise ValueError(f"observable is {self.observable.dim}x{self.observable.dim} "
                             f"but state is {self.state.dim}x{self.state.dim}")
        if self.n_samples < 1:
            raise ValueError("n_samples must be at least 1")
        if self.n_workers < 1:
            raise ValueError("n_workers must be at least 1")

    @property
    def dim(self) -> int:
        return self.observable.dim


def _chunks(n: int):
    return [(j, start, min(CHUNK_SIZE, n - start))
            for j, start in enumerate(range(0, n, CHUNK_SIZE))]


def _run_chunks(fn, n: int, n_workers: int) -> list:
    chunks = _chunks(n)
    if n_workers == 1 or len(chunks) == 1:
        return [fn(j, m) for j, _, m in chunks]
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(lambda c: fn(c[0], c[2]), chunks))


def _draw_chunk(cfg: SimulationConfig, stream_id: int, m: int):
    """Perturbed spectra plus one outcome uniform per sample.

    Every sample owns a fixed row of uniforms (Box-Muller pairs for its
    matrix, then one for the outcome), so sample i of a chunk does not depend
    on the chunk's length.
    """
    k = normals_per_sample(cfg.dim)
    pairs = (k + 1) // 2
    u = RngStream(cfg.seed, stream_id).uniform((m, 2 * pairs + 1))
    z = box_muller(u[:, :2 * pairs])[:, :k]
    b = perturbations_from_normals(cfg.dim, cfg.model, z)
    evals, vecs = jacobi_eigh(cfg.observable.entries[None, :, :] + b)
    return evals, vecs, u[:, -1]


def _outcome_chunk(cfg: SimulationConfig, stream_id: int, m: int) -> np.ndarray:
    evals, u, uniforms = _draw_chunk(cfg, stream_id, m)
    w = born_weights(cfg.state.entries, u)
    if np.any(w < -NEG_WEIGHT_TOL):
        raise FloatingPointError(f"Born weight {w.min():.3g} is negative beyond rounding")
    w = np.clip(w, 0.0, None)
    cum = np.cumsum(w, axis=1)
    target = uniforms * cum[:, -1]
    k = np.minimum(np.sum(cum <= target[:, None], axis=1), cfg.dim - 1)
    return evals[np.arange(m), k]


def simulate_outcomes(cfg: SimulationConfig) -> np.ndarray:
    """Draw ``n_samples`` measurement outcomes of A + B in the state rho.

    For each sample: draw B, diagonalise A + B, take the Born weights of rho in
    the perturbed eigenbasis and pick one eigenvalue by inverse CDF with a
    single uniform.
    """
    parts = _run_chunks(lambda j, m: _outcome_chunk(cfg, j, m), cfg.n_samples, cfg.n_workers)
    return np.concatenate(parts)


def simulate_spectra(observable: HermitianMatrix, model: ErrorModel, n_samples: int,
                     seed: int = 0, n_workers: int = 1) -> np.ndarray:
    """Ascending eigenvalues of A + B for ``n_samples`` draws, shape (n, N)."""
    cfg = SimulationConfig(observable, DensityMatrix.maximally_mixed(observable.dim),
                           model, n_samples, seed, n_workers)

    def chunk(j, m):
        return _draw_chunk(cfg, j, m)[0]

    return np.concatenate(_run_chunks(chunk, n_samples, n_workers))


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    total: int

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    def density(self) -> np.ndarray:
        """Counts per unit length per sample; integrates to sum(counts)/total."""
        return self.counts / (self.total * np.diff(self.edges))


def histogram(samples, lo: float, hi: float, bins: int) -> Histogram:
    """Left-closed bins with the last bin closed; out-of-range samples only count
    towards ``total``."""
    if not hi > lo:
        raise ValueError("need lo < hi")
    if bins < 1:
        raise ValueError("bins must be positive")
    x = np.asarray(samples, dtype=float).ravel()
    edges = lo + (hi - lo) * np.arange(bins + 1) / bins
    edges[-1] = hi
    idx = np.searchsorted(edges, x, side="right") - 1
    idx[x == hi] = bins - 1
    inside = (idx >= 0) & (idx < bins)
    counts = np.bincount(idx[inside], minlength=bins).astype(np.int64)
    return Histogram(edges, counts, int(x.size))


def default_histogram_range(spectrum, c1: float) -> tuple[float, float]:
    v = np.asarray(list(spectrum), dtype=float)
    half = 4.0 / math.sqrt(c1)
    return float(v.min() - half), float(v.max() + half)


def haar_unitaries(n: int, rng: RngStream, size: int) -> np.ndarray:
    """``size`` Haar-random n x n unitaries from QR of complex Ginibre matrices,
    with each column of Q multiplied by the phase of R's diagonal."""
    if n < 1:
        raise ValueError("n must be at least 1")
    z = rng.normal((size, 2, n, n))
    g = (z[:, 0] + 1j * z[:, 1]) / math.sqrt(2.0)
    q, r = np.linalg.qr(g)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.abs(d))[:, None, :]


def haar_unitary(n: int, rng: RngStream) -> np.ndarray:
    return haar_unitaries(n, rng, 1)[0]


def hciz_mc_estimate(r, a, c1: float, n: int, rng: RngStream) -> tuple[float, float]:
    """Haar average of exp(2 c1 tr(diag(r) U diag(a) U^dagger)).

    Returns (mean, standard error of the mean).
    """
    r = np.asarray(r, dtype=float).ravel()
    av = np.asarray(list(a), dtype=float)
    if r.size != av.size:
        raise ValueError("r and a must have the same length")
    if not (np.all(np.isfinite(r)) and np.all(np.isfinite(av)) and math.isfinite(c1)):
        raise ValueError("arguments must be finite")
    bound = 2.0 * abs(c1) * r.size * np.max(np.abs(r)) * np.max(np.abs(av))
    if bound > HCIZ_MAX_EXPONENT:
        raise OverflowError(f"exponent bound {bound:.3g} exceeds {HCIZ_MAX_EXPONENT}")
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n:
        m = min(CHUNK_SIZE, n - done)
        u = haar_unitaries(r.size, rng, m)
        # tr(diag(r) U diag(a) U^dagger) = sum_kl r_k a_l |U_kl|^2
        expo = 2.0 * c1 * np.einsum("k,bkl,l->b", r, np.abs(u) ** 2, av)
        vals = np.exp(expo)
        total += float(vals.sum())
        total_sq += float(np.dot(vals, vals))
        done += m
    mean = total / n
    if n < 2:
        return mean, math.inf
    var = max(total_sq - n * mean * mean, 0.0) / (n - 1)
    return mean, math.sqrt(var / n)


def hciz_ratio(r, a, c1: float, n: int, rng: RngStream) -> tuple[float, float]:
    """MC estimate divided by det[exp(2 c1 r_k a_l)] / (Delta(r) Delta(a)).

    The ratio is a constant that depends only on N and c1.
    """
    mean, se = hciz_mc_estimate(r, a, c1, n, rng)
    ref = hciz_det_ratio(r, Spectrum(list(a)), c1)
    return mean / ref, se / abs(ref)


def ideal_outcomes(observable: HermitianMatrix, state: DensityMatrix):
    """Error-free outcome atoms and their Born weights."""
    evals, u = jacobi_eigh(observable.entries)
    w = np.clip(born_weights(state.entries, u), 0.0, None)
    return evals, w / w.sum()
