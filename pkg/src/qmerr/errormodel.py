"""Gaussian random Hermitian perturbations with weight
exp(-c1 tr B^2 - c2 (tr B)^2), plus the seeded random streams that drive them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hermitian import HermitianMatrix

_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class ErrorModel:
    """Inverse-variance constants of the matrix error.

    ``c1`` controls the quantum (traceless) part, ``c2`` couples the trace.
    """

    c1: float
    c2: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.c1) or self.c1 <= 0:
            raise ValueError(f"c1 must be positive, got {self.c1!r}")
        if not np.isfinite(self.c2) or self.c2 < 0:
            raise ValueError(f"c2 must be non-negative, got {self.c2!r}")

    def trace_variance(self, n: int) -> float:
        """Variance of tr B for an n x n sample."""
        return n / (2.0 * (self.c1 + n * self.c2))


class RngStream:
    """Counter-based stream keyed by (seed, stream_id).

    Backed by Philox with the two 64-bit words as its key, so distinct
    stream ids give non-overlapping sequences. Normal variates are drawn by
    Box-Muller from 53-bit uniforms.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        if not (0 <= seed <= _U64 and 0 <= stream_id <= _U64):
            raise ValueError("seed and stream_id must be 64-bit unsigned integers")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def spawn(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id)

    def uniform(self, size=None) -> np.ndarray:
        """Uniforms on [0, 1) with 53 random bits."""
        return self._gen.random(size)

    def normal(self, size=None) -> np.ndarray:
        shape = () if size is None else (size,) if np.isscalar(size) else tuple(size)
        count = int(np.prod(shape, dtype=np.int64))
        z = box_muller(self._gen.random(2 * ((count + 1) // 2)))[:count].reshape(shape)
        return z if shape else float(z)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


def box_muller(u: np.ndarray) -> np.ndarray:
    """Map uniforms on [0, 1) to standard normals, consecutive pairs at a time.

    The last axis must have even length.
    """
    u1 = u[..., 0::2]
    u2 = u[..., 1::2]
    rad = np.sqrt(-2.0 * np.log1p(-u1))  # 1 - u1 lies in (0, 1]
    ang = 2.0 * np.pi * u2
    z = np.empty(u.shape)
    z[..., 0::2] = rad * np.cos(ang)
    z[..., 1::2] = rad * np.sin(ang)
    return z


def normals_per_sample(n: int) -> int:
    """Normal variates consumed by one n x n perturbation."""
    return n * n


def sample_perturbations(n: int, model: ErrorModel, rng: RngStream, size: int) -> np.ndarray:
    """Draw ``size`` Hermitian n x n perturbations as an array (size, n, n).

    Each sample consumes exactly n*n normal variates: n for the diagonal and
    two per strictly-upper entry.
    """
    if n < 1:
        raise ValueError("matrix dimension must be at least 1")
    return perturbations_from_normals(n, model, rng.normal((size, n * n)))


def perturbations_from_normals(n: int, model: ErrorModel, z: np.ndarray) -> np.ndarray:
    """Build perturbations from standard normals of shape (size, n*n)."""
    size = z.shape[0]
    diag = z[:, :n] * np.sqrt(1.0 / (2.0 * model.c1))
    if model.c2 != 0.0:
        # rescale the component along the unit all-ones vector
        proj = diag.sum(axis=1) / np.sqrt(n)
        factor = np.sqrt(model.c1 / (model.c1 + n * model.c2)) - 1.0
        diag = diag + (factor * proj / np.sqrt(n))[:, None]

    b = np.zeros((size, n, n), dtype=complex)
    iu = np.triu_indices(n, 1)
    m = len(iu[0])
    if m:
        sd = np.sqrt(1.0 / (4.0 * model.c1))
        upper = (z[:, n:n + m] + 1j * z[:, n + m:n + 2 * m]) * sd
        b[:, iu[0], iu[1]] = upper
        b[:, iu[1], iu[0]] = upper.conj()
    idx = np.arange(n)
    b[:, idx, idx] = diag
    return b


def sample_perturbation(n: int, model: ErrorModel, rng: RngStream) -> HermitianMatrix:
    return HermitianMatrix(sample_perturbations(n, model, rng, 1)[0])


def log_density(b: HermitianMatrix, model: ErrorModel) -> float:
    """Unnormalised log-weight -c1 tr B^2 - c2 (tr B)^2."""
    h = b.entries
    tr_sq = float(np.sum(np.abs(h) ** 2))  # tr B^2 = ||B||_F^2 for Hermitian B
    tr = float(np.trace(h).real)
    return -model.c1 * tr_sq - model.c2 * tr * tr
