"""Dense Hermitian matrices, a batched complex Jacobi eigensolver, density
matrices and the small combinatorial helpers used by the closed forms."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

HERMITIAN_ATOL = 1e-12
JACOBI_REL_TOL = 1e-13
JACOBI_MAX_SWEEPS = 100

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


class ConvergenceError(RuntimeError):
    """Jacobi sweeps exhausted before the off-diagonal part vanished."""


class HermitianMatrix:
    """Immutable N x N complex Hermitian matrix.

    The input is checked against its conjugate transpose (absolute tolerance
    1e-12) and then replaced by ``(H + H^dagger) / 2`` so downstream code sees
    exact Hermiticity.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries, atol: float = HERMITIAN_ATOL):
        h = np.array(entries, dtype=complex)
        if h.ndim == 0:
            h = h.reshape(1, 1)
        if h.ndim != 2 or h.shape[0] != h.shape[1] or h.shape[0] < 1:
            raise ValueError(f"expected a non-empty square matrix, got shape {h.shape}")
        if not np.all(np.isfinite(h)):
            raise ValueError("matrix has non-finite entries")
        dev = np.max(np.abs(h - h.conj().T))
        if dev > atol:
            raise ValueError(f"matrix is not Hermitian (max |H - H^dagger| = {dev:.3g})")
        h = 0.5 * (h + h.conj().T)
        h.setflags(write=False)
        self._entries = h

    @classmethod
    def diag(cls, values) -> "HermitianMatrix":
        return cls(np.diag(np.asarray(values, dtype=float)))

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @property
    def dim(self) -> int:
        return self._entries.shape[0]

    def trace(self) -> float:
        return float(np.trace(self._entries).real)

    def __add__(self, other: "HermitianMatrix") -> "HermitianMatrix":
        return HermitianMatrix(self._entries + other._entries)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self._entries, dtype=dtype)

    def __repr__(self) -> str:
        return f"HermitianMatrix(dim={self.dim})"


@dataclass(frozen=True)
class SpectralDecomposition:
    """Ascending eigenvalues and the unitary whose columns are eigenvectors."""

    eigenvalues: np.ndarray
    unitary: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u = self.unitary
        return (u * self.eigenvalues) @ u.conj().T


class DensityMatrix:
    """Positive semidefinite Hermitian matrix with unit trace."""

    __slots__ = ("_matrix",)

    def __init__(self, matrix, atol: float = 1e-12):
        m = matrix if isinstance(matrix, HermitianMatrix) else HermitianMatrix(matrix)
        tr = m.trace()
        if abs(tr - 1.0) > atol:
            raise ValueError(f"density matrix trace is {tr!r}, expected 1")
        lo = np.linalg.eigvalsh(m.entries)[0]
        if lo < -atol:
            raise ValueError(f"density matrix is not positive (min eigenvalue {lo:.3g})")
        self._matrix = m

    @classmethod
    def maximally_mixed(cls, n: int) -> "DensityMatrix":
        return cls(np.eye(n) / n)

    @classmethod
    def pure(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @property
    def matrix(self) -> HermitianMatrix:
        return self._matrix

    @property
    def entries(self) -> np.ndarray:
        return self._matrix.entries

    @property
    def dim(self) -> int:
        return self._matrix.dim

    def expectation(self, observable: HermitianMatrix) -> float:
        """tr(rho A)."""
        return float(np.trace(self.entries @ observable.entries).real)

    def __repr__(self) -> str:
        return f"DensityMatrix(dim={self.dim})"


def _offdiag_norm(h: np.ndarray) -> np.ndarray:
    n = h.shape[-1]
    mask = ~np.eye(n, dtype=bool)
    return np.sqrt(np.sum(np.abs(h[..., mask]) ** 2, axis=-1))


def jacobi_eigh(h: np.ndarray, tol: float = JACOBI_REL_TOL,
                max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Cyclic complex Jacobi on a stack of Hermitian matrices.

    ``h`` has shape (..., N, N). Each matrix is rotated independently and only
    until its own off-diagonal Frobenius norm drops below ``tol * ||H||_F``, so
    a matrix's result does not depend on what else is in the batch.

    Returns ``(eigenvalues, unitary)`` with eigenvalues ascending (stable with
    respect to the Jacobi output order) and eigenvectors as columns.
    """
    a = np.array(h, dtype=complex)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ValueError(f"expected (..., N, N), got {a.shape}")
    batch_shape = a.shape[:-2]
    n = a.shape[-1]
    a = a.reshape(-1, n, n)
    m = a.shape[0]
    v = np.broadcast_to(np.eye(n, dtype=complex), (m, n, n)).copy()

    scale = np.sqrt(np.sum(np.abs(a) ** 2, axis=(-2, -1)))
    thresh = tol * scale
    active = _offdiag_norm(a) > thresh
    sweeps = 0
    while np.any(active):
        if sweeps >= max_sweeps:
            raise ConvergenceError(
                f"{int(active.sum())} matrices not diagonalised after {max_sweeps} sweeps")
        idx = np.nonzero(active)[0]
        sub = a[idx]
        vec = v[idx]
        for p, q in itertools.combinations(range(n), 2):
            apq = sub[:, p, q]
            mag = np.abs(apq)
            nz = mag > 0
            if not np.any(nz):
                continue
            phase = np.where(nz, apq / np.where(nz, mag, 1.0), 1.0)
            app = sub[:, p, p].real
            aqq = sub[:, q, q].real
            safe = np.where(nz, mag, 1.0)
            theta = (aqq - app) / (2.0 * safe)
            t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t = np.where(theta == 0, 1.0, t)
            t = np.where(nz, t, 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            # G = diag(1, conj(phase)) @ [[c, s], [-s, c]] acting on columns p, q
            g = np.empty((sub.shape[0], 2, 2), dtype=complex)
            g[:, 0, 0] = c
            g[:, 0, 1] = s
            g[:, 1, 0] = -s * phase.conj()
            g[:, 1, 1] = c * phase.conj()
            pq = [p, q]
            sub[:, :, pq] = sub[:, :, pq] @ g
            sub[:, pq, :] = np.conj(np.swapaxes(g, 1, 2)) @ sub[:, pq, :]
            vec[:, :, pq] = vec[:, :, pq] @ g
            sub[:, p, q] = 0.0
            sub[:, q, p] = 0.0
            sub[:, p, p] = sub[:, p, p].real
            sub[:, q, q] = sub[:, q, q].real
        a[idx] = sub
        v[idx] = vec
        active[idx] = _offdiag_norm(sub) > thresh[idx]
        sweeps += 1

    evals = np.real(np.diagonal(a, axis1=-2, axis2=-1)).copy()
    order = np.argsort(evals, axis=-1, kind="stable")
    evals = np.take_along_axis(evals, order, axis=-1)
    v = np.take_along_axis(v, order[:, None, :], axis=-1)
    return evals.reshape(batch_shape + (n,)), v.reshape(batch_shape + (n, n))


def eig_hermitian(h: HermitianMatrix) -> SpectralDecomposition:
    evals, u = jacobi_eigh(h.entries)
    evals.setflags(write=False)
    u.setflags(write=False)
    return SpectralDecomposition(evals, u)


def vandermonde(values) -> float:
    """prod_{k<l} (values_k - values_l); 1 for a single value.

    Evaluated on the descending-sorted values with the permutation parity as
    sign, so reordering the input changes at most the sign, bit for bit.
    """
    x = np.asarray(values, dtype=float).ravel()
    order = np.argsort(-x, kind="stable")
    xs = x[order]
    out = 1.0
    for k in range(len(xs)):
        for l in range(k + 1, len(xs)):
            out *= xs[k] - xs[l]
    return float(permutation_sign(order.tolist()) * out)


def vandermonde_batch(values: np.ndarray) -> np.ndarray:
    """Vandermonde product along the last axis."""
    x = np.asarray(values, dtype=float)
    out = np.ones(x.shape[:-1])
    n = x.shape[-1]
    for k in range(n):
        for l in range(k + 1, n):
            out = out * (x[..., k] - x[..., l])
    return out


def permutation_sign(perm) -> int:
    perm = list(perm)
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def signed_permutations(n: int):
    """Yield (permutation tuple, sign) over S_n in lexicographic order."""
    for perm in itertools.permutations(range(n)):
        yield perm, permutation_sign(perm)


def bloch_density(rho_vec) -> DensityMatrix:
    """2x2 density matrix 1/2 + sigma . rho for a Bloch vector with |rho| <= 1/2."""
    r = np.asarray(rho_vec, dtype=float)
    if r.shape != (3,):
        raise ValueError(f"Bloch vector must have 3 components, got shape {r.shape}")
    norm = float(np.linalg.norm(r))
    if norm > 0.5 + 1e-12:
        raise ValueError(f"|rho| = {norm:.6g} exceeds 1/2; state would not be positive")
    m = 0.5 * np.eye(2, dtype=complex) + np.tensordot(r, PAULI, axes=1)
    return DensityMatrix(m)


def outcome_probabilities(rho: DensityMatrix, decomp: SpectralDecomposition) -> np.ndarray:
    """Born weights <u_k|rho|u_k> in the eigenbasis of ``decomp``."""
    u = decomp.unitary
    if rho.dim != u.shape[0]:
        raise ValueError(f"dimension mismatch: rho is {rho.dim}, basis is {u.shape[0]}")
    return born_weights(rho.entries, u)


def born_weights(rho: np.ndarray, u: np.ndarray) -> np.ndarray:
    """diag(U^dagger rho U) for a single basis or a stack of bases (..., N, N)."""
    w = np.einsum("...ik,ij,...jk->...k", u.conj(), rho, u).real
    return w
