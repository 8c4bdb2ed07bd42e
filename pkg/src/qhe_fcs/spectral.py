"""Dominant eigen-triple of the dressed generator and its gauge-aligned
track over one driving period."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import EngineParams, liouvillian_at_phase
from .errors import ComplexDominantError, DegenerateDominantError, GaugeDiscontinuityError

DEGENERACY_GAP = 1e-10
IMAG_TOL = 1e-9


@dataclass(frozen=True)
class SpectralTriple:
    zeta: float
    L: np.ndarray
    R: np.ndarray


@dataclass(frozen=True)
class SpectralTrack:
    """Dominant triples on the uniform phase grid ``theta_k = 2*pi*k/N``.

    ``zeta`` has shape ``(N,)``; ``L`` and ``R`` have shape ``(N, 5)`` with
    ``sum(L*R, axis=1) == 1``.
    """

    params: EngineParams
    lam: float
    zeta: np.ndarray
    L: np.ndarray
    R: np.ndarray

    @property
    def N(self) -> int:
        return len(self.zeta)

    @property
    def theta(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.N) / self.N

    @property
    def times(self) -> np.ndarray:
        return self.theta / self.params.omega

    def triple(self, k: int) -> SpectralTriple:
        return SpectralTriple(float(self.zeta[k]), self.L[k], self.R[k])

    def subsample(self, step: int) -> "SpectralTrack":
        return SpectralTrack(self.params, self.lam, self.zeta[::step], self.L[::step], self.R[::step])


def _dominant_batch(M: np.ndarray):
    """Vectorised dominant eigen-triples for a stack ``(K, 5, 5)``."""
    w, V = np.linalg.eig(M)
    K = len(w)
    idx = np.argmax(w.real, axis=1)
    rows = np.arange(K)
    zeta = w[rows, idx]
    bad = np.abs(zeta.imag) > IMAG_TOL * (1 + np.abs(zeta))
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        raise ComplexDominantError(f"dominant eigenvalue {zeta[k]} has non-negligible imaginary part")
    others = w.real.copy()
    others[rows, idx] = -np.inf
    gap = zeta.real - others.max(axis=1)
    if np.any(gap < DEGENERACY_GAP):
        k = int(np.argmin(gap))
        raise DegenerateDominantError(f"dominant eigenvalue gap {gap[k]:.3e} below {DEGENERACY_GAP}")

    R = V[rows, :, idx].real
    Lrow = np.linalg.inv(V)[rows, idx, :].real
    R = R / np.linalg.norm(R, axis=1, keepdims=True)
    sign = np.sign(R[rows, np.argmax(np.abs(R), axis=1)])
    R = R * sign[:, None]
    Lrow = Lrow / np.einsum("ki,ki->k", Lrow, R)[:, None]
    return zeta.real, Lrow, R


def dominant_eig(M: np.ndarray) -> SpectralTriple:
    """Eigenvalue with the largest real part and its biorthonormal eigenvectors.

    ``R`` has unit Euclidean norm and a positive largest-magnitude entry;
    ``L`` is taken from the same decomposition and scaled so ``L @ R == 1``.
    """
    M = np.asarray(M, dtype=float)
    zeta, L, R = _dominant_batch(M[None])
    return SpectralTriple(float(zeta[0]), L[0], R[0])


def spectral_track(params: EngineParams, lam: float, N: int) -> SpectralTrack:
    """Gauge-aligned dominant triples over one period on ``N`` phase points."""
    if N < 64 or N % 2:
        raise ValueError("grid size N must be even and at least 64")
    theta = 2 * np.pi * np.arange(N) / N
    zeta, L, R = _dominant_batch(liouvillian_at_phase(params, lam, theta))

    # sequential overlap alignment on top of the per-point sign convention
    steps = np.where(np.einsum("ki,ki->k", R[:-1], R[1:]) < 0, -1.0, 1.0)
    flips = np.concatenate(([1.0], np.cumprod(steps)))
    R = R * flips[:, None]
    L = L * flips[:, None]

    overlaps = np.einsum("ki,ki->k", R, np.roll(R, -1, axis=0))
    if np.any(overlaps <= 0):
        k = int(np.argmin(overlaps))
        raise GaugeDiscontinuityError(
            f"right eigenvector overlap {overlaps[k]:.3e} between grid points {k} and {(k + 1) % N}"
        )
    return SpectralTrack(params, lam, zeta, L, R)
