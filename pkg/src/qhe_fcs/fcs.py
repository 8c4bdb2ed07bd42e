"""Dynamic and geometric cumulant generating functions, cumulants, Fano
factor, affinity and the thermodynamic-uncertainty product."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .engine import EngineParams, _occupations, _temperatures_at_phase, liouvillian_at_phase
from .errors import NoConvergenceError, NotStaticError, StencilInconsistencyError, ZeroFluxError
from .spectral import SpectralTrack, spectral_track

EPS = np.finfo(float).eps
DERIVATIVE_SCHEMES = ("spectral", "central2", "central4")
STENCIL_RTOL = 1e-6
STENCIL_HALVINGS = 2
ZERO_FLUX = 1e-14


@dataclass(frozen=True)
class FcsConfig:
    N: int = 512
    h: float = 1e-3
    richardson: bool = True
    tol: float = 1e-9
    derivative: str = "spectral"
    max_N: int = 2 ** 16

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("stencil step h must be positive")
        if self.N < 64 or self.N % 2:
            raise ValueError("grid size N must be even and at least 64")
        if self.derivative not in DERIVATIVE_SCHEMES:
            raise ValueError(f"derivative must be one of {DERIVATIVE_SCHEMES}")
        if self.max_N < 2 * self.N:
            raise ValueError("max_N must allow at least one refinement of N")


@dataclass(frozen=True)
class CumulantSet:
    c_d1: float
    c_d2: float
    c_g1: float
    c_g2: float
    fano: Optional[float]
    affinity: float
    tur_product: Optional[float]
    status: str = "ok"
    N: int = field(default=0, compare=False)

    @property
    def c1(self) -> float:
        return self.c_d1 + self.c_g1

    @property
    def c2(self) -> float:
        return self.c_d2 + self.c_g2

    @property
    def entropy_production(self) -> float:
        return self.c1 * self.affinity

    def as_dict(self) -> dict:
        return asdict(self)


def theta_derivative(R: np.ndarray, scheme: str = "spectral") -> np.ndarray:
    """d/dtheta of samples ``R`` (axis 0) on the periodic grid ``2*pi*k/N``."""
    N = R.shape[0]
    dtheta = 2 * np.pi / N
    if scheme == "spectral":
        coef = np.fft.rfft(R, axis=0)
        k = np.arange(coef.shape[0], dtype=float)
        k[-1] = 0.0 if N % 2 == 0 else k[-1]
        shape = (-1,) + (1,) * (R.ndim - 1)
        return np.fft.irfft(1j * k.reshape(shape) * coef, n=N, axis=0)
    if scheme == "central2":
        return (np.roll(R, -1, axis=0) - np.roll(R, 1, axis=0)) / (2 * dtheta)
    if scheme == "central4":
        return (
            -np.roll(R, -2, axis=0) + 8 * np.roll(R, -1, axis=0)
            - 8 * np.roll(R, 1, axis=0) + np.roll(R, 2, axis=0)
        ) / (12 * dtheta)
    raise ValueError(f"unknown derivative scheme {scheme!r}")


def dynamic_from_track(track: SpectralTrack) -> float:
    return float(np.mean(track.zeta))


def geometric_from_track(track: SpectralTrack, scheme: str = "spectral") -> float:
    # -(1/t_p) int <L|dR/dt> dt  ==  -omega * mean_k <L_k|dR/dtheta_k>
    dR = theta_derivative(track.R, scheme)
    return float(-track.params.omega * np.mean(np.einsum("ki,ki->k", track.L, dR)))


def noise_floor(params: EngineParams) -> float:
    """Absolute round-off scale of one dominant-eigenvalue evaluation."""
    M = liouvillian_at_phase(params, 0.0, 0.0)
    return EPS * float(np.linalg.norm(M, 2))


def cgf_pair(params: EngineParams, lam: float, cfg: FcsConfig = FcsConfig()):
    """Self-converged ``(S_d, S_g, N)`` at one counting field value.

    The N-point estimate reuses every other point of the 2N track; N doubles
    until both parts agree, ``S_g`` measured against the total CGF.
    """
    atol = noise_floor(params)
    N = cfg.N
    while 2 * N <= cfg.max_N:
        fine = spectral_track(params, lam, 2 * N)
        coarse = fine.subsample(2)
        sd_f, sd_c = dynamic_from_track(fine), dynamic_from_track(coarse)
        sg_f = geometric_from_track(fine, cfg.derivative)
        sg_c = geometric_from_track(coarse, cfg.derivative)
        ok_d = abs(sd_f - sd_c) <= cfg.tol * abs(sd_f) + atol
        ok_g = abs(sg_f - sg_c) <= cfg.tol * (abs(sd_f) + abs(sg_f)) + atol
        if ok_d and ok_g:
            return sd_f, sg_f, 2 * N
        N *= 2
    raise NoConvergenceError(f"period integrals not converged at N={cfg.max_N} (lambda={lam})")


def dynamic_cgf(params: EngineParams, lam: float, cfg: FcsConfig = FcsConfig()) -> float:
    """Period average of the dominant eigenvalue."""
    return cgf_pair(params, lam, cfg)[0]


def geometric_cgf(params: EngineParams, lam: float, cfg: FcsConfig = FcsConfig()) -> float:
    """Minus the period-averaged ``<L|dR/dt>`` along the aligned track."""
    return cgf_pair(params, lam, cfg)[1]


def _finite_differences(S: dict, h: float):
    c1 = (S[h] - S[-h]) / (2 * h)
    c2 = (S[h] - 2 * S[0.0] + S[-h]) / h ** 2
    return c1, c2


def _check_agreement(coarse, fine, floor, what):
    if abs(coarse - fine) > STENCIL_RTOL * abs(fine) + floor:
        raise StencilInconsistencyError(
            f"{what}: step-h estimate {coarse:.12g} vs step-h/2 estimate {fine:.12g}"
        )


def cumulants(params: EngineParams, cfg: FcsConfig = FcsConfig(), allow_zero_flux: bool = False) -> CumulantSet:
    """First and second dynamic/geometric cumulants and derived figures.

    Raises ZeroFluxError (carrying the partial set) when the total flux
    vanishes, unless ``allow_zero_flux`` is set, in which case the set is
    returned with ``fano``/``tur_product`` left as None.
    """
    Sd, Sg, Ns = {}, {}, []

    def evaluate(lams):
        for lam in lams:
            if lam not in Sd:
                sd, sg, n = cgf_pair(params, lam, cfg)
                Sd[lam], Sg[lam] = sd, sg
                Ns.append(n)

    h = cfg.h
    if not cfg.richardson:
        evaluate([-h, 0.0, h])
        d1, d2 = _finite_differences(Sd, h)
        g1, g2 = _finite_differences(Sg, h)
    else:
        noise = noise_floor(params)
        for attempt in range(STENCIL_HALVINGS + 1):
            evaluate([-h, -h / 2, 0.0, h / 2, h])
            d1, d2 = _finite_differences(Sd, h)
            g1, g2 = _finite_differences(Sg, h)
            d1h, d2h = _finite_differences(Sd, h / 2)
            g1h, g2h = _finite_differences(Sg, h / 2)
            try:
                _check_agreement(d1 + g1, d1h + g1h, 4 * noise / h, "first cumulant")
                _check_agreement(d2 + g2, d2h + g2h, 16 * noise / h ** 2, "second cumulant")
                break
            except StencilInconsistencyError:
                # large higher cumulants: shrink the stencil before giving up
                if attempt == STENCIL_HALVINGS:
                    raise
                h /= 2
        d1, d2 = (4 * d1h - d1) / 3, (4 * d2h - d2) / 3
        g1, g2 = (4 * g1h - g1) / 3, (4 * g2h - g2) / 3

    A = affinity(params, cfg)
    c1 = d1 + g1
    # a flux below what the stencil can resolve is indistinguishable from zero
    if abs(c1) < max(ZERO_FLUX, 4 * noise_floor(params) / h):
        partial = CumulantSet(d1, d2, g1, g2, None, A, None, "zero-flux", max(Ns))
        if allow_zero_flux:
            return partial
        raise ZeroFluxError(f"total flux {c1:.3e} vanishes", partial)
    F = (d2 + g2) / c1
    return CumulantSet(d1, d2, g1, g2, F, A, F * A, "ok", max(Ns))


def _affinity_integrals(params: EngineParams, N: int):
    theta = 2 * np.pi * np.arange(N) / N
    T_c, T_h = _temperatures_at_phase(params, theta)
    n_c, n_h, _ = _occupations(params, T_c, T_h)
    return np.mean((1 + n_c) * n_h), np.mean(n_c * (1 + n_h))


def affinity(params: EngineParams, cfg: FcsConfig = FcsConfig()) -> float:
    """Log ratio of forward to backward period-integrated cavity pumping rates."""
    _, _, n_l = _occupations(params, params.T_c0, params.T_h0)
    N = cfg.N
    prev = None
    while N <= cfg.max_N:
        fwd, bwd = _affinity_integrals(params, N)
        A = math.log((1 + n_l) * fwd / (n_l * bwd))
        if prev is not None and abs(A - prev) <= cfg.tol * max(abs(A), 1.0):
            return A
        prev = A
        N *= 2
    raise NoConvergenceError(f"affinity integrals not converged at N={cfg.max_N}")


def gc_symmetry_residual(params: EngineParams, lam: float, cfg: FcsConfig = FcsConfig()) -> float:
    """Mixed relative/absolute residual of ``S_d(lam) = S_d(-lam - A)``.

    Only defined for the undriven engine.
    """
    if not params.static:
        raise NotStaticError("fluctuation-theorem symmetry is only checked at A0 = 0")
    A = affinity(params, cfg)
    a = dynamic_cgf(params, lam, cfg)
    b = dynamic_cgf(params, -lam - A, cfg)
    return abs(a - b) / max(abs(a), 1.0)
