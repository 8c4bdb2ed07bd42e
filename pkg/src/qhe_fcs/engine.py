"""Four-level driven heat engine: parameters, bath protocols and the
counting-field dressed 5x5 generator.

State vector ordering is ``(rho_11, rho_22, rho_aa, rho_bb, Re rho_12)``.
Units: k_B = hbar = 1; temperatures and energies share one unit, rates
(r, g, omega) another.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidParamsError

#: Left zero mode of the lambda = 0 generator (trace functional).
TRACE_VECTOR = np.array([1.0, 1.0, 1.0, 1.0, 0.0])

#: Names of the six parameters that are sampled, swept and learned.
INPUT_NAMES = ("T_c0", "T_h0", "T_l", "phi", "p_h", "p_c")


@dataclass(frozen=True)
class EngineParams:
    """Static physical parameters and driving-protocol constants."""

    T_c0: float
    T_h0: float
    T_l: float
    phi: float = 0.0
    p_h: float = 0.0
    p_c: float = 0.0
    A0: float = 0.007
    omega: float = 0.7
    E1: float = 0.1
    E2: float = 0.1
    Eb: float = 0.3
    Ea: float = 1.5
    r: float = 5.0
    g: float = 10.0

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if not math.isfinite(v):
                raise InvalidParamsError(f"{f.name}={v!r} is not finite")
        if self.T_c0 <= 0 or self.T_l <= 0:
            raise InvalidParamsError("temperatures must be positive")
        if self.A0 < 0:
            raise InvalidParamsError("driving amplitude A0 must be non-negative")
        if self.A0 >= self.T_c0:
            raise InvalidParamsError("A0 must be below T_c0 so that T_c(t) > 0")
        # T_h(t) > T_c(t) for every t requires a gap larger than the peak-to-peak swing
        if not self.T_h0 - self.T_c0 > 2 * self.A0:
            raise InvalidParamsError("need T_h0 - T_c0 > 2*A0")
        if self.omega <= 0:
            raise InvalidParamsError("omega must be positive")
        if not (self.E1 == self.E2 < self.Eb < self.Ea):
            raise InvalidParamsError("level energies must satisfy E1 = E2 < Eb < Ea")
        for name in ("p_h", "p_c"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InvalidParamsError(f"{name} must lie in [0, 1]")
        if not 0.0 <= self.phi <= 2 * math.pi:
            raise InvalidParamsError("phi must lie in [0, 2*pi]")
        if self.r <= 0 or self.g <= 0:
            raise InvalidParamsError("couplings r and g must be positive")

    @property
    def period(self) -> float:
        return 2 * math.pi / self.omega

    @property
    def static(self) -> bool:
        return self.A0 == 0.0

    def replace(self, **changes) -> "EngineParams":
        return dataclasses.replace(self, **changes)

    def inputs(self) -> tuple:
        """The six learnable inputs in canonical order."""
        return tuple(getattr(self, k) for k in INPUT_NAMES)


def drive_temperatures(params: EngineParams, t):
    """Bath temperatures ``(T_c(t), T_h(t))``; ``t`` may be an array."""
    return _temperatures_at_phase(params, params.omega * np.asarray(t, dtype=float))


def _temperatures_at_phase(params, theta):
    T_c = params.T_c0 - params.A0 * np.sin(theta)
    T_h = params.T_h0 - params.A0 * np.sin(theta + params.phi)
    if np.any(T_c <= 0) or np.any(T_h <= T_c):
        raise InvalidParamsError("driving protocol leaves the T_h > T_c > 0 region")
    return T_c, T_h


def bose_occupation(gap, T):
    """Bose-Einstein occupation ``1/(exp(gap/T) - 1)``."""
    gap = np.asarray(gap, dtype=float)
    T = np.asarray(T, dtype=float)
    if np.any(gap <= 0) or np.any(T <= 0):
        raise DomainError("bose_occupation needs gap > 0 and T > 0")
    with np.errstate(over="ignore"):
        n = 1.0 / np.expm1(gap / T)
    return n if n.ndim else float(n)


def occupations(params: EngineParams, t=0.0):
    """Occupations ``(n_c(t), n_h(t), n_l)`` of cold bath, hot bath and cavity."""
    T_c, T_h = drive_temperatures(params, t)
    return _occupations(params, T_c, T_h)


def _occupations(params, T_c, T_h):
    n_c = bose_occupation(params.Eb - params.E1, T_c)
    n_h = bose_occupation(params.Ea - params.E1, T_h)
    n_l = bose_occupation(params.Ea - params.Eb, params.T_l)
    return n_c, n_h, n_l


def liouvillian_at_phase(params: EngineParams, lam: float, theta) -> np.ndarray:
    """Generator evaluated at driving phase ``theta = omega*t``.

    Returns shape ``(5, 5)`` for scalar ``theta`` and ``theta.shape + (5, 5)``
    otherwise.
    """
    theta = np.asarray(theta, dtype=float)
    T_c, T_h = _temperatures_at_phase(params, theta)
    n_c, n_h, n_l = _occupations(params, T_c, T_h)
    r, g2, p_h, p_c = params.r, params.g ** 2, params.p_h, params.p_c

    nt_c = n_c + 1.0
    nt_h = n_h + 1.0
    nt_l = n_l + 1.0
    n = -(n_c + n_h)
    y = -(n_c * p_c + n_h * p_h)
    zero = np.zeros_like(n)
    ones = np.ones_like(n)

    # Kept in the printed r * (... / r) form; entries (3,3), (3,4), (4,3), (4,4)
    # reduce to plain g^2 terms once the prefactor is applied.
    rows = [
        [n, zero, nt_h, nt_c, y],
        [zero, n, nt_h, nt_c, y],
        [n_h, n_h, (-g2 * nt_l - 2 * r * nt_h) / r, g2 * n_l * math.exp(-lam) / r * ones, 2 * p_h * n_h],
        [n_c, n_c, g2 * nt_l * math.exp(lam) / r * ones, (-g2 * n_l - 2 * r * nt_c) / r, 2 * p_c * n_c],
        [y / 2, y / 2, p_h * nt_h, p_c * nt_c, n],
    ]
    M = np.stack([np.stack(row, axis=-1) for row in rows], axis=-2)
    return r * M


def build_liouvillian(params: EngineParams, lam: float, t) -> np.ndarray:
    """Counting-field dressed generator at time ``t`` (scalar or array)."""
    return liouvillian_at_phase(params, lam, params.omega * np.asarray(t, dtype=float))
