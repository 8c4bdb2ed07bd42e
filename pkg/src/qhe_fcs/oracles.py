"""Reference computations that avoid the eigen-decomposition and the
counting-field stencil. Used by the invariant suite and the tests."""
from __future__ import annotations

import math

import numpy as np

from .engine import TRACE_VECTOR, EngineParams, build_liouvillian, occupations


def static_steady_state(params: EngineParams, t: float = 0.0) -> np.ndarray:
    """Normalised null vector of the lambda = 0 generator by a bordered linear solve."""
    M = build_liouvillian(params, 0.0, t)
    A = np.vstack([M, TRACE_VECTOR])
    b = np.zeros(6)
    b[-1] = 1.0
    rho, *_ = np.linalg.lstsq(A, b, rcond=None)
    return rho


def hellmann_feynman_flux(params: EngineParams) -> float:
    """First cumulant of the undriven engine: ``g^2 (nt_l rho_aa - n_l rho_bb)``."""
    rho = static_steady_state(params)
    _, _, n_l = occupations(params, 0.0)
    return params.g ** 2 * ((1 + n_l) * rho[2] - n_l * rho[3])


def static_affinity(params: EngineParams) -> float:
    """Closed-form affinity with the baths held at ``T_c0``, ``T_h0``."""
    n_c, n_h, n_l = occupations(params.replace(A0=0.0), 0.0)
    return math.log((1 + n_l) * (1 + n_c) * n_h / (n_l * n_c * (1 + n_h)))


def detailed_balance_T_l(params: EngineParams) -> float:
    """Cavity temperature that zeroes the static affinity."""
    inv = (params.Ea - params.E1) / params.T_h0 - (params.Eb - params.E1) / params.T_c0
    if inv <= 0:
        raise ValueError("no positive cavity temperature balances these baths")
    return (params.Ea - params.Eb) / inv


def shifted_inverse_iteration(M: np.ndarray, shift: float, iters: int = 50) -> float:
    """Eigenvalue of ``M`` closest to ``shift`` by inverse iteration."""
    n = M.shape[0]
    A = M - shift * np.eye(n)
    v = np.ones(n) / math.sqrt(n)
    mu = shift
    for _ in range(iters):
        w = np.linalg.solve(A, v)
        v = w / np.linalg.norm(w)
        mu = float(v @ M @ v)
    # Rayleigh quotient of a non-normal matrix needs the left vector too
    u = np.linalg.solve(A.T, np.ones(n))
    u = u / np.linalg.norm(u)
    for _ in range(iters):
        u = np.linalg.solve(A.T, u)
        u = u / np.linalg.norm(u)
    return float(u @ M @ v / (u @ v)) if abs(u @ v) > 1e-14 else mu
