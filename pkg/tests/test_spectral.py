import math

import numpy as np
import pytest

from qhe_fcs.engine import TRACE_VECTOR, EngineParams, build_liouvillian
from qhe_fcs.errors import DegenerateDominantError
from qhe_fcs.oracles import shifted_inverse_iteration, static_steady_state
from qhe_fcs.spectral import dominant_eig, spectral_track


def test_zero_mode(ref):
    tri = dominant_eig(build_liouvillian(ref, 0.0, 0.4))
    assert abs(tri.zeta) < 1e-10
    L = tri.L / tri.L[0]
    np.testing.assert_allclose(L, TRACE_VECTOR, atol=1e-10)
    rho = tri.R / (TRACE_VECTOR @ tri.R)
    assert np.all((rho[:4] >= 0) & (rho[:4] <= 1))
    np.testing.assert_allclose(rho, static_steady_state(ref, 0.4), atol=1e-10)


def test_against_inverse_iteration():
    p = EngineParams(0.6, 1.6, 0.7)
    M = build_liouvillian(p, 1e-3, 0.0)
    tri = dominant_eig(M)
    assert tri.zeta == pytest.approx(shifted_inverse_iteration(M, 0.05), abs=1e-10)


def test_biorthonormal_and_residual(ref):
    M = build_liouvillian(ref, 0.2, 1.0)
    tri = dominant_eig(M)
    assert tri.L @ tri.R == pytest.approx(1.0, abs=1e-12)
    scale = np.linalg.norm(M, 2)
    assert np.linalg.norm(M @ tri.R - tri.zeta * tri.R) < 1e-10 * scale
    assert np.linalg.norm(tri.L @ M - tri.zeta * tri.L) < 1e-10 * scale * np.linalg.norm(tri.L)


def test_undriven_track_constant(ref):
    tr = spectral_track(ref.replace(A0=0.0), 0.1, 64)
    assert np.all(tr.zeta == tr.zeta[0])
    assert np.all(tr.R == tr.R[0])


def test_positive_instantaneous_states():
    tr = spectral_track(EngineParams(0.6, 1.6, 0.7), 0.0, 256)
    assert np.all(tr.R[:, :4] >= 0)


def test_grid_refinement_shares_points(ref):
    a = spectral_track(ref, 0.05, 256)
    b = spectral_track(ref, 0.05, 512)
    np.testing.assert_allclose(a.zeta, b.zeta[::2], rtol=0, atol=1e-12)


def test_gauge_is_continuous(ref):
    tr = spectral_track(ref, 0.3, 128)
    overlaps = np.einsum("ki,ki->k", tr.R, np.roll(tr.R, -1, axis=0))
    assert np.all(overlaps > 0)


def test_dark_state_degeneracy():
    p = EngineParams(0.6, 1.6, 0.7, p_h=1.0, p_c=1.0)
    with pytest.raises(DegenerateDominantError):
        dominant_eig(build_liouvillian(p, 0.0, 0.0))
