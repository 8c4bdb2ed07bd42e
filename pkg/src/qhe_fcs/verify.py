"""Invariant suite: exact identities of the solver plus determinism and
consistency properties of the dataset and network layers."""
from __future__ import annotations

import math
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import ann, dataset, fcs
from .engine import TRACE_VECTOR, EngineParams, build_liouvillian, drive_temperatures, occupations
from .oracles import hellmann_feynman_flux
from .spectral import spectral_track

REF = EngineParams(0.6, 1.6, 0.7, phi=math.pi / 2, p_h=0.5, p_c=0.5)
TUR_MAP = dict(T_c0=0.6, T_h0=1.6, T_l=0.7, p_c=0.0)
CFG = fcs.FcsConfig()


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def _probe_params(n=6, seed=11):
    rng = np.random.default_rng(seed)
    return [REF] + [dataset.sample_params(rng) for _ in range(n - 1)]


# engine ---------------------------------------------------------------------
def check_trace_conservation():
    worst = 0.0
    for p in _probe_params():
        M = build_liouvillian(p, 0.0, np.linspace(0, p.period, 17))
        worst = max(worst, float(np.max(np.abs(TRACE_VECTOR @ M) / np.max(np.abs(M)))))
    return worst < 1e-14, f"max |1.M|/max|M| = {worst:.2e}"


def check_periodicity():
    worst = 0.0
    for p in _probe_params():
        t = np.linspace(0, p.period, 9)
        a, b = build_liouvillian(p, 0.2, t), build_liouvillian(p, 0.2, t + p.period)
        worst = max(worst, float(np.max(np.abs(a - b)) / np.max(np.abs(a))))
    return worst < 1e-12, f"max relative deviation {worst:.2e}"


def check_dressing_locality():
    p, h = REF, 1e-6
    t = 0.37 * p.period
    diff = build_liouvillian(p, 0.3, t) - build_liouvillian(p, 0.0, t)
    mask = np.ones((5, 5), bool)
    mask[2, 3] = mask[3, 2] = False
    dM = (build_liouvillian(p, h, t) - build_liouvillian(p, -h, t)) / (2 * h)
    _, _, n_l = occupations(p, t)
    g2 = p.g ** 2
    ok = (np.all(diff[mask] == 0) and math.isclose(dM[2, 3], -g2 * n_l, rel_tol=1e-8)
          and math.isclose(dM[3, 2], g2 * (1 + n_l), rel_tol=1e-8))
    return ok, f"dM(3,4)={dM[2, 3]:.10g} dM(4,3)={dM[3, 2]:.10g}"


def check_protocol_symmetry():
    p = REF.replace(phi=1.1)
    q = p.replace(phi=2 * math.pi - p.phi)
    t = np.linspace(0, p.period, 33)
    Tc, Th = drive_temperatures(p, t)
    Tc2, Th2 = drive_temperatures(q, p.period / 2 - t)
    dev = max(np.max(np.abs(Tc - Tc2)), np.max(np.abs(Th - Th2)))
    return dev < 1e-14, f"max deviation {dev:.2e} (T_c(t) = T_c(t_p/2 - t), T_h(t; phi) = T_h(t_p/2 - t; 2pi - phi))"


# spectral -------------------------------------------------------------------
def check_zero_mode():
    worst_z = worst_l = worst_g = 0.0
    for p in _probe_params(3):
        tr = spectral_track(p, 0.0, 256)
        worst_z = max(worst_z, float(np.max(np.abs(tr.zeta))))
        L = tr.L / tr.L[:, :1]
        worst_l = max(worst_l, float(np.max(np.abs(L - TRACE_VECTOR))))
        worst_g = max(worst_g, abs(fcs.geometric_cgf(p, 0.0, CFG)))
    ok = worst_z < 1e-10 and worst_l < 1e-10 and worst_g < 1e-10
    return ok, f"max|zeta(0,t)|={worst_z:.1e} L-(1,1,1,1,0)={worst_l:.1e} |S_g(0)|={worst_g:.1e}"


def check_biorthonormal_residuals():
    worst_b = worst_r = 0.0
    for p in _probe_params(3):
        tr = spectral_track(p, 0.05, 256)
        M = build_liouvillian(p, 0.05, tr.times)
        norm = np.linalg.norm(M, 2, axis=(1, 2))
        worst_b = max(worst_b, float(np.max(np.abs(np.einsum("ki,ki->k", tr.L, tr.R) - 1))))
        rr = np.linalg.norm(np.einsum("kij,kj->ki", M, tr.R) - tr.zeta[:, None] * tr.R, axis=1) / norm
        rl = np.linalg.norm(np.einsum("ki,kij->kj", tr.L, M) - tr.zeta[:, None] * tr.L, axis=1) / (
            norm * np.linalg.norm(tr.L, axis=1))
        worst_r = max(worst_r, float(np.max(rr)), float(np.max(rl)))
    return worst_b < 1e-12 and worst_r < 1e-10, f"|<L|R>-1|={worst_b:.1e} residual={worst_r:.1e}"


def check_steady_state_positivity():
    tr = spectral_track(REF, 0.0, 256)
    pops = tr.R[:, :4] / (tr.R @ TRACE_VECTOR)[:, None]
    return bool(np.all(pops >= 0) and np.all(pops <= 1)), f"min population {pops.min():.3e}"


def check_gauge_freedom():
    rng = np.random.default_rng(5)
    worst = 0.0
    for lam in (1e-3, 0.05):
        tr = spectral_track(REF, lam, 1024)
        th = tr.theta
        a = rng.uniform(-0.5, 0.5, 4)
        c = np.exp(a[0] * np.sin(th + a[1]) + a[2] * np.cos(2 * th + a[3]))
        twisted = fcs.SpectralTrack(tr.params, lam, tr.zeta, tr.L / c[:, None], tr.R * c[:, None])
        sg, sg2 = fcs.geometric_from_track(tr), fcs.geometric_from_track(twisted)
        scale = abs(fcs.dynamic_from_track(tr)) + abs(sg)
        worst = max(worst, abs(sg - sg2) / scale)
    return worst < CFG.tol, f"max |dS_g|/|S| = {worst:.1e} (tolerance {CFG.tol:g})"


# counting statistics --------------------------------------------------------
def check_geometric_vanishing():
    worst = 0.0
    for phi in (0.0, math.pi, 2 * math.pi):
        cs = fcs.cumulants(REF.replace(phi=phi), CFG)
        worst = max(worst, max(abs(cs.c_g1), abs(cs.c_g2)) / max(abs(cs.c_d1), abs(cs.c_d2)))
    return worst < 1e-8, f"max |C_g|/|C_d| = {worst:.1e}"


def check_omega_linearity():
    a = fcs.cumulants(REF, CFG)
    b = fcs.cumulants(REF.replace(omega=2 * REF.omega), CFG)
    g = max(abs(b.c_g1 - 2 * a.c_g1) / abs(2 * a.c_g1), abs(b.c_g2 - 2 * a.c_g2) / abs(2 * a.c_g2))
    d = max(abs(b.c_d1 - a.c_d1) / abs(a.c_d1), abs(b.c_d2 - a.c_d2) / abs(a.c_d2))
    return g < 1e-8 and d < 1e-8, f"geometric rel. dev {g:.1e}, dynamic rel. dev {d:.1e}"


def check_antisymmetry():
    p = REF.replace(phi=1.1)
    a = fcs.cumulants(p, CFG).c_g1
    b = fcs.cumulants(p.replace(phi=2 * math.pi - p.phi), CFG).c_g1
    dev = abs(a + b) / abs(a)
    return dev < 1e-6, f"C_g1(phi)={a:.6e} C_g1(2pi-phi)={b:.6e}"


def check_hellmann_feynman():
    p = REF.replace(A0=0.0)
    cs = fcs.cumulants(p, CFG)
    ref = hellmann_feynman_flux(p)
    dev = abs(cs.c_d1 - ref) / abs(ref)
    return dev < 1e-6, f"stencil {cs.c_d1:.12g} vs oracle {ref:.12g} (rel {dev:.1e})"


def check_gallavotti_cohen():
    res = fcs.gc_symmetry_residual(REF.replace(A0=0.0), 0.1, CFG)
    return res < 1e-8, f"residual {res:.1e}"


def check_stencil_robustness():
    a = fcs.cumulants(REF, CFG)
    b = fcs.cumulants(REF, fcs.FcsConfig(h=CFG.h / 2))
    dev = max(abs(a.c1 - b.c1) / abs(b.c1), abs(a.c2 - b.c2) / abs(b.c2))
    return dev < 1e-6, f"h vs h/2 relative deviation {dev:.1e}"


def check_tur_zero_phase():
    worst = math.inf
    for phi in (0.0, math.pi, 2 * math.pi):
        for p_h in np.linspace(0, 1, 5):
            for p_c in np.linspace(0, 1, 5):
                if p_h == p_c == 1.0:
                    continue  # dark state: the zero eigenvalue is doubly degenerate
                p = EngineParams(**{**TUR_MAP, "p_c": p_c}, phi=phi, p_h=p_h)
                worst = min(worst, fcs.cumulants(p, CFG).tur_product)
    return worst >= 2, f"min F*A = {worst:.6f}"


def check_tur_violation_exists():
    best = math.inf
    for phi in np.linspace(0, math.pi, 8)[1:-1]:
        for p_h in np.linspace(0, 1, 11):
            best = min(best, fcs.cumulants(EngineParams(**TUR_MAP, phi=phi, p_h=p_h), CFG).tur_product)
    return best < 2, f"min F*A over 0<phi<pi = {best:.6f}"


# dataset --------------------------------------------------------------------
def check_dataset_determinism():
    r1, m1 = dataset.generate(4, seed=3, cfg=CFG)
    r2, m2 = dataset.generate(4, seed=3, cfg=CFG)
    same = m1.digest == m2.digest and dataset.records_to_text(r1) == dataset.records_to_text(r2)
    return same, f"digest {m1.digest[:16]}"


def check_splits_and_ranges():
    rng = np.random.default_rng(2)
    ranges = dataset.ParamRanges()
    draws = [dataset.sample_params(rng, ranges) for _ in range(1000)]
    inside = all(ranges.contains(p.inputs()) for p in draws)
    recs = [dataset.SampleRecord(p.inputs(), 1.0) for p in draws[:101]]
    recs[7].status = "flagged:zero-flux"
    dataset.assign_splits(recs, seed=4)
    counts = {s: sum(r.split == s for r in recs) for s in dataset.SPLITS}
    ok_n = sum(r.ok for r in recs)
    exhaustive = sum(counts.values()) == ok_n and recs[7].split == "none"
    close = all(abs(counts[s] - f * ok_n) <= 1 for s, f in zip(dataset.SPLITS, (0.7, 0.15, 0.15)))
    return inside and exhaustive and close, f"split counts {counts}"


# network --------------------------------------------------------------------
def _toy_splits(seed=0, n=60):
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(n, 6))
    y = np.sin(X @ np.arange(1, 7) / 3)
    return {"train": (X[:40], y[:40]), "validation": (X[40:50], y[40:50]), "test": (X[50:], y[50:])}


def check_jacobian_fd():
    rng = np.random.default_rng(0)
    m = ann.NetworkModel.initialise([6, 4, 1], np.zeros(6), np.ones(6))
    m = m.with_params(rng.uniform(-1, 1, m.n_params))
    X = rng.uniform(size=(8, 6))
    J = ann.jacobian(m, X)
    z, h = m.get_params(), 1e-6
    fd = np.empty_like(J)
    for k in range(z.size):
        zp, zm = z.copy(), z.copy()
        zp[k] += h
        zm[k] -= h
        fd[:, k] = -(m.with_params(zp).raw_output(X) - m.with_params(zm).raw_output(X)) / (2 * h)
    dev = float(np.max(np.abs(J - fd)))
    return dev < 1e-6, f"max |J - FD| = {dev:.1e}"


def check_model_roundtrip():
    m = ann.NetworkModel.initialise([6, 5, 3, 1], np.zeros(6), np.arange(1, 7.0), seed=9)
    X = np.random.default_rng(1).uniform(size=(16, 6))
    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "m.txt"
        m.save(path)
        m2 = ann.NetworkModel.load(path)
    same = np.array_equal(m.predict(X), m2.predict(X))
    return bool(same), "save/load/forward bitwise identical" if same else "outputs differ"


def check_training_determinism_monotone():
    cfg = ann.TrainConfig(hidden=(5,), max_epochs=40, seed=3)
    _, r1 = ann.train(_toy_splits(), cfg)
    _, r2 = ann.train(_toy_splits(), cfg)
    accepted = [s[3] for s in r1.steps if s[2]]
    monotone = all(b <= a for a, b in zip(accepted, accepted[1:]))
    same = r1.train_mse == r2.train_mse and r1.val_mse == r2.val_mse and r1.steps == r2.steps
    return monotone and same, f"{len(accepted)} accepted steps, stop={r1.stop_reason}"


CHECKS = [
    ("trace-conservation", check_trace_conservation, True),
    ("periodicity", check_periodicity, False),
    ("lambda-dressing-locality", check_dressing_locality, False),
    ("protocol-symmetry", check_protocol_symmetry, False),
    ("zero-mode", check_zero_mode, True),
    ("biorthonormality-residuals", check_biorthonormal_residuals, False),
    ("steady-state-positivity", check_steady_state_positivity, False),
    ("gauge-freedom", check_gauge_freedom, True),
    ("geometric-vanishing", check_geometric_vanishing, True),
    ("omega-linearity", check_omega_linearity, True),
    ("geometric-antisymmetry", check_antisymmetry, False),
    ("hellmann-feynman-flux", check_hellmann_feynman, True),
    ("gallavotti-cohen-static", check_gallavotti_cohen, True),
    ("stencil-robustness", check_stencil_robustness, False),
    ("tur-zero-phase", check_tur_zero_phase, False),
    ("tur-violation-exists", check_tur_violation_exists, False),
    ("dataset-determinism", check_dataset_determinism, False),
    ("splits-and-ranges", check_splits_and_ranges, False),
    ("jacobian-finite-differences", check_jacobian_fd, False),
    ("model-roundtrip", check_model_roundtrip, False),
    ("training-determinism-monotone", check_training_determinism_monotone, False),
]

#: Checks that make up the exact invariant gate.
CORE = tuple(name for name, _, core in CHECKS if core)


def run_suite(names=None):
    results = []
    for name, fn, _ in CHECKS:
        if names and name not in names:
            continue
        start = time.perf_counter()
        try:
            passed, detail = fn()
        except Exception as exc:  # a crash is a failed invariant, reported by name
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(passed), detail, time.perf_counter() - start))
    return results


def format_table(results) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  {r.seconds:6.2f}s  {r.detail}" for r in results]
    lines.append(f"{sum(r.passed for r in results)}/{len(results)} invariants passed")
    return "\n".join(lines)
