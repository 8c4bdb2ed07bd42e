"""Two-parameter grid sweeps with either the exact solver or a trained
surrogate as the evaluation backend."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .ann import NetworkModel
from .engine import INPUT_NAMES, EngineParams
from .errors import QheError, ZeroFluxError
from .fcs import FcsConfig, affinity, cumulants

QUANTITIES = ("F", "c_d1", "c_g1", "c_d2", "c_g2", "affinity", "tur_product")
MODEL_QUANTITIES = ("F", "affinity", "tur_product")
BACKENDS = ("exact", "model")

#: Bath and cavity settings of the phase/coherence TUR map.
TUR_MAP_BASE = {"T_c0": 0.6, "T_h0": 1.6, "T_l": 0.7, "p_c": 0.0}


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    steps: int

    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.steps)


@dataclass(frozen=True)
class SweepSpec:
    x: Axis
    y: Axis
    fixed: dict = field(default_factory=lambda: dict(TUR_MAP_BASE))
    quantity: str = "F"
    backend: str = "exact"
    model_path: str | None = None

    def __post_init__(self):
        for ax in (self.x, self.y):
            if ax.name not in INPUT_NAMES:
                raise ValueError(f"cannot sweep {ax.name!r}; choose from {INPUT_NAMES}")
            if ax.steps < 2:
                raise ValueError("each axis needs at least 2 steps")
        if self.x.name == self.y.name:
            raise ValueError("swept parameters must be distinct")
        if self.quantity not in QUANTITIES:
            raise ValueError(f"quantity must be one of {QUANTITIES}")
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}")
        if self.backend == "model":
            if self.quantity not in MODEL_QUANTITIES:
                raise ValueError(f"the model backend only provides {MODEL_QUANTITIES}")
            if not self.model_path:
                raise ValueError("the model backend needs a model file")

    def params_at(self, xv: float, yv: float) -> EngineParams:
        return EngineParams(**{**self.fixed, self.x.name: float(xv), self.y.name: float(yv)})


def evaluate_point(params: EngineParams, quantity: str, cfg: FcsConfig, model: NetworkModel | None = None) -> float:
    if model is not None:
        if quantity == "affinity":
            return affinity(params, cfg)
        F = float(model.predict(np.array(params.inputs())[None])[0])
        return F if quantity == "F" else F * affinity(params, cfg)
    if quantity == "affinity":
        return affinity(params, cfg)
    cs = cumulants(params, cfg, allow_zero_flux=True)
    value = cs.fano if quantity == "F" else getattr(cs, quantity)
    if value is None:
        raise ZeroFluxError(f"{quantity} undefined at vanishing flux")
    return value


def run_sweep(spec: SweepSpec, cfg: FcsConfig = FcsConfig(), model: NetworkModel | None = None):
    """Row-major ``(x, y, value, status)`` tuples; failures are recorded, not raised."""
    if spec.backend == "model" and model is None:
        model = NetworkModel.load(spec.model_path)
    rows = []
    for xv in spec.x.values():
        for yv in spec.y.values():
            try:
                value = evaluate_point(spec.params_at(xv, yv), spec.quantity, cfg,
                                       model if spec.backend == "model" else None)
                rows.append((float(xv), float(yv), float(value), "ok"))
            except QheError as exc:
                rows.append((float(xv), float(yv), math.nan, exc.name))
    return rows


def grid_header(spec: SweepSpec, cfg: FcsConfig) -> list:
    fixed = " ".join(f"{k}={v:.17g}" for k, v in sorted(spec.fixed.items()))
    return [
        f"# qhe_fcs sweep version={__version__}",
        f"# x={spec.x.name} lo={spec.x.lo:.17g} hi={spec.x.hi:.17g} steps={spec.x.steps}",
        f"# y={spec.y.name} lo={spec.y.lo:.17g} hi={spec.y.hi:.17g} steps={spec.y.steps}",
        f"# fixed {fixed}",
        f"# quantity={spec.quantity} backend={spec.backend} model={spec.model_path or '-'}",
        f"# fcs N={cfg.N} h={cfg.h} richardson={cfg.richardson} tol={cfg.tol} derivative={cfg.derivative}",
        f"{spec.x.name} {spec.y.name} {spec.quantity} status",
    ]


def write_grid(path, spec: SweepSpec, rows, cfg: FcsConfig = FcsConfig()) -> None:
    lines = grid_header(spec, cfg)
    lines += [f"{x:.17g} {y:.17g} {v:.17g} {s}" for x, y, v, s in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def read_grid(path):
    """Rows of a grid file as ``(x, y, value, status)``."""
    rows = []
    lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    for line in lines[1:]:
        x, y, v, s = line.split()
        rows.append((float(x), float(y), float(v), s))
    return rows
