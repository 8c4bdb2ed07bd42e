"""Fully connected tanh regression network trained by Levenberg-Marquardt.

Parameters are flattened layer by layer as ``W_0.ravel(), B_0, W_1.ravel(), ...``
with ``W_l`` of shape ``(v_l, v_{l+1})``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from .dataset import split_arrays
from .errors import (DampingAbortError, EmptySplitError, ShapeMismatchError,
                     SingularSystemError, ZeroVarianceError)

MODEL_VERSION = 1
LABEL_TRANSFORMS = ("none", "log")


@dataclass
class NetworkModel:
    sizes: list
    weights: list
    biases: list
    x_min: np.ndarray
    x_max: np.ndarray
    label_transform: str = "none"
    seed: int | None = None
    manifest_digest: str = ""

    def __post_init__(self):
        self.sizes = [int(s) for s in self.sizes]
        if len(self.weights) != len(self.sizes) - 1 or len(self.biases) != len(self.weights):
            raise ShapeMismatchError("need one weight matrix and bias vector per layer transition")
        for l, (W, B) in enumerate(zip(self.weights, self.biases)):
            if W.shape != (self.sizes[l], self.sizes[l + 1]) or B.shape != (self.sizes[l + 1],):
                raise ShapeMismatchError(f"layer {l}: W{W.shape}, B{B.shape} do not match sizes {self.sizes}")
        if self.sizes[-1] != 1:
            raise ShapeMismatchError("output layer must have a single unit")
        self.x_min = np.asarray(self.x_min, dtype=float)
        self.x_max = np.asarray(self.x_max, dtype=float)
        if self.x_min.shape != (self.sizes[0],) or self.x_max.shape != (self.sizes[0],):
            raise ShapeMismatchError("scaling constants must match the input width")
        if self.label_transform not in LABEL_TRANSFORMS:
            raise ValueError(f"label_transform must be one of {LABEL_TRANSFORMS}")

    @classmethod
    def initialise(cls, sizes, x_min, x_max, seed: int = 0, **kw) -> "NetworkModel":
        """Symmetric uniform weights and biases, half-width ``1/sqrt(fan_in)``."""
        rng = np.random.default_rng(seed)
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            s = 1.0 / math.sqrt(fan_in)
            weights.append(rng.uniform(-s, s, size=(fan_in, fan_out)))
            biases.append(rng.uniform(-s, s, size=fan_out))
        return cls(list(sizes), weights, biases, x_min, x_max, seed=seed, **kw)

    @property
    def n_params(self) -> int:
        return sum(W.size + B.size for W, B in zip(self.weights, self.biases))

    def get_params(self) -> np.ndarray:
        return np.concatenate([a for W, B in zip(self.weights, self.biases) for a in (W.ravel(), B)])

    def with_params(self, z: np.ndarray) -> "NetworkModel":
        z = np.asarray(z, dtype=float)
        if z.shape != (self.n_params,):
            raise ShapeMismatchError(f"expected {self.n_params} parameters, got {z.shape}")
        weights, biases, i = [], [], 0
        for a, b in zip(self.sizes[:-1], self.sizes[1:]):
            weights.append(z[i:i + a * b].reshape(a, b).copy())
            i += a * b
            biases.append(z[i:i + b].copy())
            i += b
        return NetworkModel(self.sizes, weights, biases, self.x_min, self.x_max,
                            self.label_transform, self.seed, self.manifest_digest)

    def scale_inputs(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.sizes[0]:
            raise ShapeMismatchError(f"inputs have width {X.shape[-1]}, model expects {self.sizes[0]}")
        span = self.x_max - self.x_min
        safe = np.where(span > 0, span, 1.0)
        return np.where(span > 0, 2 * (X - self.x_min) / safe - 1, 0.0)

    def raw_output(self, X: np.ndarray) -> np.ndarray:
        """Network output in training-target space, batch ``(n, 6) -> (n,)``."""
        return self._activations(X)[-1][:, 0]

    def _activations(self, X):
        a = self.scale_inputs(np.atleast_2d(X))
        acts = [a]
        last = len(self.weights) - 1
        for l, (W, B) in enumerate(zip(self.weights, self.biases)):
            a = a @ W + B
            if l < last:
                a = np.tanh(a)
            acts.append(a)
        return acts

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Fano-factor predictions for a batch of input rows."""
        return from_target(self.raw_output(X), self.label_transform)

    # persistence -----------------------------------------------------------
    def save(self, path) -> None:
        fmt = lambda arr: " ".join(f"{v:.17g}" for v in np.ravel(arr))  # noqa: E731
        lines = [
            "# qhe_fcs network model",
            f"version={MODEL_VERSION}",
            "sizes=" + ",".join(map(str, self.sizes)),
            "x_min=" + fmt(self.x_min),
            "x_max=" + fmt(self.x_max),
            f"label_transform={self.label_transform}",
            f"seed={'' if self.seed is None else self.seed}",
            f"manifest_digest={self.manifest_digest}",
        ]
        for l, (W, B) in enumerate(zip(self.weights, self.biases)):
            lines.append(f"layer {l} weights {W.shape[0]} {W.shape[1]}")
            lines += [fmt(row) for row in W]
            lines.append(f"layer {l} biases {B.size}")
            lines.append(fmt(B))
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path) -> "NetworkModel":
        lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
        head = {}
        while "=" in lines[0]:
            k, v = lines.pop(0).split("=", 1)
            head[k] = v
        if int(head["version"]) != MODEL_VERSION:
            raise ValueError(f"unsupported model version {head['version']}")
        floats = lambda s: np.array([float(x) for x in s.split()])  # noqa: E731
        weights, biases = [], []
        while lines:
            _, _, kind, *dims = lines.pop(0).split()
            if kind == "weights":
                rows, cols = map(int, dims)
                weights.append(np.array([floats(lines.pop(0)) for _ in range(rows)]).reshape(rows, cols))
            else:
                biases.append(floats(lines.pop(0)))
        return cls(
            [int(s) for s in head["sizes"].split(",")], weights, biases,
            floats(head["x_min"]), floats(head["x_max"]), head["label_transform"],
            int(head["seed"]) if head["seed"] else None, head["manifest_digest"],
        )


def to_target(F, transform: str):
    return np.log(F) if transform == "log" else np.asarray(F, dtype=float)


def from_target(y, transform: str):
    return np.exp(y) if transform == "log" else y


def forward(model: NetworkModel, x) -> float:
    """Prediction for a single input vector."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.sizes[0],):
        raise ShapeMismatchError(f"expected a {model.sizes[0]}-vector, got shape {x.shape}")
    return float(model.predict(x[None])[0])


def jacobian(model: NetworkModel, X: np.ndarray) -> np.ndarray:
    """``d e_i / d z`` for errors ``e = target - output``, by reverse accumulation.

    Shape ``(n_samples, n_params)``; the target does not enter.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 0:
        raise ShapeMismatchError("empty batch")
    acts = model._activations(X)
    n = X.shape[0]
    blocks = []
    grad = np.ones((n, 1))  # d output / d pre-activation of the last layer
    for l in range(len(model.weights) - 1, -1, -1):
        a = acts[l]
        blocks.append(np.einsum("ni,nj->nij", a, grad).reshape(n, -1))
        blocks.append(grad)
        if l > 0:
            grad = (grad @ model.weights[l].T) * (1 - acts[l] ** 2)
    # blocks were collected output-first as (W_L, B_L, W_{L-1}, ...); reorder
    ordered = []
    for i in range(len(blocks) - 2, -1, -2):
        ordered += [blocks[i], blocks[i + 1]]
    return -np.hstack(ordered)


def _damped_solve(JtJ, Jte, sigma):
    A = JtJ + sigma * np.eye(JtJ.shape[0])
    try:
        factor = scipy.linalg.cho_factor(A, check_finite=True)
        step = scipy.linalg.cho_solve(factor, Jte)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularSystemError(f"damped normal equations not positive definite (sigma={sigma:g})") from exc
    if not np.all(np.isfinite(step)):
        raise SingularSystemError("non-finite update")
    return step


def lm_step(model: NetworkModel, X: np.ndarray, y: np.ndarray, sigma: float):
    """Candidate ``z - (J^T J + sigma I)^{-1} J^T e`` and its MSE; nothing is committed.

    ``y`` is in training-target space.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    J = jacobian(model, X)
    e = y - model.raw_output(X)
    step = _damped_solve(J.T @ J, J.T @ e, sigma)
    cand = model.with_params(model.get_params() - step)
    r = y - cand.raw_output(X)
    return cand, float(r @ r / len(r))


@dataclass(frozen=True)
class TrainConfig:
    sigma: float = 1e-3
    sigma_dec: float = 0.1
    sigma_inc: float = 10.0
    patience: int = 6
    max_epochs: int = 1000
    max_damping: float = 1e10
    min_damping: float = 1e-20
    seed: int = 0
    hidden: tuple = (20, 20, 20, 20)
    label_transform: str = "none"

    def __post_init__(self):
        if not 0 < self.sigma_dec < 1 < self.sigma_inc:
            raise ValueError("need 0 < sigma_dec < 1 < sigma_inc")
        if self.patience < 1:
            raise ValueError("patience must be at least 1")
        if self.label_transform not in LABEL_TRANSFORMS:
            raise ValueError(f"label_transform must be one of {LABEL_TRANSFORMS}")


@dataclass(frozen=True)
class Metrics:
    mse: float
    rmse: float
    r2: float
    mae: float
    mape: float

    def as_tuple(self):
        return (self.mse, self.rmse, self.r2, self.mae, self.mape)


@dataclass
class TrainReport:
    train_mse: list = field(default_factory=list)
    val_mse: list = field(default_factory=list)
    steps: list = field(default_factory=list)  # (epoch, sigma, accepted, train mse)
    stop_reason: str = ""
    best_epoch: int = 0
    metrics: dict = field(default_factory=dict)


def regression_metrics(y_true, y_pred) -> Metrics:
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y_true.size == 0:
        raise EmptySplitError("no records to score")
    err = y_true - y_pred
    mse = float(np.mean(err ** 2))
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if ss_tot == 0:
        raise ZeroVarianceError("R^2 undefined for constant labels")
    keep = np.abs(y_true) >= 1e-12
    mape = float(np.mean(np.abs(err[keep] / y_true[keep])) * 100) if keep.any() else math.nan
    return Metrics(mse, math.sqrt(mse), 1 - float(np.sum(err ** 2)) / ss_tot, float(np.mean(np.abs(err))), mape)


def metrics(model: NetworkModel, X, y) -> Metrics:
    """MSE, RMSE, R^2, MAE, MAPE of the model on raw Fano labels."""
    return regression_metrics(y, model.predict(X))


def _splits(data):
    if isinstance(data, dict):
        return data
    return {s: split_arrays(data, s) for s in ("train", "validation", "test")}


def train(data, cfg: TrainConfig = TrainConfig(), manifest_digest: str = ""):
    """Levenberg-Marquardt training with validation early stopping.

    ``data`` is a list of SampleRecord or a ``{split: (X, y)}`` mapping.
    Returns the lowest-validation-MSE model and the TrainReport.
    """
    splits = _splits(data)
    for name in ("train", "validation", "test"):
        if name not in splits or len(splits[name][1]) == 0:
            raise EmptySplitError(f"split {name!r} is empty")
    X, F = splits["train"]
    Xv, Fv = splits["validation"]
    y = to_target(F, cfg.label_transform)
    yv = to_target(Fv, cfg.label_transform)

    sizes = [X.shape[1], *cfg.hidden, 1]
    model = NetworkModel.initialise(sizes, X.min(axis=0), X.max(axis=0), seed=cfg.seed,
                                    label_transform=cfg.label_transform, manifest_digest=manifest_digest)
    report = TrainReport()
    sigma = cfg.sigma
    z = model.get_params()
    e = y - model.raw_output(X)
    sse = float(e @ e)
    best, best_val = model, math.inf
    prev_val, rises = math.inf, 0
    epoch = 0

    while epoch < cfg.max_epochs:
        J = jacobian(model, X)
        JtJ, Jte = J.T @ J, J.T @ e
        accepted = False
        while True:
            try:
                cand = model.with_params(z - _damped_solve(JtJ, Jte, sigma))
                e_c = y - cand.raw_output(X)
                sse_c = float(e_c @ e_c)
            except SingularSystemError:
                sse_c = math.inf
            if sse_c < sse:
                report.steps.append((epoch + 1, sigma, True, sse_c / len(y)))
                model, z, e, sse = cand, cand.get_params(), e_c, sse_c
                sigma = max(sigma * cfg.sigma_dec, cfg.min_damping)
                accepted = True
                break
            report.steps.append((epoch + 1, sigma, False, sse_c / len(y)))
            sigma *= cfg.sigma_inc
            if sigma > cfg.max_damping:
                break
        if not accepted:
            report.stop_reason = "damping-abort"
            break
        epoch += 1
        r = yv - model.raw_output(Xv)
        val = float(r @ r / len(r))
        report.train_mse.append(sse / len(y))
        report.val_mse.append(val)
        if val < best_val:
            best, best_val, report.best_epoch = model, val, epoch
        rises = rises + 1 if val > prev_val else 0
        prev_val = val
        if rises >= cfg.patience:
            report.stop_reason = "patience"
            break
    else:
        report.stop_reason = "max-epochs"

    if epoch == 0:
        raise DampingAbortError("no step was accepted before the damping limit")
    report.metrics = {name: metrics(best, *splits[name]) for name in ("train", "validation", "test")}
    return best, report


def convergence_study(data, cfg: TrainConfig = TrainConfig(), sizes=None, architectures=None, trials: int = 10):
    """Mean and spread of test RMSE / R^2 over seeded trials.

    Either ``sizes`` (training-set sizes, default architecture) or
    ``architectures`` (tuples of hidden widths) selects the cells.
    """
    if not sizes and not architectures:
        raise ValueError("give training sizes or architectures")
    splits = _splits(data)
    cells = [("size", n) for n in (sizes or [])] + [("hidden", tuple(a)) for a in (architectures or [])]
    rows = []
    for kind, value in cells:
        rmse, r2 = [], []
        for trial in range(trials):
            seed = cfg.seed + trial
            trial_cfg = TrainConfig(**{**cfg.__dict__, "seed": seed})
            sub = dict(splits)
            if kind == "size":
                X, y = splits["train"]
                pick = np.random.default_rng(seed).permutation(len(y))[:value]
                sub["train"] = (X[pick], y[pick])
            else:
                trial_cfg = TrainConfig(**{**trial_cfg.__dict__, "hidden": value})
            _, rep = train(sub, trial_cfg)
            rmse.append(rep.metrics["test"].rmse)
            r2.append(rep.metrics["test"].r2)
        rows.append({
            kind: value, "trials": trials,
            "rmse_mean": float(np.mean(rmse)), "rmse_std": float(np.std(rmse)),
            "r2_mean": float(np.mean(r2)), "r2_std": float(np.std(r2)),
            "rmse": rmse, "r2": r2,
        })
    return rows
