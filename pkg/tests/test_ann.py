import math

import numpy as np
import pytest

from qhe_fcs import ann
from qhe_fcs.ann import NetworkModel, TrainConfig, convergence_study, jacobian, lm_step, regression_metrics, train
from qhe_fcs.errors import ShapeMismatchError, ZeroVarianceError

LO, HI = -np.ones(6), np.ones(6)


def fd_jacobian(model, X, step=1e-6):
    z = model.get_params()
    cols = []
    for j in range(z.size):
        dz = np.zeros_like(z)
        dz[j] = step
        up, dn = model.with_params(z + dz).raw_output(X), model.with_params(z - dz).raw_output(X)
        cols.append(-(up - dn) / (2 * step))  # e = y - output
    return np.stack(cols, axis=1)


def linear_data(n=40, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, (n, 6))
    y = X @ np.array([0.5, -1.0, 2.0, 0.1, 0.0, 0.3]) + 0.7
    return X, y


def zero_model(sizes=(6, 3, 1)):
    m = NetworkModel.initialise(list(sizes), LO, HI)
    return m.with_params(np.zeros(m.n_params))


def test_zero_network_outputs_zero():
    X = np.random.default_rng(1).uniform(-1, 1, (5, 6))
    np.testing.assert_array_equal(zero_model().predict(X), 0.0)


def test_hand_computed_forward():
    m = NetworkModel([1, 1, 1], [np.array([[0.5]]), np.array([[2.0]])],
                     [np.array([0.1]), np.array([-0.3])], np.array([-1.0]), np.array([1.0]))
    for x in (-0.4, 0.0, 0.8):
        assert ann.forward(m, [x]) == pytest.approx(2.0 * math.tanh(0.5 * x + 0.1) - 0.3, abs=1e-12)


def test_inputs_scaled_to_unit_box():
    m = NetworkModel.initialise([2, 1], np.array([0.0, 10.0]), np.array([2.0, 10.0]))
    np.testing.assert_allclose(m.scale_inputs(np.array([[0.0, 10.0], [2.0, 10.0], [1.0, 10.0]])),
                               [[-1, 0], [1, 0], [0, 0]])


def test_jacobian_matches_finite_differences():
    m = NetworkModel.initialise([6, 4, 1], LO, HI, seed=3)
    m = m.with_params(np.random.default_rng(3).uniform(-1, 1, m.n_params))
    X = np.random.default_rng(4).uniform(-1, 1, (7, 6))
    assert np.max(np.abs(jacobian(m, X) - fd_jacobian(m, X))) < 1e-6


def test_jacobian_deep_network():
    m = NetworkModel.initialise([6, 5, 4, 3, 1], LO, HI, seed=8)
    X = np.random.default_rng(5).uniform(-1, 1, (4, 6))
    assert np.max(np.abs(jacobian(m, X) - fd_jacobian(m, X))) < 1e-6


def test_output_bias_column():
    m = zero_model()
    J = jacobian(m, np.random.default_rng(0).uniform(-1, 1, (6, 6)))
    np.testing.assert_array_equal(J[:, -1], -1.0)


def test_duplicate_rows_duplicate_jacobian():
    m = NetworkModel.initialise([6, 4, 1], LO, HI, seed=1)
    x = np.random.default_rng(2).uniform(-1, 1, 6)
    J = jacobian(m, np.stack([x, x]))
    np.testing.assert_array_equal(J[0], J[1])


def test_large_damping_is_gradient_step():
    X, y = linear_data()
    m = NetworkModel.initialise([6, 3, 1], LO, HI, seed=0)
    sigma = 1e12
    J = jacobian(m, X)
    e = y - m.raw_output(X)
    # compare the increment itself; z - (z - step) would cancel most digits
    step = ann._damped_solve(J.T @ J, J.T @ e, sigma)
    np.testing.assert_allclose(step, J.T @ e / sigma, rtol=1e-6)
    cand, mse = lm_step(m, X, y, sigma)
    assert mse == pytest.approx(np.mean(e ** 2), rel=1e-6)


def test_linear_model_one_step_least_squares():
    X, y = linear_data(seed=2)
    y = y + np.random.default_rng(2).normal(0, 0.1, y.size)
    m = NetworkModel.initialise([6, 1], LO, HI, seed=0)
    cand, mse = lm_step(m, X, y, 1e-14)
    A = np.hstack([X, np.ones((len(y), 1))])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    assert mse == pytest.approx(np.mean((A @ coef - y) ** 2), rel=1e-10)
    np.testing.assert_allclose(cand.predict(X), A @ coef, atol=1e-10)


def test_step_reduces_error():
    X, y = linear_data(seed=5)
    y = np.tanh(y)
    m = NetworkModel.initialise([6, 4, 1], LO, HI, seed=0)
    before = np.mean((y - m.raw_output(X)) ** 2)
    _, after = lm_step(m, X, y, 1e-2)
    assert after < before


def _split(X, y):
    n = len(y)
    a, b = int(0.7 * n), int(0.85 * n)
    return {"train": (X[:a], y[:a]), "validation": (X[a:b], y[a:b]), "test": (X[b:], y[b:])}


def test_affine_target_exact_within_five_epochs():
    X, y = linear_data(60)
    model, rep = train(_split(X, y), TrainConfig(hidden=(), max_epochs=5))
    assert min(rep.train_mse) < 1e-20
    assert rep.metrics["test"].rmse < 1e-9


def test_training_monotone_and_deterministic():
    rng = np.random.default_rng(0)
    X = rng.uniform(-1, 1, (120, 6))
    y = np.sin(2 * X[:, 0]) * X[:, 1] + 0.2 * X[:, 2] ** 2 + 1.0
    cfg = TrainConfig(hidden=(6, 6), max_epochs=40, seed=4)
    m1, r1 = train(_split(X, y), cfg)
    m2, r2 = train(_split(X, y), cfg)
    accepted = [mse for _, _, ok, mse in r1.steps if ok]
    assert all(b <= a for a, b in zip(accepted, accepted[1:]))
    assert r1.train_mse == r2.train_mse and r1.val_mse == r2.val_mse and r1.steps == r2.steps
    np.testing.assert_array_equal(m1.get_params(), m2.get_params())
    assert r1.best_epoch == 1 + int(np.argmin(r1.val_mse))
    assert r1.stop_reason in ("patience", "max-epochs")


def test_metrics_examples():
    m = regression_metrics([1.0, 3.0], [2.0, 2.0])
    assert m.as_tuple() == pytest.approx((1, 1, 0, 1, 200 / 3), abs=1e-9)  # (100% + 33.3%) / 2
    assert regression_metrics([1.0, 2.0, 4.0], [1.0, 2.0, 4.0]).as_tuple() == (0, 0, 1, 0, 0)
    y = np.array([0.3, 1.2, 5.0])
    assert regression_metrics(y, np.full(3, y.mean())).r2 == pytest.approx(0, abs=1e-15)
    with pytest.raises(ZeroVarianceError):
        regression_metrics([1.0, 1.0], [1.0, 2.0])


def test_model_roundtrip_bitwise(tmp_path):
    m = NetworkModel.initialise([6, 5, 3, 1], np.zeros(6), np.arange(1, 7.0), seed=11,
                                manifest_digest="cafe")
    path = tmp_path / "m.txt"
    m.save(path)
    back = NetworkModel.load(path)
    X = np.random.default_rng(0).uniform(0, 6, (20, 6))
    np.testing.assert_array_equal(m.predict(X), back.predict(X))
    assert back.seed == 11 and back.manifest_digest == "cafe" and back.sizes == m.sizes


def test_shape_validation():
    with pytest.raises(ShapeMismatchError):
        NetworkModel([6, 2, 1], [np.zeros((6, 2)), np.zeros((3, 1))], [np.zeros(2), np.zeros(1)], LO, HI)
    with pytest.raises(ShapeMismatchError):
        ann.forward(zero_model(), np.zeros(5))


def test_log_transform_predicts_in_label_space():
    X, y = linear_data(60)
    F = np.exp(0.3 * y)
    model, rep = train(_split(X, F), TrainConfig(hidden=(4,), max_epochs=30, label_transform="log"))
    assert model.label_transform == "log"
    assert rep.metrics["test"].r2 > 0.99


def test_convergence_study_single_trial():
    X, y = linear_data(60)
    rows = convergence_study(_split(X, y), TrainConfig(max_epochs=3), architectures=[(2,)], trials=1)
    assert rows[0]["rmse_std"] == 0 and rows[0]["r2_std"] == 0 and rows[0]["hidden"] == (2,)
    rows = convergence_study(_split(X, y), TrainConfig(hidden=(2,), max_epochs=3), sizes=[10, 30], trials=2)
    assert [r["size"] for r in rows] == [10, 30] and len(rows[1]["rmse"]) == 2
