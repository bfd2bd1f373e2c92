import csv
from unittest.mock import MagicMock

import numpy as np
import pytest
from softcounter import autodiff as ad
from softcounter.autodiff import Value
from softcounter.exception import InvalidConfigError
from softcounter.exception import ShapeError
from softcounter.gradcheck import grad_check
from softcounter.sparsevd import SparseCurveTracker
from softcounter.sparsevd import SparseVDConfig
from softcounter.sparsevd import VariationalAffineParams
from softcounter.sparsevd import closed_form_coefficients
from softcounter.sparsevd import fit_sparse_regression
from softcounter.sparsevd import kl_term
from softcounter.sparsevd import log_alpha
from softcounter.sparsevd import mc_kl_oracle
from softcounter.sparsevd import neg_kl_approx
from softcounter.sparsevd import sparse_ratio
from softcounter.sparsevd import track_curve
from softcounter.sparsevd import vd_forward_eval
from softcounter.sparsevd import vd_forward_mean
from softcounter.sparsevd import vd_forward_train
from softcounter.synthetic import generate_sparse_regression


# -----------------------------------------------------------------------------
# Fixtures
# -----------------------------------------------------------------------------


@pytest.fixture
def layer():
    """2x2 layer with unclipped dropout rates."""
    return VariationalAffineParams(
        theta=Value([[0.5, -1.2], [2.0, 0.3]]),
        log_sigma2=Value([[-1.0, 0.0], [1.0, -2.0]]),
        bias=Value([0.1, -0.2]),
        name="toy",
    )


@pytest.fixture
def inputs():
    return Value([[1.0, -0.5], [0.3, 2.0], [-1.5, 0.7]])


# -----------------------------------------------------------------------------
# Configuration and dropout rates
# -----------------------------------------------------------------------------


@pytest.mark.parametrize("kwargs", [{"kl_warmup": 1.5}, {"kl_weight": -1.0}])
def test_invalid_config(kwargs):
    with pytest.raises(InvalidConfigError):
        SparseVDConfig(**kwargs)


def test_kl_warmup():
    config = SparseVDConfig()
    assert config.kl_coefficient(0, 30) == 0.0
    assert config.kl_coefficient(5, 30) == pytest.approx(0.5)
    assert config.kl_coefficient(10, 30) == 1.0
    assert config.kl_coefficient(29, 30) == 1.0
    assert SparseVDConfig(kl_warmup=0.0).kl_coefficient(0, 30) == 1.0


def test_log_alpha_is_clipped():
    values = log_alpha(np.array([1.0, 0.0, 1e3]), np.array([0.0, 0.0, -30.0]))
    assert values.tolist() == [pytest.approx(0.0, abs=1e-7), 10.0, -10.0]


def test_init_shapes():
    layer = VariationalAffineParams.init(5, 3, "hidden", seed=1)
    assert layer.shape == (5, 3)
    assert layer.parameter_count == 5 * 3 * 2 + 3
    assert sorted(layer.named_parameters()) == [
        "hidden.bias",
        "hidden.log_sigma2",
        "hidden.theta",
    ]
    assert np.all(layer.log_sigma2.data == -10.0)


def test_sparse_ratio(layer):
    layer.log_sigma2.data[0, :] = 20.0
    assert layer.mask().tolist() == [[False, False], [True, True]]
    assert sparse_ratio(layer) == 0.5
    assert sparse_ratio(layer, rows=slice(0, 1)) == 0.0
    assert sparse_ratio(layer, rows=slice(1, 2)) == 1.0
    assert sparse_ratio(layer, rows=slice(2, 2)) == 0.0


# -----------------------------------------------------------------------------
# Forward passes
# -----------------------------------------------------------------------------


def test_zero_input_gives_exactly_the_bias(layer):
    out = vd_forward_train(Value(np.zeros((4, 2))), layer, np.random.default_rng(0))
    assert np.array_equal(out.data, np.tile(layer.bias.data, (4, 1)))


def test_train_forward_samples_around_the_mean(layer, inputs):
    rng = np.random.default_rng(0)
    draws = np.stack([vd_forward_train(inputs, layer, rng).data for _ in range(4000)])
    mean = vd_forward_mean(inputs, layer).data
    variance = (inputs.data**2) @ np.exp(layer.log_sigma2.data)
    assert np.allclose(draws.mean(axis=0), mean, atol=0.15)
    assert np.allclose(draws.var(axis=0), variance, rtol=0.1)


def test_eval_forward_drops_pruned_weights(layer, inputs):
    layer.log_sigma2.data[1, 0] = 20.0
    out = vd_forward_eval(inputs, layer)
    theta = layer.theta.data.copy()
    theta[1, 0] = 0.0
    assert np.allclose(out.data, inputs.data @ theta + layer.bias.data)


def test_eval_forward_ignores_pruned_means(inputs):
    rng = np.random.default_rng(6)
    layer = VariationalAffineParams.init(2, 3, "wide", seed=2)
    layer.log_sigma2.data[:, 1] = 40.0
    layer.log_sigma2.data[0, 2] = 40.0
    pruned = ~layer.mask()
    before = vd_forward_eval(inputs, layer).data.copy()
    for _ in range(5):
        layer.theta.data[pruned] = rng.normal(0.0, 100.0, int(pruned.sum()))
        assert np.array_equal(vd_forward_eval(inputs, layer).data, before)
        assert np.array_equal(~layer.mask(), pruned)


def test_forward_rejects_wrong_input(layer):
    with pytest.raises(ShapeError):
        vd_forward_train(Value(np.zeros((2, 3))), layer, np.random.default_rng(0))
    with pytest.raises(ShapeError):
        vd_forward_eval(Value(np.zeros(2)), layer)


def test_train_forward_gradients(layer, inputs):
    def loss():
        out = vd_forward_train(inputs, layer, np.random.default_rng(11))
        return ad.sum_all(ad.mul(ad.tanh(out), out))

    params = list(layer.named_parameters().values()) + [inputs]
    assert grad_check(loss, params, step=1e-6) < 1e-5


# -----------------------------------------------------------------------------
# KL divergence
# -----------------------------------------------------------------------------


def test_neg_kl_is_increasing():
    values = neg_kl_approx(np.linspace(-10.0, 10.0, 201))
    assert np.all(np.diff(values) > 0.0)


def test_kl_term_gradients(layer):
    params = [layer.theta, layer.log_sigma2]
    assert grad_check(lambda: kl_term(layer), params) < 1e-5


def test_kl_term_sums_layers(layer):
    other = VariationalAffineParams.init(3, 2, "other", seed=2, init_log_sigma2=-4.0)
    total = kl_term([layer, other]).item()
    assert total == pytest.approx(kl_term(layer).item() + kl_term(other).item())


def test_kl_term_is_flat_where_clipped():
    layer = VariationalAffineParams.init(2, 2, "clipped", init_log_sigma2=40.0)
    with ad.Tape() as tape:
        tape.backward(kl_term(layer))
    assert np.all(layer.theta.grad == 0.0)
    assert np.all(layer.log_sigma2.grad == 0.0)


def test_approximation_matches_monte_carlo():
    rng = np.random.default_rng(0)
    assert mc_kl_oracle(0.0, 10_000, rng) == pytest.approx(float(neg_kl_approx(0.0)))
    for value in (-2.0, 1.0):
        estimate = mc_kl_oracle(value, 400_000, rng, chunk=100_000)
        assert estimate == pytest.approx(float(neg_kl_approx(value)), abs=3e-2)


# -----------------------------------------------------------------------------
# Sparse-ratio curves
# -----------------------------------------------------------------------------


def test_curve_tracker(tmp_path, layer):
    tracker = SparseCurveTracker({"b": layer, "a": (layer, slice(0, 1))})
    tracker(1)
    layer.log_sigma2.data[:] = 20.0
    tracker(2)
    assert tracker.final() == {"a": 0.0, "b": 0.0}
    assert [(report.epoch, report.layer) for report in tracker.reports] == [
        (1, "a"),
        (1, "b"),
        (2, "a"),
        (2, "b"),
    ]
    path = tmp_path / "curve.csv"
    tracker.write_csv(path)
    with open(path, encoding="utf-8") as stream:
        rows = list(csv.reader(stream))
    assert rows[0] == ["epoch", "layer", "sparse_ratio"]
    assert rows[1] == ["1", "a", "1.0"]


def test_track_curve_registers_callback(layer):
    trainer = MagicMock()
    tracker = track_curve(trainer, {"toy": layer})
    trainer.add_epoch_callback.assert_called_once_with(tracker)


# -----------------------------------------------------------------------------
# Sparse regression
# -----------------------------------------------------------------------------


def test_closed_form_without_dropout_is_least_squares():
    rng = np.random.default_rng(3)
    features = rng.standard_normal((50, 3))
    targets = features @ np.array([1.0, -2.0, 0.5]) + 2.0
    coefficients, intercept = closed_form_coefficients(features, targets, np.zeros(3))
    assert np.allclose(coefficients, [1.0, -2.0, 0.5])
    assert intercept == pytest.approx(2.0)


def test_closed_form_shrinks_orthogonal_features():
    rng = np.random.default_rng(9)
    n_rows = 40
    basis, _ = np.linalg.qr(
        np.hstack([np.ones((n_rows, 1)), rng.standard_normal((n_rows, 3))])
    )
    # columns orthogonal to each other and to the intercept, X'X = n I
    features = basis[:, 1:] * np.sqrt(n_rows)
    truth = np.array([1.0, -2.0, 0.5])
    targets = features @ truth + 2.0
    alpha = np.array([0.0, 1.0, 3.0])
    coefficients, intercept = closed_form_coefficients(features, targets, alpha)
    assert np.allclose(coefficients, truth / (1.0 + alpha))
    assert intercept == pytest.approx(2.0)


def test_sparse_regression_prunes_null_features():
    features, targets, truth = generate_sparse_regression(
        n_rows=1000, n_features=10, n_active=5, seed=4
    )
    result = fit_sparse_regression(features, targets, steps=2000, seed=0)
    active = truth != 0.0
    assert result.kept[active].all()
    assert (~result.kept[~active]).sum() >= 4
    assert result.rmse_pruned <= 1.05 * result.rmse_mean
    assert np.allclose(result.coefficients[active], truth[active], atol=0.05)
    assert len(result.curve) == 20


def test_sparse_regression_rejects_no_step():
    with pytest.raises(InvalidConfigError):
        fit_sparse_regression(np.zeros((4, 2)), np.zeros(4), steps=0)
