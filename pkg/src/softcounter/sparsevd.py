# Graph Soft Counter - Soft and hard edge counting for knowledge-graph QA, with SparseVD dissection.
# Copyright (C) 2026 - softcounter contributors
# SPDX-License-Identifier: Apache-2.0
"""
Sparse variational dropout as a dissection tool.

Every weight of a variational affine layer has a Gaussian posterior
``N(theta, sigma^2)`` with dropout rate ``alpha = sigma^2 / theta^2``. Under a
log-uniform prior, the KL regulariser pushes ``alpha`` up on weights the task
does not need; weights with ``log alpha > threshold`` are then zeroed. The
fraction of surviving weights of a layer (its sparse ratio) measures how much
the model relies on it.

Training uses local reparameterisation: pre-activations are sampled from
``N(x theta + b, (x * x) sigma^2)`` instead of sampling weights.

The KL approximation is::

    -KL ~ k1 * sigmoid(k2 + k3 * log alpha) - 0.5 * log(1 + 1 / alpha) + C

with ``k1 = 0.63576``, ``k2 = 1.87320``, ``k3 = 1.48695``; ``C`` is dropped.
"""
import csv
import math
from collections.abc import Mapping
from dataclasses import dataclass
from dataclasses import field
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .autodiff import Value
from .exception import InvalidConfigError
from .exception import ShapeError
from .logging_config import get_logger
from .logging_config import log_stat
from .monitoring import UtilsMonitoring
from .optimizer import RAdam
from .optimizer import RAdamHyper

logger = get_logger(__name__)

K1 = 0.63576
K2 = 1.87320
K3 = 1.48695
LOG_ALPHA_MIN = -10.0
LOG_ALPHA_MAX = 10.0
THETA_EPS = 1e-8


@dataclass(frozen=True)
class SparseVDConfig:
    """
    Attributes
    ----------
    threshold : float
        Pruning threshold ``tau`` on ``log alpha`` (default 3).
    init_log_sigma2 : float
        Initial log-variance of every weight.
    kl_warmup : float
        Fraction of training over which the KL coefficient grows linearly
        from 0 to ``kl_weight`` (0 disables the warm-up).
    kl_weight : float
        Final KL coefficient.
    """

    threshold: float = 3.0
    init_log_sigma2: float = -10.0
    kl_warmup: float = 1.0 / 3.0
    kl_weight: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.kl_warmup <= 1.0:
            raise InvalidConfigError("kl_warmup", self.kl_warmup, "must lie in [0, 1]")
        if self.kl_weight < 0:
            raise InvalidConfigError("kl_weight", self.kl_weight, "must be >= 0")

    def kl_coefficient(self, epoch: int, total_epochs: int) -> float:
        """Coefficient of the KL term at 0-based ``epoch``."""
        warmup_epochs = self.kl_warmup * total_epochs
        if warmup_epochs <= 0:
            return self.kl_weight
        return self.kl_weight * min(1.0, epoch / warmup_epochs)

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "init_log_sigma2": self.init_log_sigma2,
            "kl_warmup": self.kl_warmup,
            "kl_weight": self.kl_weight,
        }


@dataclass
class VariationalAffineParams:
    """
    Variational affine layer ``[in, out]`` with a deterministic bias.

    ``log alpha = clip(log_sigma2 - log(theta^2 + 1e-8), -10, 10)``.
    """

    theta: Value
    log_sigma2: Value
    bias: Value
    name: str = "layer"

    @classmethod
    def init(
        cls,
        in_dim: int,
        out_dim: int,
        name: str = "layer",
        seed: int = 0,
        init_log_sigma2: float = -10.0,
        scale: float | None = None,
    ) -> "VariationalAffineParams":
        """Glorot-normal means (or ``N(0, scale^2)``), constant log-variance, zero bias."""
        rng = np.random.default_rng(seed)
        std = scale if scale is not None else math.sqrt(2.0 / (in_dim + out_dim))
        return cls(
            theta=Value(rng.normal(0.0, std, (in_dim, out_dim)), f"{name}.theta"),
            log_sigma2=Value(
                np.full((in_dim, out_dim), float(init_log_sigma2)), f"{name}.log_sigma2"
            ),
            bias=Value(np.zeros(out_dim), f"{name}.bias"),
            name=name,
        )

    @property
    def shape(self) -> tuple:
        return self.theta.shape

    def named_parameters(self) -> dict[str, Value]:
        return {
            f"{self.name}.theta": self.theta,
            f"{self.name}.log_sigma2": self.log_sigma2,
            f"{self.name}.bias": self.bias,
        }

    @property
    def parameter_count(self) -> int:
        return sum(value.data.size for value in self.named_parameters().values())

    def log_alpha(self) -> np.ndarray:
        return log_alpha(self.theta.data, self.log_sigma2.data)

    def mask(self, threshold: float = 3.0) -> np.ndarray:
        """``True`` for kept weights (``log alpha <= threshold``)."""
        return self.log_alpha() <= threshold


def log_alpha(theta: np.ndarray, log_sigma2: np.ndarray) -> np.ndarray:
    raw = log_sigma2 - np.log(theta * theta + THETA_EPS)
    return np.clip(raw, LOG_ALPHA_MIN, LOG_ALPHA_MAX)


# ----------------------------------------------------------------------
# Forward passes
# ----------------------------------------------------------------------
def _check_input(operation: str, x: Value, params: VariationalAffineParams) -> None:
    if x.data.ndim != 2 or x.shape[1] != params.shape[0]:
        raise ShapeError(operation, x.shape, params.shape)


def vd_forward_train(
    x: Value, params: VariationalAffineParams, rng: np.random.Generator
) -> Value:
    """
    Sampled pre-activations under local reparameterisation, shape ``[n, out]``.

    Mean ``x theta + b``, variance ``(x * x) exp(log_sigma2)``. A zero input
    row gives exactly the bias. Differentiable with respect to ``theta``,
    ``log_sigma2``, the bias and ``x``.
    """
    _check_input("vd_forward_train", x, params)
    x_data = x.data
    theta = params.theta.data
    sigma2 = np.exp(params.log_sigma2.data)
    mean = x_data @ theta + params.bias.data
    variance = (x_data * x_data) @ sigma2
    std = np.sqrt(variance)
    noise = rng.standard_normal(mean.shape)
    out = mean + std * noise

    def vjp(grad):
        # d std / d variance is 1 / (2 std); zero where std is zero.
        safe = np.where(std > 0, std, 1.0)
        scaled = np.where(std > 0, grad * noise / safe, 0.0)
        grad_theta = x_data.T @ grad
        grad_log_sigma2 = 0.5 * ((x_data * x_data).T @ scaled) * sigma2
        grad_bias = grad.sum(axis=0)
        grad_x = grad @ theta.T + x_data * (scaled @ sigma2.T)
        return grad_theta, grad_log_sigma2, grad_bias, grad_x

    return ad.record(out, (params.theta, params.log_sigma2, params.bias, x), vjp)


def vd_forward_eval(
    x: Value, params: VariationalAffineParams, threshold: float = 3.0
) -> Value:
    """Deterministic affine with the weights of ``log alpha > threshold`` zeroed."""
    _check_input("vd_forward_eval", x, params)
    masked = Value(params.theta.data * params.mask(threshold))
    return ad.affine(masked, params.bias, x)


def vd_forward_mean(x: Value, params: VariationalAffineParams) -> Value:
    """Deterministic affine with the unpruned means (train-mode mean prediction)."""
    _check_input("vd_forward_mean", x, params)
    return ad.affine(params.theta, params.bias, x)


# ----------------------------------------------------------------------
# KL divergence
# ----------------------------------------------------------------------
def _sigmoid(values: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * values))


def neg_kl_approx(log_alpha_values) -> np.ndarray:
    """Approximate ``-KL`` per weight, without the constant; increasing in ``log alpha``."""
    la = np.asarray(log_alpha_values, dtype=np.float64)
    return K1 * _sigmoid(K2 + K3 * la) - 0.5 * np.log1p(np.exp(-la))


def _neg_kl_slope(la: np.ndarray) -> np.ndarray:
    s = _sigmoid(K2 + K3 * la)
    return K1 * K3 * s * (1.0 - s) + 0.5 * _sigmoid(-la)


def kl_term(layers) -> Value:
    """
    ``KL = -sum neg_kl_approx(log alpha)`` over every weight of ``layers``.

    Minimising ``data loss + KL`` maximises the variational lower bound.
    Accepts one layer or a sequence of layers.
    """
    if isinstance(layers, VariationalAffineParams):
        layers = [layers]
    terms = [_layer_kl(layer) for layer in layers]
    if len(terms) == 1:
        return terms[0]
    return ad.sum_all(ad.stack(terms))


def _layer_kl(params: VariationalAffineParams) -> Value:
    theta = params.theta.data
    raw = params.log_sigma2.data - np.log(theta * theta + THETA_EPS)
    la = np.clip(raw, LOG_ALPHA_MIN, LOG_ALPHA_MAX)
    inside = (raw > LOG_ALPHA_MIN) & (raw < LOG_ALPHA_MAX)
    value = -neg_kl_approx(la).sum()

    def vjp(grad):
        # d KL / d log alpha, zero where the clamp is active.
        slope = -float(grad) * _neg_kl_slope(la) * inside
        grad_theta = slope * (-2.0 * theta / (theta * theta + THETA_EPS))
        return grad_theta, slope

    return ad.record(np.array(value), (params.theta, params.log_sigma2), vjp)


def mc_kl_oracle(
    log_alpha_value: float,
    n_samples: int,
    rng: np.random.Generator,
    chunk: int = 250_000,
) -> float:
    """
    Monte-Carlo estimate of ``-KL`` for one weight, modulo the same constant.

    Uses ``-KL = 0.5 log alpha - E log|1 + sqrt(alpha) eps| + C`` with
    ``eps ~ N(0, 1)``. ``C`` is calibrated so that the estimate equals
    :func:`neg_kl_approx` at ``log alpha = 0``; the same draws serve both
    terms. Test helper.
    """
    alpha_sqrt = math.exp(0.5 * log_alpha_value)
    total, reference, done = 0.0, 0.0, 0
    while done < n_samples:
        size = min(chunk, n_samples - done)
        eps = rng.standard_normal(size)
        total += np.log(np.abs(1.0 + alpha_sqrt * eps)).sum()
        reference += np.log(np.abs(1.0 + eps)).sum()
        done += size
    estimate = 0.5 * log_alpha_value - total / n_samples
    at_zero = -reference / n_samples
    return float(estimate - at_zero + neg_kl_approx(0.0))


# ----------------------------------------------------------------------
# Sparse ratios
# ----------------------------------------------------------------------
def sparse_ratio(
    params: VariationalAffineParams, threshold: float = 3.0, rows: slice | None = None
) -> float:
    """Fraction of weights kept (``log alpha <= threshold``), optionally over a row block."""
    mask = params.mask(threshold)
    if rows is not None:
        mask = mask[rows]
    if mask.size == 0:
        return 0.0
    return float(mask.sum()) / mask.size


@dataclass(frozen=True)
class SparseReport:
    epoch: int
    layer: str
    sparse_ratio: float


@dataclass
class SparseCurveTracker:
    """
    Epoch callback recording the sparse ratio of named layers or row blocks.

    ``layers`` maps a report name to a layer, or to ``(layer, rows)`` for a
    block of input rows.
    """

    layers: Mapping[str, object]
    threshold: float = 3.0
    reports: list[SparseReport] = field(default_factory=list)

    def __call__(self, epoch: int, *_args) -> None:
        for name in sorted(self.layers):
            entry = self.layers[name]
            layer, rows = entry if isinstance(entry, tuple) else (entry, None)
            ratio = sparse_ratio(layer, self.threshold, rows)
            self.reports.append(SparseReport(epoch, name, ratio))
            log_stat("sparse_ratio", epoch=epoch, layer=name, sparse_ratio=ratio)

    def final(self) -> dict[str, float]:
        """Last recorded ratio of every layer."""
        return {report.layer: report.sparse_ratio for report in self.reports}

    def write_csv(self, path: str | Path) -> None:
        """Write ``epoch,layer,sparse_ratio`` sorted by epoch then layer name."""
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        rows = sorted(self.reports, key=lambda report: (report.epoch, report.layer))
        with open(path, "w", encoding="utf-8", newline="") as stream:
            writer = csv.writer(stream)
            writer.writerow(["epoch", "layer", "sparse_ratio"])
            for report in rows:
                writer.writerow([report.epoch, report.layer, repr(report.sparse_ratio)])


def track_curve(trainer, layers: Mapping[str, object], threshold: float = 3.0):
    """Register a :class:`SparseCurveTracker` on ``trainer`` and return it."""
    tracker = SparseCurveTracker(layers, threshold)
    trainer.add_epoch_callback(tracker)
    return tracker


# ----------------------------------------------------------------------
# Sparse linear regression
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class SparseRegressionResult:
    """
    Outcome of :func:`fit_sparse_regression`.

    ``closed_form`` holds the coefficients minimising the expected squared
    error with ``alpha`` frozen at its trained value:
    ``(X'X + diag(X'X) diag(alpha))^-1 X'y`` (intercept unpenalised).
    """

    coefficients: np.ndarray
    intercept: float
    log_alpha: np.ndarray
    kept: np.ndarray
    rmse_mean: float
    rmse_pruned: float
    closed_form: np.ndarray
    curve: list[SparseReport]

    @property
    def sparse_ratio(self) -> float:
        return float(self.kept.mean()) if self.kept.size else 0.0


def closed_form_coefficients(
    features: np.ndarray, targets: np.ndarray, alpha: np.ndarray
) -> tuple[np.ndarray, float]:
    """Ridge-like coefficients at frozen ``alpha``, with an unpenalised intercept."""
    n_rows = features.shape[0]
    design = np.hstack([features, np.ones((n_rows, 1))])
    gram = design.T @ design
    penalty = np.append(np.diag(gram)[:-1] * alpha, 0.0)
    solution = np.linalg.solve(gram + np.diag(penalty), design.T @ targets)
    return solution[:-1], float(solution[-1])


def _rmse(prediction: np.ndarray, targets: np.ndarray) -> float:
    return float(np.sqrt(np.mean((prediction - targets) ** 2)))


@UtilsMonitoring.time_spend(level="INFO")
def fit_sparse_regression(
    features: np.ndarray,
    targets: np.ndarray,
    config: SparseVDConfig | None = None,
    steps: int = 3000,
    lr: float = 2e-2,
    seed: int = 0,
    record_every: int = 100,
) -> SparseRegressionResult:
    """
    Fit a single variational affine layer by full-batch RAdam.

    The loss is the mean squared error plus ``kl_coefficient * KL / n``; the
    learning rate decays linearly to zero so the means settle.

    Parameters
    ----------
    features : numpy.ndarray
        Design matrix ``[n, d]``.
    targets : numpy.ndarray
        Responses ``[n]``.
    config : SparseVDConfig | None
        Threshold, initial log-variance and KL warm-up.
    steps : int
        Number of full-batch updates.
    record_every : int
        Sparse-ratio curve resolution, in steps.
    """
    config = config if config is not None else SparseVDConfig()
    if steps < 1:
        raise InvalidConfigError("steps", steps, "must be >= 1")
    features = np.asarray(features, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64).reshape(-1)
    n_rows, n_features = features.shape
    layer = VariationalAffineParams.init(
        n_features, 1, "regression", seed, config.init_log_sigma2, scale=0.01
    )
    optimizer = RAdam(layer.named_parameters(), RAdamHyper(lr=lr))
    rng = np.random.default_rng(seed)
    inputs = Value(features)
    column = targets.reshape(-1, 1)
    tracker = SparseCurveTracker({layer.name: layer}, config.threshold)
    for step in range(steps):
        optimizer.zero_grad()
        coefficient = config.kl_coefficient(step, steps)
        with ad.Tape() as tape:
            prediction = vd_forward_train(inputs, layer, rng)
            loss = ad.add(
                ad.mse(prediction, column),
                ad.scale(kl_term(layer), coefficient / n_rows),
            )
            tape.backward(loss)
        optimizer.step(lr=lr * (1.0 - step / steps))
        if (step + 1) % record_every == 0 or step + 1 == steps:
            tracker(step + 1)

    la = layer.log_alpha().reshape(-1)
    kept = la <= config.threshold
    rmse_mean = _rmse(vd_forward_mean(inputs, layer).data.reshape(-1), targets)
    rmse_pruned = _rmse(
        vd_forward_eval(inputs, layer, config.threshold).data.reshape(-1), targets
    )
    closed_form, _ = closed_form_coefficients(features, targets, np.exp(la))
    logger.info(
        "sparse regression | kept={kept}/{total} rmse={before:.4f} pruned rmse={after:.4f}",
        kept=int(kept.sum()),
        total=kept.size,
        before=rmse_mean,
        after=rmse_pruned,
    )
    return SparseRegressionResult(
        coefficients=layer.theta.data.reshape(-1).copy(),
        intercept=float(layer.bias.data[0]),
        log_alpha=la,
        kept=kept,
        rmse_mean=rmse_mean,
        rmse_pruned=rmse_pruned,
        closed_form=closed_form,
        curve=list(tracker.reports),
    )
