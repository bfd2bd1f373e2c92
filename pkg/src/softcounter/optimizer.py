# Graph Soft Counter - Soft and hard edge counting for knowledge-graph QA, with SparseVD dissection.
# Copyright (C) 2026 - softcounter contributors
# SPDX-License-Identifier: Apache-2.0
"""
Rectified Adam.

Adam with a correction of the adaptive learning rate while its variance
estimate is unreliable. With ``rho_inf = 2 / (1 - beta2) - 1`` and
``rho_t = rho_inf - 2 t beta2^t / (1 - beta2^t)``, step ``t`` applies

- ``lr * r_t * m_hat / (sqrt(v_hat) + eps)`` when ``rho_t >= 5``, with
  ``r_t = sqrt((rho_t - 4)(rho_t - 2) rho_inf / ((rho_inf - 4)(rho_inf - 2) rho_t))``;
- ``lr * m_hat`` otherwise (un-adapted momentum).
"""
import math
from collections.abc import Mapping
from dataclasses import dataclass
from dataclasses import field

import numpy as np

from .autodiff import Value
from .exception import InvalidConfigError
from .exception import TrainingError

SMA_THRESHOLD = 5.0


@dataclass(frozen=True)
class RAdamHyper:
    lr: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.lr <= 0:
            raise InvalidConfigError("lr", self.lr, "must be > 0")
        for name in ("beta1", "beta2"):
            value = getattr(self, name)
            if not 0.0 <= value < 1.0:
                raise InvalidConfigError(name, value, "must lie in [0, 1)")
        if self.eps <= 0:
            raise InvalidConfigError("eps", self.eps, "must be > 0")


@dataclass
class RAdamState:
    """First and second moments per parameter name, and the last step index."""

    step: int = 0
    first_moment: dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: dict[str, np.ndarray] = field(default_factory=dict)
    last_rectified: bool = False


def sma_length(step: int, beta2: float) -> float:
    """Length ``rho_t`` of the approximated simple moving average at step ``t >= 1``."""
    rho_inf = 2.0 / (1.0 - beta2) - 1.0
    power = beta2**step
    return rho_inf - 2.0 * step * power / (1.0 - power)


def rectification(step: int, beta2: float) -> float | None:
    """Variance rectification ``r_t``, or ``None`` when the momentum fallback applies."""
    rho_inf = 2.0 / (1.0 - beta2) - 1.0
    rho = sma_length(step, beta2)
    if rho < SMA_THRESHOLD:
        return None
    return math.sqrt(
        (rho - 4.0) * (rho - 2.0) * rho_inf / ((rho_inf - 4.0) * (rho_inf - 2.0) * rho)
    )


def radam_step(
    params: Mapping[str, Value],
    grads: Mapping[str, np.ndarray],
    state: RAdamState,
    hyper: RAdamHyper,
    step_index: int | None = None,
    lr: float | None = None,
) -> RAdamState:
    """
    Apply one update in place and return the updated state.

    Parameters
    ----------
    params : Mapping[str, Value]
        Parameters by name.
    grads : Mapping[str, numpy.ndarray]
        Gradient of every parameter.
    state : RAdamState
        Moments, zero-initialised at step 0.
    hyper : RAdamHyper
        Learning rate and moment decays.
    step_index : int | None
        1-based step; defaults to ``state.step + 1``.
    lr : float | None
        Learning rate overriding ``hyper.lr`` (schedules).

    Raises
    ------
    TrainingError
        Naming the first parameter whose gradient is not finite.
    """
    for name in params:
        if not np.all(np.isfinite(grads[name])):
            raise TrainingError(name, "non-finite gradient")
    step = state.step + 1 if step_index is None else step_index
    lr = hyper.lr if lr is None else lr
    bias1 = 1.0 - hyper.beta1**step
    bias2 = 1.0 - hyper.beta2**step
    rect = rectification(step, hyper.beta2)
    for name, param in params.items():
        grad = grads[name]
        first = state.first_moment.get(name)
        second = state.second_moment.get(name)
        if first is None:
            first = np.zeros_like(param.data)
            second = np.zeros_like(param.data)
        first = hyper.beta1 * first + (1.0 - hyper.beta1) * grad
        second = hyper.beta2 * second + (1.0 - hyper.beta2) * grad * grad
        state.first_moment[name] = first
        state.second_moment[name] = second
        m_hat = first / bias1
        if rect is None:
            param.data -= lr * m_hat
        else:
            v_hat = np.sqrt(second / bias2)
            param.data -= lr * rect * m_hat / (v_hat + hyper.eps)
    state.step = step
    state.last_rectified = rect is not None
    return state


class RAdam:
    """Stateful wrapper applying :func:`radam_step` to a fixed parameter set."""

    def __init__(self, params: Mapping[str, Value], hyper: RAdamHyper | None = None):
        self.params = dict(params)
        self.hyper = hyper if hyper is not None else RAdamHyper()
        self.state = RAdamState()

    def zero_grad(self) -> None:
        for param in self.params.values():
            param.zero_grad()

    def step(self, lr: float | None = None) -> None:
        grads = {name: param.grad for name, param in self.params.items()}
        radam_step(self.params, grads, self.state, self.hyper, lr=lr)
