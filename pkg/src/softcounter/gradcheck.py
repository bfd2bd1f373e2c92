# Graph Soft Counter - Soft and hard edge counting for knowledge-graph QA, with SparseVD dissection.
# Copyright (C) 2026 - softcounter contributors
# SPDX-License-Identifier: Apache-2.0
"""Finite-difference verification of reverse-mode gradients."""
from collections.abc import Callable
from collections.abc import Sequence

import numpy as np

from .autodiff import Tape
from .autodiff import Value
from .exception import ContractError
from .logging_config import get_logger

logger = get_logger(__name__)

ABSOLUTE_FLOOR = 1e-8


def grad_check(
    function: Callable[[], Value],
    params: Sequence[Value],
    step: float = 1e-5,
    mode: str = "full",
    samples: int = 32,
    seed: int = 0,
) -> float:
    """
    Compare backward-pass gradients with central differences.

    ``function`` is re-evaluated with each coordinate of ``params`` moved by
    ``+step`` and ``-step``; the estimate ``(f(x+h) - f(x-h)) / 2h`` is
    compared with the analytic gradient.

    Parameters
    ----------
    function : Callable[[], Value]
        Deterministic scalar function of the current parameter values.
    params : Sequence[Value]
        Parameters to perturb; their ``grad`` is overwritten.
    step : float
        Finite-difference step ``h``.
    mode : str
        ``"full"`` checks every coordinate, ``"sample"`` checks ``samples``
        coordinates drawn per parameter with ``seed``.

    Returns
    -------
    float
        Worst relative error ``|a - n| / max(|a|, |n|, 1e-8)``.

    Raises
    ------
    ContractError
        For a non-positive step or an unknown mode.
    """
    if step <= 0:
        raise ContractError("grad_check", f"step must be > 0, got {step}")
    if mode not in ("full", "sample"):
        raise ContractError("grad_check", f"unknown mode '{mode}'")
    for param in params:
        param.zero_grad()
    with Tape() as tape:
        loss = function()
        tape.backward(loss)
    analytic = [param.grad.copy() for param in params]

    rng = np.random.default_rng(seed)
    worst = 0.0
    for param, gradient in zip(params, analytic):
        flat = param.data.reshape(-1)
        coordinates = np.arange(flat.size)
        if mode == "sample" and flat.size > samples:
            coordinates = np.sort(rng.choice(flat.size, size=samples, replace=False))
        for coordinate in coordinates:
            original = flat[coordinate]
            flat[coordinate] = original + step
            upper = function().item()
            flat[coordinate] = original - step
            lower = function().item()
            flat[coordinate] = original
            numeric = (upper - lower) / (2.0 * step)
            exact = gradient.reshape(-1)[coordinate]
            error = abs(exact - numeric) / max(abs(exact), abs(numeric), ABSOLUTE_FLOOR)
            worst = max(worst, error)
    logger.debug("gradient check | worst relative error={err:.3e}", err=worst)
    return worst
