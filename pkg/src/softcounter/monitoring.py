# Graph Soft Counter - Soft and hard edge counting for knowledge-graph QA, with SparseVD dissection.
# Copyright (C) 2026 - softcounter contributors
# SPDX-License-Identifier: Apache-2.0
"""Timing helpers for the long-running entry points."""
import time
from functools import partial
from functools import wraps

from .logging_config import get_logger

logger = get_logger(__name__)


class UtilsMonitoring:  # noqa: R0205
    """Monitoring decorators."""

    @staticmethod
    def time_spend(func=None, level="DEBUG", threshold_in_ms=None):
        """Log the wall-clock duration of each call of ``func``.

        Usable bare (``@UtilsMonitoring.time_spend``) or with options.

        Parameters
        ----------
        func : callable | None
            Decorated function.
        level : str
            loguru level of the duration record (default: "DEBUG").
        threshold_in_ms : float | None
            Calls slower than this are logged at WARNING instead.

        Notes
        -----
        A call that raises is not logged; the exception propagates unchanged.
        """
        if func is None:
            return partial(
                UtilsMonitoring.time_spend, level=level, threshold_in_ms=threshold_in_ms
            )

        @wraps(func)
        def timed(*args, **kwargs):
            start = time.perf_counter()
            result = func(*args, **kwargs)
            elapsed_ms = 1000.0 * (time.perf_counter() - start)
            slow = threshold_in_ms is not None and elapsed_ms > threshold_in_ms
            logger.log(
                "WARNING" if slow else level,
                f"{func.__qualname__} finished in {elapsed_ms:.2f} ms",
            )
            return result

        return timed
