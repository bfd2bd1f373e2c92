# Graph Soft Counter - Soft and hard edge counting for knowledge-graph QA, with SparseVD dissection.
# Copyright (C) 2026 - softcounter contributors
# SPDX-License-Identifier: Apache-2.0
"""
Post-hoc analyses: prediction overlap between two models, and the run-time
scaling of the soft-counting layers.
"""
import itertools
import time
from collections import Counter
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from . import kernels
from .exception import AlignmentError
from .exception import InvalidConfigError
from .gsc import gsc_forward
from .instance_io import Prediction
from .logging_config import get_logger
from .logging_config import log_stat
from .monitoring import UtilsMonitoring
from .schema_graph import SchemaGraph
from .vocabulary import NODE_CONTEXT
from .vocabulary import NODE_OTHER

logger = get_logger(__name__)

REGION_KEYS = tuple(itertools.product((True, False), repeat=3))


def region_name(key: tuple[bool, bool, bool]) -> str:
    """``a_correct``, ``b_correct``, ``agree`` flags rendered as ``a1_b0_agree1``."""
    a_correct, b_correct, agree = key
    return f"a{int(a_correct)}_b{int(b_correct)}_agree{int(agree)}"


@dataclass(frozen=True)
class OverlapReport:
    """
    Three-set partition of the instances.

    The sets are: instances model A answers correctly, instances model B
    answers correctly, and instances on which A and B agree.
    """

    total: int
    regions: dict[tuple[bool, bool, bool], int]
    agreement: float
    correct_overlap: float
    accuracy_a: float
    accuracy_b: float

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "regions": {region_name(key): self.regions[key] for key in REGION_KEYS},
            "agreement": self.agreement,
            "correct_overlap": self.correct_overlap,
            "accuracy_a": self.accuracy_a,
            "accuracy_b": self.accuracy_b,
        }


def _by_id(predictions) -> dict[str, int]:
    by_id = {prediction.id: prediction.pred for prediction in predictions}
    if len(by_id) != len(predictions):
        counts = Counter(prediction.id for prediction in predictions)
        raise AlignmentError(sorted(key for key, n in counts.items() if n > 1))
    return by_id


def overlap_report(
    pred_a: list[Prediction], pred_b: list[Prediction], gold: Mapping[str, int]
) -> OverlapReport:
    """
    Compare two prediction files against the gold labels.

    Percentages are in ``[0, 100]``. ``correct_overlap`` is the share of
    instances both models answer correctly among those at least one answers
    correctly.

    Raises
    ------
    AlignmentError
        If the three sources do not cover the same instance ids, or a
        prediction list repeats an id.
    """
    a, b = _by_id(pred_a), _by_id(pred_b)
    ids = set(gold)
    missing = sorted((ids ^ set(a)) | (ids ^ set(b)))
    if missing:
        raise AlignmentError(missing)
    regions = dict.fromkeys(REGION_KEYS, 0)
    for instance_id in sorted(ids):
        key = (
            a[instance_id] == gold[instance_id],
            b[instance_id] == gold[instance_id],
            a[instance_id] == b[instance_id],
        )
        regions[key] += 1
    total = len(ids)
    agree = sum(count for key, count in regions.items() if key[2])
    correct_a = sum(count for key, count in regions.items() if key[0])
    correct_b = sum(count for key, count in regions.items() if key[1])
    both = sum(count for key, count in regions.items() if key[0] and key[1])
    either = correct_a + correct_b - both

    def percent(count: int, size: int) -> float:
        return 100.0 * count / size if size else 0.0

    report = OverlapReport(
        total=total,
        regions=regions,
        agreement=percent(agree, total),
        correct_overlap=percent(both, either),
        accuracy_a=correct_a / total if total else 0.0,
        accuracy_b=correct_b / total if total else 0.0,
    )
    logger.info(
        "overlap on {n} instance(s) | agreement={agree:.1f}% correct overlap={overlap:.1f}%",
        n=total,
        agree=report.agreement,
        overlap=report.correct_overlap,
    )
    return report


# ----------------------------------------------------------------------
# Scaling benchmark
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class BenchRow:
    edges: int
    nodes: int
    seconds: float


@dataclass(frozen=True)
class BenchReport:
    """Best-of-``repetitions`` timings with the log-log fit over non-empty sizes."""

    rows: list[BenchRow]
    slope: float
    r_squared: float

    def doubling_ratios(self) -> list[float]:
        """Time ratio between consecutive sizes whose edge count doubles."""
        return [
            later.seconds / earlier.seconds
            for earlier, later in zip(self.rows, self.rows[1:])
            if earlier.edges > 0 and later.edges == 2 * earlier.edges
        ]

    def to_dict(self) -> dict:
        return {
            "rows": [
                {"edges": row.edges, "nodes": row.nodes, "seconds": row.seconds}
                for row in self.rows
            ],
            "slope": self.slope,
            "r_squared": self.r_squared,
        }


def random_graph(edge_count: int, rng: np.random.Generator, edges_per_node: int = 4):
    """Uniform random graph with ``edge_count / edges_per_node`` nodes."""
    nodes = max(edge_count // edges_per_node, 1)
    node_types = np.full(nodes, NODE_OTHER, dtype=np.int64)
    node_types[0] = NODE_CONTEXT
    return SchemaGraph(
        node_types,
        rng.integers(0, nodes, edge_count),
        rng.integers(0, nodes, edge_count),
        rng.integers(0, 17, edge_count),
    )


def loglog_fit(sizes, seconds) -> tuple[float, float]:
    """Slope and coefficient of determination of ``log(seconds)`` against ``log(sizes)``."""
    x = np.log(np.asarray(sizes, dtype=np.float64))
    y = np.log(np.asarray(seconds, dtype=np.float64))
    if x.size < 2:
        return float("nan"), float("nan")
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    spread = ((y - y.mean()) ** 2).sum()
    r_squared = 1.0 - (residual**2).sum() / spread if spread > 0 else 1.0
    return float(slope), float(r_squared)


@UtilsMonitoring.time_spend(level="INFO")
def bench_scaling(
    edge_counts,
    repetitions: int = 5,
    num_layers: int = 2,
    seed: int = 0,
) -> BenchReport:
    """
    Time the fused soft-counting layers on random graphs of growing size.

    Each size is run once through :func:`gsc_forward` (compiling the kernel
    and checking the graph), then timed ``repetitions`` times on the kernel
    alone; the best time is kept.

    Raises
    ------
    InvalidConfigError
        If the edge counts are not strictly increasing or repetitions < 1.
    """
    edge_counts = [int(count) for count in edge_counts]
    if any(later <= earlier for earlier, later in zip(edge_counts, edge_counts[1:])):
        raise InvalidConfigError(
            "edge_counts", edge_counts, "must be strictly increasing"
        )
    if edge_counts and edge_counts[0] < 0:
        raise InvalidConfigError("edge_counts", edge_counts, "must be >= 0")
    if repetitions < 1:
        raise InvalidConfigError("repetitions", repetitions, "must be >= 1")
    rng = np.random.default_rng(seed)
    rows = []
    for edge_count in edge_counts:
        graph = random_graph(edge_count, rng)
        values = rng.random(edge_count)
        gsc_forward(graph, values, num_layers)
        src = np.ascontiguousarray(graph.src)
        dst = np.ascontiguousarray(graph.dst)
        best = float("inf")
        for _ in range(repetitions):
            start = time.perf_counter()
            kernels.gsc_layers_prepared(values, src, dst, graph.num_nodes, num_layers)
            best = min(best, time.perf_counter() - start)
        rows.append(BenchRow(edges=edge_count, nodes=graph.num_nodes, seconds=best))
        log_stat("bench", edges=edge_count, nodes=graph.num_nodes, seconds=best)
        logger.debug("bench | edges={e} seconds={s:.6f}", e=edge_count, s=best)
    fitted = [row for row in rows if row.edges > 0 and row.seconds > 0]
    slope, r_squared = loglog_fit(
        [row.edges for row in fitted], [row.seconds for row in fitted]
    )
    logger.info("scaling slope={slope:.3f} r2={r2:.4f}", slope=slope, r2=r_squared)
    return BenchReport(rows=rows, slope=slope, r_squared=r_squared)


def default_edge_counts(low: int = 1000, high: int = 1_000_000) -> list[int]:
    """
    Doubling grid from ``low`` until it covers ``high``.

    The last count is the first one >= ``high``.

    Raises
    ------
    InvalidConfigError
        If ``low`` is lower than 1.
    """
    if low < 1:
        raise InvalidConfigError("min_edges", low, "must be >= 1")
    counts = [low]
    while counts[-1] < high:
        counts.append(2 * counts[-1])
    return counts
