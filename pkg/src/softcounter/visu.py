# Graph Soft Counter - Soft and hard edge counting for knowledge-graph QA, with SparseVD dissection.
# Copyright (C) 2026 - softcounter contributors
# SPDX-License-Identifier: Apache-2.0
"""
Matplotlib figures: sparse-ratio curves of a SparseVD run and per-layer node
values of a GSC trace.
"""
from collections import defaultdict
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

from .exception import ContractError
from .gsc import LayerSnapshot
from .schema_graph import SchemaGraph
from .sparsevd import SparseReport
from .vocabulary import NODE_ROLE_NAMES

TRACE_MODES = ("bars", "lines")


class TrainingVisualizer:
    """Drawing helpers working on a caller-provided Matplotlib axis."""

    @staticmethod
    def draw_sparse_curves(
        ax: plt.Axes,
        title: str,
        reports: list[SparseReport],
        linewidth: float = 2,
    ):
        """
        Draw one sparse-ratio curve per layer.

        Parameters
        ----------
        ax : matplotlib.axes.Axes
            The Matplotlib axis to draw on.
        title : str
            Title for the plot.
        reports : list[SparseReport]
            Rows of a curve, in any order.
        linewidth : float, optional
            Width of the curves (default: 2).
        """
        curves: dict[str, list[tuple[int, float]]] = defaultdict(list)
        for report in reports:
            curves[report.layer].append((report.epoch, report.sparse_ratio))
        ax.set_title(title)
        for layer in sorted(curves):
            epochs, ratios = zip(*sorted(curves[layer]))
            ax.plot(epochs, ratios, label=layer, linewidth=linewidth)
        ax.set_xlabel("epoch")
        ax.set_ylabel("sparse ratio")
        ax.set_ylim(-0.02, 1.02)
        ax.grid(True, linestyle="--", alpha=0.5)
        if curves:
            ax.legend()

    @staticmethod
    def draw_layer_trace(
        ax: plt.Axes,
        title: str,
        graph: SchemaGraph,
        snapshots: list[LayerSnapshot],
        mode: str = "bars",
    ):
        """
        Draw the node values after every layer.

        Parameters
        ----------
        ax : matplotlib.axes.Axes
            The Matplotlib axis to draw on.
        title : str
            Title for the plot.
        graph : SchemaGraph
            Traced graph, used for the node labels.
        snapshots : list[LayerSnapshot]
            Output of :func:`softcounter.gsc.trace_layers`.
        mode : str, optional
            ``bars`` (grouped per node) or ``lines`` (default: "bars").

        Raises
        ------
        ContractError
            For an unknown mode.
        """
        if mode not in TRACE_MODES:
            raise ContractError("draw_layer_trace", f"unknown mode '{mode}'")
        ax.set_title(title)
        positions = np.arange(graph.num_nodes)
        width = 0.8 / max(len(snapshots), 1)
        for rank, snapshot in enumerate(snapshots):
            label = f"layer {snapshot.layer}"
            if mode == "lines":
                ax.plot(positions, snapshot.node_values, marker="o", label=label)
            else:
                ax.bar(
                    positions + rank * width,
                    snapshot.node_values,
                    width,
                    label=label,
                )
        labels = [
            f"{node}:{NODE_ROLE_NAMES[kind] if kind < len(NODE_ROLE_NAMES) else kind}"
            for node, kind in enumerate(graph.node_types)
        ]
        ax.set_xticks(positions + (0 if mode == "lines" else 0.4 - width / 2))
        ax.set_xticklabels(labels, rotation=90, fontsize=7)
        ax.set_ylabel("node value")
        if snapshots:
            ax.legend()


def plot_sparse_curves(
    reports: list[SparseReport], path: str | Path, title: str = "SparseVD sparse ratio"
) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    TrainingVisualizer.draw_sparse_curves(ax, title, reports)
    fig.tight_layout()
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_layer_trace(
    graph: SchemaGraph,
    snapshots: list[LayerSnapshot],
    path: str | Path,
    title: str = "GSC node values per layer",
    mode: str = "bars",
) -> None:
    fig, ax = plt.subplots(figsize=(max(6, 0.35 * graph.num_nodes), 4))
    TrainingVisualizer.draw_layer_trace(ax, title, graph, snapshots, mode)
    fig.tight_layout()
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)
