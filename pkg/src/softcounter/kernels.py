# Graph Soft Counter - Soft and hard edge counting for knowledge-graph QA, with SparseVD dissection.
# Copyright (C) 2026 - softcounter contributors
# SPDX-License-Identifier: Apache-2.0
"""
Jitted message-passing and counting kernels.

The kernels work on flat ``float64`` / ``int64`` arrays and loop in edge
order, so every accumulation happens in a fixed order and results are
bitwise reproducible. The public wrappers validate indices before entering
compiled code, where an out-of-range index would read arbitrary memory.

Functions
---------
gather_add
    ``out[e] = edge_vals[e] + node_vals[src[e]]``.
scatter_add
    ``out[v] = sum of edge_vals[e] over edges with dst[e] == v``.
gsc_layers
    All soft-counting layers fused in one pass, returning node values.
gsc_layer_trace
    Same computation keeping the edge and node values of every layer.
pair_counts
    Counts of ordered key pairs over directed length-2 paths.
"""
import numba
import numpy as np

from .exception import GraphIndexError


def check_index(operation: str, index: np.ndarray, size: int) -> None:
    """
    Raise when an index array points outside ``[0, size)``.

    Raises
    ------
    GraphIndexError
        With the first offending index.
    """
    if index.size == 0:
        return
    bad = (index < 0) | (index >= size)
    if bad.any():
        raise GraphIndexError(operation, int(index[np.argmax(bad)]), size)


@numba.jit(cache=True)
def _gather_add(edge_vals, node_vals, src):
    out = np.empty(edge_vals.shape[0], dtype=np.float64)
    for e in range(edge_vals.shape[0]):
        out[e] = edge_vals[e] + node_vals[src[e]]
    return out


@numba.jit(cache=True)
def _scatter_add(edge_vals, dst, node_count):
    out = np.zeros(node_count, dtype=np.float64)
    for e in range(edge_vals.shape[0]):
        out[dst[e]] += edge_vals[e]
    return out


@numba.jit(cache=True)
def _gsc_layers(edge_vals, src, dst, node_count, num_layers, accumulate):
    """
    Run ``num_layers`` soft-counting layers on a copy of the edge values.

    Per layer, every edge adds the current value of its source node to its
    state (``accumulate``) or to its encoder value, then the node values are
    replaced by the sum of their incoming edge values.
    """
    edges = edge_vals.copy()
    nodes = np.zeros(node_count, dtype=np.float64)
    for _ in range(num_layers):
        for e in range(edges.shape[0]):
            if accumulate:
                edges[e] += nodes[src[e]]
            else:
                edges[e] = edge_vals[e] + nodes[src[e]]
        nodes[:] = 0.0
        for e in range(edges.shape[0]):
            nodes[dst[e]] += edges[e]
    return nodes


@numba.jit(cache=True)
def _gsc_layer_trace(edge_vals, src, dst, node_count, num_layers, accumulate):
    edges = edge_vals.copy()
    nodes = np.zeros(node_count, dtype=np.float64)
    edge_trace = np.empty((num_layers, edges.shape[0]), dtype=np.float64)
    node_trace = np.empty((num_layers, node_count), dtype=np.float64)
    for layer in range(num_layers):
        for e in range(edges.shape[0]):
            if accumulate:
                edges[e] += nodes[src[e]]
            else:
                edges[e] = edge_vals[e] + nodes[src[e]]
        nodes[:] = 0.0
        for e in range(edges.shape[0]):
            nodes[dst[e]] += edges[e]
        edge_trace[layer, :] = edges
        node_trace[layer, :] = nodes
    return edge_trace, node_trace


@numba.jit(cache=True)
def _pair_counts(src, dst, keys, node_count, key_count, context_only):
    """
    Count ``(keys[first], keys[second])`` over edge pairs with ``dst[first] == src[second]``.

    Outgoing edges are grouped per source node with a counting sort, so the
    cost is linear in the number of length-2 paths.
    """
    n_edges = src.shape[0]
    offsets = np.zeros(node_count + 1, dtype=np.int64)
    for e in range(n_edges):
        offsets[src[e] + 1] += 1
    for v in range(node_count):
        offsets[v + 1] += offsets[v]
    cursor = offsets[:-1].copy()
    outgoing = np.empty(n_edges, dtype=np.int64)
    for e in range(n_edges):
        outgoing[cursor[src[e]]] = e
        cursor[src[e]] += 1
    counts = np.zeros(key_count * key_count, dtype=np.float64)
    for first in range(n_edges):
        middle = dst[first]
        for position in range(offsets[middle], offsets[middle + 1]):
            second = outgoing[position]
            if context_only and dst[second] != 0:
                continue
            counts[keys[first] * key_count + keys[second]] += 1.0
    return counts


def _as_index(values) -> np.ndarray:
    return np.ascontiguousarray(values, dtype=np.int64)


def _as_real(values) -> np.ndarray:
    return np.ascontiguousarray(values, dtype=np.float64)


def gather_add(edge_vals, node_vals, src) -> np.ndarray:
    """Return ``edge_vals[e] + node_vals[src[e]]`` for every edge."""
    edge_vals, node_vals, src = _as_real(edge_vals), _as_real(node_vals), _as_index(src)
    check_index("gather_add", src, node_vals.shape[0])
    return _gather_add(edge_vals, node_vals, src)


def scatter_add(edge_vals, dst, node_count: int) -> np.ndarray:
    """Sum edge values into their destination nodes; nodes without incoming edge get 0."""
    edge_vals, dst = _as_real(edge_vals), _as_index(dst)
    check_index("scatter_add", dst, node_count)
    return _scatter_add(edge_vals, dst, node_count)


def gsc_layers(
    edge_vals, src, dst, node_count: int, num_layers: int, accumulate: bool = True
) -> np.ndarray:
    """Return the node values after ``num_layers`` fused soft-counting layers."""
    edge_vals, src, dst = _as_real(edge_vals), _as_index(src), _as_index(dst)
    check_index("gsc_layers.src", src, node_count)
    check_index("gsc_layers.dst", dst, node_count)
    return gsc_layers_prepared(edge_vals, src, dst, node_count, num_layers, accumulate)


def gsc_layers_prepared(
    edge_vals, src, dst, node_count: int, num_layers: int, accumulate: bool = True
) -> np.ndarray:
    """Fused layers on contiguous ``float64``/``int64`` arrays with in-range indices."""
    return _gsc_layers(edge_vals, src, dst, node_count, num_layers, accumulate)


def gsc_layer_trace(
    edge_vals, src, dst, node_count: int, num_layers: int, accumulate: bool = True
) -> tuple[np.ndarray, np.ndarray]:
    """Return edge values ``[L, E]`` and node values ``[L, V]`` after every layer."""
    edge_vals, src, dst = _as_real(edge_vals), _as_index(src), _as_index(dst)
    check_index("gsc_layer_trace.src", src, node_count)
    check_index("gsc_layer_trace.dst", dst, node_count)
    return _gsc_layer_trace(edge_vals, src, dst, node_count, num_layers, accumulate)


def pair_counts(
    src, dst, keys, node_count: int, key_count: int, context_only: bool = False
) -> np.ndarray:
    """
    Count ordered key pairs over directed length-2 paths.

    Parameters
    ----------
    src, dst : array-like of int
        Edge endpoints.
    keys : array-like of int
        Key of every edge in ``[0, key_count)`` (relation or triplet id).
    node_count : int
        Number of nodes.
    key_count : int
        Number of distinct keys ``K``.
    context_only : bool
        Count only paths whose second edge ends at node 0.

    Returns
    -------
    numpy.ndarray
        Flat counts of size ``K * K``; pair ``(k1, k2)`` sits at ``k1 * K + k2``.
    """
    src, dst, keys = _as_index(src), _as_index(dst), _as_index(keys)
    check_index("pair_counts.src", src, node_count)
    check_index("pair_counts.dst", dst, node_count)
    check_index("pair_counts.keys", keys, key_count)
    if src.size == 0:
        return np.zeros(key_count * key_count, dtype=np.float64)
    return _pair_counts(src, dst, keys, node_count, key_count, context_only)
