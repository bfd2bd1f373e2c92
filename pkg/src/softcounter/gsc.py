# Graph Soft Counter - Soft and hard edge counting for knowledge-graph QA, with SparseVD dissection.
# Copyright (C) 2026 - softcounter contributors
# SPDX-License-Identifier: Apache-2.0
"""
The Graph Soft Counter.

A two-layer MLP maps the one-hot triplet ``[u_s, e_st, u_t]`` of every edge to
a soft count in ``(0, 1)``. Parameter-free layers then propagate these values
towards the context node: per layer, each edge adds the value of its source
node, and each node takes the sum of its incoming edges. The value of node 0
after ``L`` layers is the graph score, added to a context score to score an
answer choice.

Edge state
----------
``accumulate`` keeps the edge values across layers (``e <- e + h[src]``);
``reset`` restarts each layer from the encoder value (``e <- c + h[src]``).
Both coincide for ``L <= 2``. With ``reset`` the score is the plain sum, over
directed paths of length ``k <= L`` ending at node 0, of the soft count of
the path's farthest edge; with ``accumulate`` a path of length ``k`` is
counted ``comb(L - 1, k - 1)`` times.

Classes
-------
GSCConfig
    Layers, preprocessing and context-score provider.
GSCParams
    Edge-encoder weights, the only learnable parameters.
GraphUnion
    Disjoint union of several graphs for batched scoring.
"""
import csv
import json
import math
from dataclasses import dataclass
from dataclasses import field
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import autodiff as ad
from . import kernels
from .autodiff import Value
from .exception import ContractError
from .exception import EncodingError
from .exception import InvalidConfigError
from .exception import MissingScoreError
from .logging_config import get_logger
from .schema_graph import QAInstance
from .schema_graph import SchemaGraph
from .schema_graph import restrict_to_qa_nodes
from .schema_graph import symmetrize
from .schema_graph import truncate_nodes
from .vocabulary import TripletVocabulary
from .vocabulary import encode_triplets

logger = get_logger(__name__)

EDGE_STATES = ("accumulate", "reset")
CONTEXT_PROVIDERS = ("zero", "constant", "from_file")


@dataclass(frozen=True)
class GSCConfig:
    """
    Configuration of the Graph Soft Counter.

    Attributes
    ----------
    num_layers : int
        Number of soft-counting layers ``L`` (default 2).
    max_nodes : int | None
        Node cap applied with :func:`truncate_nodes`.
    vocab : TripletVocabulary
        Triplet layout of the encoder input.
    context_provider : str
        ``zero``, ``constant`` (``context_constant``) or ``from_file``.
    hidden_dim : int
        Hidden width of the edge encoder.
    activation : str
        Hidden nonlinearity of the edge encoder.
    qa_nodes_only : bool
        Keep only the context node and question/answer entities.
    symmetrize : bool
        Add the missing reversed edges before scoring.
    edge_state : str
        ``accumulate`` or ``reset``, see the module documentation.
    """

    num_layers: int = 2
    max_nodes: int | None = None
    vocab: TripletVocabulary = field(default_factory=TripletVocabulary)
    context_provider: str = "zero"
    context_constant: float = 0.0
    hidden_dim: int = 32
    activation: str = "relu"
    qa_nodes_only: bool = False
    symmetrize: bool = True
    edge_state: str = "accumulate"

    def __post_init__(self):
        if self.num_layers < 1:
            raise InvalidConfigError("num_layers", self.num_layers, "must be >= 1")
        if self.max_nodes is not None and self.max_nodes < 1:
            raise InvalidConfigError("max_nodes", self.max_nodes, "must be >= 1")
        if self.context_provider not in CONTEXT_PROVIDERS:
            raise InvalidConfigError(
                "context_provider", self.context_provider, f"expected one of {CONTEXT_PROVIDERS}"
            )
        if self.hidden_dim < 1:
            raise InvalidConfigError("hidden_dim", self.hidden_dim, "must be >= 1")
        if self.activation not in ad.ACTIVATIONS:
            raise InvalidConfigError(
                "activation", self.activation, f"expected one of {sorted(ad.ACTIVATIONS)}"
            )
        if self.edge_state not in EDGE_STATES:
            raise InvalidConfigError(
                "edge_state", self.edge_state, f"expected one of {EDGE_STATES}"
            )

    @property
    def accumulate(self) -> bool:
        return self.edge_state == "accumulate"

    def to_dict(self) -> dict:
        return {
            "num_layers": self.num_layers,
            "max_nodes": self.max_nodes,
            "context_provider": self.context_provider,
            "context_constant": self.context_constant,
            "hidden_dim": self.hidden_dim,
            "activation": self.activation,
            "qa_nodes_only": self.qa_nodes_only,
            "symmetrize": self.symmetrize,
            "edge_state": self.edge_state,
        }


@dataclass
class GSCParams:
    """Edge-encoder weights: ``w1 [dim, hidden]``, ``b1 [hidden]``, ``w2 [hidden, 1]``, ``b2 [1]``."""

    w1: Value
    b1: Value
    w2: Value
    b2: Value

    def __post_init__(self):
        logger.debug(
            "edge encoder {dim}x{hidden}x1 | learnable parameters={n}",
            dim=self.w1.shape[0],
            hidden=self.w1.shape[1],
            n=self.parameter_count,
        )

    @classmethod
    def init(
        cls, vocab: TripletVocabulary, hidden_dim: int = 32, seed: int = 0
    ) -> "GSCParams":
        """Glorot-uniform weights and zero biases."""
        rng = np.random.default_rng(seed)
        dim = vocab.onehot_dim
        limit1 = math.sqrt(6.0 / (dim + hidden_dim))
        limit2 = math.sqrt(6.0 / (hidden_dim + 1))
        return cls(
            w1=Value(rng.uniform(-limit1, limit1, (dim, hidden_dim)), "encoder.w1"),
            b1=Value(np.zeros(hidden_dim), "encoder.b1"),
            w2=Value(rng.uniform(-limit2, limit2, (hidden_dim, 1)), "encoder.w2"),
            b2=Value(np.zeros(1), "encoder.b2"),
        )

    @classmethod
    def zeros(cls, vocab: TripletVocabulary, hidden_dim: int = 32) -> "GSCParams":
        dim = vocab.onehot_dim
        return cls(
            w1=Value(np.zeros((dim, hidden_dim)), "encoder.w1"),
            b1=Value(np.zeros(hidden_dim), "encoder.b1"),
            w2=Value(np.zeros((hidden_dim, 1)), "encoder.w2"),
            b2=Value(np.zeros(1), "encoder.b2"),
        )

    def named_parameters(self) -> dict[str, Value]:
        return {
            "encoder.w1": self.w1,
            "encoder.b1": self.b1,
            "encoder.w2": self.w2,
            "encoder.b2": self.b2,
        }

    @property
    def parameter_count(self) -> int:
        return sum(value.data.size for value in self.named_parameters().values())


# ----------------------------------------------------------------------
# Edge encoder
# ----------------------------------------------------------------------
@lru_cache(maxsize=8)
def triplet_onehots(vocab: TripletVocabulary) -> np.ndarray:
    """One-hot rows of every triplet type, in triplet-id order (read-only)."""
    matrix = encode_triplets(*vocab.all_triplets(), vocab)
    matrix.setflags(write=False)
    return matrix


def encoder_values(
    onehots: Value, params: GSCParams, activation: str = "relu"
) -> Value:
    """Soft count ``sigmoid(MLP(x))`` of every row of ``onehots``, shape ``[n]``."""
    hidden = ad.activation(ad.affine(params.w1, params.b1, onehots), activation)
    logits = ad.affine(params.w2, params.b2, hidden)
    return ad.reshape(ad.sigmoid(logits), (onehots.shape[0],))


def triplet_table(
    params: GSCParams, vocab: TripletVocabulary, activation: str = "relu"
) -> Value:
    """Soft count of every triplet type, shape ``[triplet_count]``."""
    return encoder_values(Value(triplet_onehots(vocab)), params, activation)


def checked_triplet_ids(graph: SchemaGraph, vocab: TripletVocabulary) -> np.ndarray:
    """
    Return the triplet ids of the graph edges.

    Raises
    ------
    EncodingError
        If a node type or a relation does not fit the vocabulary.
    """
    types = graph.node_types
    if types.size and (types.min() < 0 or types.max() >= vocab.node_type_count):
        bad = types[(types < 0) | (types >= vocab.node_type_count)][0]
        raise EncodingError("node_type", int(bad), vocab.node_type_count)
    rel = graph.rel
    if rel.size and (rel.min() < 0 or rel.max() >= vocab.relation_count):
        bad = rel[(rel < 0) | (rel >= vocab.relation_count)][0]
        raise EncodingError("rel", int(bad), vocab.relation_count)
    return graph.triplet_ids(vocab)


def edge_encoder_forward(
    graph: SchemaGraph,
    params: GSCParams,
    vocab: TripletVocabulary,
    activation: str = "relu",
) -> np.ndarray:
    """
    Soft count of every edge of ``graph``, each in ``(0, 1)``.

    Edges sharing a triplet type get identical values.
    """
    ids = checked_triplet_ids(graph, vocab)
    return triplet_table(params, vocab, activation).data[ids]


# ----------------------------------------------------------------------
# Soft counting layers
# ----------------------------------------------------------------------
def _check_edge_values(graph: SchemaGraph, size: int) -> None:
    if size != graph.num_edges:
        raise ContractError(
            "gsc_forward",
            f"{size} edge value(s) for a graph with {graph.num_edges} edge(s)",
        )


def _check_layers(num_layers: int, edge_state: str) -> None:
    if num_layers < 1:
        raise ContractError("gsc_forward", f"num_layers must be >= 1, got {num_layers}")
    if edge_state not in EDGE_STATES:
        raise ContractError("gsc_forward", f"unknown edge state '{edge_state}'")


def propagate(
    edge_values: Value,
    src: np.ndarray,
    dst: np.ndarray,
    node_count: int,
    num_layers: int,
    accumulate: bool = True,
) -> Value:
    """Differentiable soft-counting layers; returns the node values ``[V]``."""
    nodes = Value(np.zeros(node_count))
    edges = edge_values
    for _ in range(num_layers):
        edges = ad.gather_add(edges if accumulate else edge_values, nodes, src)
        nodes = ad.scatter_add(edges, dst, node_count)
    return nodes


def gsc_forward(
    graph: SchemaGraph,
    edge_values,
    num_layers: int = 2,
    edge_state: str = "accumulate",
):
    """
    Graph score: value of node 0 after ``num_layers`` soft-counting layers.

    Parameters
    ----------
    graph : SchemaGraph
        Valid graph; node values start at zero.
    edge_values : numpy.ndarray | Value
        Soft count of every edge. A :class:`Value` gives a differentiable
        scalar Value, an array gives a float computed by the fused kernel.
    num_layers : int
        Number of layers ``L``.
    edge_state : str
        ``accumulate`` or ``reset``.

    Raises
    ------
    ContractError
        If the number of edge values differs from the edge count.
    """
    _check_layers(num_layers, edge_state)
    accumulate = edge_state == "accumulate"
    if isinstance(edge_values, Value):
        _check_edge_values(graph, edge_values.shape[0] if edge_values.data.ndim else -1)
        nodes = propagate(
            edge_values, graph.src, graph.dst, graph.num_nodes, num_layers, accumulate
        )
        return ad.take(nodes, 0)
    values = np.asarray(edge_values, dtype=np.float64).reshape(-1)
    _check_edge_values(graph, values.size)
    nodes = kernels.gsc_layers(
        values, graph.src, graph.dst, graph.num_nodes, num_layers, accumulate
    )
    return float(nodes[0])


def path_sum_oracle(
    graph: SchemaGraph,
    edge_values,
    num_layers: int = 2,
    edge_state: str = "accumulate",
) -> float:
    """
    Graph score by explicit enumeration of directed paths ending at node 0.

    A path ``e_k, ..., e_1`` with ``dst(e_1) = 0`` and
    ``dst(e_{j+1}) = src(e_j)`` contributes the value of ``e_k``, weighted by
    ``comb(L - 1, k - 1)`` in ``accumulate`` mode. Exponential in ``L``: small
    graphs only.
    """
    _check_layers(num_layers, edge_state)
    values = np.asarray(edge_values, dtype=np.float64).reshape(-1)
    _check_edge_values(graph, values.size)
    incoming: list[list[int]] = [[] for _ in range(graph.num_nodes)]
    for edge, target in enumerate(graph.dst.tolist()):
        incoming[target].append(edge)
    src = graph.src.tolist()
    weights = [
        math.comb(num_layers - 1, length - 1) if edge_state == "accumulate" else 1
        for length in range(1, num_layers + 1)
    ]

    def walk(node: int, length: int) -> float:
        total = 0.0
        for edge in incoming[node]:
            total += weights[length - 1] * values[edge]
            if length < num_layers:
                total += walk(src[edge], length + 1)
        return total

    return walk(0, 1) if graph.num_nodes else 0.0


@dataclass(frozen=True)
class LayerSnapshot:
    """Edge and node values after one layer."""

    layer: int
    edge_values: np.ndarray
    node_values: np.ndarray


def trace_values(
    graph: SchemaGraph,
    edge_values,
    num_layers: int = 2,
    edge_state: str = "accumulate",
) -> list[LayerSnapshot]:
    """Per-layer snapshots for explicit edge values."""
    _check_layers(num_layers, edge_state)
    values = np.asarray(edge_values, dtype=np.float64).reshape(-1)
    _check_edge_values(graph, values.size)
    edge_trace, node_trace = kernels.gsc_layer_trace(
        values,
        graph.src,
        graph.dst,
        graph.num_nodes,
        num_layers,
        edge_state == "accumulate",
    )
    return [
        LayerSnapshot(layer + 1, edge_trace[layer].copy(), node_trace[layer].copy())
        for layer in range(num_layers)
    ]


def trace_layers(
    graph: SchemaGraph, params: GSCParams, config: GSCConfig
) -> list[LayerSnapshot]:
    """
    Per-layer edge and node values of ``graph`` under the trained encoder.

    The graph is prepared as for scoring; the node 0 value of the last
    snapshot equals the graph score.
    """
    graph = prepare_graph(graph, config)
    values = edge_encoder_forward(graph, params, config.vocab, config.activation)
    return trace_values(graph, values, config.num_layers, config.edge_state)


def trace_to_json(graph: SchemaGraph, snapshots: list[LayerSnapshot], **meta) -> dict:
    """JSON-ready layer trace for rendering."""
    return {
        **meta,
        "node_types": graph.node_types.tolist(),
        "edges": [list(edge) for edge in graph.edges],
        "layers": [
            {
                "layer": snapshot.layer,
                "edge_values": snapshot.edge_values.tolist(),
                "node_values": snapshot.node_values.tolist(),
            }
            for snapshot in snapshots
        ],
    }


# ----------------------------------------------------------------------
# Choices and instances
# ----------------------------------------------------------------------
def prepare_graph(graph: SchemaGraph, config: GSCConfig) -> SchemaGraph:
    """Apply the QA-nodes filter, the node cap and symmetrization, in this order."""
    if config.qa_nodes_only:
        graph = restrict_to_qa_nodes(graph)
    if config.max_nodes is not None:
        graph = truncate_nodes(graph, config.max_nodes)
    if config.symmetrize:
        graph = symmetrize(graph, config.vocab)
    return graph


def resolve_context_score(
    config: GSCConfig,
    context_score: float | None,
    instance_id: str = "?",
    choice: int = 0,
) -> float:
    """
    Return the context score selected by the configured provider.

    Raises
    ------
    MissingScoreError
        For the ``from_file`` provider when the score is absent.
    """
    if config.context_provider == "zero":
        return 0.0
    if config.context_provider == "constant":
        return float(config.context_constant)
    if context_score is None:
        raise MissingScoreError(instance_id, choice)
    return float(context_score)


def context_scores(instance: QAInstance, config: GSCConfig) -> np.ndarray:
    return np.array(
        [
            resolve_context_score(config, choice.context_score, instance.id, index)
            for index, choice in enumerate(instance.choices)
        ],
        dtype=np.float64,
    )


def choice_score(
    graph: SchemaGraph,
    params: GSCParams,
    config: GSCConfig,
    context_score: float | None = None,
    table: np.ndarray | None = None,
) -> float:
    """
    ``context score + graph score`` of one choice.

    ``table`` may hold precomputed soft counts of every triplet type.
    """
    if table is None:
        table = triplet_table(params, config.vocab, config.activation).data
    values = table[checked_triplet_ids(graph, config.vocab)]
    graph_score = gsc_forward(graph, values, config.num_layers, config.edge_state)
    return resolve_context_score(config, context_score) + graph_score


def instance_forward(
    instance: QAInstance, params: GSCParams, config: GSCConfig
) -> np.ndarray:
    """Score of every choice, after preparing each graph."""
    table = triplet_table(params, config.vocab, config.activation).data
    scores = np.empty(instance.num_choices, dtype=np.float64)
    context = context_scores(instance, config)
    for index, choice in enumerate(instance.choices):
        graph = prepare_graph(choice.graph, config)
        values = table[checked_triplet_ids(graph, config.vocab)]
        scores[index] = context[index] + gsc_forward(
            graph, values, config.num_layers, config.edge_state
        )
    return scores


@dataclass(frozen=True)
class GraphUnion:
    """
    Disjoint union of graphs: node ids are offset per graph.

    ``roots`` holds the position of every graph's context node.
    """

    src: np.ndarray
    dst: np.ndarray
    triplet_ids: np.ndarray
    node_count: int
    roots: np.ndarray


def union_graphs(graphs, vocab: TripletVocabulary) -> GraphUnion:
    src, dst, ids, roots = [], [], [], []
    offset = 0
    for graph in graphs:
        roots.append(offset)
        src.append(graph.src + offset)
        dst.append(graph.dst + offset)
        ids.append(checked_triplet_ids(graph, vocab))
        offset += graph.num_nodes

    def joined(parts):
        return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)

    return GraphUnion(
        src=joined(src),
        dst=joined(dst),
        triplet_ids=joined(ids),
        node_count=offset,
        roots=np.array(roots, dtype=np.int64),
    )


def union_scores(union: GraphUnion, params: GSCParams, config: GSCConfig) -> Value:
    """Differentiable graph score of every graph of a union, shape ``[G]``."""
    table = triplet_table(params, config.vocab, config.activation)
    edge_values = ad.take(table, union.triplet_ids)
    nodes = propagate(
        edge_values,
        union.src,
        union.dst,
        union.node_count,
        config.num_layers,
        config.accumulate,
    )
    return ad.take(nodes, union.roots)


# ----------------------------------------------------------------------
# Soft-count table
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class SoftCountRow:
    head_type: int
    relation: int
    tail_type: int
    soft_count: float


def dump_soft_counts(
    params: GSCParams,
    vocab: TripletVocabulary,
    top_k: int | None = 30,
    activation: str = "relu",
) -> list[SoftCountRow]:
    """
    Soft count of every triplet type, highest first.

    Ties are broken by increasing triplet id. ``top_k=None`` returns all rows.
    """
    values = triplet_table(params, vocab, activation).data
    order = np.lexsort((np.arange(values.size), -values))
    if top_k is not None:
        order = order[: max(top_k, 0)]
    heads, rels, tails = vocab.all_triplets()
    return [
        SoftCountRow(int(heads[i]), int(rels[i]), int(tails[i]), float(values[i]))
        for i in order
    ]


def write_soft_counts_csv(
    rows: list[SoftCountRow],
    path: str | Path,
    vocab: TripletVocabulary | None = None,
    named: bool = False,
) -> None:
    """Write ``head_type,relation,tail_type,soft_count``; ``named`` renders readable names."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as stream:
        writer = csv.writer(stream)
        writer.writerow(["head_type", "relation", "tail_type", "soft_count"])
        for row in rows:
            if named and vocab is not None:
                cells = [
                    vocab.node_type_name(row.head_type),
                    vocab.relation_name(row.relation),
                    vocab.node_type_name(row.tail_type),
                ]
            else:
                cells = [row.head_type, row.relation, row.tail_type]
            writer.writerow(cells + [repr(row.soft_count)])


def write_trace_json(traces: list[dict], path: str | Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as stream:
        json.dump(traces, stream, indent=2)
        stream.write("\n")
