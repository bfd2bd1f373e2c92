# Graph Soft Counter - Soft and hard edge counting for knowledge-graph QA, with SparseVD dissection.
# Copyright (C) 2026 - softcounter contributors
# SPDX-License-Identifier: Apache-2.0
"""
Schema graphs and multiple-choice QA instances.

A schema graph is the knowledge-graph sub-graph retrieved for one answer
choice: typed entity nodes plus a central context node (always node 0) linked
to the question and answer entities. Edges are explicit ``(src, dst, rel)``
records; message passing flows from ``src`` to ``dst``.

Classes
-------
SchemaGraph
    Immutable typed graph stored as read-only numpy arrays.
Choice
    One answer choice: its schema graph and an optional context score.
QAInstance
    One question with its choices and gold label.

Functions
---------
symmetrize, truncate_nodes, restrict_to_qa_nodes, validate_graph,
validate_instance
"""
from collections import Counter
from collections.abc import Iterable
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .exception import GraphValidationError
from .exception import InvalidConfigError
from .vocabulary import NODE_ANSWER
from .vocabulary import NODE_CONTEXT
from .vocabulary import NODE_QUESTION
from .vocabulary import TripletVocabulary


def _frozen_array(values) -> np.ndarray:
    array = np.array(values, dtype=np.int64).reshape(-1)
    array.setflags(write=False)
    return array


class SchemaGraph:
    """
    Typed nodes and directed typed edges of one answer choice.

    Attributes
    ----------
    node_types : numpy.ndarray
        Node-type id of every node; index 0 is the context node.
    src, dst, rel : numpy.ndarray
        Edge endpoints and relation ids, one entry per edge.
    """

    __slots__ = ("node_types", "src", "dst", "rel")

    def __init__(self, node_types, src=(), dst=(), rel=()):
        self.node_types = _frozen_array(node_types)
        self.src = _frozen_array(src)
        self.dst = _frozen_array(dst)
        self.rel = _frozen_array(rel)
        if not self.src.size == self.dst.size == self.rel.size:
            raise GraphValidationError(
                [
                    f"edge arrays differ in length: src={self.src.size}, "
                    f"dst={self.dst.size}, rel={self.rel.size}"
                ]
            )

    @classmethod
    def from_edges(
        cls, node_types: Sequence[int], edges: Iterable[Sequence[int]]
    ) -> "SchemaGraph":
        """Build a graph from ``[src, dst, rel]`` triples."""
        edge_array = np.array(list(edges), dtype=np.int64).reshape(-1, 3)
        return cls(node_types, edge_array[:, 0], edge_array[:, 1], edge_array[:, 2])

    @property
    def num_nodes(self) -> int:
        return int(self.node_types.size)

    @property
    def num_edges(self) -> int:
        return int(self.src.size)

    @property
    def edges(self) -> list[tuple[int, int, int]]:
        return list(zip(self.src.tolist(), self.dst.tolist(), self.rel.tolist()))

    def triplet_ids(self, vocab: TripletVocabulary) -> np.ndarray:
        """Return the dense triplet-type id of every edge."""
        heads = self.node_types[self.src]
        tails = self.node_types[self.dst]
        return (heads * vocab.relation_count + self.rel) * vocab.node_type_count + tails

    def __eq__(self, other) -> bool:
        if not isinstance(other, SchemaGraph):
            return NotImplemented
        return (
            np.array_equal(self.node_types, other.node_types)
            and np.array_equal(self.src, other.src)
            and np.array_equal(self.dst, other.dst)
            and np.array_equal(self.rel, other.rel)
        )

    def __hash__(self) -> int:
        return hash((self.node_types.tobytes(), self.src.tobytes(), self.rel.tobytes()))

    def __repr__(self) -> str:
        return f"SchemaGraph(nodes={self.num_nodes}, edges={self.num_edges})"


@dataclass(frozen=True)
class Choice:
    """One answer choice of a question."""

    graph: SchemaGraph
    context_score: float | None = None


@dataclass(frozen=True)
class QAInstance:
    """One multiple-choice question."""

    id: str
    label: int
    choices: tuple[Choice, ...]

    @property
    def num_choices(self) -> int:
        return len(self.choices)


def validate_graph(graph: SchemaGraph, vocab: TripletVocabulary) -> list[str]:
    """
    Return every invariant violation of a schema graph.

    An empty list means the graph is valid.
    """
    diagnostics: list[str] = []
    n_nodes = graph.num_nodes
    if n_nodes == 0:
        diagnostics.append("graph has no node: node 0 must be the context node")
    elif graph.node_types[0] != NODE_CONTEXT:
        diagnostics.append(
            f"node 0 has type {int(graph.node_types[0])}, expected the context "
            f"node type {NODE_CONTEXT}"
        )
    bad_types = np.flatnonzero(
        (graph.node_types < 0) | (graph.node_types >= vocab.node_type_count)
    )
    for node in bad_types.tolist():
        diagnostics.append(
            f"node {node} has type {int(graph.node_types[node])}, outside "
            f"[0, {vocab.node_type_count})"
        )
    for name, indices in (("src", graph.src), ("dst", graph.dst)):
        for edge in np.flatnonzero((indices < 0) | (indices >= n_nodes)).tolist():
            diagnostics.append(
                f"edge {edge} has {name}={int(indices[edge])}, index out of range "
                f"for {n_nodes} node(s)"
            )
    for edge in np.flatnonzero(
        (graph.rel < 0) | (graph.rel >= vocab.relation_count)
    ).tolist():
        diagnostics.append(
            f"edge {edge} has relation {int(graph.rel[edge])}, outside "
            f"[0, {vocab.relation_count})"
        )
    return diagnostics


def validate_instance(instance: QAInstance, vocab: TripletVocabulary) -> None:
    """
    Check an instance and all of its graphs.

    Raises
    ------
    GraphValidationError
        With every diagnostic and the instance id.
    """
    diagnostics: list[str] = []
    if instance.num_choices < 2:
        diagnostics.append(f"{instance.num_choices} choice(s), at least 2 required")
    if not 0 <= instance.label < max(instance.num_choices, 1):
        diagnostics.append(
            f"label {instance.label} outside [0, {instance.num_choices})"
        )
    for index, choice in enumerate(instance.choices):
        diagnostics.extend(
            f"choice {index}: {item}" for item in validate_graph(choice.graph, vocab)
        )
    if diagnostics:
        raise GraphValidationError(diagnostics, instance.id)


def is_symmetric(graph: SchemaGraph, vocab: TripletVocabulary) -> bool:
    """Return True when every edge has its reversed counterpart (multiplicities included)."""
    rev = vocab.reverse_table()
    forward = Counter(graph.edges)
    for (s, d, r), count in forward.items():
        if forward.get((d, s, int(rev[r])), 0) != count:
            return False
    return True


def symmetrize(graph: SchemaGraph, vocab: TripletVocabulary) -> SchemaGraph:
    """
    Record every edge in both directions.

    Original edges are kept first, in order; the missing reversed edges
    ``(dst, src, rev(rel))`` are appended in the order of their originals.
    Edges that already have a reversed partner are left alone, so the
    operation is idempotent.
    """
    diagnostics = validate_graph(graph, vocab)
    if diagnostics:
        raise GraphValidationError(diagnostics)
    rev = vocab.reverse_table()
    edges = graph.edges
    unmatched: Counter = Counter()
    for s, d, r in edges:
        partner = (d, s, int(rev[r]))
        if partner == (s, d, r):
            continue
        if unmatched[partner] > 0:
            unmatched[partner] -= 1
        else:
            unmatched[(s, d, r)] += 1
    appended = []
    for s, d, r in edges:
        if unmatched[(s, d, r)] > 0:
            unmatched[(s, d, r)] -= 1
            appended.append((d, s, int(rev[r])))
    if not appended:
        return graph
    return SchemaGraph.from_edges(graph.node_types, edges + appended)


def _keep_nodes(graph: SchemaGraph, kept: np.ndarray) -> SchemaGraph:
    """Keep the nodes ``kept``, renumbered in that order, and the edges between them."""
    new_index = np.full(graph.num_nodes, -1, dtype=np.int64)
    new_index[kept] = np.arange(kept.size)
    edge_mask = (new_index[graph.src] >= 0) & (new_index[graph.dst] >= 0)
    return SchemaGraph(
        graph.node_types[kept],
        new_index[graph.src[edge_mask]],
        new_index[graph.dst[edge_mask]],
        graph.rel[edge_mask],
    )


def truncate_nodes(graph: SchemaGraph, max_nodes: int) -> SchemaGraph:
    """
    Cap the number of nodes.

    Nodes are kept by priority: the context node, then question entities,
    then answer entities, then the others, each group in input order. Edges
    touching a removed node are dropped. Kept nodes are renumbered in
    priority order: the context node stays at 0 and question entities come
    before answer entities.

    Raises
    ------
    InvalidConfigError
        If ``max_nodes`` is lower than 1.
    """
    if max_nodes < 1:
        raise InvalidConfigError("max_nodes", max_nodes, "must be >= 1")
    if graph.num_nodes <= max_nodes:
        return graph
    types = graph.node_types
    others = np.flatnonzero(
        (types != NODE_QUESTION) & (types != NODE_ANSWER)
    )
    others = others[others != 0]
    priority = np.concatenate(
        [
            np.array([0], dtype=np.int64),
            np.flatnonzero(types == NODE_QUESTION),
            np.flatnonzero(types == NODE_ANSWER),
            others,
        ]
    )
    return _keep_nodes(graph, priority[:max_nodes])


def restrict_to_qa_nodes(graph: SchemaGraph) -> SchemaGraph:
    """Keep only the context node and the question/answer entity nodes."""
    types = graph.node_types
    keep = (types == NODE_QUESTION) | (types == NODE_ANSWER)
    if graph.num_nodes:
        keep[0] = True
    if keep.all():
        return graph
    return _keep_nodes(graph, np.flatnonzero(keep))
