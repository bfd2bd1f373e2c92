# Graph Soft Counter - Soft and hard edge counting for knowledge-graph QA, with SparseVD dissection.
# Copyright (C) 2026 - softcounter contributors
# SPDX-License-Identifier: Apache-2.0
"""
Hard edge-triplet counting baseline.

The graph is summarised by integer histograms, then a two-layer MLP with a
linear output maps the histogram to a graph score.

- ``one_hop``: number of edges of every triplet type (``T = N * R * N`` entries).
- ``two_hop``: the one-hop histogram followed by the counts of ordered pairs
  over directed length-2 paths ``e1, e2`` with ``dst(e1) == src(e2)``. Pairs
  are typed by relation (``R * R`` entries, default) or by full triplet
  (``T * T`` entries); ``context_only`` keeps the paths ending at node 0.
"""
import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import autodiff as ad
from . import kernels
from .autodiff import Value
from .exception import InvalidConfigError
from .exception import ShapeError
from .logging_config import get_logger
from .schema_graph import SchemaGraph
from .vocabulary import TripletVocabulary

logger = get_logger(__name__)

MODES = ("one_hop", "two_hop")
PAIR_TYPINGS = ("relation", "triplet")
SCOPES = ("all", "observed")


@dataclass(frozen=True)
class CounterConfig:
    """
    Configuration of the hard counter.

    Attributes
    ----------
    mode : str
        ``one_hop`` or ``two_hop``.
    hidden_dim : int
        Hidden width of the head (default 32).
    pair_typing : str
        ``relation`` or ``triplet`` typing of two-hop pairs.
    context_only : bool
        Count only two-hop paths ending at the context node.
    scope : str
        ``all`` triplet types, or only those ``observed`` in the training set.
    activation : str
        Hidden nonlinearity of the head.
    """

    mode: str = "one_hop"
    hidden_dim: int = 32
    pair_typing: str = "relation"
    context_only: bool = False
    scope: str = "all"
    activation: str = "relu"

    def __post_init__(self):
        for name, value, allowed in (
            ("mode", self.mode, MODES),
            ("pair_typing", self.pair_typing, PAIR_TYPINGS),
            ("scope", self.scope, SCOPES),
            ("activation", self.activation, tuple(ad.ACTIVATIONS)),
        ):
            if value not in allowed:
                raise InvalidConfigError(name, value, f"expected one of {allowed}")
        if self.hidden_dim < 1:
            raise InvalidConfigError("hidden_dim", self.hidden_dim, "must be >= 1")

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "hidden_dim": self.hidden_dim,
            "pair_typing": self.pair_typing,
            "context_only": self.context_only,
            "scope": self.scope,
            "activation": self.activation,
        }


@dataclass(frozen=True)
class CountFeature:
    """Nonnegative integer counts (stored as ``float64``)."""

    mode: str
    values: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.values.size)


def feature_dim(vocab: TripletVocabulary, config: CounterConfig) -> int:
    """Full (unscoped) feature dimension."""
    if config.mode == "one_hop":
        return vocab.triplet_count
    keys = (
        vocab.relation_count
        if config.pair_typing == "relation"
        else vocab.triplet_count
    )
    return vocab.triplet_count + keys * keys


def count_features_1hop(graph: SchemaGraph, vocab: TripletVocabulary) -> CountFeature:
    """Histogram of edge triplet types; entries sum to the edge count."""
    counts = np.bincount(graph.triplet_ids(vocab), minlength=vocab.triplet_count)
    return CountFeature("one_hop", counts.astype(np.float64))


def count_features_2hop(
    graph: SchemaGraph,
    vocab: TripletVocabulary,
    pair_typing: str = "relation",
    context_only: bool = False,
) -> CountFeature:
    """One-hop histogram followed by the ordered pair counts over length-2 paths."""
    one_hop = count_features_1hop(graph, vocab).values
    if pair_typing == "relation":
        keys, key_count = graph.rel, vocab.relation_count
    else:
        keys, key_count = graph.triplet_ids(vocab), vocab.triplet_count
    pairs = kernels.pair_counts(
        graph.src, graph.dst, keys, graph.num_nodes, key_count, context_only
    )
    return CountFeature("two_hop", np.concatenate([one_hop, pairs]))


def count_features(
    graph: SchemaGraph, vocab: TripletVocabulary, config: CounterConfig
) -> CountFeature:
    if config.mode == "one_hop":
        return count_features_1hop(graph, vocab)
    return count_features_2hop(graph, vocab, config.pair_typing, config.context_only)


def observed_scope(features: np.ndarray) -> np.ndarray:
    """Indices of the feature columns that are nonzero somewhere in ``features [n, D]``."""
    return np.flatnonzero(np.asarray(features).sum(axis=0) > 0)


@dataclass
class CounterHead:
    """Two-layer MLP ``[D, hidden] -> [hidden, 1]`` with a linear output."""

    w1: Value
    b1: Value
    w2: Value
    b2: Value

    def __post_init__(self):
        logger.debug(
            "counter head {dim}x{hidden}x1 | learnable parameters={n}",
            dim=self.w1.shape[0],
            hidden=self.w1.shape[1],
            n=self.parameter_count,
        )

    @classmethod
    def init(cls, input_dim: int, hidden_dim: int = 32, seed: int = 0) -> "CounterHead":
        rng = np.random.default_rng(seed)
        limit1 = math.sqrt(6.0 / (input_dim + hidden_dim))
        limit2 = math.sqrt(6.0 / (hidden_dim + 1))
        return cls(
            w1=Value(rng.uniform(-limit1, limit1, (input_dim, hidden_dim)), "head.w1"),
            b1=Value(np.zeros(hidden_dim), "head.b1"),
            w2=Value(rng.uniform(-limit2, limit2, (hidden_dim, 1)), "head.w2"),
            b2=Value(np.zeros(1), "head.b2"),
        )

    def named_parameters(self) -> dict[str, Value]:
        return {
            "head.w1": self.w1,
            "head.b1": self.b1,
            "head.w2": self.w2,
            "head.b2": self.b2,
        }

    @property
    def input_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def parameter_count(self) -> int:
        return sum(value.data.size for value in self.named_parameters().values())


def counter_scores(
    features: Value, head: CounterHead, activation: str = "relu"
) -> Value:
    """Differentiable scores of a feature matrix ``[n, D]``, shape ``[n]``."""
    hidden = ad.activation(ad.affine(head.w1, head.b1, features), activation)
    return ad.reshape(ad.affine(head.w2, head.b2, hidden), (features.shape[0],))


def counter_forward(feature, head: CounterHead, activation: str = "relu") -> float:
    """
    Score of one feature vector.

    Raises
    ------
    ShapeError
        If the feature dimension differs from the head input dimension.
    """
    if isinstance(feature, CountFeature):
        values = feature.values
    else:
        values = np.asarray(feature)
    if values.shape != (head.input_dim,):
        raise ShapeError("counter_forward", values.shape, (head.input_dim,))
    return counter_scores(Value(values.reshape(1, -1)), head, activation).item()


def write_feature_csv(feature: CountFeature, path: str | Path) -> None:
    """Write the nonzero entries as ``feature_index,count``."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as stream:
        writer = csv.writer(stream)
        writer.writerow(["feature_index", "count"])
        for index in np.flatnonzero(feature.values).tolist():
            writer.writerow([index, int(feature.values[index])])
