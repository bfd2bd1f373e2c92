# Graph Soft Counter - Soft and hard edge counting for knowledge-graph QA, with SparseVD dissection.
# Copyright (C) 2026 - softcounter contributors
# SPDX-License-Identifier: Apache-2.0
"""
Model kinds behind one scoring interface, and their checkpoints.

=========  ===============================================================
kind       graph score
=========  ===============================================================
gsc        Graph Soft Counter
counter1   MLP over one-hop triplet counts
counter2   MLP over one-hop counts and two-hop pair counts
vd-mlp     variational MLP over ``[random node-embedding summary, counts]``
=========  ===============================================================

Every model prepares the graphs of an instance with the ``model`` section
(:class:`GSCConfig`: QA-nodes filter, node cap, symmetrization) and adds the
context score of the configured provider.
"""
import json
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .autodiff import Value
from .counter import CounterConfig
from .counter import CounterHead
from .counter import count_features
from .counter import count_features_1hop
from .counter import counter_scores
from .counter import feature_dim
from .exception import CheckpointError
from .exception import InvalidConfigError
from .gsc import GSCConfig
from .gsc import GSCParams
from .gsc import context_scores
from .gsc import gsc_forward
from .gsc import prepare_graph
from .gsc import triplet_table
from .gsc import union_graphs
from .gsc import union_scores
from .logging_config import get_logger
from .schema_graph import QAInstance
from .schema_graph import SchemaGraph
from .sparsevd import SparseVDConfig
from .sparsevd import VariationalAffineParams
from .sparsevd import kl_term
from .sparsevd import sparse_ratio
from .sparsevd import vd_forward_eval
from .sparsevd import vd_forward_mean
from .sparsevd import vd_forward_train
from .vocabulary import TripletVocabulary

logger = get_logger(__name__)

MODEL_KINDS = ("gsc", "counter1", "counter2", "vd-mlp")
CHECKPOINT_FORMAT = 1


@dataclass(frozen=True)
class EncodedInstance:
    """An instance with prepared graphs and resolved context scores."""

    id: str
    label: int
    graphs: tuple[SchemaGraph, ...]
    context: np.ndarray

    @property
    def num_choices(self) -> int:
        return len(self.graphs)


@dataclass(frozen=True)
class VDMLPConfig:
    """
    Shape of the variational MLP of the dissection experiment.

    Attributes
    ----------
    hidden_dim : int
        Width of the tanh hidden layer.
    embedding_dim : int
        Size of the random node-embedding summary block.
    embedding_seed : int
        Seed of the random node embeddings.
    """

    hidden_dim: int = 1
    embedding_dim: int = 32
    embedding_seed: int = 0

    def __post_init__(self):
        if self.hidden_dim < 1:
            raise InvalidConfigError("hidden_dim", self.hidden_dim, "must be >= 1")
        if self.embedding_dim < 0:
            raise InvalidConfigError(
                "embedding_dim", self.embedding_dim, "must be >= 0"
            )

    def to_dict(self) -> dict:
        return {
            "hidden_dim": self.hidden_dim,
            "embedding_dim": self.embedding_dim,
            "embedding_seed": self.embedding_seed,
        }


def _offsets(batch: list[EncodedInstance]) -> np.ndarray:
    return np.cumsum([0] + [item.num_choices for item in batch])


class ScoringModel:
    """Common plumbing: preparation, context scores, prediction and checkpoints."""

    kind = "base"

    def __init__(self, vocab: TripletVocabulary, graph_config: GSCConfig):
        self.vocab = vocab
        self.graph_config = graph_config

    # -- data ----------------------------------------------------------
    def encode(self, instance: QAInstance) -> EncodedInstance:
        return EncodedInstance(
            id=instance.id,
            label=instance.label,
            graphs=tuple(
                prepare_graph(choice.graph, self.graph_config)
                for choice in instance.choices
            ),
            context=context_scores(instance, self.graph_config),
        )

    def encode_all(self, instances) -> list[EncodedInstance]:
        return [self.encode(instance) for instance in instances]

    # -- scoring -------------------------------------------------------
    def graph_scores(
        self, batch: list[EncodedInstance], rng=None, training: bool = False
    ) -> Value:
        """Differentiable graph score of every choice of the batch, flattened."""
        raise NotImplementedError

    def batch_scores(
        self, batch: list[EncodedInstance], rng=None, training: bool = False
    ) -> Value:
        """Context plus graph score of every choice, flattened in instance order."""
        context = Value(np.concatenate([item.context for item in batch]))
        return ad.add(self.graph_scores(batch, rng, training), context)

    def predict(self, batch: list[EncodedInstance]) -> list[np.ndarray]:
        """Choice scores of every instance, without recording."""
        scores = self.batch_scores(batch).data
        bounds = _offsets(batch)
        return [scores[bounds[k] : bounds[k + 1]] for k in range(len(batch))]

    def regularizer(self, coefficient: float, n_train: int) -> Value | None:
        return None

    # -- parameters ----------------------------------------------------
    def named_parameters(self) -> dict[str, Value]:
        raise NotImplementedError

    @property
    def parameter_count(self) -> int:
        return sum(value.data.size for value in self.named_parameters().values())

    def describe(self) -> dict:
        """Model-specific checkpoint fields."""
        return {}


class GSCModel(ScoringModel):
    kind = "gsc"

    def __init__(self, vocab, graph_config, params: GSCParams):
        super().__init__(vocab, graph_config)
        self.params = params

    def named_parameters(self):
        return self.params.named_parameters()

    def graph_scores(self, batch, rng=None, training=False):
        union = union_graphs([g for item in batch for g in item.graphs], self.vocab)
        return union_scores(union, self.params, self.graph_config)

    def predict(self, batch):
        config = self.graph_config
        table = triplet_table(self.params, self.vocab, config.activation).data
        results = []
        for item in batch:
            scores = item.context.copy()
            for index, graph in enumerate(item.graphs):
                values = table[graph.triplet_ids(self.vocab)]
                scores[index] += gsc_forward(
                    graph, values, config.num_layers, config.edge_state
                )
            results.append(scores)
        return results


class CounterModel(ScoringModel):
    """Hard counter; ``scope`` lists the feature columns fed to the head."""

    def __init__(self, vocab, graph_config, counter_config: CounterConfig, head, scope):
        super().__init__(vocab, graph_config)
        self.counter_config = counter_config
        self.head = head
        self.scope = None if scope is None else np.asarray(scope, dtype=np.int64)

    @property
    def kind(self) -> str:
        return "counter1" if self.counter_config.mode == "one_hop" else "counter2"

    def named_parameters(self):
        return self.head.named_parameters()

    def features(self, batch) -> np.ndarray:
        rows = [
            count_features(graph, self.vocab, self.counter_config).values
            for item in batch
            for graph in item.graphs
        ]
        matrix = np.vstack(rows) if rows else np.zeros((0, self.head.input_dim))
        return matrix if self.scope is None else matrix[:, self.scope]

    def graph_scores(self, batch, rng=None, training=False):
        return counter_scores(
            Value(self.features(batch)), self.head, self.counter_config.activation
        )

    def describe(self):
        return {"scope": None if self.scope is None else self.scope.tolist()}


class VDMLPModel(ScoringModel):
    """
    Variational MLP over ``[node-embedding summary, log1p one-hop counts]``.

    The input layer is reported as two row blocks, ``input.embedding`` and
    ``input.count``.
    """

    kind = "vd-mlp"

    def __init__(
        self,
        vocab,
        graph_config,
        mlp_config: VDMLPConfig,
        sparse_config: SparseVDConfig,
        hidden: VariationalAffineParams,
        output: VariationalAffineParams,
        scope,
    ):
        super().__init__(vocab, graph_config)
        self.mlp_config = mlp_config
        self.sparse_config = sparse_config
        self.hidden = hidden
        self.output = output
        self.scope = np.asarray(scope, dtype=np.int64)
        self.pruned = True

    def named_parameters(self):
        return {**self.hidden.named_parameters(), **self.output.named_parameters()}

    def embedding_summary(
        self, instance_id: str, choice: int, graph: SchemaGraph
    ) -> np.ndarray:
        """Mean of random node embeddings; carries no information about the answer."""
        dim = self.mlp_config.embedding_dim
        seed = [
            self.mlp_config.embedding_seed,
            zlib.crc32(instance_id.encode("utf-8")),
            choice,
        ]
        rng = np.random.default_rng(seed)
        return rng.standard_normal((max(graph.num_nodes, 1), dim)).mean(axis=0)

    def features(self, batch) -> np.ndarray:
        rows = []
        for item in batch:
            for choice, graph in enumerate(item.graphs):
                counts = count_features_1hop(graph, self.vocab).values[self.scope]
                rows.append(
                    np.concatenate(
                        [
                            self.embedding_summary(item.id, choice, graph),
                            np.log1p(counts),
                        ]
                    )
                )
        return np.vstack(rows) if rows else np.zeros((0, self.hidden.shape[0]))

    def graph_scores(self, batch, rng=None, training=False):
        x = Value(self.features(batch))
        threshold = self.sparse_config.threshold
        if training:
            hidden = ad.tanh(vd_forward_train(x, self.hidden, rng))
            out = vd_forward_train(hidden, self.output, rng)
        elif self.pruned:
            hidden = ad.tanh(vd_forward_eval(x, self.hidden, threshold))
            out = vd_forward_eval(hidden, self.output, threshold)
        else:
            hidden = ad.tanh(vd_forward_mean(x, self.hidden))
            out = vd_forward_mean(hidden, self.output)
        return ad.reshape(out, (x.shape[0],))

    def regularizer(self, coefficient, n_train):
        scale = coefficient / max(n_train, 1)
        return ad.scale(kl_term([self.hidden, self.output]), scale)

    def curve_layers(self) -> dict:
        """Layers and row blocks tracked by the sparse-ratio curve."""
        dim = self.mlp_config.embedding_dim
        return {
            "input.embedding": (self.hidden, slice(0, dim)),
            "input.count": (self.hidden, slice(dim, None)),
            "output": self.output,
        }

    def block_ratios(self) -> dict[str, float]:
        threshold = self.sparse_config.threshold
        ratios = {}
        for name, entry in self.curve_layers().items():
            layer, rows = entry if isinstance(entry, tuple) else (entry, None)
            ratios[name] = sparse_ratio(layer, threshold, rows)
        return ratios

    def describe(self):
        return {"scope": self.scope.tolist()}


# ----------------------------------------------------------------------
# Construction
# ----------------------------------------------------------------------
def observed_triplets(
    instances, graph_config: GSCConfig, vocab: TripletVocabulary
) -> np.ndarray:
    """Triplet ids occurring in the prepared graphs of ``instances``."""
    seen = np.zeros(vocab.triplet_count, dtype=bool)
    for instance in instances:
        for choice in instance.choices:
            seen[prepare_graph(choice.graph, graph_config).triplet_ids(vocab)] = True
    return np.flatnonzero(seen)


def _counter_scope(instances, vocab, graph_config, counter_config) -> np.ndarray | None:
    if counter_config.scope == "all":
        return None
    seen = None
    for instance in instances:
        for choice in instance.choices:
            graph = prepare_graph(choice.graph, graph_config)
            values = count_features(graph, vocab, counter_config).values > 0
            seen = values if seen is None else seen | values
    if seen is None:
        return np.zeros(0, dtype=np.int64)
    return np.flatnonzero(seen)


def build_model(
    kind: str,
    vocab: TripletVocabulary,
    graph_config: GSCConfig | None = None,
    counter_config: CounterConfig | None = None,
    sparse_config: SparseVDConfig | None = None,
    mlp_config: VDMLPConfig | None = None,
    train_instances=(),
    seed: int = 0,
) -> ScoringModel:
    """
    Build a freshly initialised model of ``kind``.

    ``train_instances`` determine the feature scope of counters with
    ``scope="observed"`` and of the vd-mlp count block.

    Raises
    ------
    InvalidConfigError
        For an unknown kind.
    """
    graph_config = graph_config if graph_config is not None else GSCConfig(vocab=vocab)
    if kind == "gsc":
        params = GSCParams.init(vocab, graph_config.hidden_dim, seed)
        model: ScoringModel = GSCModel(vocab, graph_config, params)
    elif kind in ("counter1", "counter2"):
        counter_config = counter_config or CounterConfig()
        mode = "one_hop" if kind == "counter1" else "two_hop"
        if counter_config.mode != mode:
            counter_config = CounterConfig(**{**counter_config.to_dict(), "mode": mode})
        scope = _counter_scope(train_instances, vocab, graph_config, counter_config)
        input_dim = feature_dim(vocab, counter_config) if scope is None else scope.size
        head = CounterHead.init(input_dim, counter_config.hidden_dim, seed)
        model = CounterModel(vocab, graph_config, counter_config, head, scope)
    elif kind == "vd-mlp":
        sparse_config = sparse_config if sparse_config is not None else SparseVDConfig()
        mlp_config = mlp_config if mlp_config is not None else VDMLPConfig()
        scope = observed_triplets(train_instances, graph_config, vocab)
        input_dim = mlp_config.embedding_dim + scope.size
        hidden = VariationalAffineParams.init(
            input_dim,
            mlp_config.hidden_dim,
            "input",
            seed,
            sparse_config.init_log_sigma2,
        )
        output = VariationalAffineParams.init(
            mlp_config.hidden_dim, 1, "output", seed + 1, sparse_config.init_log_sigma2
        )
        model = VDMLPModel(
            vocab, graph_config, mlp_config, sparse_config, hidden, output, scope
        )
    else:
        raise InvalidConfigError("model", kind, f"expected one of {MODEL_KINDS}")
    logger.info(
        "model built | kind={kind} learnable parameters={n}",
        kind=kind,
        n=model.parameter_count,
    )
    return model


# ----------------------------------------------------------------------
# Checkpoints
# ----------------------------------------------------------------------
def checkpoint_dict(model: ScoringModel, **extra) -> dict:
    data = {
        "format": CHECKPOINT_FORMAT,
        "model": model.kind,
        "vocab": model.vocab.to_dict(),
        "model_config": model.graph_config.to_dict(),
        "parameter_count": model.parameter_count,
        **model.describe(),
    }
    if isinstance(model, CounterModel):
        data["counter"] = model.counter_config.to_dict()
    if isinstance(model, VDMLPModel):
        data["sparsevd"] = model.sparse_config.to_dict()
        data["vd_mlp"] = model.mlp_config.to_dict()
    data.update(extra)
    data["parameters"] = {
        name: {"shape": list(value.shape), "values": value.data.reshape(-1).tolist()}
        for name, value in model.named_parameters().items()
    }
    return data


def save_checkpoint(model: ScoringModel, path: str | Path, **extra) -> None:
    """Write the checkpoint as indented JSON; identical models give identical bytes."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as stream:
        json.dump(checkpoint_dict(model, **extra), stream, indent=1)
        stream.write("\n")


def _load_parameters(model: ScoringModel, stored: dict) -> None:
    expected = model.named_parameters()
    if set(stored) != set(expected):
        raise CheckpointError(
            f"parameters {sorted(stored)} do not match {model.kind} parameters "
            f"{sorted(expected)}"
        )
    for name, value in expected.items():
        shape = tuple(stored[name]["shape"])
        if shape != value.shape:
            raise CheckpointError(f"'{name}' has shape {shape}, expected {value.shape}")
        values = np.array(stored[name]["values"], dtype=np.float64)
        value.data[...] = values.reshape(shape)


def model_from_checkpoint(data: dict) -> ScoringModel:
    """
    Rebuild a model from a checkpoint dictionary.

    Raises
    ------
    CheckpointError
        For an unknown format or kind, or mismatching parameter shapes.
    """
    if data.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"unsupported checkpoint format {data.get('format')!r}")
    kind = data.get("model")
    if kind not in MODEL_KINDS:
        raise CheckpointError(f"unknown model kind {kind!r}")
    try:
        vocab = TripletVocabulary.from_dict(data["vocab"])
        graph_config = GSCConfig(vocab=vocab, **data["model_config"])
        counter_config = CounterConfig(**data["counter"]) if "counter" in data else None
        sparse_config = (
            SparseVDConfig(**data["sparsevd"]) if "sparsevd" in data else None
        )
        mlp_config = VDMLPConfig(**data["vd_mlp"]) if "vd_mlp" in data else None
    except (KeyError, TypeError) as error:
        raise CheckpointError(f"incomplete configuration ({error})") from error
    scope = data.get("scope")
    if kind == "gsc":
        model: ScoringModel = GSCModel(
            vocab, graph_config, GSCParams.zeros(vocab, graph_config.hidden_dim)
        )
    elif kind in ("counter1", "counter2"):
        counter_config = counter_config or CounterConfig()
        dim = feature_dim(vocab, counter_config) if scope is None else len(scope)
        head = CounterHead.init(dim, counter_config.hidden_dim)
        model = CounterModel(vocab, graph_config, counter_config, head, scope)
    else:
        sparse_config = sparse_config if sparse_config is not None else SparseVDConfig()
        mlp_config = mlp_config if mlp_config is not None else VDMLPConfig()
        scope = scope if scope is not None else []
        hidden = VariationalAffineParams.init(
            mlp_config.embedding_dim + len(scope), mlp_config.hidden_dim, "input"
        )
        output = VariationalAffineParams.init(mlp_config.hidden_dim, 1, "output")
        model = VDMLPModel(
            vocab, graph_config, mlp_config, sparse_config, hidden, output, scope
        )
    _load_parameters(model, data.get("parameters", {}))
    return model


def load_checkpoint(path: str | Path) -> tuple[ScoringModel, dict]:
    """Return the model and the raw checkpoint dictionary."""
    try:
        with open(path, encoding="utf-8") as stream:
            data = json.load(stream)
    except json.JSONDecodeError as error:
        raise CheckpointError(f"{path} is not valid JSON ({error.msg})") from error
    if not isinstance(data, dict):
        raise CheckpointError(f"{path} does not hold a JSON object")
    return model_from_checkpoint(data), data
