# Graph Soft Counter - Soft and hard edge counting for knowledge-graph QA, with SparseVD dissection.
# Copyright (C) 2026 - softcounter contributors
# SPDX-License-Identifier: Apache-2.0
"""
Synthetic multiple-choice corpora with a planted counting signal.

Every choice gets a noise graph: question, answer and other entity nodes, the
QA links from question/answer entities to the context node, and random noise
edges. The gold choice additionally receives ``delta`` edges of every planted
triplet type, between distinct node pairs. Planted edges end at the context
node or at a question/answer entity, so they lie within two hops of the
context node. The label is recoverable by counting planted triplets.

Each instance draws from its own random stream ``(seed, index)``, so a corpus
is reproducible and instances can be produced in any order.
"""
from dataclasses import dataclass
from dataclasses import field

import numpy as np

from .exception import GenerationError
from .exception import InvalidConfigError
from .logging_config import get_logger
from .logging_config import log_stat
from .monitoring import UtilsMonitoring
from .schema_graph import Choice
from .schema_graph import QAInstance
from .schema_graph import SchemaGraph
from .schema_graph import symmetrize
from .vocabulary import NODE_ANSWER
from .vocabulary import NODE_CONTEXT
from .vocabulary import NODE_OTHER
from .vocabulary import NODE_QUESTION
from .vocabulary import REL_ANSWER_LINK
from .vocabulary import REL_QUESTION_LINK
from .vocabulary import TripletVocabulary

logger = get_logger(__name__)


@dataclass(frozen=True)
class PlantedSignal:
    """Triplet type added ``delta`` times to the gold choice."""

    head_type: int
    relation: int
    tail_type: int
    delta: int

    def to_dict(self) -> dict:
        return {
            "head_type": self.head_type,
            "relation": self.relation,
            "tail_type": self.tail_type,
            "delta": self.delta,
        }

    @classmethod
    def from_dict(cls, data) -> "PlantedSignal":
        fields = ("head_type", "relation", "tail_type", "delta")
        if not isinstance(data, dict) or set(data) != set(fields):
            raise InvalidConfigError(
                "synthetic.planted",
                data,
                f"expected an object with keys {list(fields)}",
            )
        return cls(**data)


def _default_planted() -> tuple[PlantedSignal, ...]:
    return (
        PlantedSignal(NODE_QUESTION, 2, NODE_ANSWER, 2),
        PlantedSignal(NODE_ANSWER, 5, NODE_QUESTION, 3),
    )


@dataclass(frozen=True)
class SyntheticTaskConfig:
    """
    Attributes
    ----------
    count : int
        Number of instances.
    num_choices : int
        Choices per instance (default 5).
    question_nodes, answer_nodes, other_nodes : tuple[int, int]
        Inclusive ranges of entity node counts per graph.
    noise_edges : tuple[int, int]
        Inclusive range of noise edges per graph.
    noise_relations : tuple[int, ...] | None
        Relations of noise edges; base relations when ``None``.
    noise_node_types : tuple[int, ...]
        Node types allowed at both ends of a noise edge.
    planted : tuple[PlantedSignal, ...]
        Planted signal of the gold choice.
    planted_noise_rate : float
        Probability that a noise edge takes a planted triplet type.
    seed : int
        Corpus seed.
    """

    count: int = 1000
    num_choices: int = 5
    question_nodes: tuple[int, int] = (3, 6)
    answer_nodes: tuple[int, int] = (1, 3)
    other_nodes: tuple[int, int] = (3, 10)
    noise_edges: tuple[int, int] = (8, 24)
    noise_relations: tuple[int, ...] | None = None
    noise_node_types: tuple[int, ...] = (NODE_QUESTION, NODE_ANSWER, NODE_OTHER)
    planted: tuple[PlantedSignal, ...] = field(default_factory=_default_planted)
    planted_noise_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.count < 0:
            raise InvalidConfigError("count", self.count, "must be >= 0")
        if self.num_choices < 2:
            raise InvalidConfigError("num_choices", self.num_choices, "must be >= 2")
        for name in ("question_nodes", "answer_nodes", "other_nodes", "noise_edges"):
            low, high = getattr(self, name)
            if low < 0 or high < low:
                raise InvalidConfigError(name, (low, high), "expected 0 <= low <= high")
        if self.question_nodes[0] + self.answer_nodes[0] < 1:
            raise InvalidConfigError(
                "question_nodes", self.question_nodes, "graphs need one QA entity"
            )
        if not 0.0 <= self.planted_noise_rate <= 1.0:
            raise InvalidConfigError(
                "planted_noise_rate", self.planted_noise_rate, "must lie in [0, 1]"
            )
        for signal in self.planted:
            if signal.delta < 1:
                raise InvalidConfigError("planted.delta", signal.delta, "must be >= 1")
        if NODE_CONTEXT in self.noise_node_types:
            raise InvalidConfigError(
                "noise_node_types", self.noise_node_types, "the context node takes no noise"
            )

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "num_choices": self.num_choices,
            "question_nodes": list(self.question_nodes),
            "answer_nodes": list(self.answer_nodes),
            "other_nodes": list(self.other_nodes),
            "noise_edges": list(self.noise_edges),
            "noise_relations": (
                None
                if self.noise_relations is None
                else list(self.noise_relations)
            ),
            "noise_node_types": list(self.noise_node_types),
            "planted": [signal.to_dict() for signal in self.planted],
            "planted_noise_rate": self.planted_noise_rate,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SyntheticTaskConfig":
        values = dict(data)
        if "planted" in values:
            if not isinstance(values["planted"], list):
                raise InvalidConfigError(
                    "synthetic.planted", values["planted"], "expected a list"
                )
            values["planted"] = tuple(
                PlantedSignal.from_dict(item) for item in values["planted"]
            )
        try:
            for name in (
                "question_nodes",
                "answer_nodes",
                "other_nodes",
                "noise_edges",
            ):
                if name in values:
                    values[name] = tuple(values[name])
            for name in ("noise_relations", "noise_node_types"):
                if values.get(name) is not None:
                    values[name] = tuple(values[name])
            return cls(**values)
        except TypeError as error:
            raise InvalidConfigError("synthetic", sorted(data), str(error)) from error


def dissection_task_config(count: int = 2000, seed: int = 0) -> SyntheticTaskConfig:
    """
    Corpus of the dispensability experiment.

    Noise edges connect question entities only and always take one of eight
    planted ``(Q, r, Q)`` types, so every non-link count is informative.
    """
    return SyntheticTaskConfig(
        count=count,
        question_nodes=(3, 6),
        answer_nodes=(1, 3),
        other_nodes=(0, 0),
        noise_edges=(8, 24),
        noise_relations=tuple(range(8)),
        noise_node_types=(NODE_QUESTION,),
        planted=tuple(
            PlantedSignal(NODE_QUESTION, rel, NODE_QUESTION, 3) for rel in range(8)
        ),
        planted_noise_rate=1.0,
        seed=seed,
    )


def _type_range(config: SyntheticTaskConfig, node_type: int) -> tuple[int, int]:
    if node_type == NODE_CONTEXT:
        return (1, 1)
    if node_type == NODE_QUESTION:
        return config.question_nodes
    if node_type == NODE_ANSWER:
        return config.answer_nodes
    if node_type == NODE_OTHER:
        return config.other_nodes
    return (0, 0)


def check_feasible(config: SyntheticTaskConfig, vocab: TripletVocabulary) -> None:
    """
    Check that every planted signal fits every graph the config can draw.

    Raises
    ------
    GenerationError
        For planted types outside the vocabulary, tails outside the two-hop
        receptive field, or deltas above the distinct node-pair capacity.
    """
    if max(REL_QUESTION_LINK, REL_ANSWER_LINK) >= vocab.relation_count:
        raise GenerationError(
            f"the QA link relations need at least {REL_ANSWER_LINK + 1} relations, "
            f"vocabulary has {vocab.relation_count}"
        )
    for signal in config.planted:
        if not (
            0 <= signal.head_type < vocab.node_type_count
            and 0 <= signal.tail_type < vocab.node_type_count
            and 0 <= signal.relation < vocab.relation_count
        ):
            raise GenerationError(f"planted triplet {signal} is outside the vocabulary")
        if signal.tail_type not in (NODE_CONTEXT, NODE_QUESTION, NODE_ANSWER):
            raise GenerationError(
                f"planted triplet {signal} must end at a context, question or answer node"
            )
        heads = _type_range(config, signal.head_type)[0]
        tails = _type_range(config, signal.tail_type)[0]
        same_type = signal.head_type == signal.tail_type
        capacity = heads * tails - (heads if same_type else 0)
        if capacity < signal.delta:
            raise GenerationError(
                f"delta {signal.delta} of {signal} exceeds the {capacity} distinct node "
                f"pair(s) of the smallest graph"
            )
    if config.noise_edges[1] > 0:
        eligible = sum(_type_range(config, t)[0] for t in config.noise_node_types)
        if eligible < 1:
            raise GenerationError("noise edges need at least one eligible node")


def _draw(rng: np.random.Generator, bounds: tuple[int, int]) -> int:
    return int(rng.integers(bounds[0], bounds[1] + 1))


class _ChoiceBuilder:
    """Draws one choice graph."""

    def __init__(self, config: SyntheticTaskConfig, vocab: TripletVocabulary, rng):
        self.config = config
        self.vocab = vocab
        self.rng = rng
        self.planted_ids = {
            vocab.triplet_index(s.head_type, s.relation, s.tail_type)
            for s in config.planted
        }
        self.noise_relations = (
            np.array(config.noise_relations, dtype=np.int64)
            if config.noise_relations is not None
            else np.arange(vocab.base_relation_count, dtype=np.int64)
        )

    def nodes(self) -> np.ndarray:
        counts = [
            _draw(self.rng, self.config.question_nodes),
            _draw(self.rng, self.config.answer_nodes),
            _draw(self.rng, self.config.other_nodes),
        ]
        types = [NODE_CONTEXT]
        for node_type, count in zip((NODE_QUESTION, NODE_ANSWER, NODE_OTHER), counts):
            types.extend([node_type] * count)
        return np.array(types, dtype=np.int64)

    def planted_edge(
        self, types: np.ndarray, signal: PlantedSignal, used: set
    ) -> tuple:
        heads = np.flatnonzero(types == signal.head_type)
        tails = np.flatnonzero(types == signal.tail_type)
        pairs = [
            (int(h), int(t))
            for h in heads
            for t in tails
            if h != t and (int(h), int(t), signal.relation) not in used
        ]
        if not pairs:
            raise GenerationError(f"no free node pair left for {signal}")
        head, tail = pairs[int(self.rng.integers(len(pairs)))]
        used.add((head, tail, signal.relation))
        return head, tail, signal.relation

    def noise_edge(self, types: np.ndarray) -> tuple:
        if self.config.planted and self.rng.random() < self.config.planted_noise_rate:
            pick = int(self.rng.integers(len(self.config.planted)))
            signal = self.config.planted[pick]
            heads = np.flatnonzero(types == signal.head_type)
            tails = np.flatnonzero(types == signal.tail_type)
            return (
                int(heads[self.rng.integers(heads.size)]),
                int(tails[self.rng.integers(tails.size)]),
                signal.relation,
            )
        eligible = np.flatnonzero(np.isin(types, self.config.noise_node_types))
        for _ in range(100):
            src = int(eligible[self.rng.integers(eligible.size)])
            dst = int(eligible[self.rng.integers(eligible.size)])
            pick = self.rng.integers(self.noise_relations.size)
            rel = int(self.noise_relations[pick])
            triplet = self.vocab.triplet_index(int(types[src]), rel, int(types[dst]))
            if triplet not in self.planted_ids:
                return src, dst, rel
        raise GenerationError(
            "noise edges keep hitting planted triplet types; widen the noise relations "
            "or set planted_noise_rate"
        )

    def build(self, gold: bool) -> SchemaGraph:
        types = self.nodes()
        edges = []
        for node in range(1, types.size):
            if types[node] == NODE_QUESTION:
                edges.append((node, 0, REL_QUESTION_LINK))
            elif types[node] == NODE_ANSWER:
                edges.append((node, 0, REL_ANSWER_LINK))
        n_noise = _draw(self.rng, self.config.noise_edges)
        for _ in range(n_noise):
            edges.append(self.noise_edge(types))
        if gold:
            used: set = set()
            for signal in self.config.planted:
                for _ in range(signal.delta):
                    edges.append(self.planted_edge(types, signal, used))
        return symmetrize(SchemaGraph.from_edges(types, edges), self.vocab)


def generate_instance(
    index: int, config: SyntheticTaskConfig, vocab: TripletVocabulary
) -> QAInstance:
    """Draw instance ``index`` of the corpus from its own random stream."""
    rng = np.random.default_rng([config.seed, index])
    builder = _ChoiceBuilder(config, vocab, rng)
    label = int(rng.integers(config.num_choices))
    choices = tuple(
        Choice(graph=builder.build(gold=choice == label), context_score=None)
        for choice in range(config.num_choices)
    )
    return QAInstance(id=f"syn-{config.seed}-{index:06d}", label=label, choices=choices)


@UtilsMonitoring.time_spend(level="INFO")
def generate_synthetic(
    config: SyntheticTaskConfig, vocab: TripletVocabulary | None = None
) -> list[QAInstance]:
    """
    Generate a corpus.

    Raises
    ------
    GenerationError
        If the configuration cannot be realised.
    """
    vocab = vocab if vocab is not None else TripletVocabulary()
    check_feasible(config, vocab)
    instances = [
        generate_instance(index, config, vocab) for index in range(config.count)
    ]
    log_stat(
        "generate",
        count=config.count,
        num_choices=config.num_choices,
        seed=config.seed,
        planted=len(config.planted),
    )
    logger.info(
        "generated {n} instance(s) | seed={seed}", n=config.count, seed=config.seed
    )
    return instances


def planted_counts(graph: SchemaGraph, config: SyntheticTaskConfig, vocab) -> int:
    """Number of edges of ``graph`` with a planted triplet type."""
    ids = graph.triplet_ids(vocab)
    planted = [
        vocab.triplet_index(s.head_type, s.relation, s.tail_type)
        for s in config.planted
    ]
    return int(np.isin(ids, planted).sum())


def counting_rule(instance: QAInstance, config: SyntheticTaskConfig, vocab) -> int:
    """Hand-written counter: choice with most planted edges, lowest index on ties."""
    counts = [
        planted_counts(choice.graph, config, vocab) for choice in instance.choices
    ]
    return int(np.argmax(counts))


def generate_sparse_regression(
    n_rows: int = 2000,
    n_features: int = 20,
    n_active: int = 10,
    noise_std: float = 0.1,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Linear regression data with ``n_features - n_active`` true-zero coefficients.

    Active coefficients have magnitudes in ``[0.5, 1.5]`` and random signs.

    Returns
    -------
    tuple
        Design matrix ``[n, d]``, responses ``[n]`` and true coefficients ``[d]``.
    """
    if not 0 <= n_active <= n_features:
        raise InvalidConfigError("n_active", n_active, f"must lie in [0, {n_features}]")
    rng = np.random.default_rng(seed)
    coefficients = np.zeros(n_features)
    active = rng.choice(n_features, size=n_active, replace=False)
    magnitudes = rng.uniform(0.5, 1.5, n_active)
    coefficients[active] = magnitudes * rng.choice([-1.0, 1.0], n_active)
    features = rng.standard_normal((n_rows, n_features))
    targets = features @ coefficients + noise_std * rng.standard_normal(n_rows)
    return features, targets, coefficients
