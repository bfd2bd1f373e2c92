import csv

import numpy as np
import pytest
from softcounter.autodiff import Value
from softcounter.counter import CounterConfig
from softcounter.counter import CounterHead
from softcounter.counter import count_features
from softcounter.counter import count_features_1hop
from softcounter.counter import count_features_2hop
from softcounter.counter import counter_forward
from softcounter.counter import counter_scores
from softcounter.counter import feature_dim
from softcounter.counter import observed_scope
from softcounter.counter import write_feature_csv
from softcounter.exception import InvalidConfigError
from softcounter.exception import ShapeError
from softcounter.schema_graph import SchemaGraph


# -----------------------------------------------------------------------------
# Features
# -----------------------------------------------------------------------------


def test_one_hop_histogram(tiny_graph, vocab):
    feature = count_features_1hop(tiny_graph, vocab)
    assert feature.dim == 608
    assert feature.values.sum() == tiny_graph.num_edges
    assert feature.values[vocab.triplet_index(1, 34, 0)] == 2.0
    assert feature.values[vocab.triplet_index(2, 36, 0)] == 1.0


def test_feature_dimensions(vocab):
    assert feature_dim(vocab, CounterConfig()) == 608
    assert feature_dim(vocab, CounterConfig(mode="two_hop")) == 608 + 38 * 38
    typed = CounterConfig(mode="two_hop", pair_typing="triplet")
    assert feature_dim(vocab, typed) == 608 + 608 * 608


def test_two_hop_relation_pairs(tiny_graph, vocab):
    # path 2 -> 3 -> 0 (relations 2, 36) and 2 -> 3 -> 2 (relations 2, 19)
    feature = count_features_2hop(tiny_graph, vocab)
    assert feature.dim == 608 + 38 * 38
    assert feature.values[608 + 2 * 38 + 36] == 1.0
    assert feature.values[608 + 2 * 38 + 19] == 1.0
    context = count_features_2hop(tiny_graph, vocab, context_only=True)
    assert context.values[608 + 2 * 38 + 36] == 1.0
    assert context.values[608 + 2 * 38 + 19] == 0.0


def test_two_hop_triplet_pairs(tiny_graph, vocab):
    config = CounterConfig(mode="two_hop", pair_typing="triplet")
    feature = count_features(tiny_graph, vocab, config)
    first = vocab.triplet_index(1, 2, 2)
    second = vocab.triplet_index(2, 36, 0)
    assert feature.values[608 + first * 608 + second] == 1.0


@pytest.mark.parametrize(
    "config",
    [
        CounterConfig(),
        CounterConfig(mode="two_hop"),
        CounterConfig(mode="two_hop", context_only=True),
        CounterConfig(mode="two_hop", pair_typing="triplet"),
    ],
)
def test_features_ignore_edge_order(make_random_graph, vocab, config):
    rng = np.random.default_rng(4)
    head = CounterHead.init(feature_dim(vocab, config), hidden_dim=4, seed=1)
    for _ in range(5):
        graph = make_random_graph(rng)
        order = rng.permutation(graph.num_edges)
        shuffled = SchemaGraph(
            graph.node_types, graph.src[order], graph.dst[order], graph.rel[order]
        )
        feature = count_features(graph, vocab, config)
        again = count_features(shuffled, vocab, config)
        assert np.array_equal(feature.values, again.values)
        assert counter_forward(again, head) == counter_forward(feature, head)


def test_observed_scope():
    features = np.array([[0.0, 2.0, 0.0, 1.0], [0.0, 0.0, 0.0, 3.0]])
    assert observed_scope(features).tolist() == [1, 3]


def test_write_feature_csv(tmp_path, tiny_graph, vocab):
    path = tmp_path / "features.csv"
    write_feature_csv(count_features_1hop(tiny_graph, vocab), path)
    with open(path, encoding="utf-8") as stream:
        rows = list(csv.reader(stream))
    assert rows[0] == ["feature_index", "count"]
    assert sum(int(row[1]) for row in rows[1:]) == tiny_graph.num_edges


# -----------------------------------------------------------------------------
# Head
# -----------------------------------------------------------------------------


@pytest.mark.parametrize(
    "kwargs",
    [
        {"mode": "three_hop"},
        {"pair_typing": "path"},
        {"scope": "some"},
        {"hidden_dim": 0},
    ],
)
def test_invalid_config(kwargs):
    with pytest.raises(InvalidConfigError):
        CounterConfig(**kwargs)


def test_head_parameter_count():
    assert CounterHead.init(608).parameter_count == 608 * 32 + 32 + 32 + 1


def test_counter_forward_matches_batch_scores(tiny_graph, vocab):
    head = CounterHead.init(608, hidden_dim=8, seed=2)
    feature = count_features_1hop(tiny_graph, vocab)
    batch = counter_scores(Value(np.stack([feature.values, feature.values])), head)
    assert counter_forward(feature, head) == pytest.approx(batch.data[0])
    assert batch.data[0] == batch.data[1]


def test_counter_forward_rejects_wrong_dimension():
    head = CounterHead.init(10, hidden_dim=4)
    with pytest.raises(ShapeError):
        counter_forward(np.zeros(11), head)
