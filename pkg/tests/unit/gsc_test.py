import csv

import numpy as np
import pytest
from softcounter import autodiff as ad
from softcounter.autodiff import Tape
from softcounter.autodiff import Value
from softcounter.counter import count_features_1hop
from softcounter.exception import ContractError
from softcounter.exception import InvalidConfigError
from softcounter.exception import MissingScoreError
from softcounter.gradcheck import grad_check
from softcounter.gsc import GSCConfig
from softcounter.gsc import GSCParams
from softcounter.gsc import choice_score
from softcounter.gsc import dump_soft_counts
from softcounter.gsc import edge_encoder_forward
from softcounter.gsc import gsc_forward
from softcounter.gsc import instance_forward
from softcounter.gsc import path_sum_oracle
from softcounter.gsc import prepare_graph
from softcounter.gsc import trace_layers
from softcounter.gsc import trace_to_json
from softcounter.gsc import triplet_table
from softcounter.gsc import union_graphs
from softcounter.gsc import union_scores
from softcounter.gsc import write_soft_counts_csv
from softcounter.schema_graph import Choice
from softcounter.schema_graph import QAInstance
from softcounter.schema_graph import SchemaGraph


# -----------------------------------------------------------------------------
# Fixtures
# -----------------------------------------------------------------------------


@pytest.fixture
def params(vocab):
    return GSCParams.init(vocab, seed=0)


@pytest.fixture
def other_graph():
    """Answer-heavy graph with a two-hop path into the context node."""
    return SchemaGraph.from_edges(
        [0, 1, 2, 3, 2],
        [(1, 0, 34), (2, 0, 36), (4, 0, 36), (3, 2, 5), (1, 3, 8), (4, 3, 16)],
    )


@pytest.fixture
def instance(tiny_graph, other_graph):
    return QAInstance("q-0", 1, (Choice(tiny_graph, 0.5), Choice(other_graph, -0.5)))


# -----------------------------------------------------------------------------
# Parameters and configuration
# -----------------------------------------------------------------------------


def test_default_parameter_count(params):
    assert params.parameter_count == 46 * 32 + 32 + 32 + 1
    assert params.parameter_count < 3000


@pytest.mark.parametrize(
    "kwargs",
    [
        {"num_layers": 0},
        {"max_nodes": 0},
        {"context_provider": "oracle"},
        {"hidden_dim": 0},
        {"activation": "gelu"},
        {"edge_state": "decay"},
    ],
)
def test_invalid_config(kwargs):
    with pytest.raises(InvalidConfigError):
        GSCConfig(**kwargs)


def test_init_is_seeded(vocab):
    first = GSCParams.init(vocab, seed=4)
    second = GSCParams.init(vocab, seed=4)
    assert np.array_equal(first.w1.data, second.w1.data)
    assert not np.array_equal(first.w1.data, GSCParams.init(vocab, seed=5).w1.data)


# -----------------------------------------------------------------------------
# Edge encoder
# -----------------------------------------------------------------------------


def test_edge_values_are_soft_counts(tiny_graph, params, vocab):
    values = edge_encoder_forward(tiny_graph, params, vocab)
    assert values.shape == (tiny_graph.num_edges,)
    assert np.all((values > 0.0) & (values < 1.0))
    # edges 0 and 1 share the triplet (Q entity, question link, context)
    assert values[0] == values[1]


def test_zero_parameters_give_half_counts(vocab):
    rows = dump_soft_counts(GSCParams.zeros(vocab), vocab, top_k=None)
    assert len(rows) == 608
    assert all(row.soft_count == 0.5 for row in rows)
    assert (rows[0].head_type, rows[0].relation, rows[0].tail_type) == (0, 0, 0)
    assert (rows[1].head_type, rows[1].relation, rows[1].tail_type) == (0, 0, 1)


def test_dump_is_sorted(params, vocab):
    rows = dump_soft_counts(params, vocab, top_k=30)
    assert len(rows) == 30
    counts = [row.soft_count for row in rows]
    assert counts == sorted(counts, reverse=True)


def test_write_soft_counts_csv(tmp_path, params, vocab):
    rows = dump_soft_counts(GSCParams.zeros(vocab), vocab, top_k=2)
    path = tmp_path / "counts" / "soft.csv"
    write_soft_counts_csv(rows, path, vocab, named=True)
    with open(path, encoding="utf-8") as stream:
        lines = list(csv.reader(stream))
    assert lines[0] == ["head_type", "relation", "tail_type", "soft_count"]
    assert lines[1] == ["context", "is the antonym of", "context", "0.5"]
    assert len(lines) == 3


# -----------------------------------------------------------------------------
# Soft counting
# -----------------------------------------------------------------------------


def test_single_layer_sums_edges_into_context(other_graph):
    values = np.arange(1.0, 7.0)
    assert gsc_forward(other_graph, values, num_layers=1) == 1.0 + 2.0 + 3.0


def test_two_layers_add_paths_of_length_two(other_graph):
    values = np.arange(1.0, 7.0)
    # only node 2 has an incoming edge among the context neighbours
    assert gsc_forward(other_graph, values, num_layers=2) == 6.0 + 4.0


def test_value_and_array_paths_agree(tiny_graph):
    values = np.linspace(0.1, 0.8, tiny_graph.num_edges)
    edge_values = Value(values)
    with Tape() as tape:
        score = gsc_forward(tiny_graph, edge_values, num_layers=3)
        tape.backward(score)
    assert score.item() == pytest.approx(gsc_forward(tiny_graph, values, num_layers=3))
    assert np.all(edge_values.grad >= 0.0)


def test_edge_value_count_mismatch(tiny_graph):
    with pytest.raises(ContractError):
        gsc_forward(tiny_graph, np.zeros(3))
    with pytest.raises(ContractError):
        gsc_forward(tiny_graph, Value(np.zeros(3)))


@pytest.mark.parametrize("edge_state", ["accumulate", "reset"])
@pytest.mark.parametrize("num_layers", [1, 2, 3])
def test_layers_match_path_enumeration(make_random_graph, num_layers, edge_state):
    rng = np.random.default_rng(num_layers)
    for _ in range(10):
        graph = make_random_graph(rng)
        values = rng.uniform(0.0, 1.0, graph.num_edges)
        expected = path_sum_oracle(graph, values, num_layers, edge_state)
        actual = gsc_forward(graph, values, num_layers, edge_state)
        assert actual == pytest.approx(expected, abs=1e-9, rel=1e-12)


def _hops_to_context(graph: SchemaGraph, max_hops: int) -> np.ndarray:
    """Directed hop count from every node to node 0, exact up to ``max_hops``."""
    hops = np.full(graph.num_nodes, np.inf)
    hops[0] = 0.0
    for _ in range(max_hops):
        for src, dst in zip(graph.src, graph.dst):
            hops[src] = min(hops[src], hops[dst] + 1.0)
    return hops


def _on_context_paths(graph: SchemaGraph, num_layers: int) -> np.ndarray:
    """Edges lying on a directed path of at most ``num_layers`` edges ending at node 0."""
    return _hops_to_context(graph, num_layers)[graph.dst] <= num_layers - 1


@pytest.mark.parametrize("edge_state", ["accumulate", "reset"])
@pytest.mark.parametrize("num_layers", [1, 2, 3])
def test_score_ignores_edges_off_context_paths(
    make_random_graph, num_layers, edge_state
):
    rng = np.random.default_rng(10 + num_layers)
    for _ in range(20):
        graph = make_random_graph(rng)
        values = rng.uniform(0.0, 1.0, graph.num_edges)
        kept = _on_context_paths(graph, num_layers)
        reduced = SchemaGraph(
            graph.node_types, graph.src[kept], graph.dst[kept], graph.rel[kept]
        )
        assert gsc_forward(reduced, values[kept], num_layers, edge_state) == (
            gsc_forward(graph, values, num_layers, edge_state)
        )


@pytest.mark.parametrize("edge_state", ["accumulate", "reset"])
def test_score_grows_with_edge_values_on_context_paths(make_random_graph, edge_state):
    rng = np.random.default_rng(21)
    for _ in range(10):
        graph = make_random_graph(rng)
        values = rng.uniform(0.0, 1.0, graph.num_edges)
        base = gsc_forward(graph, values, 2, edge_state)
        relevant = _on_context_paths(graph, 2)
        for edge in range(graph.num_edges):
            raised = values.copy()
            raised[edge] += 0.5
            score = gsc_forward(graph, raised, 2, edge_state)
            if relevant[edge]:
                assert score > base
            else:
                assert score == base


@pytest.mark.parametrize("edge_state", ["accumulate", "reset"])
def test_score_is_linear_in_edge_values(make_random_graph, edge_state):
    rng = np.random.default_rng(5)
    for _ in range(10):
        graph = make_random_graph(rng)
        first = rng.uniform(0.0, 1.0, graph.num_edges)
        second = rng.uniform(0.0, 1.0, graph.num_edges)
        combined = gsc_forward(graph, 2.0 * first + 3.0 * second, 3, edge_state)
        expected = 2.0 * gsc_forward(graph, first, 3, edge_state) + 3.0 * (
            gsc_forward(graph, second, 3, edge_state)
        )
        assert combined == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_single_layer_weighs_context_edge_histogram(make_random_graph, params, vocab):
    rng = np.random.default_rng(8)
    table = triplet_table(params, vocab).data
    for _ in range(10):
        graph = make_random_graph(rng)
        into_context = graph.dst == 0
        incoming = SchemaGraph(
            graph.node_types,
            graph.src[into_context],
            graph.dst[into_context],
            graph.rel[into_context],
        )
        counts = count_features_1hop(incoming, vocab).values
        score = gsc_forward(graph, edge_encoder_forward(graph, params, vocab), 1)
        assert score == pytest.approx(float(table @ counts), rel=1e-12, abs=1e-12)


def test_single_layer_counts_repeated_edges(params, vocab, tiny_graph):
    table = triplet_table(params, vocab).data
    soft_count = table[vocab.triplet_index(1, 34, 0)]
    base = gsc_forward(tiny_graph, edge_encoder_forward(tiny_graph, params, vocab), 1)
    for extra in (1, 3):
        graph = SchemaGraph.from_edges(
            tiny_graph.node_types, tiny_graph.edges + [(1, 0, 34)] * extra
        )
        score = gsc_forward(graph, edge_encoder_forward(graph, params, vocab), 1)
        assert score == pytest.approx(base + extra * soft_count)


def test_trace_ends_with_graph_score(tiny_graph, params, vocab):
    config = GSCConfig(vocab=vocab)
    snapshots = trace_layers(tiny_graph, params, config)
    assert [snapshot.layer for snapshot in snapshots] == [1, 2]
    score = choice_score(tiny_graph, params, config)
    assert snapshots[-1].node_values[0] == pytest.approx(score)
    data = trace_to_json(tiny_graph, snapshots, id="q-0")
    assert data["id"] == "q-0"
    assert len(data["layers"]) == 2
    assert len(data["edges"]) == tiny_graph.num_edges


# -----------------------------------------------------------------------------
# Choices and instances
# -----------------------------------------------------------------------------


def test_prepare_graph_filters_then_caps(vocab):
    graph = SchemaGraph.from_edges(
        [0, 3, 2, 1], [(3, 0, 34), (2, 0, 36), (1, 3, 4)]
    )
    config = GSCConfig(vocab=vocab, qa_nodes_only=True, max_nodes=2)
    prepared = prepare_graph(graph, config)
    assert prepared.node_types.tolist() == [0, 1]
    assert prepared.edges == [(1, 0, 34), (0, 1, 35)]


def test_context_providers(instance, params, vocab):
    base = instance_forward(instance, params, GSCConfig(vocab=vocab))
    constant = instance_forward(
        instance,
        params,
        GSCConfig(vocab=vocab, context_provider="constant", context_constant=2.0),
    )
    from_file = instance_forward(
        instance, params, GSCConfig(vocab=vocab, context_provider="from_file")
    )
    assert np.allclose(constant - base, 2.0)
    assert np.allclose(from_file - base, [0.5, -0.5])


def test_missing_context_score(tiny_graph, params, vocab):
    instance = QAInstance("q-9", 0, (Choice(tiny_graph), Choice(tiny_graph, 1.0)))
    with pytest.raises(MissingScoreError):
        instance_forward(
            instance, params, GSCConfig(vocab=vocab, context_provider="from_file")
        )


def test_union_scores_match_single_graphs(instance, params, vocab):
    config = GSCConfig(vocab=vocab)
    graphs = [prepare_graph(choice.graph, config) for choice in instance.choices]
    union = union_graphs(graphs, vocab)
    assert union.roots.tolist() == [0, graphs[0].num_nodes]
    scores = union_scores(union, params, config)
    expected = [choice_score(graph, params, config) for graph in graphs]
    assert np.allclose(scores.data, expected)


def test_end_to_end_gradients(instance, vocab):
    config = GSCConfig(vocab=vocab, hidden_dim=8, activation="tanh")
    params = GSCParams.init(vocab, hidden_dim=8, seed=1)
    union = union_graphs(
        [prepare_graph(choice.graph, config) for choice in instance.choices], vocab
    )

    def loss():
        return ad.softmax_cross_entropy(union_scores(union, params, config), 1)

    values = list(params.named_parameters().values())
    assert grad_check(loss, values, step=1e-5) < 1e-4
