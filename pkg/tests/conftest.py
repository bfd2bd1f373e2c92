import logging
import sys

import numpy as np
import pytest
from loguru import logger
from softcounter.schema_graph import SchemaGraph
from softcounter.schema_graph import symmetrize
from softcounter.synthetic import SyntheticTaskConfig
from softcounter.synthetic import generate_synthetic
from softcounter.vocabulary import TripletVocabulary


@pytest.fixture(autouse=True, scope="session")
def configure_logging(request):
    logger.remove()
    log_level = request.config.getoption("log_cli_level")
    if log_level is None:
        log_level = "INFO"
    logger.add(sys.stdout, level=log_level.upper())


class InterceptHandler(logging.Handler):
    def emit(self, record):
        # Forward to the standard logging module
        logging.getLogger(record.name).handle(record)


def pytest_configure(config):
    logger.remove()
    log_level = config.getoption("log_cli_level")
    if log_level is None:
        log_level = "INFO"
    logger.add(InterceptHandler(), level=log_level.upper())


def pytest_collection_modifyitems(items):
    for item in items:
        # Skip the tests that involve TestsVersion
        if "TestsVersion" in str(item.nodeid):
            item.add_marker(pytest.mark.skip(reason="TestsVersion is not a test case"))


# -----------------------------------------------------------------------------
# Shared fixtures
# -----------------------------------------------------------------------------


@pytest.fixture
def vocab():
    """Default layout: 4 node types, 38 relations, 46-dim one-hot."""
    return TripletVocabulary()


@pytest.fixture
def tiny_graph(vocab):
    """
    Context node, two question entities and one answer entity::

        1 -34-> 0,  2 -34-> 0,  3 -36-> 0,  2 -2-> 3

    symmetrized.
    """
    graph = SchemaGraph.from_edges(
        [0, 1, 1, 2], [(1, 0, 34), (2, 0, 34), (3, 0, 36), (2, 3, 2)]
    )
    return symmetrize(graph, vocab)


def random_symmetric_graph(rng, vocab, max_nodes=20, max_edges=30):
    """Random valid graph, symmetrized (at most ``2 * max_edges`` edges)."""
    n_nodes = int(rng.integers(1, max_nodes + 1))
    node_types = rng.integers(1, vocab.node_type_count, n_nodes)
    node_types[0] = 0
    n_edges = int(rng.integers(0, max_edges + 1))
    edges = np.stack(
        [
            rng.integers(0, n_nodes, n_edges),
            rng.integers(0, n_nodes, n_edges),
            rng.integers(0, vocab.base_relation_count, n_edges),
        ],
        axis=1,
    )
    return symmetrize(SchemaGraph.from_edges(node_types, edges), vocab)


@pytest.fixture
def small_task():
    """Small default-shaped corpus configuration."""
    return SyntheticTaskConfig(count=40, seed=3)


@pytest.fixture
def small_corpus(small_task, vocab):
    return generate_synthetic(small_task, vocab)


@pytest.fixture
def make_random_graph(vocab):
    """Factory of random symmetric graphs drawn from a numpy generator."""

    def make(rng, max_nodes=20, max_edges=30):
        return random_symmetric_graph(rng, vocab, max_nodes, max_edges)

    return make
