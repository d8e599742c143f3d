import numpy as np
import pytest
from scipy import sparse

from graphactive.graph import SimilarityGraph, build_graph


def graph_from_dense(W):
    return SimilarityGraph(sparse.csr_matrix(np.asarray(W, dtype=np.float64)))


def path_graph(n):
    W = np.zeros((n, n))
    for i in range(n - 1):
        W[i, i + 1] = W[i + 1, i] = 1.0
    return graph_from_dense(W)


@pytest.fixture(scope="session")
def uniform_cloud():
    rng = np.random.default_rng(42)
    return rng.random((120, 3))


@pytest.fixture(scope="session")
def uniform_graph(uniform_cloud):
    return build_graph(uniform_cloud, k=8, metric="euclidean")


@pytest.fixture()
def two_node_graph():
    return graph_from_dense([[0.0, 1.0], [1.0, 0.0]])


@pytest.fixture()
def triangle_graph():
    return graph_from_dense(np.ones((3, 3)) - np.eye(3))
