"""Similarity graph construction on point clouds.

Graphs are built by exact k-nearest-neighbor search followed by self-tuning
Gaussian weights

    w_ij = exp(-4 |x_i - x_j|^2 / d_k(x_i)^2)

where d_k(x_i) is the distance from x_i to its k-th nearest neighbor, and the
directed kNN matrix is symmetrized by W <- W + W^T (mutual edges sum). The
angular metric normalizes rows to the unit sphere and measures Euclidean
distance there.
"""

import hashlib
import struct

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import ConnectivityError, DataFormatError, ParameterError
from .validation import check_feature_matrix, check_positive

_BLOCK = 256

LAPLACIAN_KINDS = ("combinatorial", "normalized", "randomwalk")


def _unit_rows(X):
    norms = np.sqrt(np.einsum("ij,ij->i", X, X))
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise DataFormatError(
            "row %d has zero norm; angular metric undefined" % zero[0]
        )
    return X / norms[:, None]


def angular_distance(a, b):
    """Euclidean distance between unit-normalized vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise DataFormatError("zero-norm vector; angular metric undefined")
    return float(np.linalg.norm(a / na - b / nb))


def knn_search(X, k, metric="angular"):
    """Exact k nearest neighbors of every row, self excluded.

    Returns (indices, distances), each of shape (n, k), neighbors sorted by
    ascending distance. Ties resolve to the lower node index. Distances are
    recomputed per selected pair so exact duplicates report exactly 0.
    """
    X = check_feature_matrix(X)
    if metric == "angular":
        X = _unit_rows(X)
    elif metric != "euclidean":
        raise ParameterError("unknown metric %r" % (metric,))
    n = X.shape[0]
    k = int(k)
    if not 1 <= k < n:
        raise ParameterError("k must satisfy 1 <= k < n, got k=%d, n=%d" % (k, n))

    sq_norms = np.einsum("ij,ij->i", X, X)
    indices = np.empty((n, k), dtype=np.int64)
    distances = np.empty((n, k))
    for start in range(0, n, _BLOCK):
        stop = min(start + _BLOCK, n)
        rows = np.arange(start, stop)
        d2 = sq_norms[rows, None] + sq_norms[None, :] - 2.0 * (X[rows] @ X.T)
        np.maximum(d2, 0.0, out=d2)
        d2[np.arange(rows.size), rows] = np.inf
        # stable sort on identical d2 bit patterns gives the lower index first
        order = np.argsort(d2, axis=1, kind="stable")[:, :k]
        indices[rows] = order
        diff = X[rows][:, None, :] - X[order]
        distances[rows] = np.sqrt(np.einsum("bkd,bkd->bk", diff, diff))
    return indices, distances


def _selftuning_weights(distances, k):
    d_k = distances[:, k - 1]
    weights = np.ones_like(distances)
    scaled = d_k > 0.0
    weights[scaled] = np.exp(
        -4.0 * distances[scaled] ** 2 / d_k[scaled, None] ** 2
    )
    return weights


class SimilarityGraph:
    """A connected, undirected, non-negatively weighted graph.

    Wraps a symmetric CSR weight matrix with zero diagonal. Construction
    validates symmetry, sign, and connectivity; a disconnected matrix raises
    ConnectivityError listing the component sizes.
    """

    def __init__(self, weights):
        W = sparse.csr_matrix(weights, dtype=np.float64)
        if W.shape[0] != W.shape[1]:
            raise ParameterError("weight matrix must be square, got %s" % (W.shape,))
        W.eliminate_zeros()
        W.sort_indices()
        if W.diagonal().any():
            raise DataFormatError("weight matrix has nonzero diagonal")
        if W.nnz and W.data.min() < 0.0:
            raise DataFormatError("negative edge weight")
        if not np.isfinite(W.data).all():
            raise DataFormatError("non-finite edge weight")
        if (W != W.T).nnz:
            raise DataFormatError("weight matrix is not symmetric")
        n_comp, assignment = csgraph.connected_components(W, directed=False)
        if n_comp > 1:
            sizes = np.bincount(assignment)
            raise ConnectivityError(sorted((int(s) for s in sizes), reverse=True))
        self.weights = W
        self.degrees = np.asarray(W.sum(axis=1)).ravel()
        self._laplacians = {}

    @property
    def n_nodes(self):
        return self.weights.shape[0]

    @property
    def n_edges(self):
        return self.weights.nnz // 2

    def laplacian(self, kind="combinatorial"):
        """Graph Laplacian as sparse CSR (cached per kind; treat as read-only).

        combinatorial: D - W
        normalized:    I - D^{-1/2} W D^{-1/2}
        randomwalk:    I - D^{-1} W
        """
        if kind in self._laplacians:
            return self._laplacians[kind]
        W = self.weights
        n = self.n_nodes
        d = self.degrees
        if kind == "combinatorial":
            L = (sparse.diags(d) - W).tocsr()
        elif kind not in LAPLACIAN_KINDS:
            raise ParameterError("unknown laplacian kind %r" % (kind,))
        elif (d == 0.0).any():
            raise ParameterError("%s laplacian undefined for isolated nodes" % kind)
        elif kind == "normalized":
            s = sparse.diags(1.0 / np.sqrt(d))
            L = (sparse.identity(n, format="csr") - s @ W @ s).tocsr()
        else:
            L = (sparse.identity(n, format="csr") - sparse.diags(1.0 / d) @ W).tocsr()
        self._laplacians[kind] = L
        return L

    def _upper_coo(self):
        coo = sparse.triu(self.weights, k=1).tocoo()
        order = np.lexsort((coo.col, coo.row))
        return coo.row[order], coo.col[order], coo.data[order]

    def content_hash(self):
        """SHA-256 over the canonical edge list; stable across round-trips."""
        row, col, data = self._upper_coo()
        h = hashlib.sha256()
        h.update(struct.pack("<Q", self.n_nodes))
        h.update(row.astype("<u8").tobytes())
        h.update(col.astype("<u8").tobytes())
        h.update(data.astype("<f8").tobytes())
        return h.hexdigest()


def build_graph(X, k=20, metric="angular", kernel="selftuning", sigma=None):
    """kNN similarity graph over the rows of X.

    kernel "selftuning" uses the per-node bandwidth d_k(x_i); "global-sigma"
    uses exp(-dist^2 / sigma^2) with one fixed width.
    """
    check_positive(k, "k")
    indices, distances = knn_search(X, k, metric)
    n = indices.shape[0]
    if kernel == "selftuning":
        weights = _selftuning_weights(distances, int(k))
    elif kernel == "global-sigma":
        if sigma is None:
            raise ParameterError("global-sigma kernel requires sigma")
        check_positive(sigma, "sigma")
        weights = np.exp(-(distances ** 2) / float(sigma) ** 2)
    else:
        raise ParameterError("unknown kernel %r" % (kernel,))
    rows = np.repeat(np.arange(n), int(k))
    W = sparse.csr_matrix(
        (weights.ravel(), (rows, indices.ravel())), shape=(n, n)
    )
    W = W + W.T
    return SimilarityGraph(W)


def save_graph(graph, path):
    """Write the edge list: header line ``n nnz``, then ``i j w`` with i < j."""
    row, col, data = graph._upper_coo()
    with open(path, "w") as f:
        f.write("%d %d\n" % (graph.n_nodes, row.size))
        for i, j, w in zip(row, col, data):
            f.write("%d %d %s\n" % (i, j, repr(float(w))))


def load_graph(path):
    with open(path) as f:
        header = f.readline().split()
        if len(header) != 2:
            raise DataFormatError("graph header must be 'n nnz'")
        try:
            n, nnz = int(header[0]), int(header[1])
        except ValueError:
            raise DataFormatError("graph header must be 'n nnz'") from None
        if n < 1 or nnz < 0:
            raise DataFormatError("bad graph header (n=%d, nnz=%d)" % (n, nnz))
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz)
        for e in range(nnz):
            parts = f.readline().split()
            if len(parts) != 3:
                raise DataFormatError("edge %d: expected 'i j w'" % e)
            try:
                i, j, w = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError:
                raise DataFormatError("edge %d: cannot parse %r" % (e, parts)) from None
            if not 0 <= i < j < n:
                raise DataFormatError(
                    "edge %d: indices (%d, %d) must satisfy 0 <= i < j < n" % (e, i, j)
                )
            rows[e], cols[e], vals[e] = i, j, w
        if f.readline().strip():
            raise DataFormatError("trailing data after %d edges" % nnz)
    W = sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return SimilarityGraph(W + W.T)
