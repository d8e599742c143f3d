"""Graph-based semi-supervised classifiers.

Two label-propagation models over a fixed similarity graph:

- Laplace learning: the harmonic extension of the labels. Labeled rows are
  pinned to their one-hot encodings and unlabeled rows solve
  L_uu U_u = -L_ul Y.
- Gaussian regression: the minimizer of <U, LU> + (1/gamma^2) sum_j ||u(j) -
  e_{y_j}||^2, computed as (L + (1/gamma^2) P^T P) U = (1/gamma^2) P^T Y.

Both reduce to one SPD solve per class column, done with preconditioned
conjugate gradients (see solvers). Plain functions carry the math; the
estimator classes wrap them in a fit/predict interface.
"""

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from sklearn.base import BaseEstimator

from .errors import ParameterError
from .solvers import block_cg
from .validation import check_index_array, check_label_array, check_positive


def one_hot(labels, n_classes):
    labels = np.asarray(labels, dtype=np.int64)
    Y = np.zeros((labels.shape[0], int(n_classes)))
    Y[np.arange(labels.shape[0]), labels] = 1.0
    return Y


@dataclass(frozen=True)
class LabelState:
    """The labeled index set, its labels, and the fixed class count.

    Immutable; extended() returns a new state so concurrent readers can hold
    snapshots. K is fixed up front: classes not yet observed still occupy
    columns of the one-hot matrix.
    """

    labeled: np.ndarray
    labels: np.ndarray
    n_classes: int
    n_nodes: int

    def __post_init__(self):
        labeled = check_index_array(self.labeled, self.n_nodes, "labeled")
        labels = check_label_array(self.labels, self.n_classes, "labels")
        if labeled.shape[0] != labels.shape[0]:
            raise ParameterError(
                "%d labeled indices but %d labels" % (labeled.shape[0], labels.shape[0])
            )
        object.__setattr__(self, "labeled", labeled)
        object.__setattr__(self, "labels", labels)

    @property
    def n_labeled(self):
        return self.labeled.shape[0]

    @property
    def one_hot_matrix(self):
        return one_hot(self.labels, self.n_classes)

    def unlabeled(self):
        mask = np.ones(self.n_nodes, dtype=bool)
        mask[self.labeled] = False
        return np.flatnonzero(mask)

    def extended(self, index, label):
        if index in self.labeled:
            raise ParameterError("node %d is already labeled" % index)
        return LabelState(
            np.append(self.labeled, np.int64(index)),
            np.append(self.labels, np.int64(label)),
            self.n_classes,
            self.n_nodes,
        )


def laplace_learn(graph, state, tol=1e-8, x0=None):
    """Harmonic extension of the labels: the n x K node function U*.

    Labeled rows equal their one-hot encodings exactly (imposed, not
    solved); unlabeled rows satisfy u(x_i)^T = (1/d_i) sum_j W_ij u(x_j)^T.
    x0 (a full n x K matrix, typically the previous solution) warm-starts
    the unlabeled solve.
    """
    if state.n_labeled == 0:
        raise ParameterError("laplace_learn requires at least one label")
    n = graph.n_nodes
    if state.n_nodes != n:
        raise ParameterError(
            "label state covers %d nodes, graph has %d" % (state.n_nodes, n)
        )
    Y = state.one_hot_matrix
    U = np.empty((n, state.n_classes))
    U[state.labeled] = Y
    unlabeled = state.unlabeled()
    if unlabeled.size:
        L = graph.laplacian("combinatorial")
        Luu = L[unlabeled][:, unlabeled]
        B = -(L[unlabeled][:, state.labeled] @ Y)
        start = None if x0 is None else np.asarray(x0)[unlabeled]
        U[unlabeled] = block_cg(Luu, B, x0=start, tol=tol, diag=Luu.diagonal())
    return U


def gr_solve(graph, state, gamma=0.5, tol=1e-8, x0=None):
    """Gaussian-regression node function U*_GR for penalty weight gamma."""
    if state.n_labeled == 0:
        raise ParameterError("gr_solve requires at least one label")
    check_positive(gamma, "gamma")
    n = graph.n_nodes
    if state.n_nodes != n:
        raise ParameterError(
            "label state covers %d nodes, graph has %d" % (state.n_nodes, n)
        )
    inv_g2 = 1.0 / float(gamma) ** 2
    penalty = np.zeros(n)
    penalty[state.labeled] = inv_g2
    L = graph.laplacian("combinatorial")
    A = (L + sparse.diags(penalty)).tocsr()
    B = np.zeros((n, state.n_classes))
    B[state.labeled] = inv_g2 * state.one_hot_matrix
    start = None if x0 is None else np.asarray(x0)
    return block_cg(A, B, x0=start, tol=tol, diag=A.diagonal())


def classify(U):
    """Per-row argmax prediction; ties go to the lowest class index.

    Returns (classes, confidence) where confidence is the winning value.
    """
    U = np.asarray(U)
    classes = np.argmax(U, axis=1)
    confidence = U[np.arange(U.shape[0]), classes]
    return classes, confidence


class GraphSSL(BaseEstimator):
    """Shared fit/predict wrapper over the node-function solvers.

    The graph is fixed at construction; fit takes labeled indices and their
    labels, in the style of transductive graph classifiers.
    """

    def __init__(self, graph, n_classes=None, tol=1e-8):
        self.graph = graph
        self.n_classes = n_classes
        self.tol = tol

    def _solve(self, state):
        raise NotImplementedError

    def fit(self, labeled_ind, labels):
        labels = np.asarray(labels, dtype=np.int64)
        k = self.n_classes
        if k is None:
            k = int(labels.max()) + 1 if labels.size else 0
            k = max(k, 2)
        state = LabelState(labeled_ind, labels, k, self.graph.n_nodes)
        self.label_state_ = state
        self.node_function_ = self._solve(state)
        return self

    def predict(self):
        classes, _ = classify(self.node_function_)
        return classes

    def decision_function(self):
        return self.node_function_


class LaplaceLearning(GraphSSL):
    """Harmonic label propagation (fit/predict over all graph nodes)."""

    def _solve(self, state):
        return laplace_learn(self.graph, state, tol=self.tol)


class GaussianRegression(GraphSSL):
    """Quadratic-penalty label regression (fit/predict over all graph nodes)."""

    def __init__(self, graph, n_classes=None, gamma=0.5, tol=1e-8):
        super().__init__(graph, n_classes=n_classes, tol=tol)
        self.gamma = gamma

    def _solve(self, state):
        return gr_solve(self.graph, state, gamma=self.gamma, tol=self.tol)
