"""Acquisition functions and the truncated-covariance bookkeeping behind them.

The classifier is Laplace learning; the variance estimates come from the
Gaussian-regression model truncated to the m smallest Laplacian eigenpairs:

    C_GR ~= V Sigma V^T,   Sigma = (Lambda + (1/gamma^2) V^T P^T P V)^{-1}.

Labeling node i is a rank-one change of Sigma^{-1}, so Sigma itself is kept
current with Sherman-Morrison updates costing O(m^2):

    Sigma' = Sigma - (Sigma vh)(Sigma vh)^T / (gamma^2 + vh^T Sigma vh)

with vh = V^T e_i (row i of V). Acquisition functions score every unlabeled
node; select_query takes the argmax with ties resolved to the lowest index.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, PoolExhaustedError
from .models import classify
from .validation import check_positive

ACQUISITION_KINDS = ("random", "uncertainty", "vopt", "mc", "mcvopt")


@dataclass(frozen=True)
class CovarianceState:
    """Sigma for the current labeled set, plus which labels it has absorbed."""

    sigma: np.ndarray
    gamma: float
    spectral: object
    labeled_applied: frozenset

    @property
    def m(self):
        return self.sigma.shape[0]


def init_covariance(spectral, state, gamma):
    """Sigma from scratch: invert Lambda + (1/gamma^2) V_L^T V_L."""
    check_positive(gamma, "gamma")
    gamma = float(gamma)
    labeled = np.asarray(state.labeled, dtype=np.int64)
    M = np.diag(spectral.eigenvalues).astype(np.float64)
    if labeled.size:
        VL = spectral.eigenvectors[labeled]
        M += (VL.T @ VL) / gamma**2
    elif spectral.eigenvalues[0] < 1e-12:
        raise ParameterError(
            "covariance is singular: need at least one label or a strictly "
            "positive spectrum"
        )
    sigma = np.linalg.inv(M)
    sigma = 0.5 * (sigma + sigma.T)
    return CovarianceState(sigma, gamma, spectral, frozenset(labeled.tolist()))


def covariance_update(cov, i):
    """Fold the label at node i into Sigma via a rank-one update. O(m^2)."""
    i = int(i)
    if i in cov.labeled_applied:
        raise ParameterError("label at node %d already applied to covariance" % i)
    vh = cov.spectral.eigenvectors[i]
    s = cov.sigma @ vh
    denom = cov.gamma**2 + vh @ s
    # outer(s, s) is elementwise symmetric, so subtracting it preserves the
    # exact symmetry established at init; no re-symmetrization needed
    sigma = cov.sigma - np.outer(s, s) / denom
    return CovarianceState(
        sigma, cov.gamma, cov.spectral, cov.labeled_applied | {i}
    )


def _covariance_columns(cov, unlabeled, products=None):
    """||Sigma vh||^2 and gamma^2 + vh^T Sigma vh for each unlabeled node.

    products, when given, is the precomputed n x m matrix V @ Sigma (its row
    i equals (Sigma vh_i)^T); sessions maintain it incrementally to avoid a
    dense n x m product per step.
    """
    Vu = cov.spectral.eigenvectors[unlabeled]
    S = products[unlabeled] if products is not None else Vu @ cov.sigma
    col_sq = np.einsum("ij,ij->i", S, S)
    denom = cov.gamma**2 + np.einsum("ij,ij->i", Vu, S)
    return col_sq, denom


def acquire_uncertainty(U, unlabeled):
    """1 - Margin(i): one minus (top value - second value) of each row."""
    U = np.asarray(U)
    if U.shape[1] < 2:
        raise ParameterError("uncertainty margin requires at least 2 classes")
    rows = U[np.asarray(unlabeled, dtype=np.int64)]
    top2 = np.partition(rows, rows.shape[1] - 2, axis=1)[:, -2:]
    return 1.0 - (top2[:, 1] - top2[:, 0])


def acquire_vopt(cov, unlabeled, products=None):
    """Trace reduction of the truncated covariance from labeling each node."""
    col_sq, denom = _covariance_columns(cov, unlabeled, products)
    return col_sq / denom


def acquire_mc(U, cov, unlabeled, products=None):
    """Pseudo-label model change: ||u*(x_i) - e_{y*(i)}|| ||Sigma vh|| / denom."""
    col_sq, denom = _covariance_columns(cov, unlabeled, products)
    return _pseudo_label_distance(U, unlabeled) * np.sqrt(col_sq) / denom


def acquire_mcvopt(U, cov, unlabeled, products=None):
    """Model change with the covariance-column norm squared."""
    col_sq, denom = _covariance_columns(cov, unlabeled, products)
    return _pseudo_label_distance(U, unlabeled) * col_sq / denom


def _pseudo_label_distance(U, unlabeled):
    rows = np.asarray(U)[np.asarray(unlabeled, dtype=np.int64)]
    pseudo, _ = classify(rows)
    diff = rows.copy()
    diff[np.arange(rows.shape[0]), pseudo] -= 1.0
    return np.linalg.norm(diff, axis=1)


def acquire_random(unlabeled, rng):
    """I.i.d. uniform scores; rng is a numpy Generator or an integer seed."""
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    return rng.random(len(unlabeled))


def select_query(values, unlabeled):
    """Argmax over the pool; exact ties resolve to the lowest node index."""
    unlabeled = np.asarray(unlabeled, dtype=np.int64)
    if unlabeled.size == 0:
        raise PoolExhaustedError("pool exhausted")
    values = np.asarray(values, dtype=np.float64)
    if values.shape[0] != unlabeled.shape[0]:
        raise ParameterError(
            "%d values for %d candidates" % (values.shape[0], unlabeled.shape[0])
        )
    best = values.max()
    return int(unlabeled[values == best].min())
