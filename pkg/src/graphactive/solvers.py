"""Preconditioned conjugate gradient for SPD systems with many right-hand sides.

scipy's cg handles one right-hand side per call; the solves here share one
sparse SPD matrix across K class columns, so a block variant with per-column
step sizes amortizes the matrix-vector products (one sparse matmat per
iteration instead of K matvecs). Jacobi (diagonal) preconditioning and warm
starts match the access pattern of sequential active learning, where each new
label perturbs the previous solution locally.
"""

import numpy as np

from .errors import ConvergenceError


def block_cg(A, B, x0=None, tol=1e-8, maxiter=None, diag=None):
    """Solve A X = B column-wise for SPD A.

    Stops when every column reaches relative residual ||b - A x|| <= tol ||b||
    (absolute tol for zero columns). diag is the Jacobi preconditioner
    diagonal; nonpositive entries fall back to 1. x0 warm-starts the
    iteration. Raises ConvergenceError carrying the per-column relative
    residuals if the iteration budget is exhausted.
    """
    B = np.asarray(B, dtype=np.float64)
    single = B.ndim == 1
    if single:
        B = B[:, None]
    n = B.shape[0]
    if maxiter is None:
        maxiter = max(200, 20 * n)

    if diag is None:
        inv_diag = np.ones(n)
    else:
        diag = np.asarray(diag, dtype=np.float64)
        inv_diag = np.where(diag > 0.0, 1.0 / np.where(diag > 0.0, diag, 1.0), 1.0)

    if x0 is None:
        X = np.zeros_like(B)
        R = B.copy()
    else:
        X = np.array(x0, dtype=np.float64, copy=True)
        if single and X.ndim == 1:
            X = X[:, None]
        R = B - A @ X

    b_norm = np.linalg.norm(B, axis=0)
    scale = np.where(b_norm > 0.0, b_norm, 1.0)
    target = tol * scale

    Z = R * inv_diag[:, None]
    P = Z.copy()
    rz = np.einsum("ij,ij->j", R, Z)
    res = np.linalg.norm(R, axis=0)
    for _ in range(maxiter):
        active = res > target
        if not active.any():
            break
        AP = A @ P
        pAp = np.einsum("ij,ij->j", P, AP)
        ok = active & (pAp > 0.0) & (rz > 0.0)
        alpha = np.where(ok, rz / np.where(pAp > 0.0, pAp, 1.0), 0.0)
        X += alpha[None, :] * P
        R -= alpha[None, :] * AP
        Z = R * inv_diag[:, None]
        rz_new = np.einsum("ij,ij->j", R, Z)
        beta = np.where(ok, rz_new / np.where(rz > 0.0, rz, 1.0), 0.0)
        P = Z + beta[None, :] * P
        rz = rz_new
        res = np.linalg.norm(R, axis=0)
    else:
        raise ConvergenceError(
            "conjugate gradient did not reach tol %g in %d iterations"
            % (tol, maxiter),
            residuals=res / scale,
        )
    return X[:, 0] if single else X
