"""Truncated Laplacian eigendecomposition.

Computes the m smallest eigenpairs of a sparse symmetric PSD Laplacian with
ARPACK, applied to the shifted operator c*I - L (c a Gershgorin bound on the
spectrum) so the wanted pairs become the largest-algebraic ones, which Lanczos
finds without factorizing L. Results are cached on disk keyed by the graph
content hash.
"""

import os
import struct
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from .errors import ConvergenceError, DataFormatError, ParameterError
from .graph import LAPLACIAN_KINDS

SPECTRUM_MAGIC = b"GASP"
FORMAT_VERSION = 1

_KIND_CODES = {kind: code for code, kind in enumerate(LAPLACIAN_KINDS)}
_CODE_KINDS = dict(enumerate(LAPLACIAN_KINDS))


@dataclass(frozen=True)
class SpectralData:
    """The m smallest eigenpairs of a graph Laplacian.

    eigenvalues are ascending and non-negative; eigenvector columns are
    orthonormal with the first entry of magnitude above 1e-12 made positive.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    kind: str

    @property
    def m(self):
        return self.eigenvalues.shape[0]

    @property
    def n(self):
        return self.eigenvectors.shape[0]


def _fix_signs(V):
    for col in range(V.shape[1]):
        v = V[:, col]
        lead = np.flatnonzero(np.abs(v) > 1e-12)
        if lead.size and v[lead[0]] < 0.0:
            V[:, col] = -v
    return V


def _complement_basis(V, extra, rng):
    """Deterministic orthonormal basis of the orthogonal complement of V."""
    n = V.shape[0]
    G = rng.standard_normal((n, extra))
    G -= V @ (V.T @ G)
    Q, R = np.linalg.qr(G)
    if np.abs(np.diag(R)).min() < 1e-10:
        raise ConvergenceError("failed to complete eigenbasis: degenerate complement")
    Q -= V @ (V.T @ Q)
    Q, _ = np.linalg.qr(Q)
    return Q


def compute_spectrum(L, m, tol=1e-8, kind="combinatorial", seed=0):
    """The m smallest eigenpairs of symmetric PSD Laplacian L.

    Deterministic for a fixed seed (it fixes the Lanczos starting vector).
    Raises ConvergenceError with the achieved residuals if any pair misses
    the residual tolerance.
    """
    L = sparse.csr_matrix(L, dtype=np.float64)
    n = L.shape[0]
    if L.shape[0] != L.shape[1]:
        raise ParameterError("laplacian must be square, got %s" % (L.shape,))
    m = int(m)
    if not 1 <= m <= n:
        raise ParameterError("m must satisfy 1 <= m <= n, got m=%d, n=%d" % (m, n))
    if kind == "randomwalk":
        raise ParameterError("randomwalk laplacian is not symmetric; use combinatorial or normalized")
    if kind not in LAPLACIAN_KINDS:
        raise ParameterError("unknown laplacian kind %r" % (kind,))

    rng = np.random.default_rng(seed)
    if n <= 2:
        vals, vecs = np.linalg.eigh(L.toarray())
        vals, vecs = vals[:m], vecs[:, :m]
    else:
        k = min(m, n - 2)
        shift = float(np.abs(L).sum(axis=1).max())
        A = (sparse.identity(n, format="csr") * shift - L).tocsr()
        try:
            avals, vecs = splinalg.eigsh(
                A, k=k, which="LA", v0=rng.standard_normal(n), tol=0
            )
        except splinalg.ArpackNoConvergence as exc:
            raise ConvergenceError(
                "eigensolver converged only %d of %d pairs"
                % (len(exc.eigenvalues), k)
            ) from exc
        vals = shift - avals
        order = np.argsort(vals, kind="stable")
        vals, vecs = vals[order], vecs[:, order]
        if m > k:
            # ARPACK caps k at n-2; recover the top of the spectrum by
            # Rayleigh-Ritz on the orthogonal complement of the found pairs
            Q = _complement_basis(vecs, n - k, rng)
            tvals, tvecs = np.linalg.eigh(Q.T @ (L @ Q))
            vals = np.concatenate([vals, tvals])
            vecs = np.hstack([vecs, Q @ tvecs])
            order = np.argsort(vals, kind="stable")[:m]
            vals, vecs = vals[order], vecs[:, order]

    residuals = np.linalg.norm(L @ vecs - vecs * vals[None, :], axis=0)
    if (residuals > tol).any():
        raise ConvergenceError(
            "eigenpair residuals exceed %g" % tol, residuals=residuals
        )
    vals = np.maximum(vals, 0.0)
    vecs = _fix_signs(np.ascontiguousarray(vecs))
    return SpectralData(vals, vecs, kind)


def save_spectrum(spectrum, path):
    V = spectrum.eigenvectors
    with open(path, "wb") as f:
        f.write(SPECTRUM_MAGIC)
        f.write(
            struct.pack(
                "<IQQB",
                FORMAT_VERSION,
                spectrum.n,
                spectrum.m,
                _KIND_CODES[spectrum.kind],
            )
        )
        f.write(spectrum.eigenvalues.astype("<f8").tobytes())
        f.write(V.astype("<f8").tobytes(order="F"))


def load_spectrum(path):
    with open(path, "rb") as f:
        if f.read(4) != SPECTRUM_MAGIC:
            raise DataFormatError("not a spectrum cache file")
        header = f.read(21)
        if len(header) != 21:
            raise DataFormatError("truncated spectrum header")
        version, n, m, kind_code = struct.unpack("<IQQB", header)
        if version != FORMAT_VERSION:
            raise DataFormatError("unsupported spectrum version %d" % version)
        if kind_code not in _CODE_KINDS:
            raise DataFormatError("unknown laplacian kind code %d" % kind_code)
        payload = f.read()
    expected = (m + n * m) * 8
    if len(payload) != expected:
        raise DataFormatError(
            "payload length mismatch: expected %d bytes, got %d"
            % (expected, len(payload))
        )
    vals = np.frombuffer(payload[: m * 8], dtype="<f8").copy()
    vecs = np.frombuffer(payload[m * 8 :], dtype="<f8").reshape((n, m), order="F")
    return SpectralData(vals, np.ascontiguousarray(vecs), _CODE_KINDS[kind_code])


def spectrum_cache_path(cache_dir, graph_hash, kind, m):
    return os.path.join(cache_dir, "%s_%s_m%d.gasp" % (graph_hash, kind, m))


def cached_spectrum(graph, m, kind="combinatorial", cache_dir=None, tol=1e-8, seed=0):
    """Load the spectrum from the cache directory, computing and storing on miss."""
    if cache_dir is None:
        return compute_spectrum(graph.laplacian(kind), m, tol=tol, kind=kind, seed=seed)
    path = spectrum_cache_path(cache_dir, graph.content_hash(), kind, int(m))
    if os.path.exists(path):
        spectrum = load_spectrum(path)
        if spectrum.n == graph.n_nodes and spectrum.m == int(m) and spectrum.kind == kind:
            return spectrum
    spectrum = compute_spectrum(graph.laplacian(kind), m, tol=tol, kind=kind, seed=seed)
    os.makedirs(cache_dir, exist_ok=True)
    save_spectrum(spectrum, path)
    return spectrum
