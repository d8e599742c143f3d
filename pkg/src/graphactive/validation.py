"""Input validation helpers used by the estimators and loaders."""

import numpy as np

from .errors import DataFormatError, ParameterError


def check_feature_matrix(values, name="features"):
    """Coerce to a float64 2-D array and enforce the feature-matrix invariants.

    Requires n >= 1, d >= 1 and all entries finite. Returns the validated
    array; the caller should treat it as immutable.
    """
    X = np.asarray(values, dtype=np.float64)
    if X.ndim != 2:
        raise ParameterError("%s must be 2-D, got shape %s" % (name, X.shape))
    n, d = X.shape
    if n < 1 or d < 1:
        raise ParameterError("%s must be non-empty, got shape (%d, %d)" % (name, n, d))
    bad = ~np.isfinite(X)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise DataFormatError(
            "%s contains a non-finite entry at row %d, column %d" % (name, i, j)
        )
    return X


def check_index_array(indices, n, name="indices", unique=True):
    """Validate a 0-based node index array against a pool of size n."""
    idx = np.asarray(indices, dtype=np.int64).ravel()
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise ParameterError(
            "%s must lie in [0, %d), got range [%d, %d]"
            % (name, n, idx.min(), idx.max())
        )
    if unique and np.unique(idx).size != idx.size:
        raise ParameterError("%s contains duplicate entries" % name)
    return idx


def check_label_array(labels, n_classes, name="labels"):
    """Validate class ids against a fixed class count."""
    y = np.asarray(labels, dtype=np.int64).ravel()
    if n_classes < 2:
        raise ParameterError("n_classes must be >= 2, got %d" % n_classes)
    if y.size and (y.min() < 0 or y.max() >= n_classes):
        raise ParameterError(
            "%s must lie in [0, %d), got range [%d, %d]"
            % (name, n_classes, y.min(), y.max())
        )
    return y


def check_positive(value, name):
    value = float(value)
    if not value > 0 or not np.isfinite(value):
        raise ParameterError("%s must be positive and finite, got %r" % (name, value))
    return value
