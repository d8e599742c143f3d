"""Loading and saving of feature matrices, label files, and model output.

File formats (all binary values little-endian):

- binary features: magic ``GAFE``, version u32 = 1, n u64, d u64, then
  n*d float32 values row-major.
- CSV features: one row per sample, comma-separated decimal reals, no header.
- label CSV: lines ``index,label`` of non-negative integers, no header.
- node-function export: magic ``GAUF``, version u32 = 1, n u64, K u64, then
  n*K float64 values row-major.
- prediction CSV: lines ``index,class,confidence``, no header.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError, ParameterError
from .validation import check_feature_matrix

FEATURE_MAGIC = b"GAFE"
NODEFUNC_MAGIC = b"GAUF"
FORMAT_VERSION = 1


def _read_exact(f, count, what):
    buf = f.read(count)
    if len(buf) != count:
        raise DataFormatError("truncated file while reading %s" % what)
    return buf


def _read_header(f, magic):
    got = f.read(4)
    if got != magic:
        raise DataFormatError(
            "bad magic: expected %s, got %r" % (magic.decode(), got if got else "EOF")
        )
    (version,) = struct.unpack("<I", _read_exact(f, 4, "version"))
    if version != FORMAT_VERSION:
        raise DataFormatError("unsupported format version %d" % version)
    return version


def save_features(values, path, format="binary"):
    """Write a feature matrix in the binary or CSV container."""
    X = check_feature_matrix(values)
    n, d = X.shape
    if format == "binary":
        with open(path, "wb") as f:
            f.write(FEATURE_MAGIC)
            f.write(struct.pack("<IQQ", FORMAT_VERSION, n, d))
            f.write(X.astype("<f4").tobytes(order="C"))
    elif format == "csv":
        with open(path, "w") as f:
            for row in X:
                f.write(",".join(repr(float(v)) for v in row))
                f.write("\n")
    else:
        raise ParameterError("unknown feature format %r" % (format,))


def _load_features_binary(path):
    with open(path, "rb") as f:
        _read_header(f, FEATURE_MAGIC)
        n, d = struct.unpack("<QQ", _read_exact(f, 16, "dimensions"))
        if n < 1 or d < 1:
            raise DataFormatError("header declares empty matrix (n=%d, d=%d)" % (n, d))
        payload = f.read()
    expected = n * d * 4
    if len(payload) != expected:
        raise DataFormatError(
            "payload length mismatch: header declares %d values (%d bytes), "
            "file carries %d bytes" % (n * d, expected, len(payload))
        )
    X = np.frombuffer(payload, dtype="<f4").astype(np.float64).reshape(n, d)
    bad = ~np.isfinite(X)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise DataFormatError("non-finite entry at row %d, column %d" % (i, j))
    return X


def _load_features_csv(path):
    rows = []
    width = None
    with open(path) as f:
        for lineno, line in enumerate(f):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise DataFormatError(
                    "row %d has %d columns, expected %d" % (lineno, len(cells), width)
                )
            row = np.empty(width)
            for j, cell in enumerate(cells):
                try:
                    v = float(cell)
                except ValueError:
                    raise DataFormatError(
                        "row %d, column %d: cannot parse %r as a real number"
                        % (lineno, j, cell)
                    ) from None
                if not np.isfinite(v):
                    raise DataFormatError(
                        "row %d, column %d: non-finite value %r" % (lineno, j, cell)
                    )
                row[j] = v
            rows.append(row)
    if not rows:
        raise DataFormatError("feature CSV is empty")
    return np.vstack(rows)


def load_features(path, format=None):
    """Load a feature matrix.

    ``format`` is ``"binary"``, ``"csv"``, or None to sniff the magic bytes.
    """
    if format is None:
        with open(path, "rb") as f:
            format = "binary" if f.read(4) == FEATURE_MAGIC else "csv"
    if format == "binary":
        return _load_features_binary(path)
    if format == "csv":
        return _load_features_csv(path)
    raise ParameterError("unknown feature format %r" % (format,))


@dataclass
class LabelFile:
    """Sparse ground-truth labels: parallel index/label arrays plus the class count."""

    indices: np.ndarray
    labels: np.ndarray
    n_classes: int

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        self.labels = np.asarray(self.labels, dtype=np.int64)

    def dense(self, n):
        """Expand to a length-n vector with -1 at unlabeled positions."""
        out = np.full(n, -1, dtype=np.int64)
        out[self.indices] = self.labels
        return out


def load_labels(path, n_classes=None, n=None):
    """Parse a label CSV.

    The class count defaults to 1 + max observed label; pass ``n_classes``
    to fix it up front (active learning needs K fixed before every class
    has been observed). ``n`` bounds the indices when known.
    """
    indices, labels = [], []
    seen = set()
    with open(path) as f:
        for lineno, line in enumerate(f):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise DataFormatError(
                    "line %d: expected 'index,label', got %r" % (lineno, line)
                )
            try:
                idx, lab = int(parts[0]), int(parts[1])
            except ValueError:
                raise DataFormatError(
                    "line %d: non-integer field in %r" % (lineno, line)
                ) from None
            if idx < 0:
                raise DataFormatError("line %d: negative index %d" % (lineno, idx))
            if lab < 0:
                raise DataFormatError("line %d: negative label %d" % (lineno, lab))
            if idx in seen:
                raise DataFormatError("line %d: duplicate index %d" % (lineno, idx))
            seen.add(idx)
            indices.append(idx)
            labels.append(lab)
    if not indices:
        raise DataFormatError("label file is empty")
    indices = np.array(indices, dtype=np.int64)
    labels = np.array(labels, dtype=np.int64)
    if n is not None and indices.max() >= n:
        raise DataFormatError(
            "label index %d out of range for %d samples" % (indices.max(), n)
        )
    inferred = int(labels.max()) + 1
    if n_classes is None:
        n_classes = max(inferred, 2)
    elif inferred > n_classes:
        raise DataFormatError(
            "label %d exceeds declared class count %d" % (labels.max(), n_classes)
        )
    return LabelFile(indices, labels, int(n_classes))


def save_labels(label_file, path):
    with open(path, "w") as f:
        for idx, lab in zip(label_file.indices, label_file.labels):
            f.write("%d,%d\n" % (idx, lab))


def save_node_function(U, path):
    """Write an n x K node function in the binary export container."""
    U = np.asarray(U, dtype=np.float64)
    if U.ndim != 2:
        raise ParameterError("node function must be 2-D, got shape %s" % (U.shape,))
    n, k = U.shape
    with open(path, "wb") as f:
        f.write(NODEFUNC_MAGIC)
        f.write(struct.pack("<IQQ", FORMAT_VERSION, n, k))
        f.write(U.astype("<f8").tobytes(order="C"))


def load_node_function(path):
    with open(path, "rb") as f:
        _read_header(f, NODEFUNC_MAGIC)
        n, k = struct.unpack("<QQ", _read_exact(f, 16, "dimensions"))
        payload = f.read()
    if len(payload) != n * k * 8:
        raise DataFormatError(
            "payload length mismatch: expected %d bytes, got %d"
            % (n * k * 8, len(payload))
        )
    return np.frombuffer(payload, dtype="<f8").reshape(n, k).copy()


def save_predictions(classes, confidence, path):
    """Write per-node predictions as ``index,class,confidence`` lines."""
    classes = np.asarray(classes)
    confidence = np.asarray(confidence)
    with open(path, "w") as f:
        for i in range(classes.shape[0]):
            f.write("%d,%d,%s\n" % (i, classes[i], repr(float(confidence[i]))))
