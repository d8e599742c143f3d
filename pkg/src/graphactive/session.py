"""Sequential active-learning sessions with a crash-safe label journal.

A session owns the label state, the warm-started classifier solution, the
truncated covariance, and the pending query. Every label commit appends to an
on-disk journal before touching in-memory state, and the whole state is a
deterministic function of (graph, spectrum, config, journal), so replaying the
journal after a crash reconstructs the session exactly, including the pending
query and the random-acquisition draw sequence.

Directory layout: config.txt (key=value), graph.txt (edge list),
spectrum.gasp, journal.csv, and optionally truth.csv (ground-truth labels for
accuracy reporting) and pool.txt (candidate restriction, one index per line).
"""

import os
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

from .active import (
    ACQUISITION_KINDS,
    acquire_mc,
    acquire_mcvopt,
    acquire_random,
    acquire_uncertainty,
    acquire_vopt,
    covariance_update,
    init_covariance,
    select_query,
)
from .data import LabelFile, load_labels, save_labels
from .errors import DataFormatError, ParameterError
from .graph import LAPLACIAN_KINDS, load_graph, save_graph
from .models import LabelState, classify, laplace_learn
from .spectral import compute_spectrum, load_spectrum, save_spectrum
from .validation import check_index_array

JOURNAL_HEADER = "step,index,label,source"
JOURNAL_SOURCES = ("seed", "human", "oracle")

CONFIG_FILE = "config.txt"
GRAPH_FILE = "graph.txt"
SPECTRUM_FILE = "spectrum.gasp"
JOURNAL_FILE = "journal.csv"
TRUTH_FILE = "truth.csv"
POOL_FILE = "pool.txt"

# rebuild the cached V @ Sigma product from scratch every so many commits to
# stop incremental-update rounding from drifting
_PRODUCT_REFRESH = 50

_INT_FIELDS = ("n_classes", "m", "seed", "k")
_FLOAT_FIELDS = ("gamma", "tol")


@dataclass
class SessionConfig:
    """Everything needed to rebuild a session's computation deterministically."""

    n_classes: int
    acquisition: str = "uncertainty"
    gamma: float = 0.5
    m: int = 300
    seed: int = 0
    k: int = 20
    metric: str = "angular"
    laplacian: str = "combinatorial"
    tol: float = 1e-8

    def __post_init__(self):
        if self.acquisition not in ACQUISITION_KINDS:
            raise ParameterError(
                "unknown acquisition %r; choose from %s"
                % (self.acquisition, ", ".join(ACQUISITION_KINDS))
            )
        if self.laplacian not in LAPLACIAN_KINDS:
            raise ParameterError("unknown laplacian kind %r" % (self.laplacian,))
        if int(self.n_classes) < 2:
            raise ParameterError("n_classes must be >= 2")


def save_config(config, path):
    with open(path, "w") as f:
        for fld in fields(SessionConfig):
            f.write("%s=%s\n" % (fld.name, getattr(config, fld.name)))


def load_config(path):
    values = {}
    with open(path) as f:
        for lineno, line in enumerate(f):
            line = line.strip()
            if not line:
                continue
            if "=" not in line:
                raise DataFormatError("config line %d is not key=value" % lineno)
            key, _, raw = line.partition("=")
            values[key] = raw
    known = {fld.name for fld in fields(SessionConfig)}
    unknown = set(values) - known
    if unknown:
        raise DataFormatError("unknown config keys: %s" % ", ".join(sorted(unknown)))
    missing = known - set(values)
    if missing:
        raise DataFormatError("missing config keys: %s" % ", ".join(sorted(missing)))
    try:
        for key in _INT_FIELDS:
            values[key] = int(values[key])
        for key in _FLOAT_FIELDS:
            values[key] = float(values[key])
    except ValueError:
        raise DataFormatError("non-numeric config value for %s" % key) from None
    return SessionConfig(**values)


@dataclass(frozen=True)
class JournalRow:
    step: int
    index: int
    label: int
    source: str


@dataclass(frozen=True)
class QueryRecord:
    """One committed label: where it went and why it was chosen.

    acquisition_value is NaN for seed labels and overrides (nothing was
    selected); accuracy_after is filled by the simulation harness only.
    """

    step: int
    chosen: int
    acquisition_value: float
    label_assigned: int
    accuracy_after: Optional[float] = None


def write_journal(rows, path):
    """Atomically persist the whole journal (write, fsync, rename)."""
    tmp = path + ".tmp"
    with open(tmp, "w") as f:
        f.write(JOURNAL_HEADER + "\n")
        for row in rows:
            f.write("%d,%d,%d,%s\n" % (row.step, row.index, row.label, row.source))
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, path)


def read_journal(path):
    rows = []
    with open(path) as f:
        header = f.readline().strip()
        if header != JOURNAL_HEADER:
            raise DataFormatError(
                "journal header must be %r, got %r" % (JOURNAL_HEADER, header)
            )
        for lineno, line in enumerate(f):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise DataFormatError("journal line %d malformed: %r" % (lineno, line))
            try:
                step, index, label = int(parts[0]), int(parts[1]), int(parts[2])
            except ValueError:
                raise DataFormatError(
                    "journal line %d has non-integer fields" % lineno
                ) from None
            source = parts[3]
            if source not in JOURNAL_SOURCES:
                raise DataFormatError(
                    "journal line %d: unknown source %r" % (lineno, source)
                )
            if step != len(rows):
                raise DataFormatError(
                    "journal steps must be dense from 0; line %d has step %d, "
                    "expected %d" % (lineno, step, len(rows))
                )
            rows.append(JournalRow(step, index, label, source))
    return rows


class ActiveSession:
    """Single-writer active-learning state machine.

    Commits are strictly sequential: each one journals, extends the label
    state, rank-one-updates the covariance, re-solves the classifier from the
    previous solution, and selects the next pending query. Selection runs
    after every commit (seeds included) so the random-acquisition RNG
    consumes draws identically in live runs and journal replays.
    """

    def __init__(self, graph, spectrum, config, pool=None, journal_path=None, truth=None):
        if spectrum.n != graph.n_nodes:
            raise ParameterError(
                "spectrum covers %d nodes, graph has %d" % (spectrum.n, graph.n_nodes)
            )
        if spectrum.m != config.m:
            raise ParameterError(
                "spectrum holds %d eigenpairs, config asks for %d"
                % (spectrum.m, config.m)
            )
        if spectrum.kind != config.laplacian:
            raise ParameterError(
                "spectrum kind %r does not match config laplacian %r"
                % (spectrum.kind, config.laplacian)
            )
        self.graph = graph
        self.spectrum = spectrum
        self.config = config
        n = graph.n_nodes
        if pool is not None:
            pool = np.sort(check_index_array(pool, n, "pool"))
        self.pool = pool
        if truth is not None:
            truth = np.asarray(truth, dtype=np.int64)
            if truth.shape != (n,):
                raise ParameterError("truth must assign a label to every node")
            if truth.min() < 0 or truth.max() >= config.n_classes:
                raise ParameterError("truth labels out of range")
        self.truth = truth
        self.journal_path = journal_path
        self.state = LabelState(
            np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64),
            config.n_classes, n,
        )
        self.rows = []
        self.history = []
        self.accuracy_series = []
        self.pending = None
        self.pending_value = float("nan")
        self._rng = np.random.default_rng(config.seed)
        self._U = None
        self._cov = None
        self._vprod = None
        self._n_updates = 0
        if journal_path is not None and not os.path.exists(journal_path):
            write_journal([], journal_path)

    @property
    def n_nodes(self):
        return self.graph.n_nodes

    @property
    def step(self):
        return len(self.rows)

    @property
    def labeled_count(self):
        return self.state.n_labeled

    def candidates(self):
        """Unlabeled nodes eligible as queries, ascending."""
        unlabeled = self.state.unlabeled()
        if self.pool is None:
            return unlabeled
        return np.intersect1d(unlabeled, self.pool, assume_unique=True)

    @property
    def pool_remaining(self):
        return int(self.candidates().size)

    def node_function(self):
        if self._U is None:
            raise ParameterError("no labels committed yet")
        return self._U

    def predictions(self):
        """(classes, confidence) over all nodes; labeled rows are exact."""
        return classify(self.node_function())

    def add_label(self, node, label, source="human"):
        """Commit one label and advance the session. Returns a QueryRecord."""
        node = int(node)
        label = int(label)
        if source not in JOURNAL_SOURCES:
            raise ParameterError("unknown label source %r" % (source,))
        if not 0 <= node < self.n_nodes:
            raise ParameterError("node %d out of range" % node)
        if not 0 <= label < self.config.n_classes:
            raise ParameterError(
                "label %d out of range 0..%d" % (label, self.config.n_classes - 1)
            )
        if node in self.state.labeled:
            raise ParameterError("node %d is already labeled" % node)
        row = JournalRow(self.step, node, label, source)
        if self.journal_path is not None:
            write_journal(self.rows + [row], self.journal_path)
        return self._commit(row)

    def _commit(self, row):
        value = self.pending_value if row.index == self.pending else float("nan")
        self.rows.append(row)
        self.state = self.state.extended(row.index, row.label)
        self._update_covariance(row.index)
        self._U = laplace_learn(
            self.graph, self.state, tol=self.config.tol, x0=self._U
        )
        accuracy = self._record_accuracy(row.step)
        self._select_next()
        record = QueryRecord(row.step, row.index, value, row.label, accuracy)
        self.history.append(record)
        return record

    def _update_covariance(self, node):
        if self._cov is None:
            self._cov = init_covariance(self.spectrum, self.state, self.config.gamma)
            self._vprod = self.spectrum.eigenvectors @ self._cov.sigma
        else:
            vh = self.spectrum.eigenvectors[node]
            s = self._cov.sigma @ vh
            denom = self._cov.gamma**2 + vh @ s
            self._cov = covariance_update(self._cov, node)
            self._vprod -= np.outer(self._vprod @ vh, s) / denom
        self._n_updates += 1
        if self._n_updates % _PRODUCT_REFRESH == 0:
            self._vprod = self.spectrum.eigenvectors @ self._cov.sigma

    def _record_accuracy(self, step):
        if self.truth is None:
            return None
        unlabeled = self.state.unlabeled()
        if unlabeled.size == 0:
            accuracy = 1.0
        else:
            classes, _ = self.predictions()
            accuracy = float(
                np.mean(classes[unlabeled] == self.truth[unlabeled])
            )
        self.accuracy_series.append((step, self.labeled_count, accuracy))
        return accuracy

    def _select_next(self):
        cands = self.candidates()
        if cands.size == 0:
            self.pending = None
            self.pending_value = float("nan")
            return
        kind = self.config.acquisition
        if kind == "random":
            values = acquire_random(cands, self._rng)
        elif kind == "uncertainty":
            values = acquire_uncertainty(self._U, cands)
        elif kind == "vopt":
            values = acquire_vopt(self._cov, cands, products=self._vprod)
        elif kind == "mc":
            values = acquire_mc(self._U, self._cov, cands, products=self._vprod)
        else:
            values = acquire_mcvopt(self._U, self._cov, cands, products=self._vprod)
        self.pending = select_query(values, cands)
        self.pending_value = float(values[np.searchsorted(cands, self.pending)])

    def covariance(self):
        if self._cov is None:
            raise ParameterError("no labels committed yet")
        return self._cov

    def replay(self, rows):
        """Apply journal rows to a fresh session (no re-journaling)."""
        if self.rows:
            raise ParameterError("replay requires a fresh session")
        for row in rows:
            try:
                self._commit(row)
            except ParameterError as exc:
                raise DataFormatError(
                    "journal step %d cannot be replayed: %s" % (row.step, exc)
                ) from exc


def save_session(directory, graph, config, spectrum=None, pool=None, truth=None):
    """Materialize a session directory and return the live (empty) session."""
    os.makedirs(directory, exist_ok=True)
    if spectrum is None:
        spectrum = compute_spectrum(
            graph.laplacian(config.laplacian),
            config.m,
            kind=config.laplacian,
            seed=config.seed,
        )
    save_config(config, os.path.join(directory, CONFIG_FILE))
    save_graph(graph, os.path.join(directory, GRAPH_FILE))
    save_spectrum(spectrum, os.path.join(directory, SPECTRUM_FILE))
    if truth is not None:
        truth = np.asarray(truth, dtype=np.int64)
        save_labels(
            LabelFile(np.arange(truth.shape[0]), truth, config.n_classes),
            os.path.join(directory, TRUTH_FILE),
        )
    if pool is not None:
        pool = np.sort(check_index_array(pool, graph.n_nodes, "pool"))
        with open(os.path.join(directory, POOL_FILE), "w") as f:
            for idx in pool:
                f.write("%d\n" % idx)
    return ActiveSession(
        graph, spectrum, config,
        pool=pool,
        journal_path=os.path.join(directory, JOURNAL_FILE),
        truth=truth,
    )


def open_session(directory):
    """Rebuild a session from its directory by replaying the journal."""
    config = load_config(os.path.join(directory, CONFIG_FILE))
    graph = load_graph(os.path.join(directory, GRAPH_FILE))
    spectrum = load_spectrum(os.path.join(directory, SPECTRUM_FILE))
    truth = None
    truth_path = os.path.join(directory, TRUTH_FILE)
    if os.path.exists(truth_path):
        truth = load_labels(truth_path, n_classes=config.n_classes).dense(
            graph.n_nodes
        )
        if (truth < 0).any():
            raise DataFormatError("truth file must label every node")
    pool = None
    pool_path = os.path.join(directory, POOL_FILE)
    if os.path.exists(pool_path):
        with open(pool_path) as f:
            pool = np.array([int(line) for line in f if line.strip()], dtype=np.int64)
    session = ActiveSession(
        graph, spectrum, config,
        pool=pool,
        journal_path=os.path.join(directory, JOURNAL_FILE),
        truth=truth,
    )
    journal_path = os.path.join(directory, JOURNAL_FILE)
    if os.path.exists(journal_path):
        session.replay(read_journal(journal_path))
    return session
