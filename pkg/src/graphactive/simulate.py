"""Reproducible active-learning experiments against a ground-truth oracle.

Each trial seeds the labeled set uniformly at random (initial_per_class per
class, trial seed = base seed + trial index), then runs the sequential query
loop with ground truth answering every query. Accuracy is measured after
every commit, on the test split when one is given and on the currently
unlabeled nodes otherwise; curves are aggregated across trials.
"""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from sklearn.datasets import make_moons

from .active import ACQUISITION_KINDS
from .data import LabelFile
from .errors import DataFormatError, ParameterError
from .graph import build_graph
from .models import classify
from .session import ActiveSession, JournalRow, SessionConfig
from .spectral import compute_spectrum
from .validation import check_index_array

CURVE_HEADER = "step,mean_accuracy,std_accuracy"


@dataclass
class ExperimentConfig:
    """Protocol parameters; defaults mirror the experiment setup."""

    acquisition: str = "uncertainty"
    steps: int = 500
    trials: int = 10
    seed: int = 0
    gamma: float = 0.5
    m: int = 300
    k: int = 20
    metric: str = "angular"
    laplacian: str = "combinatorial"
    initial_per_class: int = 1
    tol: float = 1e-8
    train: Optional[np.ndarray] = None
    test: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.acquisition not in ACQUISITION_KINDS:
            raise ParameterError(
                "unknown acquisition %r; choose from %s"
                % (self.acquisition, ", ".join(ACQUISITION_KINDS))
            )
        if self.steps < 0:
            raise ParameterError("steps must be >= 0")
        if self.trials < 1:
            raise ParameterError("trials must be >= 1")
        if self.initial_per_class < 1:
            raise ParameterError("initial_per_class must be >= 1")
        if (self.train is None) != (self.test is None):
            raise ParameterError("train and test splits must be given together")


@dataclass(frozen=True)
class AccuracyCurve:
    """Mean/std accuracy per step across trials; row 0 is the seed baseline."""

    steps: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    n_trials: int


def synth_dataset(kind, n, classes, noise, seed):
    """Synthetic labeled point clouds with known ground truth.

    blobs: unit-separated Gaussian clusters (centers e_c / sqrt(2), so every
    pair of centers is distance 1 apart) in `classes` dimensions.
    moons: the two interleaved half-circles benchmark (classes must be 2).
    """
    n = int(n)
    classes = int(classes)
    if n < classes:
        raise ParameterError("need n >= classes, got n=%d, classes=%d" % (n, classes))
    if kind == "blobs":
        rng = np.random.default_rng(seed)
        y = np.arange(n, dtype=np.int64) % classes
        centers = np.eye(classes) / np.sqrt(2.0)
        X = centers[y] + float(noise) * rng.standard_normal((n, classes))
    elif kind == "moons":
        if classes != 2:
            raise ParameterError("moons generates exactly 2 classes")
        X, y = make_moons(n_samples=n, noise=float(noise), random_state=int(seed))
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
    else:
        raise ParameterError("unknown dataset kind %r" % (kind,))
    return X, LabelFile(np.arange(n), y, classes)


def _dense_truth(labels, n):
    if isinstance(labels, LabelFile):
        truth = labels.dense(n)
        if (truth < 0).any():
            raise DataFormatError("experiment truth must label every node")
        return truth, labels.n_classes
    truth = np.asarray(labels, dtype=np.int64)
    if truth.shape != (n,):
        raise ParameterError("truth must assign a label to every node")
    return truth, int(truth.max()) + 1


def _draw_seed_labels(truth, train, per_class, n_classes, rng):
    picks = []
    for cls in range(n_classes):
        members = train[truth[train] == cls]
        if members.size < per_class:
            raise ParameterError(
                "class %d has %d candidates in the train split, need %d"
                % (cls, members.size, per_class)
            )
        picks.append(rng.choice(members, size=per_class, replace=False))
    return np.concatenate(picks)


def _accuracy(session, truth, test):
    classes, _ = session.predictions()
    if test is not None:
        return float(np.mean(classes[test] == truth[test]))
    unlabeled = session.state.unlabeled()
    if unlabeled.size == 0:
        return 1.0
    return float(np.mean(classes[unlabeled] == truth[unlabeled]))


def run_experiment(features, labels, config, graph=None, spectrum=None):
    """Run the query protocol; returns (AccuracyCurve, per-trial QueryRecords).

    graph and spectrum may be passed in to share the label-independent setup
    across experiments; they are built from the features otherwise.
    """
    if graph is None:
        if features is None:
            raise ParameterError("need features or a prebuilt graph")
        graph = build_graph(np.asarray(features, dtype=np.float64), k=config.k,
                            metric=config.metric)
    n = graph.n_nodes
    truth, n_classes = _dense_truth(labels, n)
    if spectrum is None:
        spectrum = compute_spectrum(
            graph.laplacian(config.laplacian), config.m,
            kind=config.laplacian, seed=config.seed,
        )
    train = config.train
    test = config.test
    if train is not None:
        train = np.sort(check_index_array(train, n, "train"))
        test = np.sort(check_index_array(test, n, "test"))
        if np.intersect1d(train, test).size:
            raise ParameterError("train and test splits overlap")
    else:
        train = np.arange(n)
    n_seeds = config.initial_per_class * n_classes
    if n_seeds + config.steps > train.size:
        raise ParameterError(
            "budget of %d seeds + %d steps exceeds the %d-node pool"
            % (n_seeds, config.steps, train.size)
        )

    per_trial_acc = np.empty((config.trials, config.steps + 1))
    logs = []
    for trial in range(config.trials):
        trial_seed = config.seed + trial
        rng = np.random.default_rng(trial_seed)
        seeds = _draw_seed_labels(truth, train, config.initial_per_class,
                                  n_classes, rng)
        session = ActiveSession(
            graph, spectrum,
            SessionConfig(
                n_classes=n_classes, acquisition=config.acquisition,
                gamma=config.gamma, m=config.m, seed=trial_seed,
                k=config.k, metric=config.metric, laplacian=config.laplacian,
                tol=config.tol,
            ),
            pool=config.train,
        )
        records = []
        for node in seeds:
            rec = session.add_label(node, truth[node], source="seed")
            records.append(replace(rec, accuracy_after=_accuracy(session, truth, test)))
        for _ in range(config.steps):
            node = session.pending
            rec = session.add_label(node, truth[node], source="oracle")
            records.append(replace(rec, accuracy_after=_accuracy(session, truth, test)))
        per_trial_acc[trial] = [r.accuracy_after for r in records[n_seeds - 1 :]]
        logs.append(records)
    curve = AccuracyCurve(
        np.arange(config.steps + 1),
        per_trial_acc.mean(axis=0),
        per_trial_acc.std(axis=0),
        config.trials,
    )
    return curve, logs


def records_to_journal_rows(records, n_seeds=None):
    """Rebuild journal rows from a trial's records.

    The first n_seeds records are seed labels; without an explicit count a
    NaN acquisition value marks a seed (a seed that happened to coincide
    with the pending query carries a value, so prefer passing the count).
    """
    rows = []
    for pos, r in enumerate(records):
        if n_seeds is not None:
            source = "seed" if pos < n_seeds else "oracle"
        else:
            source = "seed" if np.isnan(r.acquisition_value) else "oracle"
        rows.append(JournalRow(r.step, r.chosen, r.label_assigned, source))
    return rows


def save_curve(curve, path):
    with open(path, "w") as f:
        f.write(CURVE_HEADER + "\n")
        for step, mean, std in zip(curve.steps, curve.mean, curve.std):
            f.write("%d,%s,%s\n" % (step, repr(float(mean)), repr(float(std))))


def load_curve(path):
    steps, means, stds = [], [], []
    with open(path) as f:
        header = f.readline().strip()
        if header != CURVE_HEADER:
            raise DataFormatError(
                "curve header must be %r, got %r" % (CURVE_HEADER, header)
            )
        for lineno, line in enumerate(f):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise DataFormatError("curve line %d malformed" % lineno)
            try:
                steps.append(int(parts[0]))
                means.append(float(parts[1]))
                stds.append(float(parts[2]))
            except ValueError:
                raise DataFormatError("curve line %d malformed" % lineno) from None
    return AccuracyCurve(
        np.array(steps), np.array(means), np.array(stds), n_trials=0
    )
