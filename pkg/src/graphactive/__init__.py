"""Graph-based semi-supervised classification with pool-based active learning.

Build a similarity graph over feature vectors, propagate a few labels to the
whole graph by Laplace learning, and choose which points to label next with
acquisition functions driven by a truncated Gaussian-regression covariance.
Ships a simulation harness, an HTTP labeling service, and a CLI.
"""

from .active import (
    ACQUISITION_KINDS,
    CovarianceState,
    acquire_mc,
    acquire_mcvopt,
    acquire_random,
    acquire_uncertainty,
    acquire_vopt,
    covariance_update,
    init_covariance,
    select_query,
)
from .data import (
    LabelFile,
    load_features,
    load_labels,
    load_node_function,
    save_features,
    save_labels,
    save_node_function,
    save_predictions,
)
from .errors import (
    ConnectivityError,
    ConvergenceError,
    DataFormatError,
    GraphActiveError,
    ParameterError,
    PoolExhaustedError,
)
from .graph import (
    SimilarityGraph,
    angular_distance,
    build_graph,
    knn_search,
    load_graph,
    save_graph,
)
from .models import (
    GaussianRegression,
    LabelState,
    LaplaceLearning,
    classify,
    gr_solve,
    laplace_learn,
    one_hot,
)
from .sar import sar_to_3channel
from .session import (
    ActiveSession,
    QueryRecord,
    SessionConfig,
    open_session,
    save_session,
)
from .simulate import (
    AccuracyCurve,
    ExperimentConfig,
    run_experiment,
    save_curve,
    synth_dataset,
)
from .solvers import block_cg
from .spectral import (
    SpectralData,
    cached_spectrum,
    compute_spectrum,
    load_spectrum,
    save_spectrum,
)

__version__ = "0.1.0"

__all__ = [
    "ACQUISITION_KINDS",
    "AccuracyCurve",
    "ActiveSession",
    "ConnectivityError",
    "ConvergenceError",
    "CovarianceState",
    "DataFormatError",
    "ExperimentConfig",
    "GaussianRegression",
    "GraphActiveError",
    "LabelFile",
    "LabelState",
    "LaplaceLearning",
    "ParameterError",
    "PoolExhaustedError",
    "QueryRecord",
    "SessionConfig",
    "SimilarityGraph",
    "SpectralData",
    "acquire_mc",
    "acquire_mcvopt",
    "acquire_random",
    "acquire_uncertainty",
    "acquire_vopt",
    "angular_distance",
    "block_cg",
    "build_graph",
    "cached_spectrum",
    "classify",
    "compute_spectrum",
    "covariance_update",
    "gr_solve",
    "init_covariance",
    "knn_search",
    "laplace_learn",
    "load_features",
    "load_graph",
    "load_labels",
    "load_node_function",
    "load_spectrum",
    "one_hot",
    "open_session",
    "run_experiment",
    "sar_to_3channel",
    "save_curve",
    "save_features",
    "save_graph",
    "save_labels",
    "save_node_function",
    "save_predictions",
    "save_session",
    "save_spectrum",
    "select_query",
    "synth_dataset",
]
