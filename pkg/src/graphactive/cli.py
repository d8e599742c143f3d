"""Command-line front door: build graphs, compute spectra, run simulations,
serve labeling sessions, transform SAR pairs, and export results.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric error
(non-convergence, disconnected graph).
"""

import argparse
import json
import os
import sys

import numpy as np

from .active import ACQUISITION_KINDS
from .data import (
    load_features,
    load_labels,
    save_features,
    save_node_function,
    save_predictions,
)
from .errors import (
    ConnectivityError,
    ConvergenceError,
    DataFormatError,
    ParameterError,
    PoolExhaustedError,
)
from .graph import build_graph, load_graph, save_graph
from .sar import sar_to_3channel
from .session import open_session, write_journal
from .simulate import (
    ExperimentConfig,
    load_curve,
    records_to_journal_rows,
    run_experiment,
    save_curve,
)
from .spectral import compute_spectrum, save_spectrum


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the documented taxonomy reserves 2
    # for data errors and uses 1 for usage
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, "%s: error: %s\n" % (self.prog, message))


def _cmd_build_graph(args):
    X = load_features(args.features)
    graph = build_graph(
        X, k=args.k, metric=args.metric, kernel=args.kernel, sigma=args.sigma
    )
    save_graph(graph, args.out)
    print(
        "graph: n=%d edges=%d connected; written to %s"
        % (graph.n_nodes, graph.n_edges, args.out)
    )
    return 0


def _cmd_spectrum(args):
    graph = load_graph(args.graph)
    spectrum = compute_spectrum(
        graph.laplacian(args.kind), args.m, tol=args.tol, kind=args.kind,
        seed=args.seed,
    )
    save_spectrum(spectrum, args.out)
    print(
        "spectrum: m=%d eigenvalues in [%g, %g]; written to %s"
        % (spectrum.m, spectrum.eigenvalues[0], spectrum.eigenvalues[-1], args.out)
    )
    return 0


def _load_split(path):
    train, test = [], []
    with open(path) as f:
        for lineno, line in enumerate(f):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2 or parts[1] not in ("train", "test"):
                raise DataFormatError(
                    "split line %d must be 'index,train' or 'index,test'" % lineno
                )
            try:
                idx = int(parts[0])
            except ValueError:
                raise DataFormatError(
                    "split line %d has a non-integer index" % lineno
                ) from None
            (train if parts[1] == "train" else test).append(idx)
    return np.array(train, dtype=np.int64), np.array(test, dtype=np.int64)


def _cmd_simulate(args):
    graph = None
    features = None
    if args.graph is not None:
        graph = load_graph(args.graph)
        n = graph.n_nodes
    else:
        features = load_features(args.features)
        n = features.shape[0]
    labels = load_labels(args.labels, n=n)
    train = test = None
    if args.split is not None:
        train, test = _load_split(args.split)
    config = ExperimentConfig(
        acquisition=args.acquisition, steps=args.steps, trials=args.trials,
        seed=args.seed, gamma=args.gamma, m=args.m, k=args.k,
        metric=args.metric, laplacian=args.laplacian,
        initial_per_class=args.initial_per_class, tol=args.tol,
        train=train, test=test,
    )
    curve, logs = run_experiment(features, labels, config, graph=graph)
    os.makedirs(args.out, exist_ok=True)
    curve_path = os.path.join(args.out, "curve.csv")
    save_curve(curve, curve_path)
    n_seeds = config.initial_per_class * labels.n_classes
    for trial, records in enumerate(logs):
        write_journal(
            records_to_journal_rows(records, n_seeds=n_seeds),
            os.path.join(args.out, "journal_trial%d.csv" % trial),
        )
    print(
        "simulate: %s, %d trials x %d steps; final mean accuracy %.4f; "
        "results in %s"
        % (args.acquisition, config.trials, config.steps, curve.mean[-1], args.out)
    )
    return 0


def _cmd_serve(args):
    import uvicorn

    from .service import create_app

    host, _, port = args.addr.rpartition(":")
    if not host or not port.isdigit():
        raise ParameterError("--addr must look like host:port, got %r" % args.addr)
    app = create_app(args.session_root)
    uvicorn.run(app, host=host, port=int(port))
    return 0


def _cmd_transform_sar(args):
    magnitude = load_features(args.magnitude)
    phase = load_features(args.phase)
    channels = sar_to_3channel(magnitude, phase)
    features = channels.reshape(channels.shape[0], -1)
    save_features(features, args.out, format=args.format)
    print(
        "sar: %d samples x %d pixels -> %d features each; written to %s"
        % (magnitude.shape[0], magnitude.shape[1], features.shape[1], args.out)
    )
    return 0


def _cmd_export(args):
    did_anything = False
    if args.predictions or args.node_function:
        if args.session is None:
            raise ParameterError("--predictions/--node-function require --session")
        session = open_session(args.session)
        if args.predictions:
            classes, confidence = session.predictions()
            save_predictions(classes, confidence, args.predictions)
            print("predictions written to %s" % args.predictions)
        if args.node_function:
            save_node_function(session.node_function(), args.node_function)
            print("node function written to %s" % args.node_function)
        did_anything = True
    if args.plot_json:
        if not args.curve:
            raise ParameterError("--plot-json requires at least one --curve NAME=PATH")
        curves = {}
        steps = None
        for spec in args.curve:
            name, _, path = spec.partition("=")
            if not path:
                raise ParameterError("--curve must look like NAME=PATH, got %r" % spec)
            curve = load_curve(path)
            if steps is None:
                steps = curve.steps
            elif curve.steps.shape != steps.shape or (curve.steps != steps).any():
                raise DataFormatError("curve %r has mismatched steps" % name)
            curves[name] = {
                "mean": [float(v) for v in curve.mean],
                "std": [float(v) for v in curve.std],
            }
        payload = {"steps": [int(s) for s in steps], "curves": curves}
        with open(args.plot_json, "w") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write("\n")
        print("plot data written to %s" % args.plot_json)
        did_anything = True
    if not did_anything:
        raise ParameterError(
            "nothing to export: pass --predictions, --node-function, or --plot-json"
        )
    return 0


def build_parser():
    parser = _Parser(prog="graphactive", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("build-graph", help="build a similarity graph from features")
    p.add_argument("--features", required=True, help="feature matrix (binary or CSV)")
    p.add_argument("--k", type=int, default=20, help="neighbors per node")
    p.add_argument("--metric", choices=("angular", "euclidean"), default="angular")
    p.add_argument("--kernel", choices=("selftuning", "global-sigma"),
                   default="selftuning")
    p.add_argument("--sigma", type=float, default=None,
                   help="kernel width for --kernel global-sigma")
    p.add_argument("--out", required=True, help="output graph file")
    p.set_defaults(func=_cmd_build_graph)

    p = sub.add_parser("spectrum", help="compute the smallest Laplacian eigenpairs")
    p.add_argument("--graph", required=True, help="graph file from build-graph")
    p.add_argument("--m", type=int, default=300, help="number of eigenpairs")
    p.add_argument("--kind", choices=("combinatorial", "normalized"),
                   default="combinatorial")
    p.add_argument("--tol", type=float, default=1e-8, help="residual tolerance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output spectrum file")
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("simulate", help="run an active-learning experiment")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--features", help="feature matrix (graph built on the fly)")
    src.add_argument("--graph", help="prebuilt graph file")
    p.add_argument("--labels", required=True, help="ground-truth label CSV")
    p.add_argument("--acquisition", choices=ACQUISITION_KINDS, default="uncertainty")
    p.add_argument("--steps", type=int, default=500, help="query budget")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--m", type=int, default=300)
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--metric", choices=("angular", "euclidean"), default="angular")
    p.add_argument("--laplacian", choices=("combinatorial", "normalized"),
                   default="combinatorial")
    p.add_argument("--initial-per-class", type=int, default=1)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split", default=None,
                   help="CSV of 'index,train|test' rows restricting the pool")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("serve", help="serve labeling sessions over HTTP")
    p.add_argument("--session-root", required=True, help="session storage directory")
    p.add_argument("--addr", default="127.0.0.1:8000", help="listen address")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("transform-sar",
                       help="magnitude/phase pairs to 3-channel features")
    p.add_argument("--magnitude", required=True, help="magnitude matrix file")
    p.add_argument("--phase", required=True, help="phase matrix file")
    p.add_argument("--format", choices=("binary", "csv"), default="binary")
    p.add_argument("--out", required=True, help="output feature file")
    p.set_defaults(func=_cmd_transform_sar)

    p = sub.add_parser("export", help="export session results and plot data")
    p.add_argument("--session", default=None, help="session directory")
    p.add_argument("--predictions", default=None, help="write predictions CSV here")
    p.add_argument("--node-function", default=None,
                   help="write the node-function matrix here")
    p.add_argument("--plot-json", default=None, help="write plot-data JSON here")
    p.add_argument("--curve", action="append", default=[],
                   help="NAME=PATH curve CSV to include in --plot-json (repeatable)")
    p.set_defaults(func=_cmd_export)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except (ConnectivityError, ConvergenceError, PoolExhaustedError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 3
    except DataFormatError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except OSError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
