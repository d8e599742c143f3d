"""HTTP labeling service: active-learning sessions driven by a human oracle.

One process owns all sessions. Each session is a single-writer state machine:
label commits serialize on a per-session lock, while reads (query,
predictions, history, accuracy) serve an immutable snapshot swapped in after
each commit, so they stay responsive during long re-solves and never see torn
state. The on-disk journal is authoritative; the service replays it for every
session directory found under the session root at startup.
"""

import os
import shutil
import threading
import uuid
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import List, Optional, Tuple

import numpy as np
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .data import load_features, load_labels, save_features
from .errors import DataFormatError, GraphActiveError, ParameterError
from .graph import build_graph, load_graph
from .session import ActiveSession, SessionConfig, open_session, save_session

META_FILE = "meta.txt"
DISPLAY_FILE = "display.gafe"


class ApiError(Exception):
    def __init__(self, status, error_code, message):
        super().__init__(message)
        self.status = status
        self.error_code = error_code
        self.message = message


def _unknown_session(session_id):
    return ApiError(404, "unknown_session", "no session with id %r" % session_id)


class CreateSessionRequest(BaseModel):
    dataset: str = "unnamed"
    features_path: Optional[str] = None
    graph_path: Optional[str] = None
    truth_path: Optional[str] = None
    display_path: Optional[str] = None
    n_classes: Optional[int] = None
    acquisition: str = "uncertainty"
    gamma: float = 0.5
    m: int = 300
    seed: int = 0
    k: int = 20
    metric: str = "angular"
    laplacian: str = "combinatorial"
    tol: float = 1e-8
    seed_labels: Optional[List[Tuple[int, int]]] = None
    seed_per_class: Optional[int] = None


class LabelRequest(BaseModel):
    node: int
    label: int
    override: bool = False


@dataclass(frozen=True)
class SessionSnapshot:
    """Immutable read view of a session, swapped in whole after each commit."""

    session_id: str
    dataset: str
    created_at: str
    updated_at: str
    n: int
    d: Optional[int]
    n_classes: int
    acquisition: str
    step: int
    labeled_count: int
    pool_remaining: int
    pending: Optional[int]
    pending_value: float
    classes: np.ndarray
    confidence: np.ndarray
    journal: tuple
    accuracy: tuple
    display: Optional[np.ndarray]
    truth_registered: bool


class SessionHandle:
    def __init__(self, session_id, session, dataset, created_at, updated_at,
                 d=None, display=None):
        self.session_id = session_id
        self.session = session
        self.dataset = dataset
        self.created_at = created_at
        self.d = d
        self.display = display
        self.lock = threading.Lock()
        self.label_responses = {}
        self.snapshot = self._snapshot(updated_at)

    def _snapshot(self, updated_at):
        s = self.session
        if s.labeled_count:
            classes, confidence = s.predictions()
        else:
            classes = np.zeros(s.n_nodes, dtype=np.int64)
            confidence = np.zeros(s.n_nodes)
        return SessionSnapshot(
            session_id=self.session_id,
            dataset=self.dataset,
            created_at=self.created_at,
            updated_at=updated_at,
            n=s.n_nodes,
            d=self.d,
            n_classes=s.config.n_classes,
            acquisition=s.config.acquisition,
            step=s.step,
            labeled_count=s.labeled_count,
            pool_remaining=s.pool_remaining,
            pending=s.pending,
            pending_value=s.pending_value,
            classes=classes,
            confidence=confidence,
            journal=tuple(s.rows),
            accuracy=tuple(s.accuracy_series),
            display=self.display,
            truth_registered=s.truth is not None,
        )

    def refresh(self):
        self.snapshot = self._snapshot(_now())


def _now():
    return datetime.now(timezone.utc).isoformat()


def _save_meta(path, dataset, created_at, d):
    with open(path, "w") as f:
        f.write("dataset=%s\n" % dataset)
        f.write("created_at=%s\n" % created_at)
        f.write("d=%s\n" % ("" if d is None else d))


def _load_meta(path):
    values = {"dataset": "unnamed", "created_at": _now(), "d": ""}
    if os.path.exists(path):
        with open(path) as f:
            for line in f:
                key, _, raw = line.strip().partition("=")
                if key in values:
                    values[key] = raw
    d = int(values["d"]) if values["d"] else None
    return values["dataset"], values["created_at"], d


class SessionRegistry:
    """All live sessions, keyed by id; restores from disk at startup."""

    def __init__(self, session_root):
        self.session_root = session_root
        os.makedirs(session_root, exist_ok=True)
        self._lock = threading.Lock()
        self._handles = {}
        for name in sorted(os.listdir(session_root)):
            directory = os.path.join(session_root, name)
            if not os.path.isdir(directory):
                continue
            session = open_session(directory)
            dataset, created_at, d = _load_meta(os.path.join(directory, META_FILE))
            display = None
            display_path = os.path.join(directory, DISPLAY_FILE)
            if os.path.exists(display_path):
                display = load_features(display_path, format="binary")
            journal = os.path.join(directory, "journal.csv")
            updated_at = (
                datetime.fromtimestamp(
                    os.path.getmtime(journal), timezone.utc
                ).isoformat()
                if os.path.exists(journal)
                else created_at
            )
            self._handles[name] = SessionHandle(
                name, session, dataset, created_at, updated_at, d=d, display=display
            )

    def get(self, session_id):
        handle = self._handles.get(session_id)
        if handle is None:
            raise _unknown_session(session_id)
        return handle

    def list(self):
        return sorted(self._handles.values(), key=lambda h: h.created_at)

    def create(self, req):
        if (req.features_path is None) == (req.graph_path is None):
            raise ApiError(
                400, "invalid_config",
                "exactly one of features_path and graph_path is required",
            )
        d = None
        if req.features_path is not None:
            X = load_features(req.features_path)
            d = X.shape[1]
            graph = build_graph(X, k=req.k, metric=req.metric)
        else:
            graph = load_graph(req.graph_path)
        n = graph.n_nodes

        truth = None
        n_classes = req.n_classes
        if req.truth_path is not None:
            truth_file = load_labels(req.truth_path, n_classes=n_classes, n=n)
            truth = truth_file.dense(n)
            if (truth < 0).any():
                raise ApiError(
                    400, "invalid_config", "truth file must label every node"
                )
            if n_classes is None:
                n_classes = truth_file.n_classes
        if n_classes is None:
            raise ApiError(
                400, "invalid_config", "n_classes is required without a truth file"
            )

        seeds = []
        if req.seed_labels:
            seeds = [(int(node), int(label)) for node, label in req.seed_labels]
        if req.seed_per_class is not None:
            if truth is None:
                raise ApiError(
                    400, "invalid_config", "seed_per_class requires truth_path"
                )
            rng = np.random.default_rng(req.seed)
            for cls in range(n_classes):
                members = np.flatnonzero(truth == cls)
                if members.size < req.seed_per_class:
                    raise ApiError(
                        400, "invalid_config",
                        "class %d has only %d members" % (cls, members.size),
                    )
                for node in rng.choice(members, req.seed_per_class, replace=False):
                    seeds.append((int(node), int(truth[node])))
        if not seeds:
            raise ApiError(
                400, "invalid_config",
                "at least one seed label is required (seed_labels or seed_per_class)",
            )

        display = None
        if req.display_path is not None:
            display = load_features(req.display_path)
            if display.shape[0] != n:
                raise ApiError(
                    400, "invalid_config",
                    "display payload has %d rows for %d nodes" % (display.shape[0], n),
                )

        config = SessionConfig(
            n_classes=n_classes, acquisition=req.acquisition, gamma=req.gamma,
            m=req.m, seed=req.seed, k=req.k, metric=req.metric,
            laplacian=req.laplacian, tol=req.tol,
        )
        session_id = uuid.uuid4().hex[:12]
        directory = os.path.join(self.session_root, session_id)
        created_at = _now()
        try:
            session = save_session(directory, graph, config, truth=truth)
            _save_meta(os.path.join(directory, META_FILE), req.dataset, created_at, d)
            if display is not None:
                save_features(display, os.path.join(directory, DISPLAY_FILE))
            for node, label in seeds:
                session.add_label(node, label, source="seed")
        except GraphActiveError:
            shutil.rmtree(directory, ignore_errors=True)
            raise
        handle = SessionHandle(
            session_id, session, req.dataset, created_at, created_at,
            d=d, display=display,
        )
        with self._lock:
            self._handles[session_id] = handle
        return handle


def _descriptor(snap):
    return {
        "session_id": snap.session_id,
        "dataset": snap.dataset,
        "created_at": snap.created_at,
        "updated_at": snap.updated_at,
        "n": snap.n,
        "d": snap.d,
        "n_classes": snap.n_classes,
        "acquisition": snap.acquisition,
        "step": snap.step,
        "labeled_count": snap.labeled_count,
        "pool_remaining": snap.pool_remaining,
        "pending": snap.pending,
        "truth_registered": snap.truth_registered,
    }


def _query_payload(snap):
    if snap.pending is None:
        raise ApiError(409, "pool_exhausted", "no unlabeled candidates remain")
    node = snap.pending
    payload = {
        "session_id": snap.session_id,
        "node": node,
        "acquisition_value": snap.pending_value,
        "prediction": int(snap.classes[node]),
        "confidence": float(snap.confidence[node]),
        "step": snap.step,
        "labeled_count": snap.labeled_count,
        "pool_remaining": snap.pool_remaining,
    }
    if snap.display is not None:
        payload["display"] = [float(v) for v in snap.display[node]]
    return payload


def create_app(session_root):
    """Build the FastAPI app serving sessions stored under session_root."""
    app = FastAPI(title="graphactive labeling service")
    # the browser client may be served from another origin (or file://)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
        allow_headers=["*"],
    )
    registry = SessionRegistry(session_root)
    app.state.registry = registry

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={"error_code": exc.error_code, "message": exc.message},
        )

    @app.exception_handler(GraphActiveError)
    async def _engine_error(request: Request, exc: GraphActiveError):
        return JSONResponse(
            status_code=400,
            content={"error_code": "invalid_config", "message": str(exc)},
        )

    @app.post("/sessions", status_code=201)
    def create_session(req: CreateSessionRequest):
        handle = registry.create(req)
        return _descriptor(handle.snapshot)

    @app.get("/sessions")
    def list_sessions():
        return {"sessions": [_descriptor(h.snapshot) for h in registry.list()]}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return _descriptor(registry.get(session_id).snapshot)

    @app.get("/sessions/{session_id}/query")
    def get_query(session_id: str):
        return _query_payload(registry.get(session_id).snapshot)

    @app.post("/sessions/{session_id}/labels")
    def post_label(session_id: str, req: LabelRequest):
        handle = registry.get(session_id)
        session = handle.session
        if not 0 <= req.label < session.config.n_classes:
            raise ApiError(
                422, "label_out_of_range",
                "label %d outside 0..%d" % (req.label, session.config.n_classes - 1),
            )
        if not 0 <= req.node < session.n_nodes:
            raise ApiError(
                409, "node_mismatch", "node %d out of range" % req.node
            )
        with handle.lock:
            if req.node in session.state.labeled:
                stored = handle.label_responses.get(req.node)
                if stored is not None and stored[0] == req.label:
                    return stored[1]
                raise ApiError(
                    409, "conflict",
                    "node %d is already labeled" % req.node,
                )
            if req.node != session.pending and not req.override:
                raise ApiError(
                    409, "node_mismatch",
                    "node %d is not the pending query (%s); pass override to "
                    "label it anyway" % (req.node, session.pending),
                )
            record = session.add_label(req.node, req.label, source="human")
            handle.refresh()
            snap = handle.snapshot
            response = {
                "session_id": snap.session_id,
                "step": record.step,
                "node": record.chosen,
                "label": record.label_assigned,
                "labeled_count": snap.labeled_count,
                "pool_remaining": snap.pool_remaining,
                "next_query": None if snap.pending is None else _query_payload(snap),
            }
            handle.label_responses[req.node] = (req.label, response)
        return response

    @app.get("/sessions/{session_id}/predictions")
    def get_predictions(session_id: str, nodes: Optional[str] = None):
        snap = registry.get(session_id).snapshot
        if nodes:
            try:
                subset = [int(v) for v in nodes.split(",")]
            except ValueError:
                raise ApiError(
                    422, "label_out_of_range", "nodes must be a comma-separated "
                    "list of integers",
                ) from None
            bad = [i for i in subset if not 0 <= i < snap.n]
            if bad:
                raise ApiError(
                    409, "node_mismatch", "node %d out of range" % bad[0]
                )
        else:
            subset = range(snap.n)
        return {
            "session_id": snap.session_id,
            "predictions": [
                {
                    "node": int(i),
                    "prediction": int(snap.classes[i]),
                    "confidence": float(snap.confidence[i]),
                }
                for i in subset
            ],
        }

    @app.get("/sessions/{session_id}/history")
    def get_history(session_id: str):
        snap = registry.get(session_id).snapshot
        return {
            "session_id": snap.session_id,
            "history": [
                {
                    "step": row.step,
                    "node": row.index,
                    "label": row.label,
                    "source": row.source,
                }
                for row in snap.journal
            ],
        }

    @app.get("/sessions/{session_id}/accuracy")
    def get_accuracy(session_id: str):
        snap = registry.get(session_id).snapshot
        if not snap.truth_registered:
            raise ApiError(
                404, "no_ground_truth",
                "session %s has no ground truth registered" % session_id,
            )
        return {
            "session_id": snap.session_id,
            "accuracy": [
                {"step": step, "labeled_count": count, "accuracy": acc}
                for step, count, acc in snap.accuracy
            ],
        }

    return app
