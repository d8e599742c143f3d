import numpy as np
import pytest
from fastapi.testclient import TestClient

from graphactive.data import LabelFile, save_features, save_labels
from graphactive.service import create_app


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    # a small labeled cloud on disk, as a client would provide it
    root = tmp_path_factory.mktemp("corpus")
    rng = np.random.default_rng(11)
    X = rng.random((80, 3))
    y = (X[:, 0] > 0.5).astype(np.int64)
    features = str(root / "features.gafe")
    truth = str(root / "truth.csv")
    display = str(root / "display.gafe")
    save_features(X, features)
    save_labels(LabelFile(np.arange(80), y, 2), truth)
    save_features(X[:, :2], display)
    return {"features": features, "truth": truth, "display": display, "y": y}


@pytest.fixture()
def client(tmp_path):
    return TestClient(create_app(str(tmp_path / "sessions")))


def create_request(corpus, **kw):
    body = {
        "dataset": "cloud",
        "features_path": corpus["features"],
        "n_classes": 2,
        "k": 8,
        "m": 20,
        "metric": "euclidean",
        "seed_labels": [[3, int(corpus["y"][3])], [70, int(corpus["y"][70])]],
    }
    body.update(kw)
    return body


def make_session(client, corpus, **kw):
    resp = client.post("/sessions", json=create_request(corpus, **kw))
    assert resp.status_code == 201, resp.text
    return resp.json()


class TestCreate:
    def test_descriptor(self, client, corpus):
        desc = make_session(client, corpus)
        assert desc["n"] == 80 and desc["d"] == 3
        assert desc["n_classes"] == 2
        assert desc["acquisition"] == "uncertainty"
        assert desc["step"] == 2 and desc["labeled_count"] == 2
        assert desc["pending"] is not None
        assert desc["truth_registered"] is False
        assert desc["dataset"] == "cloud"

    def test_needs_exactly_one_source(self, client, corpus):
        resp = client.post(
            "/sessions", json=create_request(corpus, features_path=None)
        )
        assert resp.status_code == 400
        assert resp.json()["error_code"] == "invalid_config"

    def test_needs_n_classes_or_truth(self, client, corpus):
        resp = client.post(
            "/sessions", json=create_request(corpus, n_classes=None)
        )
        assert resp.status_code == 400
        assert "n_classes" in resp.json()["message"]

    def test_truth_infers_n_classes(self, client, corpus):
        desc = make_session(
            client, corpus, n_classes=None, truth_path=corpus["truth"]
        )
        assert desc["n_classes"] == 2
        assert desc["truth_registered"] is True

    def test_needs_seeds(self, client, corpus):
        resp = client.post(
            "/sessions", json=create_request(corpus, seed_labels=None)
        )
        assert resp.status_code == 400
        assert "seed" in resp.json()["message"]

    def test_seed_per_class(self, client, corpus):
        desc = make_session(
            client, corpus,
            seed_labels=None, seed_per_class=2, truth_path=corpus["truth"],
        )
        assert desc["labeled_count"] == 4

    def test_seed_per_class_needs_truth(self, client, corpus):
        resp = client.post(
            "/sessions",
            json=create_request(corpus, seed_labels=None, seed_per_class=1),
        )
        assert resp.status_code == 400
        assert "truth" in resp.json()["message"]

    def test_failed_create_rolls_back(self, client, corpus, tmp_path):
        resp = client.post(
            "/sessions", json=create_request(corpus, seed_labels=[[3, 9]])
        )
        assert resp.status_code == 400
        assert client.get("/sessions").json()["sessions"] == []
        leftovers = list((tmp_path / "sessions").iterdir())
        assert leftovers == []

    def test_display_shape_checked(self, client, corpus, tmp_path):
        bad = str(tmp_path / "bad_display.gafe")
        save_features(np.zeros((5, 2)), bad)
        resp = client.post(
            "/sessions", json=create_request(corpus, display_path=bad)
        )
        assert resp.status_code == 400
        assert "display" in resp.json()["message"]


class TestQueryAndLabel:
    def test_query_payload(self, client, corpus):
        desc = make_session(client, corpus)
        sid = desc["session_id"]
        q = client.get("/sessions/%s/query" % sid).json()
        assert q["session_id"] == sid
        assert q["node"] == desc["pending"]
        assert q["step"] == 2 and q["labeled_count"] == 2
        assert q["pool_remaining"] == 78
        assert 0.0 <= q["acquisition_value"] <= 1.0
        assert q["prediction"] in (0, 1)
        assert 0.0 <= q["confidence"] <= 1.0 + 1e-9

    def test_label_pending_advances(self, client, corpus):
        desc = make_session(client, corpus)
        sid = desc["session_id"]
        node = desc["pending"]
        resp = client.post(
            "/sessions/%s/labels" % sid, json={"node": node, "label": 1}
        )
        assert resp.status_code == 200
        body = resp.json()
        assert body["node"] == node and body["label"] == 1
        assert body["step"] == 2
        assert body["labeled_count"] == 3
        assert body["next_query"]["node"] != node

    def test_label_out_of_range(self, client, corpus):
        desc = make_session(client, corpus)
        resp = client.post(
            "/sessions/%s/labels" % desc["session_id"],
            json={"node": desc["pending"], "label": 2},
        )
        assert resp.status_code == 422
        assert resp.json()["error_code"] == "label_out_of_range"

    def test_node_out_of_range(self, client, corpus):
        desc = make_session(client, corpus)
        resp = client.post(
            "/sessions/%s/labels" % desc["session_id"],
            json={"node": 80, "label": 0},
        )
        assert resp.status_code == 409
        assert resp.json()["error_code"] == "node_mismatch"

    def test_non_pending_needs_override(self, client, corpus):
        desc = make_session(client, corpus)
        sid = desc["session_id"]
        others = [n for n in range(80) if n not in (3, 70, desc["pending"])]
        resp = client.post(
            "/sessions/%s/labels" % sid, json={"node": others[0], "label": 0}
        )
        assert resp.status_code == 409
        assert resp.json()["error_code"] == "node_mismatch"
        resp = client.post(
            "/sessions/%s/labels" % sid,
            json={"node": others[0], "label": 0, "override": True},
        )
        assert resp.status_code == 200
        assert resp.json()["labeled_count"] == 3

    def test_double_submit_is_idempotent(self, client, corpus):
        desc = make_session(client, corpus)
        sid = desc["session_id"]
        node = desc["pending"]
        first = client.post(
            "/sessions/%s/labels" % sid, json={"node": node, "label": 1}
        ).json()
        again = client.post(
            "/sessions/%s/labels" % sid, json={"node": node, "label": 1}
        )
        assert again.status_code == 200
        assert again.json() == first  # cached original, not a re-commit
        handle = client.app.state.registry.get(sid)
        assert handle.session.labeled_count == 3

    def test_relabel_conflicts(self, client, corpus):
        desc = make_session(client, corpus)
        sid = desc["session_id"]
        node = desc["pending"]
        client.post("/sessions/%s/labels" % sid, json={"node": node, "label": 1})
        resp = client.post(
            "/sessions/%s/labels" % sid, json={"node": node, "label": 0}
        )
        assert resp.status_code == 409
        assert resp.json()["error_code"] == "conflict"

    def test_seed_relabel_conflicts(self, client, corpus):
        desc = make_session(client, corpus)
        resp = client.post(
            "/sessions/%s/labels" % desc["session_id"],
            json={"node": 3, "label": int(corpus["y"][3])},
        )
        assert resp.status_code == 409
        assert resp.json()["error_code"] == "conflict"

    def test_pool_exhaustion(self, client, tmp_path):
        # 6-node line graph: label everything, then ask for more
        features = str(tmp_path / "line.gafe")
        save_features(np.arange(6.0).reshape(6, 1), features)
        resp = client.post("/sessions", json={
            "dataset": "line", "features_path": features, "n_classes": 2,
            "k": 2, "m": 3, "metric": "euclidean",
            "seed_labels": [[0, 0], [5, 1]],
        })
        assert resp.status_code == 201, resp.text
        desc = resp.json()
        sid = desc["session_id"]
        body = {"labeled_count": 2}
        while True:
            q = client.get("/sessions/%s/query" % sid)
            if q.status_code == 409:
                assert q.json()["error_code"] == "pool_exhausted"
                break
            node = q.json()["node"]
            body = client.post(
                "/sessions/%s/labels" % sid, json={"node": node, "label": 0}
            ).json()
        assert body["labeled_count"] == 6
        assert body["next_query"] is None

    def test_display_in_query(self, client, corpus):
        desc = make_session(client, corpus, display_path=corpus["display"])
        q = client.get("/sessions/%s/query" % desc["session_id"]).json()
        assert len(q["display"]) == 2


class TestReads:
    def test_predictions_subset(self, client, corpus):
        desc = make_session(client, corpus)
        sid = desc["session_id"]
        resp = client.get("/sessions/%s/predictions" % sid, params={"nodes": "3,70"})
        preds = {p["node"]: p for p in resp.json()["predictions"]}
        # labeled rows are exact one-hot, so confidence 1 and the given label
        assert preds[3]["prediction"] == int(corpus["y"][3])
        assert preds[3]["confidence"] == 1.0
        assert preds[70]["prediction"] == int(corpus["y"][70])

    def test_predictions_full(self, client, corpus):
        desc = make_session(client, corpus)
        resp = client.get("/sessions/%s/predictions" % desc["session_id"])
        assert len(resp.json()["predictions"]) == 80

    def test_predictions_bad_nodes(self, client, corpus):
        desc = make_session(client, corpus)
        sid = desc["session_id"]
        assert (
            client.get("/sessions/%s/predictions" % sid, params={"nodes": "a,b"})
        ).status_code == 422
        assert (
            client.get("/sessions/%s/predictions" % sid, params={"nodes": "99"})
        ).status_code == 409

    def test_history(self, client, corpus):
        desc = make_session(client, corpus)
        sid = desc["session_id"]
        node = desc["pending"]
        client.post("/sessions/%s/labels" % sid, json={"node": node, "label": 0})
        hist = client.get("/sessions/%s/history" % sid).json()["history"]
        assert [h["step"] for h in hist] == [0, 1, 2]
        assert [h["source"] for h in hist] == ["seed", "seed", "human"]
        assert hist[2]["node"] == node

    def test_accuracy_with_truth(self, client, corpus):
        desc = make_session(client, corpus, truth_path=corpus["truth"])
        sid = desc["session_id"]
        acc = client.get("/sessions/%s/accuracy" % sid).json()["accuracy"]
        assert len(acc) == 2
        assert acc[-1]["labeled_count"] == 2
        assert 0.0 <= acc[-1]["accuracy"] <= 1.0

    def test_accuracy_without_truth(self, client, corpus):
        desc = make_session(client, corpus)
        resp = client.get("/sessions/%s/accuracy" % desc["session_id"])
        assert resp.status_code == 404
        assert resp.json()["error_code"] == "no_ground_truth"

    def test_unknown_session_everywhere(self, client):
        for path in (
            "/sessions/nope",
            "/sessions/nope/query",
            "/sessions/nope/predictions",
            "/sessions/nope/history",
            "/sessions/nope/accuracy",
        ):
            resp = client.get(path)
            assert resp.status_code == 404
            assert resp.json()["error_code"] == "unknown_session"
        resp = client.post("/sessions/nope/labels", json={"node": 0, "label": 0})
        assert resp.status_code == 404


class TestRegistry:
    def test_sessions_are_isolated(self, client, corpus):
        a = make_session(client, corpus)
        b = make_session(client, corpus, dataset="other")
        client.post(
            "/sessions/%s/labels" % a["session_id"],
            json={"node": a["pending"], "label": 0},
        )
        bd = client.get("/sessions/%s" % b["session_id"]).json()
        assert bd["labeled_count"] == 2
        listing = client.get("/sessions").json()["sessions"]
        assert len(listing) == 2
        assert {s["dataset"] for s in listing} == {"cloud", "other"}

    def test_restart_recovers_sessions(self, client, corpus, tmp_path):
        desc = make_session(client, corpus, truth_path=corpus["truth"])
        sid = desc["session_id"]
        node = desc["pending"]
        client.post("/sessions/%s/labels" % sid, json={"node": node, "label": 1})
        before = client.get("/sessions/%s" % sid).json()

        fresh = TestClient(create_app(str(tmp_path / "sessions")))
        after = fresh.get("/sessions/%s" % sid).json()
        assert after["labeled_count"] == before["labeled_count"]
        assert after["pending"] == before["pending"]
        assert after["dataset"] == "cloud"
        assert after["truth_registered"] is True
        # and the recovered session keeps working
        q = fresh.get("/sessions/%s/query" % sid).json()
        resp = fresh.post(
            "/sessions/%s/labels" % sid, json={"node": q["node"], "label": 0}
        )
        assert resp.status_code == 200
        assert resp.json()["labeled_count"] == before["labeled_count"] + 1
