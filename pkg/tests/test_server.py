import pytest
from fastapi.testclient import TestClient

from corrnet.pipeline import PipelineConfig, SyntheticSpec
from corrnet.server import create_app


@pytest.fixture(scope="module")
def client(tmp_path_factory):
    config = PipelineConfig(
        out_dir=tmp_path_factory.mktemp("server"),
        synthetic=SyntheticSpec(n_stocks=15, n_weeks=120, n_clusters=5, seed=3),
        n_periods=4,
        k=5,
        min_size=2,
        sizes=(2, 4),
        iterations=120,
        seed=5,
    )
    with TestClient(create_app(config)) as c:
        yield c


class TestPeriods:
    def test_listing(self, client):
        body = client.get("/periods").json()
        assert [p["label"] for p in body["periods"]] == ["1", "2", "3", "4"]
        assert body["periods"][0]["start"] < body["periods"][0]["end"]


class TestNetwork:
    def test_payload_shape(self, client):
        body = client.get("/network", params={"period": "1"}).json()
        assert body["n"] == 15
        assert body["candidate_splits"] == 15 * 14 // 2
        assert sorted(body["ordering"]) == list(range(15))
        assert len(body["tickers"]) == 15
        assert len(body["industry"]) == 15
        assert body["residual"] >= 0
        assert all(len(s["arc"]) == 2 and s["weight"] > 0 for s in body["splits"])

    def test_unknown_period_404(self, client):
        resp = client.get("/network", params={"period": "7"})
        assert resp.status_code == 404
        assert resp.json()["detail"]["code"] == "unknown_period"


class TestClusters:
    def test_get_initial(self, client):
        body = client.get("/clusters", params={"period": "1"}).json()
        assert body["k"] >= 2
        assert len(body["labels"]) == 15

    def test_put_get_round_trip(self, client):
        before = client.get("/clusters", params={"period": "1"}).json()
        resp = client.put(
            "/clusters", params={"period": "1"}, json={"boundaries": [2, 7, 12]}
        )
        assert resp.status_code == 200
        after = client.get("/clusters", params={"period": "1"}).json()
        assert after["boundaries"] == [2, 7, 12]
        assert after == resp.json()
        # restore
        client.put("/clusters", params={"period": "1"}, json={"boundaries": before["boundaries"]})

    def test_empty_arc_rejected_422(self, client):
        resp = client.put(
            "/clusters", params={"period": "1"}, json={"boundaries": [3, 3]}
        )
        assert resp.status_code == 422
        assert resp.json()["detail"]["code"] == "invalid_boundaries"

    def test_out_of_range_rejected(self, client):
        resp = client.put(
            "/clusters", params={"period": "1"}, json={"boundaries": [99]}
        )
        assert resp.status_code == 422


class TestSimulate:
    def test_deterministic_repeat(self, client):
        body = {"estimation": "1", "sizes": [2], "iterations": 60, "seed": 9}
        a = client.post("/simulate", json=body).json()
        b = client.post("/simulate", json=body).json()
        assert a == b
        assert a["evaluation"] == "2"

    def test_table_layout(self, client):
        body = {"estimation": "2", "sizes": [2, 4], "iterations": 60, "seed": 9}
        table = client.post("/simulate", json=body).json()["table"]
        assert table["header"] == ["size", "random", "industry", "cluster", "industry_cluster", "p_value"]
        assert len(table["rows"]) == 4
        assert table["rows"][1][0] == ""

    def test_last_period_has_no_successor(self, client):
        resp = client.post("/simulate", json={"estimation": "4"})
        assert resp.status_code == 422
        assert resp.json()["detail"]["code"] == "no_evaluation_period"

    def test_unknown_strategy(self, client):
        resp = client.post(
            "/simulate", json={"estimation": "1", "strategies": ["momentum"]}
        )
        assert resp.status_code == 422


class TestTrack:
    def test_contiguity_report(self, client):
        tickers = client.get("/network", params={"period": "2"}).json()["tickers"]
        subset = ",".join(tickers[:3])  # first three of the cycle: one arc
        body = client.get("/track", params={"period": "2", "subset": subset}).json()
        assert body["n_arcs"] == 1
        assert body["score"] == 1.0

    def test_unknown_ticker_422(self, client):
        resp = client.get("/track", params={"period": "2", "subset": "NOPE-X"})
        assert resp.status_code == 422


class TestSharedN126:
    def test_network_exposes_full_split_universe(self, pipeline126, config126):
        # reuse the session-scoped n=126 build rather than recomputing it
        app = create_app(config126, pipeline=pipeline126)
        with TestClient(app) as c:
            body = c.get("/network", params={"period": "1"}).json()
            assert body["n"] == 126
            assert body["candidate_splits"] == 7875
            assert 0 < len(body["splits"]) < 7875
            assert sorted(body["ordering"]) == list(range(126))
