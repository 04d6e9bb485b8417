"""
Tests for the report server.

Covers health, run listing, summaries, charts, missing runs and
API key authentication.
"""

import pytest
from fastapi.testclient import TestClient

from altmas import __version__, config
from altmas.api.app import app, get_results_dir
from altmas.estimation import MetricEstimate
from altmas.harness.loop import ExperimentLog, IterationRecord
from altmas.harness.report import write_csv


def make_log(strategy):
    records = [
        IterationRecord(
            rep=0,
            iteration=i,
            labels_spent=10 + i,
            estimates=[MetricEstimate("accuracy", 0.7 + 0.01 * i, 0.72, 0.02, 0.0144)],
            surrogate_accuracy=0.9,
            chosen=(i,) if i < 2 else (),
        )
        for i in range(3)
    ]
    return ExperimentLog(strategy=strategy, records=records, n0=10)


@pytest.fixture
def results_dir(tmp_path):
    """Results directory with one finished run and one empty directory."""
    write_csv(make_log("altmas"), tmp_path / "run1" / "altmas.csv")
    write_csv(make_log("tradition"), tmp_path / "run1" / "tradition.csv")
    (tmp_path / "empty").mkdir()
    app.dependency_overrides[get_results_dir] = lambda: tmp_path
    yield tmp_path
    app.dependency_overrides.clear()


@pytest.fixture
def client(results_dir, monkeypatch):
    monkeypatch.setattr(config, "API_KEY", None)
    return TestClient(app)


class TestHealth:
    def test_health(self, client):
        response = client.get("/health")
        assert response.status_code == 200
        assert response.json() == {"status": "ok", "version": __version__}


class TestRuns:
    """Test the run listing and per-run endpoints."""

    def test_list_runs(self, client):
        response = client.get("/runs")
        assert response.status_code == 200
        assert response.json() == {"runs": [{"run": "run1", "strategies": ["altmas", "tradition"]}]}

    def test_summary(self, client):
        response = client.get("/runs/run1/summary")
        assert response.status_code == 200
        data = response.json()
        assert data["run"] == "run1"
        assert set(data["strategies"]) == {"altmas", "tradition"}
        assert data["strategies"]["altmas"]["labels_spent"] == 12

    def test_chart(self, client):
        response = client.get("/runs/run1/chart.svg")
        assert response.status_code == 200
        assert response.headers["content-type"].startswith("image/svg+xml")
        assert "<svg" in response.text

    def test_missing_run(self, client):
        assert client.get("/runs/nope/summary").status_code == 404

    def test_run_without_logs(self, client):
        response = client.get("/runs/empty/chart.svg")
        assert response.status_code == 404
        assert "no logs" in response.json()["detail"]

    def test_path_outside_results(self, client):
        assert client.get("/runs/../summary").status_code == 404

    def test_corrupt_log(self, client, results_dir):
        (results_dir / "run1" / "broken.csv").write_text("a,b\n1,2\n")
        assert client.get("/runs/run1/summary").status_code == 422


class TestAuthentication:
    """Test the optional API key."""

    @pytest.fixture
    def keyed_client(self, results_dir, monkeypatch):
        monkeypatch.setattr(config, "API_KEY", "secret")
        return TestClient(app)

    def test_missing_key(self, keyed_client):
        response = keyed_client.get("/runs")
        assert response.status_code == 401
        assert response.json()["detail"] == "Invalid API key"

    def test_wrong_key(self, keyed_client):
        assert keyed_client.get("/runs", headers={"x-api-key": "wrong"}).status_code == 401

    def test_valid_key(self, keyed_client):
        assert keyed_client.get("/runs", headers={"x-api-key": "secret"}).status_code == 200

    def test_health_is_open(self, keyed_client):
        assert keyed_client.get("/health").status_code == 200
