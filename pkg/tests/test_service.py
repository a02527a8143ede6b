"""HTTP service endpoints exercised through the in-process test client."""

import json
import warnings

import numpy as np
import pytest

from uncertain_events.families import DistributionSpec, FamilyId
from uncertain_events.fitting import read_fits_csv

from conftest import survey_csv_text, synthetic_coder


@pytest.fixture(scope="module")
def client():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

        from uncertain_events.service.app import create_app

        with TestClient(create_app()) as c:
            yield c


@pytest.fixture(scope="module")
def small_survey_csv():
    rng = np.random.default_rng(60)
    dists = []
    for coder in range(3):
        for y in (1, 13, 100):
            spec = DistributionSpec(
                FamilyId("gumbel", mixture=True),
                (1.3 * y * float(rng.uniform(0.9, 1.1)), 0.5 * y, 0.45),
                anchor=y)
            dists.append(synthetic_coder(f"c{coder}", "sb", "good", y, spec))
    return survey_csv_text(dists)


class TestHealth:
    def test_health(self, client):
        body = client.get("/health").json()
        assert body["status"] == "ok"
        assert body["default_bundle"].endswith("table2_sb.json")


class TestPredictEndpoints:
    def test_parameters_table2(self, client):
        body = client.post("/predict/parameters",
                           json={"reported_value": 0}).json()
        assert body["family"] == "gumbel" and body["mixture"]
        assert body["theta"][0] == pytest.approx(0.8076, abs=1e-3)
        assert body["theta"][1] == pytest.approx(0.7356, abs=1e-3)
        assert body["theta"][2] == pytest.approx(0.4763, abs=1e-3)
        assert body["mean_truncated"] >= body["mean_untruncated"]

    def test_pmf(self, client):
        body = client.post("/predict/pmf", json={"reported_value": 13}).json()
        assert body["values"][0] == 0
        probs = body["pmf"]
        assert body["values"][int(np.argmax(probs))] == 13
        assert body["csv"].startswith("value,pmf")

    def test_quantiles_ordered(self, client):
        body = client.post("/predict/quantiles",
                           json={"reported_value": 40,
                                 "probs": [0.1, 0.5, 0.9]}).json()
        q = body["quantiles"]
        assert q[0] <= q[1] <= q[2]

    def test_curve(self, client):
        body = client.post("/predict/curve", json={"grid": [0, 1, 2]}).json()
        assert len(body["csv"].strip().split("\n")) == 4

    def test_inline_bundle(self, client, table2_bundle):
        doc = json.loads(table2_bundle.to_json())
        body = client.post("/predict/parameters",
                           json={"reported_value": 1, "bundle": doc}).json()
        assert body["theta"][0] == pytest.approx(2.4514, abs=1e-3)

    def test_bad_bundle_rejected(self, client):
        response = client.post("/predict/parameters",
                               json={"reported_value": 1,
                                     "bundle": {"family": "gumbel"}})
        assert response.status_code == 400
        assert response.json()["detail"]["code"] == "bad-bundle"

    def test_validation_error(self, client):
        assert client.post("/predict/parameters",
                           json={"reported_value": -3}).status_code == 422


class TestDrawsAndSimulate:
    EVENTS = [{"event_id": "a", "reported_value": 3, "violence_type": "sb"},
              {"event_id": "b", "reported_value": 30, "violence_type": "sb"}]

    def test_draws_deterministic(self, client):
        payload = {"events": self.EVENTS, "n": 100, "seed": 4}
        first = client.post("/draws", json=payload).json()["csv"]
        second = client.post("/draws", json=payload).json()["csv"]
        assert first == second
        assert len(first.strip().split("\n")) == 201

    def test_simulate(self, client):
        payload = {"events": self.EVENTS, "replicates": 64, "seed": 9}
        body = client.post("/simulate", json=payload).json()
        assert body["summary"]["reported_sum"] == 33
        assert len(body["totals_csv"].strip().split("\n")) == 65
        again = client.post("/simulate", json=payload).json()
        assert again["totals_csv"] == body["totals_csv"]

    def test_empty_events(self, client):
        response = client.post("/simulate", json={"events": [], "seed": 1})
        assert response.status_code == 400
        assert response.json()["detail"]["code"] == "empty-events"


class TestFitAndCrossval:
    def test_fit_then_crossval(self, client, small_survey_csv):
        fit_body = client.post("/fit", json={
            "survey_csv": small_survey_csv,
            "families": ["gumbel-mix", "gumbel"],
            "seed": 7,
            "population_size": 40,
            "generations": 25,
        }).json()
        assert fit_body["n_fits"] == 2 * 9
        fits = read_fits_csv(fit_body["fits_csv"])
        assert len(fits) == 18
        labels = {s["family"] for s in fit_body["summary"]}
        assert labels == {"gumbel", "gumbel-mix"}

        cv_body = client.post("/crossval", json={
            "survey_csv": small_survey_csv,
            "fits_csv": fit_body["fits_csv"],
            "ivs": "y",
        }).json()
        lines = cv_body["ranking_csv"].strip().split("\n")
        assert len(lines) == 3
        assert lines[1].split(",")[1:3] == ["gumbel", "true"]  # mixture ranks first

    def test_fit_rejects_garbage_survey(self, client):
        response = client.post("/fit", json={
            "survey_csv": "nope,nope\n1,2\n",
            "families": ["gumbel-mix"],
            "seed": 1,
        })
        assert response.status_code == 400
        assert response.json()["detail"]["code"] == "bad-survey"

    def test_crossval_requires_two_coders(self, client, table2_bundle):
        spec = DistributionSpec(FamilyId("gumbel", mixture=True),
                                (15.0, 3.0, 0.4), anchor=13)
        lone = [synthetic_coder("solo", "sb", "good", 13, spec)]
        fit_body = client.post("/fit", json={
            "survey_csv": survey_csv_text(lone),
            "families": ["gumbel-mix"],
            "seed": 2,
            "population_size": 20,
            "generations": 10,
        }).json()
        response = client.post("/crossval", json={
            "survey_csv": survey_csv_text(lone),
            "fits_csv": fit_body["fits_csv"],
            "ivs": "none",
        })
        assert response.status_code == 400
        assert response.json()["detail"]["code"] == "insufficient-coders"
