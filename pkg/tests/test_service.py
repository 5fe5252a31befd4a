"""Scenario service contract: endpoints, job lifecycle, persistence, rehydration."""

from __future__ import annotations

import json
import threading
import time

import pytest
from fastapi.testclient import TestClient

from builders import B, W, line_district
from rezoner.model import ConstraintConfig
from rezoner.service import DistrictStore, JobManager, create_app
from rezoner.synthetic import generate_synthetic_district


def wait_until_settled(client, job_id, timeout=60.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        state = client.get(f"/jobs/{job_id}").json()["state"]
        if state in ("done", "failed"):
            return state
        time.sleep(0.01)
    raise AssertionError(f"job {job_id} never settled")


@pytest.fixture(scope="module")
def districts_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("districts")
    line = line_district([[{W: 3}, {B: 1}], [{W: 1}, {B: 3}]], district_id="svc-line")
    (root / "line.json").write_text(line.to_json())
    synth = generate_synthetic_district(60, 3, "logistic", seed=2)
    (root / "synth.json").write_text(synth.to_json())
    white = line_district([[{W: 2}], [{W: 2}]], district_id="svc-white")
    (root / "white.json").write_text(white.to_json())
    return root


@pytest.fixture(scope="module")
def bundle(districts_dir, tmp_path_factory):
    runs = tmp_path_factory.mktemp("runs")
    app = create_app(districts_dir, runs)
    return TestClient(app), runs


LOOSE_CONFIG = {
    "max_travel_increase_fraction": 5.0,
    "max_size_increase_fraction": 5.0,
    "enforce_contiguity": False,
    "time_budget_seconds": 0.05,
    "seed": 7,
}


@pytest.fixture(scope="module")
def done_job(bundle):
    client, _ = bundle
    response = client.post("/districts/svc-line/jobs", json=LOOSE_CONFIG)
    assert response.status_code == 202, response.text
    job_id = response.json()["id"]
    assert wait_until_settled(client, job_id) == "done"
    return job_id


@pytest.fixture(scope="module")
def failed_job(bundle):
    # a single-group district makes the objective undefined
    client, _ = bundle
    response = client.post("/districts/svc-white/jobs", json=LOOSE_CONFIG)
    assert response.status_code == 202
    job_id = response.json()["id"]
    assert wait_until_settled(client, job_id) == "failed"
    return job_id


class TestDistrictEndpoints:
    def test_store_rejects_malformed_files(self, tmp_path):
        (tmp_path / "broken.json").write_text('{"id": "x"}')
        with pytest.raises(ValueError, match="not a district JSON"):
            DistrictStore(tmp_path)

    def test_listing_is_sorted_with_summaries(self, bundle):
        client, _ = bundle
        rows = client.get("/districts").json()
        assert [r["id"] for r in rows] == ["svc-line", "svc-white", "synthetic-60x3-2"]
        line = rows[0]
        assert line["block_count"] == 4
        assert line["school_count"] == 2
        assert line["total_students"] == 8
        assert line["baseline_dissimilarity"] == 0.5
        # single-group district: index undefined, surfaced as null
        assert rows[1]["baseline_dissimilarity"] is None

    def test_detail_carries_metrics_schools_and_blocks(self, bundle):
        client, _ = bundle
        detail = client.get("/districts/svc-line").json()
        assert detail["baseline_metrics"]["dissimilarity"] == 0.5
        assert detail["baseline_metrics"]["interaction_exposure"] == 0.375
        assert detail["baseline_metrics"]["max_term"] == {"school_id": "s0", "value": 0.5}
        assert [s["id"] for s in detail["schools"]] == ["s0", "s1"]
        s0 = detail["schools"][0]
        assert s0["enrollment_total"] == 4
        assert s0["baseline_students"]["white"] == 3
        assert s0["baseline_students"]["black"] == 1
        assert sum(s0["baseline_students"].values()) == 4
        blocks = detail["blocks"]
        assert blocks["type"] == "FeatureCollection"
        assert len(blocks["features"]) == 4
        first = blocks["features"][0]["properties"]
        assert first["block_id"] == "b0"
        assert first["school_id"] == "s0"
        assert first["students"] == {"white": 3}
        assert first["students_total"] == 3
        assert first["white_share"] == 1.0
        assert blocks["features"][0]["geometry"]["type"] == "Polygon"

    def test_unknown_district_is_404(self, bundle):
        client, _ = bundle
        assert client.get("/districts/nowhere").status_code == 404
        assert client.post("/districts/nowhere/jobs", json=LOOSE_CONFIG).status_code == 404


class TestJobLifecycle:
    def test_submission_is_deterministic_and_idempotent(self, bundle, done_job):
        client, _ = bundle
        expected = JobManager.job_id_for(
            "svc-line", ConstraintConfig.from_json_obj(LOOSE_CONFIG)
        )
        assert done_job == expected
        again = client.post("/districts/svc-line/jobs", json=LOOSE_CONFIG)
        assert again.status_code == 202
        assert again.json()["id"] == done_job
        assert again.json()["state"] == "done"  # reused, not requeued

        other = client.post(
            "/districts/svc-line/jobs", json={**LOOSE_CONFIG, "seed": 8}
        )
        assert other.json()["id"] != done_job

    def test_invalid_config_is_422(self, bundle):
        client, _ = bundle
        bad = {**LOOSE_CONFIG, "time_budget_seconds": -1}
        response = client.post("/districts/svc-line/jobs", json=bad)
        assert response.status_code == 422
        assert "invalid config" in response.json()["detail"]

    def test_unknown_job_is_404(self, bundle):
        client, _ = bundle
        assert client.get("/jobs/job-doesnotexist").status_code == 404
        assert client.get("/jobs/job-doesnotexist/result").status_code == 404

    def test_done_job_reports_final_progress(self, bundle, done_job):
        client, _ = bundle
        summary = client.get(f"/jobs/{done_job}").json()
        assert summary["state"] == "done"
        assert summary["district_id"] == "svc-line"
        assert summary["error"] is None
        assert summary["progress"]["objective"] == 0.0  # the split has a perfect plan
        assert summary["config"]["seed"] == 7

    def test_result_payload_shape(self, bundle, done_job):
        client, _ = bundle
        payload = client.get(f"/jobs/{done_job}/result").json()
        assert set(payload) == {"job", "result", "report", "zones", "baseline_zones", "blocks"}

        result = payload["result"]
        assert result["baseline_objective"] == 0.5
        assert result["best_objective"] == 0.0
        assert result["trace"][0] == [0.0, 0.5]

        report = payload["report"]
        assert report["district_id"] == "svc-line"
        assert report["total_students"] == 8
        # b1 (1 student) and b3 (3 students) trade zones; anchors stay put
        assert report["total_switchers"] == 4

        for key in ("zones", "baseline_zones"):
            zones = payload[key]
            assert len(zones["features"]) == 2
            for feature in zones["features"]:
                assert feature["properties"]["block_count"] == 2
                assert feature["geometry"]["type"] in ("Polygon", "MultiPolygon")

        blocks = payload["blocks"]["features"]
        assert len(blocks) == 4
        moved = [
            f["properties"]["block_id"] for f in blocks
            if f["properties"]["school_id"] != f["properties"]["baseline_school_id"]
        ]
        assert moved == ["b1", "b3"]

    def test_result_before_done_is_409(self, bundle):
        client, _ = bundle
        config = {**LOOSE_CONFIG, "seed": 901, "time_budget_seconds": 2.0}
        job_id = client.post("/districts/synthetic-60x3-2/jobs", json=config).json()["id"]
        response = client.get(f"/jobs/{job_id}/result")
        if response.status_code == 409:  # unless the solve already finished
            assert job_id in response.json()["detail"]
        wait_until_settled(client, job_id)
        assert client.get(f"/jobs/{job_id}/result").status_code == 200

    def test_failure_is_isolated_and_described(self, bundle, failed_job):
        client, _ = bundle
        summary = client.get(f"/jobs/{failed_job}").json()
        assert summary["state"] == "failed"
        assert "white" in summary["error"]
        result = client.get(f"/jobs/{failed_job}/result")
        assert result.status_code == 409
        assert "failed" in result.json()["detail"]
        # the worker survives: later submissions still run
        probe = client.post(
            "/districts/svc-line/jobs", json={**LOOSE_CONFIG, "seed": 77}
        ).json()["id"]
        assert wait_until_settled(client, probe) == "done"


class TestPersistenceAndRehydration:
    def test_artifacts_on_disk(self, bundle, done_job):
        _, runs = bundle
        job_dir = runs / done_job
        for name in ("job.json", "result.json", "report.json", "report.csv", "trace.csv"):
            assert (job_dir / name).exists(), name
        record = json.loads((job_dir / "job.json").read_text())
        assert record["state"] == "done"
        assert record["district_id"] == "svc-line"
        trace = (job_dir / "trace.csv").read_text().splitlines()
        assert trace[0] == "elapsed_seconds,objective"

    def test_restart_rehydrates_done_but_not_failed(
        self, districts_dir, bundle, done_job, failed_job
    ):
        client, runs = bundle
        original = client.get(f"/jobs/{done_job}/result").json()

        fresh = TestClient(create_app(districts_dir, runs))
        summary = fresh.get(f"/jobs/{done_job}").json()
        assert summary["state"] == "done"
        payload = fresh.get(f"/jobs/{done_job}/result").json()
        assert payload["result"] == original["result"]
        assert payload["report"] == original["report"]
        assert payload["zones"] == original["zones"]

        # resubmitting the identical request reuses the finished job
        resub = fresh.post("/districts/svc-line/jobs", json=LOOSE_CONFIG).json()
        assert resub["id"] == done_job
        assert resub["state"] == "done"

        # the failed job was not resurrected; the same request runs afresh
        assert fresh.get(f"/jobs/{failed_job}").status_code == 404
        rerun = fresh.post("/districts/svc-white/jobs", json=LOOSE_CONFIG).json()
        assert rerun["id"] == failed_job
        assert rerun["state"] != "done"


class TestQueueLimits:
    def test_full_queue_is_503(self, tmp_path, monkeypatch):
        import rezoner.service as service_module

        line = line_district([[{W: 3}, {B: 1}], [{W: 1}, {B: 3}]], district_id="q-line")
        districts = tmp_path / "districts"
        districts.mkdir()
        (districts / "line.json").write_text(line.to_json())

        release = threading.Event()
        real = service_module.solve

        def gated(district, config, travel_provider=None, restarts=1, on_trace=None):
            assert release.wait(timeout=60.0)
            return real(district, config, travel_provider, restarts, on_trace=on_trace)

        monkeypatch.setattr(service_module, "solve", gated)
        client = TestClient(create_app(districts, tmp_path / "runs", queue_limit=1))

        first = client.post("/districts/q-line/jobs", json=LOOSE_CONFIG)
        assert first.status_code == 202
        # wait for the worker to pick the first job up, freeing the queue slot
        deadline = time.monotonic() + 10.0
        while client.get(f"/jobs/{first.json()['id']}").json()["state"] != "running":
            assert time.monotonic() < deadline
            time.sleep(0.005)

        second = client.post(
            "/districts/q-line/jobs", json={**LOOSE_CONFIG, "seed": 2}
        )
        assert second.status_code == 202

        third = client.post(
            "/districts/q-line/jobs", json={**LOOSE_CONFIG, "seed": 3}
        )
        assert third.status_code == 503
        assert "queue" in third.json()["detail"]

        release.set()
        assert wait_until_settled(client, first.json()["id"]) == "done"
        assert wait_until_settled(client, second.json()["id"]) == "done"
        # with the queue drained the rejected config is accepted on retry
        retry = client.post("/districts/q-line/jobs", json={**LOOSE_CONFIG, "seed": 3})
        assert retry.status_code == 202
