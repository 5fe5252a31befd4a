"""HTTP scenario service: browse districts, launch solve jobs, fetch results.

A single worker thread drains a bounded queue, so request handling never
waits on a running solve.  Submitting the same (district, config) twice
returns the same job, and finished results are persisted atomically in
the same JSON and CSV formats the command-line runs write, so a restart
rehydrates every finished job intact.
"""

from __future__ import annotations

import hashlib
import json
import os
import queue
import threading
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, HTTPException
from shapely.geometry import box, mapping
from shapely.ops import unary_union

from .metrics import (
    UndefinedIndexError,
    dissimilarity,
    interaction_exposure,
    max_term,
    outcome_report,
)
from .model import AssignmentPlan, ConstraintConfig, District, Group, validate_district
from .solver import solve

SERVICE_VERSION = "0.1.0"
DEFAULT_QUEUE_LIMIT = 32

STATE_QUEUED = "queued"
STATE_RUNNING = "running"
STATE_DONE = "done"
STATE_FAILED = "failed"


def _json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _utcnow() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _metric_value(fn, district: District, plan) -> float | None:
    try:
        return fn(district, plan).value
    except UndefinedIndexError:
        return None


def _cell_half_extents(district: District) -> tuple[float, float]:
    """Half-sizes for the rectangle drawn around each block centroid.

    Uses the median gap between distinct coordinates, which recovers the
    cell size exactly on gridded districts and a sane scale elsewhere.
    """

    def median_gap(values: list[float]) -> float:
        uniq = sorted(set(values))
        gaps = [b - a for a, b in zip(uniq, uniq[1:]) if b - a > 1e-12]
        if not gaps:
            return 0.01
        gaps.sort()
        return gaps[len(gaps) // 2]

    lats = [b.lat for b in district.blocks.values()]
    lons = [b.lon for b in district.blocks.values()]
    return median_gap(lats) / 2.0, median_gap(lons) / 2.0


def _block_cells(district: District) -> dict[str, tuple[float, float, float, float]]:
    """block id -> (min lon, min lat, max lon, max lat) of its drawn cell."""
    dy, dx = _cell_half_extents(district)
    return {
        b.id: (b.lon - dx, b.lat - dy, b.lon + dx, b.lat + dy)
        for b in district.blocks.values()
    }


def _rect_polygon(bounds: tuple[float, float, float, float]) -> dict:
    x0, y0, x1, y1 = bounds
    return {
        "type": "Polygon",
        "coordinates": [[[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]]],
    }


def _white_share(district: District, block_id: str) -> float | None:
    total = district.block_student_total(block_id)
    if total == 0:
        return None
    return district.block_students(block_id).get(Group.WHITE, 0) / total


def _district_blocks_fc(district: District, cells) -> dict:
    features = []
    for block_id in sorted(district.blocks):
        students = district.block_students(block_id)
        features.append({
            "type": "Feature",
            "properties": {
                "block_id": block_id,
                "school_id": district.baseline_plan.school_for(block_id),
                "students_total": district.block_student_total(block_id),
                "students": {g.value: n for g, n in sorted(students.items()) if n},
                "white_share": _white_share(district, block_id),
            },
            "geometry": _rect_polygon(cells[block_id]),
        })
    return {"type": "FeatureCollection", "features": features}


def _zones_fc(district: District, plan, cells) -> dict:
    """One feature per school: its blocks' cells dissolved into a zone shape."""
    features = []
    for school_id in sorted(district.schools):
        members = [cells[b] for b in sorted(plan.zones().get(school_id, ()))]
        if not members:
            continue
        geom = unary_union([box(*m) for m in members])
        features.append({
            "type": "Feature",
            "properties": {"school_id": school_id, "block_count": len(members)},
            "geometry": mapping(geom),
        })
    return {"type": "FeatureCollection", "features": features}


def _plan_blocks_fc(district: District, plan, cells) -> dict:
    baseline = district.baseline_plan
    features = []
    for block_id in sorted(district.blocks):
        features.append({
            "type": "Feature",
            "properties": {
                "block_id": block_id,
                "school_id": plan.school_for(block_id),
                "baseline_school_id": baseline.school_for(block_id),
                "white_share": _white_share(district, block_id),
            },
            "geometry": _rect_polygon(cells[block_id]),
        })
    return {"type": "FeatureCollection", "features": features}


class DistrictStore:
    """Read-only districts loaded from a directory of district JSON files."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.districts: dict[str, District] = {}
        self._detail: dict[str, dict] = {}
        self._cells: dict[str, dict] = {}
        for path in sorted(self.directory.glob("*.json")):
            try:
                district = District.from_json(path.read_text(encoding="utf-8"))
            except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
                raise ValueError(f"{path} is not a district JSON: {exc}") from exc
            violations = validate_district(district)
            if violations:
                raise ValueError(f"{path} fails validation: {violations[0]}")
            self.districts[district.id] = district
        for district in self.districts.values():
            self._cells[district.id] = _block_cells(district)
            self._detail[district.id] = self._build_detail(district)

    def _build_detail(self, district: District) -> dict:
        plan = district.baseline_plan
        counts = district.school_counts(plan)
        term = None
        try:
            school_id, score = max_term(district, plan)
            term = {"school_id": school_id, "value": score.value}
        except UndefinedIndexError:
            pass
        return {
            "id": district.id,
            "block_count": len(district.blocks),
            "school_count": len(district.schools),
            "total_students": district.total_students(),
            "baseline_metrics": {
                "dissimilarity": _metric_value(dissimilarity, district, plan),
                "interaction_exposure": _metric_value(interaction_exposure, district, plan),
                "max_term": term,
            },
            "schools": [
                {
                    "id": s.id,
                    "lat": s.lat,
                    "lon": s.lon,
                    "enrollment_total": s.enrollment_total,
                    "baseline_students": counts.get(s.id, 0),
                }
                for s in sorted(district.schools.values(), key=lambda s: s.id)
            ],
            "blocks": _district_blocks_fc(district, self._cells[district.id]),
        }

    def summaries(self) -> list[dict]:
        return [
            {
                "id": d["id"],
                "block_count": d["block_count"],
                "school_count": d["school_count"],
                "total_students": d["total_students"],
                "baseline_dissimilarity": d["baseline_metrics"]["dissimilarity"],
            }
            for _, d in sorted(self._detail.items())
        ]

    def detail(self, district_id: str) -> dict | None:
        return self._detail.get(district_id)

    def get(self, district_id: str) -> District | None:
        return self.districts.get(district_id)

    def cells(self, district_id: str) -> dict:
        return self._cells[district_id]


class Job:
    """One queued or finished solve; state only moves forward."""

    def __init__(self, job_id: str, district_id: str, config: ConstraintConfig):
        self.id = job_id
        self.district_id = district_id
        self.config = config
        self.state = STATE_QUEUED
        self.progress: tuple[float, float] | None = None
        self.error: str | None = None
        self.created_at = _utcnow()
        self.result = None  # SolveResult once done
        self.report = None  # OutcomeReport once done

    def summary(self) -> dict:
        return {
            "id": self.id,
            "district_id": self.district_id,
            "config": self.config.to_json_obj(),
            "state": self.state,
            "progress": None if self.progress is None else {
                "elapsed_seconds": self.progress[0],
                "objective": self.progress[1],
            },
            "error": self.error,
            "created_at": self.created_at,
        }

    def record(self) -> dict:
        return {
            "id": self.id,
            "district_id": self.district_id,
            "config": self.config.to_json_obj(),
            "state": self.state,
            "error": self.error,
            "created_at": self.created_at,
        }


class QueueFullError(Exception):
    pass


class JobManager:
    """Serializes solves on one worker thread and persists finished runs."""

    def __init__(self, store: DistrictStore, runs_dir: str | Path,
                 queue_limit: int = DEFAULT_QUEUE_LIMIT):
        self.store = store
        self.runs_dir = Path(runs_dir)
        self.runs_dir.mkdir(parents=True, exist_ok=True)
        self.jobs: dict[str, Job] = {}
        self.lock = threading.Lock()
        self.queue: queue.Queue[Job] = queue.Queue(maxsize=queue_limit)
        self._rehydrate()
        self.worker = threading.Thread(target=self._drain, daemon=True)
        self.worker.start()

    @staticmethod
    def job_id_for(district_id: str, config: ConstraintConfig) -> str:
        """Deterministic id, so identical submissions share one job."""
        key = json.dumps(
            {"district_id": district_id, "config": config.to_json_obj()},
            sort_keys=True,
        )
        return "job-" + hashlib.sha256(key.encode()).hexdigest()[:16]

    def _rehydrate(self) -> None:
        # only fully finished jobs survive a restart; interrupted ones rerun
        for record_path in sorted(self.runs_dir.glob("*/job.json")):
            try:
                record = json.loads(record_path.read_text(encoding="utf-8"))
                if record["state"] != STATE_DONE:
                    continue
                result_text = (record_path.parent / "result.json").read_text(encoding="utf-8")
                report_obj = json.loads(
                    (record_path.parent / "report.json").read_text(encoding="utf-8")
                )
                config = ConstraintConfig.from_json_obj(record["config"])
            except (OSError, KeyError, TypeError, ValueError, json.JSONDecodeError):
                continue
            if self.store.get(record["district_id"]) is None:
                continue
            job = Job(record["id"], record["district_id"], config)
            job.state = STATE_DONE
            job.created_at = record.get("created_at", job.created_at)
            job.result = json.loads(result_text)  # raw JSON obj; plan inside
            job.report = report_obj
            if job.result.get("trace"):
                t, v = job.result["trace"][-1]
                job.progress = (t, v)
            self.jobs[job.id] = job

    def submit(self, district_id: str, config: ConstraintConfig) -> Job:
        job_id = self.job_id_for(district_id, config)
        with self.lock:
            existing = self.jobs.get(job_id)
            if existing is not None:
                return existing
            job = Job(job_id, district_id, config)
            try:
                self.queue.put_nowait(job)
            except queue.Full:
                raise QueueFullError("solve queue is full") from None
            self.jobs[job_id] = job
        return job

    def get(self, job_id: str) -> Job | None:
        with self.lock:
            return self.jobs.get(job_id)

    def _drain(self) -> None:
        while True:
            job = self.queue.get()
            try:
                self._run(job)
            except Exception as exc:  # keep the worker alive for later jobs
                with self.lock:
                    job.state = STATE_FAILED
                    job.error = f"{type(exc).__name__}: {exc}"
                self._persist_record(job)
            finally:
                self.queue.task_done()

    def _run(self, job: Job) -> None:
        district = self.store.get(job.district_id)
        if district is None:
            raise ValueError(f"district {job.district_id} is no longer available")
        with self.lock:
            job.state = STATE_RUNNING

        def on_trace(elapsed: float, value: float) -> None:
            with self.lock:
                job.progress = (elapsed, value)

        result = solve(district, job.config, on_trace=on_trace)
        report = outcome_report(district, district.baseline_plan, result.best_plan)

        job_dir = self.runs_dir / job.id
        job_dir.mkdir(parents=True, exist_ok=True)
        _atomic_write(job_dir / "result.json", _json_text(result.to_json_obj()))
        _atomic_write(job_dir / "report.json", _json_text(report.to_json_obj()))
        _atomic_write(job_dir / "report.csv", report.to_csv())
        _atomic_write(job_dir / "trace.csv", result.trace_csv())

        with self.lock:
            job.result = result.to_json_obj()
            job.report = report.to_json_obj()
            job.state = STATE_DONE
        self._persist_record(job)

    def _persist_record(self, job: Job) -> None:
        job_dir = self.runs_dir / job.id
        job_dir.mkdir(parents=True, exist_ok=True)
        _atomic_write(job_dir / "job.json", _json_text(job.record()))


def create_app(districts_dir: str | Path, runs_dir: str | Path | None = None,
               queue_limit: int = DEFAULT_QUEUE_LIMIT) -> FastAPI:
    store = DistrictStore(districts_dir)
    if runs_dir is None:
        runs_dir = Path(districts_dir) / "runs"
    manager = JobManager(store, runs_dir, queue_limit)

    app = FastAPI(title="rezoner scenario service", version=SERVICE_VERSION)
    app.state.store = store
    app.state.manager = manager

    @app.get("/districts")
    def list_districts() -> list[dict]:
        return store.summaries()

    @app.get("/districts/{district_id}")
    def get_district(district_id: str) -> dict:
        detail = store.detail(district_id)
        if detail is None:
            raise HTTPException(404, f"unknown district {district_id!r}")
        return detail

    @app.post("/districts/{district_id}/jobs", status_code=202)
    def submit_job(district_id: str, config: dict) -> dict:
        if store.get(district_id) is None:
            raise HTTPException(404, f"unknown district {district_id!r}")
        try:
            parsed = ConstraintConfig.from_json_obj(config)
        except (TypeError, ValueError) as exc:
            raise HTTPException(422, f"invalid config: {exc}") from exc
        try:
            job = manager.submit(district_id, parsed)
        except QueueFullError as exc:
            raise HTTPException(503, str(exc)) from exc
        return job.summary()

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str) -> dict:
        job = manager.get(job_id)
        if job is None:
            raise HTTPException(404, f"unknown job {job_id!r}")
        with manager.lock:
            return job.summary()

    @app.get("/jobs/{job_id}/result")
    def get_result(job_id: str) -> dict:
        job = manager.get(job_id)
        if job is None:
            raise HTTPException(404, f"unknown job {job_id!r}")
        with manager.lock:
            state = job.state
            result_obj = job.result
            report_obj = job.report
        if state != STATE_DONE:
            detail = f"job {job_id} is {state}"
            if state == STATE_FAILED and job.error:
                detail += f": {job.error}"
            raise HTTPException(409, detail)
        district = store.get(job.district_id)
        cells = store.cells(job.district_id)
        plan = AssignmentPlan.from_json_obj(result_obj["best_plan"])
        return {
            "job": job.summary(),
            "result": result_obj,
            "report": report_obj,
            "zones": _zones_fc(district, plan, cells),
            "baseline_zones": _zones_fc(district, district.baseline_plan, cells),
            "blocks": _plan_blocks_fc(district, plan, cells),
        }

    return app
