"""Command-line runs: ingest, solve, sweep, report, check, and plumbing.

Every command lands its outputs in one directory next to a manifest that
records input digests (taken before any processing) and the full
configuration, so `rezoner replay manifest.json --out elsewhere`
reproduces the original outputs byte for byte.

Exit codes: 0 success, 1 domain violation, 2 input or parse error.
"""

from __future__ import annotations

import hashlib
import json
import os
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import click

from .estimation import (
    AllocationInput,
    UnallocatableError,
    allocate_students,
    read_census_csv,
    read_enrollment_csv,
)
from .feasibility import check_feasibility
from .geo import (
    BoundaryPolygonSet,
    GeometryError,
    HaversineTravelTimeProvider,
    MatrixTravelTimeProvider,
    assign_blocks_to_schools,
    block_polygons_from_geojson_obj,
    build_adjacency,
    read_school_locations_csv,
    read_travel_matrix_csv,
)
from .metrics import UndefinedIndexError, outcome_report
from .model import (
    AssignmentPlan,
    Block,
    ConstraintConfig,
    District,
    School,
    validate_district,
)
from .solver import InstanceTooLargeError, solve, sweep
from .synthetic import generate_synthetic_district

TOOL_VERSION = "0.1.0"

OBJECTIVE_CHOICES = ("dissimilarity", "interaction_exposure", "leximin")


class CliError(Exception):
    """Failure with a stable exit code and a machine-readable payload."""

    exit_code = 1
    kind = "domain"

    def to_json(self) -> str:
        return json.dumps(
            {"error": {"kind": self.kind, "message": str(self)}}, sort_keys=True
        )


class DomainError(CliError):
    exit_code = 1
    kind = "domain"


class InputError(CliError):
    exit_code = 2
    kind = "input"


def _json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _atomic_write(path: Path, text: str) -> None:
    # write-temp-then-rename so readers never observe a partial file
    tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _digest_file(path: str) -> dict:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    return {"path": str(path), "sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)}


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce a run: command, arguments, input digests."""

    command: str
    arguments: dict
    inputs: tuple[dict, ...]  # each: {"role", "path", "sha256", "bytes"}
    tool_version: str
    created_at: str

    @classmethod
    def record(cls, command: str, arguments: dict, inputs: dict[str, str]) -> "RunManifest":
        """Digest every input file now, before anything parses or computes."""
        digested = tuple(
            {"role": role, **_digest_file(path)} for role, path in sorted(inputs.items())
        )
        return cls(
            command=command,
            arguments=arguments,
            inputs=digested,
            tool_version=TOOL_VERSION,
            created_at=datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        )

    def to_json_obj(self) -> dict:
        return {
            "command": self.command,
            "arguments": self.arguments,
            "inputs": list(self.inputs),
            "tool_version": self.tool_version,
            "created_at": self.created_at,
        }

    @classmethod
    def from_json_obj(cls, obj) -> "RunManifest":
        try:
            return cls(
                command=obj["command"],
                arguments=dict(obj["arguments"]),
                inputs=tuple(dict(i) for i in obj["inputs"]),
                tool_version=obj.get("tool_version", ""),
                created_at=obj.get("created_at", ""),
            )
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed manifest: {exc}") from exc

    def input_path(self, role: str) -> str:
        for entry in self.inputs:
            if entry["role"] == role:
                return entry["path"]
        raise InputError(f"manifest records no '{role}' input")

    def verify_inputs(self) -> None:
        for entry in self.inputs:
            current = _digest_file(entry["path"])
            if current["sha256"] != entry["sha256"]:
                raise InputError(
                    f"input {entry['path']} changed since the original run "
                    f"(recorded {entry['sha256'][:12]}, found {current['sha256'][:12]})"
                )


def _write_run_dir(out_dir: Path, manifest: RunManifest, files: dict[str, str]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    _atomic_write(out_dir / "manifest.json", _json_text(manifest.to_json_obj()))
    for name, text in files.items():
        _atomic_write(out_dir / name, text)


def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def _load_district(path: str) -> District:
    obj = _load_json(path)
    try:
        return District.from_json_obj(obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path} is not a district JSON: {exc}") from exc


def _load_plan(path: str) -> AssignmentPlan:
    obj = _load_json(path)
    if isinstance(obj, dict) and "best_plan" in obj:
        obj = obj["best_plan"]  # accept a whole result.json
    try:
        return AssignmentPlan.from_json_obj(obj)
    except (KeyError, TypeError) as exc:
        raise InputError(f"{path} is not an assignment plan JSON: {exc}") from exc


def _require_valid(district: District) -> None:
    violations = validate_district(district)
    if violations:
        listing = "; ".join(str(v) for v in violations[:5])
        more = f" (+{len(violations) - 5} more)" if len(violations) > 5 else ""
        raise DomainError(f"district fails validation: {listing}{more}")


def _config_from_args(args: dict) -> ConstraintConfig:
    try:
        cfg = ConstraintConfig(
            max_travel_increase_fraction=float(args["max_travel_increase"]),
            max_size_increase_fraction=float(args["max_size_increase"]),
            enforce_contiguity=bool(args["contiguity"]),
            objective_mode=args["objective"],
            time_budget_seconds=float(args["budget"]),
            seed=int(args["seed"]),
        )
        cfg.validate()
    except ValueError as exc:
        raise InputError(f"invalid constraint flags: {exc}") from exc
    return cfg


def _provider_from(matrix_path: str | None):
    if matrix_path is None:
        return HaversineTravelTimeProvider()
    try:
        matrix = read_travel_matrix_csv(matrix_path)
    except OSError as exc:
        raise InputError(f"cannot read {matrix_path}: {exc}") from exc
    except (KeyError, ValueError) as exc:
        raise InputError(f"{matrix_path} is not a travel matrix CSV: {exc}") from exc
    return MatrixTravelTimeProvider(matrix, fallback=HaversineTravelTimeProvider())


def _worker_count(requested: int | None) -> int:
    cap = os.environ.get("REZONER_WORKERS")
    cap_n = None
    if cap is not None:
        try:
            cap_n = max(1, int(cap))
        except ValueError as exc:
            raise InputError(f"REZONER_WORKERS is not an integer: {cap!r}") from exc
    if requested is None:
        return cap_n or 1
    return min(requested, cap_n) if cap_n else requested


def _domain_guard(fn, *args, **kwargs):
    """Run a domain operation, mapping its failures onto stable exit codes."""
    try:
        return fn(*args, **kwargs)
    except (UndefinedIndexError, UnallocatableError, InstanceTooLargeError) as exc:
        raise DomainError(str(exc)) from exc
    except ValueError as exc:
        raise DomainError(str(exc)) from exc


# ---------------------------------------------------------------- commands


def _run_ingest(args: dict, out_dir: Path, manifest: RunManifest) -> None:
    blocks_obj = _load_json(manifest.input_path("blocks"))
    boundaries_obj = _load_json(manifest.input_path("boundaries"))
    try:
        polygons = block_polygons_from_geojson_obj(blocks_obj)
        boundaries = BoundaryPolygonSet.from_geojson_obj(boundaries_obj)
        locations = read_school_locations_csv(manifest.input_path("schools"))
        census = read_census_csv(manifest.input_path("census"))
        enrollment = read_enrollment_csv(manifest.input_path("enrollment"))
    except GeometryError as exc:
        raise InputError(str(exc)) from exc
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"cannot parse ingest inputs: {exc}") from exc

    boundary_ids = set(boundaries.polygons)
    for label, ids in (
        ("enrollment CSV references schools missing from boundaries",
         set(enrollment) - boundary_ids),
        ("schools CSV is missing locations for boundary schools",
         boundary_ids - set(locations)),
        ("enrollment CSV is missing boundary schools",
         boundary_ids - set(enrollment)),
    ):
        if ids:
            raise InputError(f"{label}: {', '.join(sorted(ids))}")

    centroids = {}
    for block_id, poly in polygons.items():
        c = poly.centroid
        centroids[block_id] = (c.y, c.x)
    assigned = assign_blocks_to_schools(centroids, boundaries)
    if not assigned.assignments:
        raise DomainError("no block centroid falls inside any school boundary")

    kept = {b: polygons[b] for b in assigned.assignments}
    adjacency = build_adjacency(kept)

    # place each school on the block containing it; that block must be zoned
    # to the school (its zone root), overriding the area tiebreak if needed
    from shapely.geometry import Point

    assignment = dict(assigned.assignments)
    anchors: dict[str, str] = {}
    overrides: list[str] = []
    for school_id in sorted(boundary_ids):
        lat, lon = locations[school_id]
        point = Point(lon, lat)
        containing = [b for b in sorted(kept) if kept[b].covers(point)]
        if not containing:
            raise DomainError(
                f"school {school_id} sits in no ingested block; cannot anchor its zone"
            )
        anchor = containing[0]
        anchors[school_id] = anchor
        if assignment[anchor] != school_id:
            overrides.append(school_id)
            assignment[anchor] = school_id

    baseline = AssignmentPlan(assignment)
    for block_id in assignment:
        census.setdefault(block_id, {})
    allocation = _domain_guard(
        allocate_students, AllocationInput.from_parts(baseline, census, enrollment)
    )

    blocks = {
        b: Block(
            id=b,
            lat=centroids[b][0],
            lon=centroids[b][1],
            adjacent_block_ids=frozenset(adjacency[b]),
            census_children=census.get(b, {}),
        )
        for b in assignment
    }
    schools = {
        s: School(
            id=s,
            lat=locations[s][0],
            lon=locations[s][1],
            containing_block_id=anchors[s],
            enrollment_by_group=enrollment[s],
        )
        for s in boundary_ids
    }
    district = District(
        id=args["district_id"],
        blocks=blocks,
        schools=schools,
        baseline_plan=baseline,
        students_per_block=allocation,
    )
    _require_valid(district)

    report = {
        "district_id": district.id,
        "block_count": len(blocks),
        "school_count": len(schools),
        "student_total": district.total_students(),
        "unassigned_count": len(assigned.unassigned_block_ids),
        "unassigned_block_ids": assigned.unassigned_block_ids,
        "overlap_count": len(assigned.overlap_block_ids),
        "overlap_block_ids": assigned.overlap_block_ids,
        "anchor_override_count": len(overrides),
        "anchor_override_school_ids": overrides,
    }
    _write_run_dir(out_dir, manifest, {
        "district.json": district.to_json(),
        "report.json": _json_text(report),
    })
    click.echo(
        f"ingested {district.id}: {len(blocks)} blocks, {len(schools)} schools, "
        f"{report['unassigned_count']} unassigned, {report['overlap_count']} overlaps"
    )


def _run_synth(args: dict, out_dir: Path, manifest: RunManifest) -> None:
    district = _domain_guard(
        generate_synthetic_district,
        args["blocks"], args["schools"], args["gradient"],
        seed=args["seed"], district_id=args["district_id"],
    )
    _write_run_dir(out_dir, manifest, {"district.json": district.to_json()})
    click.echo(f"generated {district.id}: {len(district.blocks)} blocks, "
               f"{len(district.schools)} schools")


def _run_solve(args: dict, out_dir: Path, manifest: RunManifest) -> None:
    cfg = _config_from_args(args)
    district = _load_district(manifest.input_path("district"))
    _require_valid(district)
    provider = _provider_from(args.get("travel_matrix"))
    result = _domain_guard(solve, district, cfg, provider, restarts=args["restarts"])
    report = _domain_guard(
        outcome_report, district, district.baseline_plan, result.best_plan, provider
    )
    _write_run_dir(out_dir, manifest, {
        "result.json": _json_text(result.to_json_obj()),
        "report.csv": report.to_csv(),
        "trace.csv": result.trace_csv(),
    })
    click.echo(
        f"solve {district.id} [{cfg.objective_mode.value}]: "
        f"{result.baseline_objective:.6f} -> {result.best_objective:.6f} "
        f"({result.termination.value})"
    )


def _run_sweep(args: dict, out_dir: Path, manifest: RunManifest) -> None:
    cfg = _config_from_args(args)
    district = _load_district(manifest.input_path("district"))
    _require_valid(district)
    provider = _provider_from(args.get("travel_matrix"))
    workers = _worker_count(args.get("workers"))
    result = _domain_guard(
        sweep, district, cfg, provider, restarts=args["restarts"], workers=workers
    )
    trace_lines = ["row,elapsed_seconds,objective"]
    for i, row in enumerate(result.rows):
        trace_lines += [f"{i},{t!r},{v!r}" for t, v in row.trace]
    _write_run_dir(out_dir, manifest, {
        "result.json": _json_text(result.to_json_obj()),
        "report.csv": result.to_csv(),
        "trace.csv": "\n".join(trace_lines) + "\n",
    })
    failed = sum(1 for r in result.rows if r.error is not None)
    click.echo(f"sweep {district.id}: {len(result.rows)} rows, {failed} failed")
    if failed:
        raise DomainError(
            "; ".join(f"row {i}: {r.error}" for i, r in enumerate(result.rows) if r.error)
        )


def _run_report(args: dict, out_dir: Path, manifest: RunManifest) -> None:
    district = _load_district(manifest.input_path("district"))
    _require_valid(district)
    plan = _load_plan(manifest.input_path("plan"))
    provider = _provider_from(args.get("travel_matrix"))
    report = _domain_guard(
        outcome_report, district, district.baseline_plan, plan, provider
    )
    _write_run_dir(out_dir, manifest, {
        "result.json": _json_text(report.to_json_obj()),
        "report.csv": report.to_csv(),
    })
    click.echo(f"report {district.id}: {report.total_switchers} switchers")


def _run_check(args: dict, out_dir: Path | None, manifest: RunManifest) -> None:
    cfg = _config_from_args(args)
    district = _load_district(manifest.input_path("district"))
    _require_valid(district)
    plan = _load_plan(manifest.input_path("plan"))
    if set(plan.assignment) != set(district.blocks):
        raise InputError("plan does not cover exactly the district's blocks")
    unknown = sorted(set(plan.assignment.values()) - set(district.schools))
    if unknown:
        raise InputError(f"plan assigns blocks to unknown schools: {', '.join(unknown)}")
    provider = _provider_from(args.get("travel_matrix"))
    violations = check_feasibility(district, plan, cfg, provider)
    payload = [v.to_json_obj() for v in violations]
    if out_dir is not None:
        _write_run_dir(out_dir, manifest, {"result.json": _json_text(payload)})
    for v in violations:
        click.echo(v.detail)
    if violations:
        raise DomainError(f"{len(violations)} feasibility violation(s)")
    click.echo("feasible")


_RUNNERS = {
    "ingest": _run_ingest,
    "synth": _run_synth,
    "solve": _run_solve,
    "sweep": _run_sweep,
    "report": _run_report,
    "check": _run_check,
}


# ------------------------------------------------------------------- click


@click.group(name="rezoner")
@click.version_option(version=TOOL_VERSION)
def cli() -> None:
    """Redraw school attendance zones to reduce segregation."""


def _constraint_options(fn):
    for deco in reversed([
        click.option("--max-travel-increase", type=float, default=0.5,
                      show_default=True, help="Allowed per-block travel growth fraction."),
        click.option("--max-size-increase", type=float, default=0.15,
                      show_default=True, help="Allowed per-school enrollment growth fraction."),
        click.option("--contiguity/--no-contiguity", default=True,
                      show_default=True, help="Keep every zone connected."),
        click.option("--objective", type=click.Choice(OBJECTIVE_CHOICES),
                      default="dissimilarity", show_default=True),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--budget", type=float, default=60.0, show_default=True,
                      help="Time budget per solve, in budget seconds."),
        click.option("--travel-matrix", type=click.Path(), default=None,
                      help="Routed travel CSV (block_id,school_id,seconds)."),
    ]):
        fn = deco(fn)
    return fn


@cli.command()
@click.argument("blocks_geojson", type=click.Path())
@click.argument("boundaries_geojson", type=click.Path())
@click.argument("schools_csv", type=click.Path())
@click.argument("census_csv", type=click.Path())
@click.argument("enrollment_csv", type=click.Path())
@click.option("--district-id", default="district", show_default=True)
@click.option("--out", type=click.Path(), required=True)
def ingest(blocks_geojson, boundaries_geojson, schools_csv, census_csv,
           enrollment_csv, district_id, out) -> None:
    """Build a district JSON from boundary, census and enrollment files."""
    manifest = RunManifest.record("ingest", {"district_id": district_id}, {
        "blocks": blocks_geojson,
        "boundaries": boundaries_geojson,
        "schools": schools_csv,
        "census": census_csv,
        "enrollment": enrollment_csv,
    })
    _run_ingest(manifest.arguments, Path(out), manifest)


@cli.command()
@click.option("--blocks", type=int, default=400, show_default=True)
@click.option("--schools", type=int, default=8, show_default=True)
@click.option("--gradient", type=click.Choice(("step", "linear", "logistic", "uniform")),
              default="step", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--district-id", default=None, help="Override the generated id.")
@click.option("--out", type=click.Path(), required=True)
def synth(blocks, schools, gradient, seed, district_id, out) -> None:
    """Generate a synthetic gridded district."""
    manifest = RunManifest.record("synth", {
        "blocks": blocks, "schools": schools, "gradient": gradient,
        "seed": seed, "district_id": district_id,
    }, {})
    _run_synth(manifest.arguments, Path(out), manifest)


@cli.command(name="solve")
@click.argument("district_json", type=click.Path())
@_constraint_options
@click.option("--restarts", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(), required=True)
def solve_cmd(district_json, max_travel_increase, max_size_increase, contiguity,
              objective, seed, budget, travel_matrix, restarts, out) -> None:
    """Search for a lower-segregation plan and report it against the baseline."""
    if restarts < 1:
        raise InputError("--restarts must be >= 1")
    args = {
        "max_travel_increase": max_travel_increase,
        "max_size_increase": max_size_increase,
        "contiguity": contiguity,
        "objective": objective,
        "seed": seed,
        "budget": budget,
        "restarts": restarts,
    }
    _config_from_args(args)  # reject bad flag values before touching inputs
    inputs = {"district": district_json}
    if travel_matrix is not None:
        inputs["travel_matrix"] = travel_matrix
        args["travel_matrix"] = travel_matrix
    manifest = RunManifest.record("solve", args, inputs)
    _run_solve(manifest.arguments, Path(out), manifest)


@cli.command(name="sweep")
@click.argument("district_json", type=click.Path())
@_constraint_options
@click.option("--restarts", type=int, default=1, show_default=True)
@click.option("--workers", type=int, default=None,
              help="Parallel rows; capped by REZONER_WORKERS.")
@click.option("--out", type=click.Path(), required=True)
def sweep_cmd(district_json, max_travel_increase, max_size_increase, contiguity,
              objective, seed, budget, travel_matrix, restarts, workers, out) -> None:
    """Solve the four sensitivity configurations and tabulate the outcomes."""
    if restarts < 1:
        raise InputError("--restarts must be >= 1")
    if workers is not None and workers < 1:
        raise InputError("--workers must be >= 1")
    args = {
        "max_travel_increase": max_travel_increase,
        "max_size_increase": max_size_increase,
        "contiguity": contiguity,
        "objective": objective,
        "seed": seed,
        "budget": budget,
        "restarts": restarts,
        "workers": workers,
    }
    _config_from_args(args)
    inputs = {"district": district_json}
    if travel_matrix is not None:
        inputs["travel_matrix"] = travel_matrix
        args["travel_matrix"] = travel_matrix
    manifest = RunManifest.record("sweep", args, inputs)
    _run_sweep(manifest.arguments, Path(out), manifest)


@cli.command(name="report")
@click.argument("district_json", type=click.Path())
@click.argument("plan_json", type=click.Path())
@click.option("--travel-matrix", type=click.Path(), default=None)
@click.option("--out", type=click.Path(), required=True)
def report_cmd(district_json, plan_json, travel_matrix, out) -> None:
    """Tabulate before/after outcomes for a candidate plan."""
    args: dict = {}
    inputs = {"district": district_json, "plan": plan_json}
    if travel_matrix is not None:
        inputs["travel_matrix"] = travel_matrix
        args["travel_matrix"] = travel_matrix
    manifest = RunManifest.record("report", args, inputs)
    _run_report(manifest.arguments, Path(out), manifest)


@cli.command(name="check")
@click.argument("district_json", type=click.Path())
@click.argument("plan_json", type=click.Path())
@_constraint_options
@click.option("--out", type=click.Path(), default=None,
              help="Optional run directory for the violation listing.")
def check_cmd(district_json, plan_json, max_travel_increase, max_size_increase,
              contiguity, objective, seed, budget, travel_matrix, out) -> None:
    """List every constraint violation of a plan; exit 1 if any."""
    args = {
        "max_travel_increase": max_travel_increase,
        "max_size_increase": max_size_increase,
        "contiguity": contiguity,
        "objective": objective,
        "seed": seed,
        "budget": budget,
    }
    _config_from_args(args)
    inputs = {"district": district_json, "plan": plan_json}
    if travel_matrix is not None:
        inputs["travel_matrix"] = travel_matrix
        args["travel_matrix"] = travel_matrix
    manifest = RunManifest.record("check", args, inputs)
    _run_check(manifest.arguments, Path(out) if out else None, manifest)


@cli.command(name="replay")
@click.argument("manifest_json", type=click.Path())
@click.option("--out", type=click.Path(), required=True)
def replay_cmd(manifest_json, out) -> None:
    """Re-run a recorded manifest; outputs are byte-identical to the original."""
    manifest = RunManifest.from_json_obj(_load_json(manifest_json))
    runner = _RUNNERS.get(manifest.command)
    if runner is None:
        raise InputError(f"manifest command {manifest.command!r} is not replayable")
    manifest.verify_inputs()
    runner(manifest.arguments, Path(out), manifest)


@cli.command(name="serve")
@click.option("--districts", "districts_dir", type=click.Path(), required=True,
              help="Directory of district JSON files to serve.")
@click.option("--runs", "runs_dir", type=click.Path(), default=None,
              help="Directory for persisted job results (default: <districts>/runs).")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve_cmd(districts_dir, runs_dir, host, port) -> None:
    """Serve districts and solve jobs over HTTP."""
    import uvicorn

    from .service import create_app

    app = create_app(districts_dir, runs_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")


def main(argv=None) -> None:
    try:
        cli(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.exceptions.Abort:
        sys.exit(130)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code)
    except CliError as exc:
        sys.stderr.write(exc.to_json() + "\n")
        sys.exit(exc.exit_code)


if __name__ == "__main__":
    main()
