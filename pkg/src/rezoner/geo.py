"""Geospatial ingestion: polygons to baseline zoning, adjacency, travel times.

Travel times come from a pluggable provider: either an explicit
(block, school) matrix (e.g. exported from a routing engine) or a
haversine-distance estimate at a fixed driving speed.  Matrix entries
always win over the estimate when both are available.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Protocol

from shapely import make_valid
from shapely.geometry import shape
from shapely.geometry.base import BaseGeometry
from shapely.ops import transform, unary_union
from shapely.prepared import prep

from .model import Block, School

EARTH_RADIUS_M = 6_371_008.8
DEFAULT_SPEED_KMH = 30.0


class GeometryError(ValueError):
    """Raised when an input geometry cannot be repaired into polygons."""


class MissingTravelTimeError(KeyError):
    """Raised when a matrix provider has no entry for a requested pair."""

    def __init__(self, block_id: str, school_id: str):
        super().__init__((block_id, school_id))
        self.block_id = block_id
        self.school_id = school_id

    def __str__(self) -> str:
        return f"no travel time for block {self.block_id} -> school {self.school_id}"


def haversine_meters(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance between two WGS84 points, in meters."""
    phi1, phi2 = math.radians(lat1), math.radians(lat2)
    dphi = phi2 - phi1
    dlmb = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlmb / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(math.sqrt(a))


def estimate_seconds(lat1: float, lon1: float, lat2: float, lon2: float,
                     speed_kmh: float = DEFAULT_SPEED_KMH) -> float:
    """Driving-time estimate: haversine distance at a constant speed."""
    meters = haversine_meters(lat1, lon1, lat2, lon2)
    return meters / (speed_kmh * 1000.0 / 3600.0)


class TravelTimeProvider(Protocol):
    def seconds(self, block: Block, school: School) -> float: ...


@dataclass(frozen=True)
class HaversineTravelTimeProvider:
    """Distance-based fallback when no routed matrix is available."""

    speed_kmh: float = DEFAULT_SPEED_KMH

    def seconds(self, block: Block, school: School) -> float:
        return estimate_seconds(block.lat, block.lon, school.lat, school.lon, self.speed_kmh)


@dataclass(frozen=True)
class MatrixTravelTimeProvider:
    """Explicit per-pair seconds; optionally falls back to an estimator."""

    matrix: dict[tuple[str, str], float]
    fallback: TravelTimeProvider | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "matrix", dict(self.matrix))

    def seconds(self, block: Block, school: School) -> float:
        hit = self.matrix.get((block.id, school.id))
        if hit is not None:
            return hit
        if self.fallback is not None:
            return self.fallback.seconds(block, school)
        raise MissingTravelTimeError(block.id, school.id)


def travel_time(block: Block, school: School, provider: TravelTimeProvider) -> float:
    """Travel seconds from a block centroid to a school, never negative."""
    seconds = provider.seconds(block, school)
    if seconds < 0:
        raise ValueError(f"negative travel time for ({block.id}, {school.id}): {seconds}")
    return seconds


def _sinusoidal(geom: BaseGeometry) -> BaseGeometry:
    """Project lon/lat to the (equal-area) sinusoidal projection, in meters."""

    def fwd(lon, lat):
        lon_r = [math.radians(x) for x in lon] if hasattr(lon, "__iter__") else math.radians(lon)
        if hasattr(lon, "__iter__"):
            x = [EARTH_RADIUS_M * lr * math.cos(math.radians(la)) for lr, la in zip(lon_r, lat)]
            y = [EARTH_RADIUS_M * math.radians(la) for la in lat]
            return x, y
        return (EARTH_RADIUS_M * lon_r * math.cos(math.radians(lat)),
                EARTH_RADIUS_M * math.radians(lat))

    return transform(fwd, geom)


def projected_area_m2(geom: BaseGeometry) -> float:
    """Polygon area in square meters under an equal-area projection."""
    return _sinusoidal(geom).area


def repair_polygon(geom: BaseGeometry, owner: str) -> BaseGeometry:
    """Return a valid polygonal geometry, or raise GeometryError naming ``owner``."""
    if not geom.is_valid:
        geom = make_valid(geom)
    if geom.geom_type == "GeometryCollection":
        polys = [g for g in geom.geoms if g.geom_type in ("Polygon", "MultiPolygon")]
        if not polys:
            raise GeometryError(f"geometry for {owner} has no polygonal part after repair")
        geom = unary_union(polys)
    if geom.is_empty or geom.geom_type not in ("Polygon", "MultiPolygon"):
        raise GeometryError(f"geometry for {owner} is not polygonal after repair")
    return geom


@dataclass(frozen=True)
class BoundaryPolygonSet:
    """Per-school attendance-zone multipolygons with precomputed areas."""

    polygons: dict[str, BaseGeometry]
    areas_m2: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        areas = dict(self.areas_m2)
        for school_id, geom in self.polygons.items():
            if school_id not in areas:
                areas[school_id] = projected_area_m2(geom)
        object.__setattr__(self, "areas_m2", areas)

    @classmethod
    def from_geojson_obj(cls, obj: Mapping, id_property: str = "school_id") -> "BoundaryPolygonSet":
        polygons: dict[str, BaseGeometry] = {}
        for feature in obj["features"]:
            school_id = str(feature["properties"][id_property])
            polygons[school_id] = repair_polygon(shape(feature["geometry"]), f"school {school_id}")
        return cls(polygons)


@dataclass(frozen=True)
class BlockAssignmentResult:
    """Outcome of mapping block centroids into school attendance polygons."""

    assignments: dict[str, str]
    unassigned_block_ids: list[str]
    overlap_block_ids: list[str]


def assign_blocks_to_schools(
    block_centroids: Mapping[str, tuple[float, float]],
    boundaries: BoundaryPolygonSet,
) -> BlockAssignmentResult:
    """Map each block to the school whose polygon contains its centroid.

    When several polygons contain a centroid, the school with the smallest
    projected area wins (ties on area broken by school id).  Blocks contained
    by no polygon are reported as unassigned.
    """
    from shapely.geometry import Point

    prepared = {sid: prep(geom) for sid, geom in boundaries.polygons.items()}
    order = sorted(boundaries.polygons, key=lambda sid: (boundaries.areas_m2[sid], sid))

    assignments: dict[str, str] = {}
    unassigned: list[str] = []
    overlaps: list[str] = []
    for block_id in sorted(block_centroids):
        lat, lon = block_centroids[block_id]
        point = Point(lon, lat)
        containing = [sid for sid in order if prepared[sid].covers(point)]
        if not containing:
            unassigned.append(block_id)
            continue
        if len(containing) > 1:
            overlaps.append(block_id)
        assignments[block_id] = containing[0]
    return BlockAssignmentResult(assignments, unassigned, overlaps)


def build_adjacency(block_polygons: Mapping[str, BaseGeometry]) -> dict[str, set[str]]:
    """Rook adjacency: blocks sharing a boundary segment of positive length.

    Corner-only contact does not count; isolated blocks get empty sets.
    """
    from shapely import STRtree

    ids = sorted(block_polygons)
    geoms = [block_polygons[i] for i in ids]
    adjacency: dict[str, set[str]] = {i: set() for i in ids}
    if len(ids) < 2:
        return adjacency
    tree = STRtree(geoms)
    for i, geom in enumerate(geoms):
        for j in tree.query(geom):
            j = int(j)
            if j <= i:
                continue
            shared = geom.boundary.intersection(geoms[j].boundary)
            if shared.length > 0:
                adjacency[ids[i]].add(ids[j])
                adjacency[ids[j]].add(ids[i])
    return adjacency


def block_polygons_from_geojson_obj(obj: Mapping, id_property: str = "block_id") -> dict[str, BaseGeometry]:
    polygons: dict[str, BaseGeometry] = {}
    for feature in obj["features"]:
        block_id = str(feature["properties"][id_property])
        polygons[block_id] = repair_polygon(shape(feature["geometry"]), f"block {block_id}")
    return polygons


def read_geojson(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def read_school_locations_csv(path: str | Path) -> dict[str, tuple[float, float]]:
    """CSV with columns school_id, lat, lon."""
    locations: dict[str, tuple[float, float]] = {}
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            locations[row["school_id"]] = (float(row["lat"]), float(row["lon"]))
    return locations


def read_travel_matrix_csv(path: str | Path) -> dict[tuple[str, str], float]:
    """CSV with columns block_id, school_id, seconds."""
    matrix: dict[tuple[str, str], float] = {}
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            matrix[(row["block_id"], row["school_id"])] = float(row["seconds"])
    return matrix
