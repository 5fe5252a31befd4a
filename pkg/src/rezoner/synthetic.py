"""Deterministic synthetic districts for tests, demos, and benchmarks.

Stands in for real boundary/enrollment/census extracts: a planar grid of
blocks with rook adjacency, schools spread over the grid, a travel-time
Voronoi baseline zoning (contiguous by construction), and demographic
counts drawn from a left-to-right spatial gradient so one side of the
district is majority-White.
"""

from __future__ import annotations

import heapq
import math
import random
from typing import Callable

from .geo import estimate_seconds
from .model import AssignmentPlan, Block, District, Group, School, group_counts

# Anchored near a real metro so haversine distances are realistic.
BASE_LAT = 33.70
BASE_LON = -84.45
LAT_SPACING = 0.008   # ~0.89 km per grid row
LON_SPACING = 0.010   # ~0.93 km per grid column
ATTENDANCE_RATE = 0.85

# Share of non-White children falling in each remaining group.
_NONWHITE_MIX = (
    (Group.BLACK, 0.45),
    (Group.HISPANIC_LATINX, 0.35),
    (Group.ASIAN, 0.15),
    (Group.NATIVE_AMERICAN, 0.05),
)

GradientFn = Callable[[float], float]

GRADIENTS: dict[str, GradientFn] = {
    "step": lambda x: 1.0 if x < 0.5 else 0.0,
    "linear": lambda x: 1.0 - x,
    "logistic": lambda x: 1.0 / (1.0 + math.exp((x - 0.5) / 0.08)),
    "uniform": lambda x: 0.5,
}


def _block_id(row: int, col: int) -> str:
    return f"b{row:03d}{col:03d}"


def _grid_shape(n_blocks: int) -> tuple[int, int]:
    cols = math.ceil(math.sqrt(n_blocks))
    rows = math.ceil(n_blocks / cols)
    return rows, cols


def _school_cells(n_schools: int, rows: int, cols: int, cells: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Spread schools over a coarse sub-grid of band centers, snapped to blocks."""
    grid_rows = max(1, round(math.sqrt(n_schools * rows / max(cols, 1))))
    grid_rows = min(grid_rows, n_schools)
    grid_cols = math.ceil(n_schools / grid_rows)
    taken: set[tuple[int, int]] = set()
    placed: list[tuple[int, int]] = []
    for k in range(n_schools):
        sr, sc = k // grid_cols, k % grid_cols
        center_row = (sr + 0.5) * rows / grid_rows - 0.5
        center_col = (sc + 0.5) * cols / grid_cols - 0.5
        best = min(
            (c for c in cells if c not in taken),
            key=lambda c: ((c[0] - center_row) ** 2 + (c[1] - center_col) ** 2, c),
        )
        taken.add(best)
        placed.append(best)
    return placed


def _voronoi_by_travel_time(
    cells: list[tuple[int, int]],
    adjacency: dict[str, frozenset[str]],
    centroids: dict[str, tuple[float, float]],
    school_anchor: dict[str, str],
) -> dict[str, str]:
    """Multi-source Dijkstra over the block graph; each zone is connected.

    Edge weights are driving-time estimates between adjacent block
    centroids, so the baseline is a travel-time Voronoi diagram rooted at
    the schools' blocks.  Weights are quantized to whole milliseconds so
    geometrically symmetric paths compare as exact ties, and ties go to
    the lexicographically smaller school.
    """
    assignment: dict[str, str] = {}
    heap: list[tuple[int, str, str]] = []
    for school_id in sorted(school_anchor):
        heapq.heappush(heap, (0, school_id, school_anchor[school_id]))
    while heap:
        dist, school_id, block_id = heapq.heappop(heap)
        if block_id in assignment:
            continue
        assignment[block_id] = school_id
        lat1, lon1 = centroids[block_id]
        for neighbor in sorted(adjacency[block_id]):
            if neighbor in assignment:
                continue
            lat2, lon2 = centroids[neighbor]
            step = round(estimate_seconds(lat1, lon1, lat2, lon2) * 1000)
            heapq.heappush(heap, (dist + step, school_id, neighbor))
    return assignment


def _binomial(rng: random.Random, n: int, p: float) -> int:
    if p <= 0.0 or n <= 0:
        return 0
    if p >= 1.0:
        return n
    return sum(1 for _ in range(n) if rng.random() < p)


def generate_synthetic_district(
    n_blocks: int,
    n_schools: int,
    demographic_gradient: str | GradientFn = "step",
    seed: int = 0,
    district_id: str | None = None,
) -> District:
    """Build a valid synthetic district; a pure function of its arguments."""
    if n_blocks < 1 or n_schools < 1:
        raise ValueError("need at least one block and one school")
    if n_schools > n_blocks:
        raise ValueError(f"cannot place {n_schools} schools on {n_blocks} blocks")
    gradient = GRADIENTS[demographic_gradient] if isinstance(demographic_gradient, str) else demographic_gradient

    rows, cols = _grid_shape(n_blocks)
    cells = [(r, c) for r in range(rows) for c in range(cols)][:n_blocks]
    cell_set = set(cells)
    centroids = {
        _block_id(r, c): (BASE_LAT + r * LAT_SPACING, BASE_LON + c * LON_SPACING) for r, c in cells
    }
    adjacency: dict[str, frozenset[str]] = {}
    for r, c in cells:
        near = [(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)]
        adjacency[_block_id(r, c)] = frozenset(_block_id(*n) for n in near if n in cell_set)

    school_cells = _school_cells(n_schools, rows, cols, cells)
    school_anchor = {f"s{k:02d}": _block_id(*cell) for k, cell in enumerate(school_cells)}
    baseline = _voronoi_by_travel_time(cells, adjacency, centroids, school_anchor)

    rng = random.Random(seed)
    census: dict[str, dict[Group, int]] = {}
    students: dict[str, dict[Group, int]] = {}
    for r, c in cells:
        block_id = _block_id(r, c)
        x = (c + 0.5) / cols
        white_share = min(1.0, max(0.0, gradient(x)))
        children = 24 + rng.randrange(-8, 9)
        white = _binomial(rng, children, white_share)
        counts = group_counts({Group.WHITE: white})
        for _ in range(children - white):
            draw = rng.random()
            cumulative = 0.0
            for group, weight in _NONWHITE_MIX:
                cumulative += weight
                if draw < cumulative:
                    counts[group] += 1
                    break
            else:
                counts[_NONWHITE_MIX[0][0]] += 1
        census[block_id] = counts
        students[block_id] = {g: _binomial(rng, n, ATTENDANCE_RATE) for g, n in counts.items()}

    # Every school must end up with at least one student; bump the anchor
    # block (census and students together) when a zone comes out empty.
    zone_totals: dict[str, int] = {s: 0 for s in school_anchor}
    for block_id, school_id in baseline.items():
        zone_totals[school_id] += sum(students[block_id].values())
    for school_id in sorted(zone_totals):
        if zone_totals[school_id] == 0:
            anchor = school_anchor[school_id]
            group = max(census[anchor], key=lambda g: (census[anchor][g], g.value))
            census[anchor][group] = max(census[anchor][group], 1)
            students[anchor][group] += 1

    blocks = {
        bid: Block(
            id=bid,
            lat=centroids[bid][0],
            lon=centroids[bid][1],
            adjacent_block_ids=adjacency[bid],
            census_children=census[bid],
        )
        for bid in sorted(centroids)
    }
    enrollment: dict[str, dict[Group, int]] = {s: group_counts() for s in school_anchor}
    for block_id, school_id in baseline.items():
        for g, n in students[block_id].items():
            enrollment[school_id][g] += n
    schools = {
        sid: School(
            id=sid,
            lat=centroids[anchor][0],
            lon=centroids[anchor][1],
            containing_block_id=anchor,
            enrollment_by_group=enrollment[sid],
        )
        for sid, anchor in sorted(school_anchor.items())
    }
    return District(
        id=district_id or f"synthetic-{n_blocks}x{n_schools}-{seed}",
        blocks=blocks,
        schools=schools,
        baseline_plan=AssignmentPlan(baseline),
        students_per_block=students,
    )
