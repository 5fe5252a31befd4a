"""Problem-instance data model: districts, blocks, schools, plans, configs.

A district bundles everything one rezoning run needs: the block graph,
the schools, the status-quo assignment of blocks to schools, and the
estimated per-block student counts under that status quo.  All types are
immutable after construction; anything that looks like mutation returns
a new object.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Iterable, Iterator, Mapping


class Group(str, Enum):
    """Demographic groups tracked at block and school level."""

    ASIAN = "asian"
    BLACK = "black"
    HISPANIC_LATINX = "hispanic_latinx"
    NATIVE_AMERICAN = "native_american"
    WHITE = "white"


#: Canonical iteration order used everywhere counts are aggregated.
GROUPS: tuple[Group, ...] = tuple(Group)

GroupCounts = Mapping[Group, int]


def group_counts(counts: Mapping[Group | str, int] | None = None) -> dict[Group, int]:
    """Normalize a possibly-partial mapping into a full per-group dict."""
    full = {g: 0 for g in GROUPS}
    if counts:
        for key, value in counts.items():
            full[Group(key)] = int(value)
    return full


def total_count(counts: GroupCounts) -> int:
    return sum(counts.get(g, 0) for g in GROUPS)


def nonfocal_count(counts: GroupCounts, focal: Group) -> int:
    """Count of everyone outside ``focal`` (e.g. non-White when focal=White)."""
    return total_count(counts) - counts.get(focal, 0)


class ObjectiveMode(str, Enum):
    DISSIMILARITY = "dissimilarity"
    INTERACTION_EXPOSURE = "interaction_exposure"
    LEXIMIN = "leximin"


@dataclass(frozen=True)
class Block:
    """A census block: the atomic unit of reassignment."""

    id: str
    lat: float
    lon: float
    adjacent_block_ids: frozenset[str] = frozenset()
    census_children: dict[Group, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "adjacent_block_ids", frozenset(self.adjacent_block_ids))
        object.__setattr__(self, "census_children", group_counts(self.census_children))

    @property
    def census_total(self) -> int:
        return total_count(self.census_children)


@dataclass(frozen=True)
class School:
    id: str
    lat: float
    lon: float
    containing_block_id: str
    enrollment_by_group: dict[Group, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "enrollment_by_group", group_counts(self.enrollment_by_group))

    @property
    def enrollment_total(self) -> int:
        return total_count(self.enrollment_by_group)


@dataclass(frozen=True)
class AssignmentPlan:
    """Total mapping block_id -> school_id: the decision variable."""

    assignment: dict[str, str]

    def __post_init__(self) -> None:
        object.__setattr__(self, "assignment", dict(self.assignment))

    def school_for(self, block_id: str) -> str:
        return self.assignment[block_id]

    def with_move(self, block_id: str, school_id: str) -> "AssignmentPlan":
        new = dict(self.assignment)
        new[block_id] = school_id
        return AssignmentPlan(new)

    def zones(self) -> dict[str, list[str]]:
        """School id -> sorted block ids assigned to it (schools with no blocks absent)."""
        zones: dict[str, list[str]] = {}
        for block_id in sorted(self.assignment):
            zones.setdefault(self.assignment[block_id], []).append(block_id)
        return zones

    def items(self) -> Iterator[tuple[str, str]]:
        return iter(sorted(self.assignment.items()))

    def __len__(self) -> int:
        return len(self.assignment)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AssignmentPlan):
            return NotImplemented
        return self.assignment == other.assignment

    def encoding(self) -> tuple[str, ...]:
        """School ids in block-id order; lexicographic tie-break key for plans."""
        return tuple(self.assignment[b] for b in sorted(self.assignment))

    def to_json_obj(self) -> list[dict[str, str]]:
        return [{"block_id": b, "school_id": s} for b, s in self.items()]

    @classmethod
    def from_json_obj(cls, obj: Iterable[Mapping[str, str]]) -> "AssignmentPlan":
        return cls({row["block_id"]: row["school_id"] for row in obj})


@dataclass(frozen=True)
class ConstraintConfig:
    """Solver knobs: travel slack, size slack, contiguity flag and objective."""

    max_travel_increase_fraction: float = 0.5
    max_size_increase_fraction: float = 0.15
    enforce_contiguity: bool = True
    objective_mode: ObjectiveMode = ObjectiveMode.DISSIMILARITY
    time_budget_seconds: float = 60.0
    seed: int = 0

    def __post_init__(self) -> None:
        # accept the enum's string value so `is` comparisons downstream hold
        object.__setattr__(self, "objective_mode", ObjectiveMode(self.objective_mode))

    def validate(self) -> None:
        if self.max_travel_increase_fraction < 0:
            raise ValueError("max_travel_increase_fraction must be >= 0")
        if self.max_size_increase_fraction < 0:
            raise ValueError("max_size_increase_fraction must be >= 0")
        if self.time_budget_seconds <= 0:
            raise ValueError("time_budget_seconds must be > 0")

    def replace(self, **changes) -> "ConstraintConfig":
        return replace(self, **changes)

    def to_json_obj(self) -> dict:
        return {
            "max_travel_increase_fraction": self.max_travel_increase_fraction,
            "max_size_increase_fraction": self.max_size_increase_fraction,
            "enforce_contiguity": self.enforce_contiguity,
            "objective_mode": self.objective_mode.value,
            "time_budget_seconds": self.time_budget_seconds,
            "seed": self.seed,
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "ConstraintConfig":
        cfg = cls(
            max_travel_increase_fraction=float(obj.get("max_travel_increase_fraction", 0.5)),
            max_size_increase_fraction=float(obj.get("max_size_increase_fraction", 0.15)),
            enforce_contiguity=bool(obj.get("enforce_contiguity", True)),
            objective_mode=ObjectiveMode(obj.get("objective_mode", "dissimilarity")),
            time_budget_seconds=float(obj.get("time_budget_seconds", 60.0)),
            seed=int(obj.get("seed", 0)),
        )
        cfg.validate()
        return cfg


@dataclass(frozen=True)
class District:
    """A complete problem instance.

    ``students_per_block`` holds the estimated number of students of each
    group living in each block who attend the block's baseline school.
    Students move with their block under any rezoning.
    """

    id: str
    blocks: dict[str, Block]
    schools: dict[str, School]
    baseline_plan: AssignmentPlan
    students_per_block: dict[str, dict[Group, int]]

    def __post_init__(self) -> None:
        object.__setattr__(self, "blocks", dict(self.blocks))
        object.__setattr__(self, "schools", dict(self.schools))
        normalized = {b: group_counts(c) for b, c in self.students_per_block.items()}
        object.__setattr__(self, "students_per_block", normalized)

    def block_students(self, block_id: str) -> dict[Group, int]:
        return self.students_per_block.get(block_id, group_counts())

    def block_student_total(self, block_id: str) -> int:
        return total_count(self.block_students(block_id))

    def group_totals(self) -> dict[Group, int]:
        totals = {g: 0 for g in GROUPS}
        for counts in self.students_per_block.values():
            for g in GROUPS:
                totals[g] += counts[g]
        return totals

    def total_students(self) -> int:
        return sum(self.group_totals().values())

    def school_counts(self, plan: AssignmentPlan) -> dict[str, dict[Group, int]]:
        """Per-school per-group student counts under ``plan``."""
        counts = {s: {g: 0 for g in GROUPS} for s in self.schools}
        for block_id, school_id in plan.assignment.items():
            row = self.students_per_block.get(block_id)
            if row is None or school_id not in counts:
                continue
            per_school = counts[school_id]
            for g in GROUPS:
                per_school[g] += row[g]
        return counts

    def anchor_blocks(self) -> dict[str, str]:
        """School id -> the block containing it (immovable zone root)."""
        return {s.id: s.containing_block_id for s in self.schools.values()}

    def to_json_obj(self) -> dict:
        blocks = [
            {
                "id": b.id,
                "lat": b.lat,
                "lon": b.lon,
                "adjacent_block_ids": sorted(b.adjacent_block_ids),
                "census_children": {g.value: n for g, n in sorted(b.census_children.items()) if n},
            }
            for b in sorted(self.blocks.values(), key=lambda b: b.id)
        ]
        schools = [
            {
                "id": s.id,
                "lat": s.lat,
                "lon": s.lon,
                "containing_block_id": s.containing_block_id,
                "enrollment_by_group": {g.value: n for g, n in sorted(s.enrollment_by_group.items()) if n},
            }
            for s in sorted(self.schools.values(), key=lambda s: s.id)
        ]
        students = [
            {"block_id": b, "group": g.value, "count": n}
            for b in sorted(self.students_per_block)
            for g, n in sorted(self.students_per_block[b].items())
            if n
        ]
        return {
            "id": self.id,
            "blocks": blocks,
            "schools": schools,
            "baseline_plan": self.baseline_plan.to_json_obj(),
            "students_per_block": students,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "District":
        blocks = {
            row["id"]: Block(
                id=row["id"],
                lat=float(row["lat"]),
                lon=float(row["lon"]),
                adjacent_block_ids=frozenset(row.get("adjacent_block_ids", ())),
                census_children=group_counts(row.get("census_children")),
            )
            for row in obj["blocks"]
        }
        schools = {
            row["id"]: School(
                id=row["id"],
                lat=float(row["lat"]),
                lon=float(row["lon"]),
                containing_block_id=row["containing_block_id"],
                enrollment_by_group=group_counts(row.get("enrollment_by_group")),
            )
            for row in obj["schools"]
        }
        students: dict[str, dict[Group, int]] = {}
        for row in obj.get("students_per_block", ()):
            students.setdefault(row["block_id"], group_counts())[Group(row["group"])] = int(row["count"])
        return cls(
            id=obj["id"],
            blocks=blocks,
            schools=schools,
            baseline_plan=AssignmentPlan.from_json_obj(obj["baseline_plan"]),
            students_per_block=students,
        )

    @classmethod
    def from_json(cls, text: str) -> "District":
        return cls.from_json_obj(json.loads(text))


@dataclass(frozen=True)
class ModelViolation:
    """One violated invariant of the district data model."""

    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


def validate_district(district: District) -> list[ModelViolation]:
    """Check every data-model invariant; an empty list means the district is valid."""
    violations: list[ModelViolation] = []
    add = lambda code, msg: violations.append(ModelViolation(code, msg))  # noqa: E731

    blocks = district.blocks
    schools = district.schools
    plan = district.baseline_plan.assignment

    for block in sorted(blocks.values(), key=lambda b: b.id):
        if block.id in block.adjacent_block_ids:
            add("self_adjacency", f"block {block.id} lists itself as adjacent")
        for other in sorted(block.adjacent_block_ids):
            if other not in blocks:
                add("unknown_adjacent_block", f"block {block.id} adjacent to unknown block {other}")
            elif block.id not in blocks[other].adjacent_block_ids:
                add("asymmetric_adjacency", f"adjacency {block.id} -> {other} is not symmetric")
        for g, n in block.census_children.items():
            if n < 0:
                add("negative_count", f"block {block.id} census count for {g.value} is negative")

    for block_id, counts in sorted(district.students_per_block.items()):
        if block_id not in blocks:
            add("unknown_block", f"students_per_block references unknown block {block_id}")
        for g, n in counts.items():
            if n < 0:
                add("negative_count", f"block {block_id} student count for {g.value} is negative")

    for school in sorted(schools.values(), key=lambda s: s.id):
        if school.containing_block_id not in blocks:
            add("unknown_block", f"school {school.id} sits in unknown block {school.containing_block_id}")
        elif plan.get(school.containing_block_id) != school.id:
            add(
                "anchor_not_zoned",
                f"school {school.id}'s containing block {school.containing_block_id} "
                f"is not zoned to it in the baseline",
            )
        if school.enrollment_total <= 0:
            add("empty_school", f"school {school.id} has no enrolled students")
        for g, n in school.enrollment_by_group.items():
            if n < 0:
                add("negative_count", f"school {school.id} enrollment for {g.value} is negative")

    for block_id in sorted(blocks):
        if block_id not in plan:
            add("unassigned_block", f"block {block_id} missing from the baseline plan")
    for block_id, school_id in sorted(plan.items()):
        if block_id not in blocks:
            add("unknown_block", f"baseline plan references unknown block {block_id}")
        if school_id not in schools:
            add("unknown_school", f"baseline plan maps {block_id} to unknown school {school_id}")

    # Per-school, per-group conservation: zone student sums must equal enrollment.
    sums = {s: {g: 0 for g in GROUPS} for s in schools}
    for block_id, school_id in plan.items():
        if school_id not in sums or block_id not in blocks:
            continue
        counts = district.students_per_block.get(block_id)
        if counts is None:
            continue
        for g in GROUPS:
            sums[school_id][g] += counts[g]
    for school_id in sorted(schools):
        for g in GROUPS:
            expected = schools[school_id].enrollment_by_group[g]
            actual = sums[school_id][g]
            if expected != actual:
                add(
                    "enrollment_mismatch",
                    f"school {school_id} group {g.value}: zone students sum to {actual} "
                    f"but enrollment is {expected}",
                )

    return violations
