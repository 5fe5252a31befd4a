"""Estimate per-block, per-group student counts from census and enrollment data.

School enrollment says how many students of each group attend; census
says where children live.  This module spreads each school's enrollment
over the blocks zoned to it, proportionally to census counts, producing
the integral ``students_per_block`` table the rest of the toolkit runs on.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .model import GROUPS, AssignmentPlan, Group, group_counts


class UnallocatableError(ValueError):
    """A school expects students of a group but its zone has no census children."""

    def __init__(self, school_id: str, group: Group):
        super().__init__(f"school {school_id}, group {group.value}: zone has no census children to allocate over")
        self.school_id = school_id
        self.group = group


@dataclass(frozen=True)
class AllocationInput:
    """Zones, census counts, and enrollments for one allocation run."""

    zones: dict[str, tuple[str, ...]]            # school id -> block ids zoned to it
    census: dict[str, dict[Group, int]]          # block id -> group -> children under 18
    enrollment: dict[str, dict[Group, int]]      # school id -> group -> enrolled students

    def __post_init__(self) -> None:
        object.__setattr__(self, "zones", {s: tuple(b) for s, b in self.zones.items()})
        object.__setattr__(self, "census", {b: group_counts(c) for b, c in self.census.items()})
        object.__setattr__(self, "enrollment", {s: group_counts(c) for s, c in self.enrollment.items()})

    @classmethod
    def from_parts(
        cls,
        baseline_plan: AssignmentPlan,
        census: Mapping[str, Mapping[Group, int]],
        enrollment: Mapping[str, Mapping[Group, int]],
    ) -> "AllocationInput":
        zones = {s: tuple(blocks) for s, blocks in baseline_plan.zones().items()}
        for school_id in enrollment:
            zones.setdefault(school_id, ())
        return cls(zones=zones, census=dict(census), enrollment=dict(enrollment))


def _ceil_share(num: int, den: int, scale: int) -> int:
    """ceil(num/den * scale) in exact integer arithmetic."""
    return -(-num * scale // den)


def allocate_students(allocation_input: AllocationInput) -> dict[str, dict[Group, int]]:
    """Spread each school's per-group enrollment over its zone's blocks.

    Per school and group: each block's share of the zone's census count
    for that group sets its slice of the enrollment, except that a share
    above 50% is replaced by the block's share of *total* children (which
    guards against blocks getting more students than plausibly live
    there).  Blocks are visited in descending census count (ties by id),
    taking the ceiling of each slice, capped at the block's census count
    and at whatever enrollment remains; if the caps exhaust the zone's
    census capacity first, the remainder is dealt out one student at a
    time in the same order, ignoring caps so conservation always holds.
    """
    result: dict[str, dict[Group, int]] = {}
    for school_id in sorted(allocation_input.zones):
        zone = allocation_input.zones[school_id]
        for block_id in zone:
            result.setdefault(block_id, group_counts())
        census = {b: allocation_input.census.get(b, group_counts()) for b in zone}
        block_totals = {b: sum(census[b].values()) for b in zone}
        zone_total = sum(block_totals.values())
        enrollment = allocation_input.enrollment.get(school_id, group_counts())
        for group in GROUPS:
            target = enrollment[group]
            if target == 0:
                continue
            group_zone_total = sum(census[b][group] for b in zone)
            if not zone or (group_zone_total == 0 and zone_total == 0):
                raise UnallocatableError(school_id, group)
            order = sorted(zone, key=lambda b: (-census[b][group], b))
            remaining = target
            for block_id in order:
                c_gb = census[block_id][group]
                if group_zone_total > 0:
                    num, den = c_gb, group_zone_total
                    if 2 * num > den:  # share above 50%: fall back to total-children share
                        num, den = block_totals[block_id], zone_total
                else:
                    num, den = block_totals[block_id], zone_total
                take = _ceil_share(num, den, target)
                if c_gb > 0:
                    take = min(take, c_gb)
                take = min(take, remaining)
                if take > 0:
                    result[block_id][group] += take
                    remaining -= take
                if remaining == 0:
                    break
            while remaining > 0:  # census capacity exhausted: deal out the rest
                for block_id in order:
                    result[block_id][group] += 1
                    remaining -= 1
                    if remaining == 0:
                        break
    return result


def read_census_csv(path: str | Path) -> dict[str, dict[Group, int]]:
    """CSV with columns block_id, group, under18_count."""
    census: dict[str, dict[Group, int]] = {}
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            counts = census.setdefault(row["block_id"], group_counts())
            counts[Group(row["group"])] += int(row["under18_count"])
    return census


def read_enrollment_csv(path: str | Path) -> dict[str, dict[Group, int]]:
    """CSV with columns school_id, group, enrollment."""
    enrollment: dict[str, dict[Group, int]] = {}
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            counts = enrollment.setdefault(row["school_id"], group_counts())
            counts[Group(row["group"])] += int(row["enrollment"])
    return enrollment


def students_per_block_json(allocation: Mapping[str, Mapping[Group, int]]) -> list[dict]:
    """The students_per_block section of the district interchange JSON."""
    return [
        {"block_id": b, "group": g.value, "count": n}
        for b in sorted(allocation)
        for g, n in sorted(allocation[b].items())
        if n
    ]
