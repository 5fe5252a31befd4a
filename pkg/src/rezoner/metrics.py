"""Segregation indices and before/after outcome reports.

Index values are computed on exact integer numerators and denominators
(``fractions.Fraction``) and only converted to floats at the boundary, so
"score equals zero" and incremental-update equivalence are exact
statements, not tolerance judgements.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction

from .geo import HaversineTravelTimeProvider, TravelTimeProvider, travel_time
from .model import (
    GROUPS,
    AssignmentPlan,
    District,
    Group,
    ObjectiveMode,
)


class UndefinedIndexError(ValueError):
    """Focal group or its complement has no students district-wide."""


@dataclass(frozen=True)
class SegregationScore:
    value: float
    mode: ObjectiveMode
    exact: Fraction

    def __float__(self) -> float:
        return self.value


def _group_split(district: District, plan: AssignmentPlan, focal: Group):
    """Per-school (focal, complement) student counts plus district totals."""
    focal_by_school = {s: 0 for s in district.schools}
    other_by_school = {s: 0 for s in district.schools}
    for block_id, school_id in plan.assignment.items():
        counts = district.students_per_block.get(block_id)
        if counts is None or school_id not in focal_by_school:
            continue
        f = counts[focal]
        t = sum(counts[g] for g in GROUPS)
        focal_by_school[school_id] += f
        other_by_school[school_id] += t - f
    focal_total = sum(focal_by_school.values())
    other_total = sum(other_by_school.values())
    return focal_by_school, other_by_school, focal_total, other_total


def _require_split(district: District, plan: AssignmentPlan, focal: Group):
    fs, os_, ft, ot = _group_split(district, plan, focal)
    if ft == 0:
        raise UndefinedIndexError(f"no {focal.value} students in the district")
    if ot == 0:
        raise UndefinedIndexError(f"no students outside group {focal.value}")
    return fs, os_, ft, ot


def dissimilarity(district: District, plan: AssignmentPlan, focal: Group = Group.WHITE) -> SegregationScore:
    """Half the summed absolute share gaps between focal and complement.

    0 means every school mirrors district-wide proportions; 1 means the
    focal group and everyone else attend disjoint schools.
    """
    fs, os_, ft, ot = _require_split(district, plan, focal)
    numerator = sum(abs(fs[s] * ot - os_[s] * ft) for s in fs)
    exact = Fraction(numerator, 2 * ft * ot)
    return SegregationScore(float(exact), ObjectiveMode.DISSIMILARITY, exact)


def interaction_exposure(district: District, plan: AssignmentPlan, focal: Group = Group.WHITE) -> SegregationScore:
    """Enrollment-weighted exposure of the focal group to its complement.

    Higher is more integrated; empty schools contribute nothing.  The
    solver minimizes ``1 - exposure``.
    """
    fs, os_, ft, ot = _require_split(district, plan, focal)
    exact = Fraction(0)
    for s in fs:
        n_s = fs[s] + os_[s]
        if n_s:
            exact += Fraction(fs[s] * os_[s], ft * n_s)
    return SegregationScore(float(exact), ObjectiveMode.INTERACTION_EXPOSURE, exact)


def max_term(district: District, plan: AssignmentPlan, focal: Group = Group.WHITE) -> tuple[str, SegregationScore]:
    """The school with the largest share gap, ties broken by school id."""
    fs, os_, ft, ot = _require_split(district, plan, focal)
    best_id = None
    best_num = -1
    for s in sorted(fs):
        num = abs(fs[s] * ot - os_[s] * ft)
        if num > best_num:
            best_id, best_num = s, num
    exact = Fraction(best_num, ft * ot)
    return best_id, SegregationScore(float(exact), ObjectiveMode.LEXIMIN, exact)


@dataclass(frozen=True)
class GroupOutcome:
    group: Group
    total_students: int
    switcher_count: int
    switcher_fraction: float
    mean_travel_delta_minutes: float
    segregation_before: float | None
    segregation_after: float | None
    segregation_change: float | None
    segregation_relative_change: float | None


@dataclass(frozen=True)
class SchoolOutcome:
    school_id: str
    students_before: int
    students_after: int
    share_before: dict[Group, float]
    share_after: dict[Group, float]


@dataclass(frozen=True)
class OutcomeReport:
    """What a candidate plan changes, relative to the baseline."""

    district_id: str
    groups: list[GroupOutcome]
    schools: list[SchoolOutcome]
    total_switchers: int
    total_students: int
    switcher_fraction: float
    mean_travel_delta_minutes: float

    def group_outcome(self, group: Group) -> GroupOutcome:
        return next(g for g in self.groups if g.group == group)

    def to_json_obj(self) -> dict:
        return {
            "district_id": self.district_id,
            "total_students": self.total_students,
            "total_switchers": self.total_switchers,
            "switcher_fraction": self.switcher_fraction,
            "mean_travel_delta_minutes": self.mean_travel_delta_minutes,
            "groups": [
                {
                    "group": g.group.value,
                    "total_students": g.total_students,
                    "switcher_count": g.switcher_count,
                    "switcher_fraction": g.switcher_fraction,
                    "mean_travel_delta_minutes": g.mean_travel_delta_minutes,
                    "segregation_before": g.segregation_before,
                    "segregation_after": g.segregation_after,
                    "segregation_change": g.segregation_change,
                    "segregation_relative_change": g.segregation_relative_change,
                }
                for g in self.groups
            ],
            "schools": [
                {
                    "school_id": s.school_id,
                    "students_before": s.students_before,
                    "students_after": s.students_after,
                    "share_before": {g.value: s.share_before[g] for g in GROUPS},
                    "share_after": {g.value: s.share_after[g] for g in GROUPS},
                }
                for s in self.schools
            ],
        }

    def to_csv(self) -> str:
        """One row per group then one per school, as the CLI report table."""
        out = io.StringIO()
        fields = [
            "kind", "id", "total_students", "switcher_count", "switcher_fraction",
            "mean_travel_delta_minutes", "segregation_before", "segregation_after",
            "segregation_change", "segregation_relative_change",
        ]
        fields += [f"share_before_{g.value}" for g in GROUPS]
        fields += [f"share_after_{g.value}" for g in GROUPS]
        writer = csv.DictWriter(out, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for g in self.groups:
            writer.writerow({
                "kind": "group",
                "id": g.group.value,
                "total_students": g.total_students,
                "switcher_count": g.switcher_count,
                "switcher_fraction": g.switcher_fraction,
                "mean_travel_delta_minutes": g.mean_travel_delta_minutes,
                "segregation_before": _blank_if_none(g.segregation_before),
                "segregation_after": _blank_if_none(g.segregation_after),
                "segregation_change": _blank_if_none(g.segregation_change),
                "segregation_relative_change": _blank_if_none(g.segregation_relative_change),
            })
        for s in self.schools:
            row = {
                "kind": "school",
                "id": s.school_id,
                "total_students": s.students_after,
            }
            for g in GROUPS:
                row[f"share_before_{g.value}"] = s.share_before[g]
                row[f"share_after_{g.value}"] = s.share_after[g]
            writer.writerow(row)
        return out.getvalue()


def _blank_if_none(value):
    return "" if value is None else value


def _shares(counts: dict[Group, int]) -> dict[Group, float]:
    total = sum(counts.values())
    if total == 0:
        return {g: 0.0 for g in GROUPS}
    return {g: counts[g] / total for g in GROUPS}


def outcome_report(
    district: District,
    baseline_plan: AssignmentPlan,
    candidate_plan: AssignmentPlan,
    travel_provider: TravelTimeProvider | None = None,
) -> OutcomeReport:
    """Switcher counts, travel deltas, and share shifts of a rezoning.

    A student is a switcher iff the two plans send their block to
    different schools; travel deltas are measured only among switchers.
    """
    if travel_provider is None:
        travel_provider = HaversineTravelTimeProvider()
    group_totals = district.group_totals()
    switchers = {g: 0 for g in GROUPS}
    delta_seconds = {g: 0.0 for g in GROUPS}
    for block_id in sorted(district.blocks):
        before = baseline_plan.school_for(block_id)
        after = candidate_plan.school_for(block_id)
        if before == after:
            continue
        counts = district.block_students(block_id)
        n_block = sum(counts.values())
        if n_block == 0:
            continue
        block = district.blocks[block_id]
        delta = travel_time(block, district.schools[after], travel_provider) - travel_time(
            block, district.schools[before], travel_provider
        )
        for g in GROUPS:
            switchers[g] += counts[g]
            delta_seconds[g] += counts[g] * delta

    before_counts = district.school_counts(baseline_plan)
    after_counts = district.school_counts(candidate_plan)

    groups = []
    for g in GROUPS:
        seg_before = seg_after = change = rel_change = None
        try:
            seg_before = dissimilarity(district, baseline_plan, g).value
            seg_after = dissimilarity(district, candidate_plan, g).value
            change = seg_after - seg_before
            rel_change = change / seg_before if seg_before > 0 else None
        except UndefinedIndexError:
            pass
        total_g = group_totals[g]
        count = switchers[g]
        groups.append(GroupOutcome(
            group=g,
            total_students=total_g,
            switcher_count=count,
            switcher_fraction=count / total_g if total_g else 0.0,
            mean_travel_delta_minutes=(delta_seconds[g] / count) / 60.0 if count else 0.0,
            segregation_before=seg_before,
            segregation_after=seg_after,
            segregation_change=change,
            segregation_relative_change=rel_change,
        ))

    schools = [
        SchoolOutcome(
            school_id=s,
            students_before=sum(before_counts[s].values()),
            students_after=sum(after_counts[s].values()),
            share_before=_shares(before_counts[s]),
            share_after=_shares(after_counts[s]),
        )
        for s in sorted(district.schools)
    ]

    total_students = sum(group_totals.values())
    total_switchers = sum(switchers.values())
    total_delta = sum(delta_seconds.values())
    return OutcomeReport(
        district_id=district.id,
        groups=groups,
        schools=schools,
        total_switchers=total_switchers,
        total_students=total_students,
        switcher_fraction=total_switchers / total_students if total_students else 0.0,
        mean_travel_delta_minutes=(total_delta / total_switchers) / 60.0 if total_switchers else 0.0,
    )
