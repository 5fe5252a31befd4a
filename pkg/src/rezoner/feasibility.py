"""Feasibility semantics: travel cap, size cap, contiguity, anchor rule.

All checks are total predicates over (district, plan, config): they
return violation records rather than raising, so a search can probe
freely.  Size caps are evaluated in exact integer arithmetic; travel
caps compare provider seconds directly.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .geo import HaversineTravelTimeProvider, TravelTimeProvider, travel_time
from .model import AssignmentPlan, ConstraintConfig, District

#: Blocks whose baseline travel is zero (anchor blocks, mostly) would keep a
#: zero cap under any slack; they get this floor before the slack multiplies.
TRAVEL_FLOOR_SECONDS = 60.0


class ViolationKind(str, Enum):
    TRAVEL_CAP = "travel_cap"
    SIZE_CAP = "size_cap"
    CONTIGUITY = "contiguity"
    ANCHOR_MOVED = "anchor_moved"


@dataclass(frozen=True)
class FeasibilityViolation:
    kind: ViolationKind
    subject: str
    detail: str
    measured: float | None = None
    bound: float | None = None

    def to_json_obj(self) -> dict:
        return {
            "kind": self.kind.value,
            "subject": self.subject,
            "detail": self.detail,
            "measured": self.measured,
            "bound": self.bound,
        }


def size_limits(district: District, max_size_increase_fraction: float) -> dict[str, int]:
    """Largest allowed student total per school: floor of (1 + fraction) * baseline.

    The fraction is read at its decimal face value (``Fraction(str(...))``)
    so caps like 15% of 100 students are exactly 115, immune to
    binary-float dust.
    """
    y = Fraction(str(max_size_increase_fraction))
    limits = {}
    for school in district.schools.values():
        base = school.enrollment_total
        limits[school.id] = base + int(y * base)
    return limits


def effective_baseline_travel(
    district: District, travel_provider: TravelTimeProvider
) -> dict[str, float]:
    """Per-block baseline travel seconds, floored for zero-travel blocks."""
    baseline = district.baseline_plan
    out = {}
    for block_id in district.blocks:
        block = district.blocks[block_id]
        school = district.schools[baseline.school_for(block_id)]
        seconds = travel_time(block, school, travel_provider)
        out[block_id] = seconds if seconds > 0 else TRAVEL_FLOOR_SECONDS
    return out


def school_totals(district: District, plan: AssignmentPlan) -> dict[str, int]:
    totals = {s: 0 for s in district.schools}
    for block_id, school_id in plan.assignment.items():
        if school_id in totals:
            totals[school_id] += district.block_student_total(block_id)
    return totals


def contiguous_blocks(district: District, plan: AssignmentPlan) -> frozenset[str]:
    """Blocks reachable from their assigned school's own block within the zone.

    One breadth-first traversal per school, rooted at the block containing
    the school and walking only blocks the plan assigns to that school.
    """
    contiguous: set[str] = set()
    assignment = plan.assignment
    for school in district.schools.values():
        anchor = school.containing_block_id
        if assignment.get(anchor) != school.id:
            continue  # zone has no root; nothing in it can be contiguous
        seen = {anchor}
        queue = deque([anchor])
        while queue:
            cur = queue.popleft()
            for neighbor in district.blocks[cur].adjacent_block_ids:
                if neighbor in seen or assignment.get(neighbor) != school.id:
                    continue
                seen.add(neighbor)
                queue.append(neighbor)
        contiguous |= seen
    return frozenset(contiguous)


def check_feasibility(
    district: District,
    plan: AssignmentPlan,
    config: ConstraintConfig,
    travel_provider: TravelTimeProvider | None = None,
) -> list[FeasibilityViolation]:
    """Every constraint violation of ``plan``; empty list means feasible."""
    if travel_provider is None:
        travel_provider = HaversineTravelTimeProvider()
    violations: list[FeasibilityViolation] = []
    x = config.max_travel_increase_fraction

    eff_base = effective_baseline_travel(district, travel_provider)
    for block_id in sorted(district.blocks):
        if district.block_student_total(block_id) == 0:
            continue  # travel cap is vacuous without students
        cap = (1.0 + x) * eff_base[block_id]
        block = district.blocks[block_id]
        school = district.schools[plan.school_for(block_id)]
        seconds = travel_time(block, school, travel_provider)
        if seconds > cap:
            violations.append(FeasibilityViolation(
                ViolationKind.TRAVEL_CAP, block_id,
                f"block {block_id}: travel {seconds:.1f}s to {school.id} exceeds cap {cap:.1f}s",
                measured=seconds, bound=cap,
            ))

    limits = size_limits(district, config.max_size_increase_fraction)
    totals = school_totals(district, plan)
    for school_id in sorted(district.schools):
        if totals[school_id] > limits[school_id]:
            violations.append(FeasibilityViolation(
                ViolationKind.SIZE_CAP, school_id,
                f"school {school_id}: {totals[school_id]} students exceeds cap {limits[school_id]}",
                measured=float(totals[school_id]), bound=float(limits[school_id]),
            ))

    for school_id in sorted(district.schools):
        anchor = district.schools[school_id].containing_block_id
        assigned = plan.school_for(anchor)
        if assigned != school_id:
            violations.append(FeasibilityViolation(
                ViolationKind.ANCHOR_MOVED, school_id,
                f"school {school_id}'s own block {anchor} is assigned to {assigned}",
            ))

    if config.enforce_contiguity:
        base_contiguous = contiguous_blocks(district, district.baseline_plan)
        plan_contiguous = contiguous_blocks(district, plan)
        for block_id in sorted(base_contiguous - plan_contiguous):
            violations.append(FeasibilityViolation(
                ViolationKind.CONTIGUITY, block_id,
                f"block {block_id} cannot reach school {plan.school_for(block_id)}'s "
                f"block through its own zone",
            ))

    return violations


def _zone_members(plan: AssignmentPlan, school_id: str) -> set[str]:
    return {b for b, s in plan.assignment.items() if s == school_id}


def _donor_keeps_contiguity(
    district: District,
    zone: set[str],
    anchor: str,
    moved_block: str,
    constrained: frozenset[str],
) -> bool:
    """After ``moved_block`` leaves, can every constrained zone block still reach the anchor?"""
    remaining = zone - {moved_block}
    seen = {anchor}
    queue = deque([anchor])
    while queue:
        cur = queue.popleft()
        for neighbor in district.blocks[cur].adjacent_block_ids:
            if neighbor in remaining and neighbor not in seen:
                seen.add(neighbor)
                queue.append(neighbor)
    for block_id in remaining:
        if block_id in constrained and block_id not in seen:
            return False
    return True


def enumerate_moves(
    district: District,
    plan: AssignmentPlan,
    config: ConstraintConfig,
    travel_provider: TravelTimeProvider | None = None,
) -> list[tuple[str, str]]:
    """Every feasibility-preserving single-block reassignment from ``plan``.

    A move sends a non-anchor boundary block to an adjacent zone; it is
    kept only if the plan stays feasible afterwards: travel and size caps
    hold, the donor zone does not strand any constrained block, and the
    moved block stays connected to its new school when it has to.
    Assumes ``plan`` itself is feasible.
    """
    if travel_provider is None:
        travel_provider = HaversineTravelTimeProvider()
    x = config.max_travel_increase_fraction
    eff_base = effective_baseline_travel(district, travel_provider)
    limits = size_limits(district, config.max_size_increase_fraction)
    totals = school_totals(district, plan)
    anchors = {s.containing_block_id for s in district.schools.values()}
    if config.enforce_contiguity:
        constrained = contiguous_blocks(district, district.baseline_plan)
        currently_contiguous = contiguous_blocks(district, plan)
        zones = {s: _zone_members(plan, s) for s in district.schools}
    moves: list[tuple[str, str]] = []
    for block_id in sorted(district.blocks):
        if block_id in anchors:
            continue
        donor = plan.school_for(block_id)
        block = district.blocks[block_id]
        students = district.block_student_total(block_id)
        neighbor_schools = sorted(
            {plan.school_for(n) for n in block.adjacent_block_ids} - {donor}
        )
        if not neighbor_schools:
            continue
        donor_ok = None  # computed lazily, shared across target schools
        for target in neighbor_schools:
            if students:
                cap = (1.0 + x) * eff_base[block_id]
                if travel_time(block, district.schools[target], travel_provider) > cap:
                    continue
                if totals[target] + students > limits[target]:
                    continue
            if config.enforce_contiguity:
                if block_id in constrained and not any(
                    plan.school_for(n) == target and n in currently_contiguous
                    for n in block.adjacent_block_ids
                ):
                    continue
                if donor_ok is None:
                    donor_ok = _donor_keeps_contiguity(
                        district, zones[donor],
                        district.schools[donor].containing_block_id,
                        block_id, constrained,
                    )
                if not donor_ok:
                    continue
            moves.append((block_id, target))
    return moves
