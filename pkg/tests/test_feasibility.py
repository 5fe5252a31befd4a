"""Constraint semantics: caps, contiguity, anchors, move enumeration."""

import random

import networkx as nx
import pytest

from builders import B, W, line_district, make_district, random_grid_district
from rezoner.feasibility import (
    TRAVEL_FLOOR_SECONDS,
    ViolationKind,
    check_feasibility,
    contiguous_blocks,
    effective_baseline_travel,
    enumerate_moves,
    size_limits,
)
from rezoner.geo import MatrixTravelTimeProvider
from rezoner.model import ConstraintConfig


def kinds(violations):
    return {v.kind for v in violations}


class TestSizeLimits:
    def test_exact_decimal_arithmetic(self):
        district = line_district([[{W: 600}], [{W: 100}, {B: 20}]])
        limits = size_limits(district, 0.5)
        assert limits == {"s0": 900, "s1": 180}
        limits = size_limits(district, 0.15)
        # 15% of 120 is exactly 18, no binary-float dust
        assert limits == {"s0": 690, "s1": 138}

    def test_fraction_of_small_school_truncates(self):
        district = line_district([[{W: 7}], [{W: 20}]])
        assert size_limits(district, 0.15) == {"s0": 8, "s1": 23}

    def test_zero_allows_no_growth(self):
        district = line_district([[{W: 10}], [{W: 10}]])
        assert size_limits(district, 0.0) == {"s0": 10, "s1": 10}


class TestTravelCap:
    def matrix_district(self):
        # baseline travel is taken from the matrix, caps derive from it
        district = line_district([[{W: 4}, {B: 2}], [{B: 4}]])
        provider = MatrixTravelTimeProvider({
            ("b0", "s0"): 100.0, ("b0", "s1"): 500.0,
            ("b1", "s0"): 100.0, ("b1", "s1"): 150.0,
            ("b2", "s0"): 100.0, ("b2", "s1"): 100.0,
        })
        return district, provider

    def test_cap_is_strict_greater_than(self):
        district, provider = self.matrix_district()
        config = ConstraintConfig(max_travel_increase_fraction=0.5,
                                  max_size_increase_fraction=100.0)
        # b1 baseline 100 -> cap 150; moving to s1 costs exactly 150: allowed
        plan = district.baseline_plan.with_move("b1", "s1")
        assert check_feasibility(district, plan, config, provider) == []

    def test_exceeding_cap_is_violation(self):
        district, provider = self.matrix_district()
        config = ConstraintConfig(max_travel_increase_fraction=0.5,
                                  max_size_increase_fraction=100.0,
                                  enforce_contiguity=False)
        plan = district.baseline_plan.with_move("b0", "s1")  # 500 > 150
        violations = check_feasibility(district, plan, config, provider)
        # b0 anchors s0, so the anchor violation rides along; travel is what
        # this test pins down
        travel = [v for v in violations if v.kind is ViolationKind.TRAVEL_CAP]
        [v] = travel
        assert v.subject == "b0"
        assert v.measured == 500.0
        assert v.bound == pytest.approx(150.0)

    def test_zero_student_blocks_are_exempt(self):
        district = line_district([[{W: 4}, {}], [{B: 4}]])
        provider = MatrixTravelTimeProvider({
            ("b0", "s0"): 100.0, ("b1", "s0"): 100.0, ("b1", "s1"): 9999.0,
            ("b2", "s1"): 100.0,
        })
        config = ConstraintConfig(max_travel_increase_fraction=0.0,
                                  enforce_contiguity=False)
        plan = district.baseline_plan.with_move("b1", "s1")
        assert check_feasibility(district, plan, config, provider) == []

    def test_zero_baseline_travel_gets_floor(self):
        # the school sits on the block itself: baseline time is 0, floored
        district = line_district([[{W: 4}], [{B: 4}]])
        eff = effective_baseline_travel(
            district, MatrixTravelTimeProvider({
                ("b0", "s0"): 0.0, ("b1", "s1"): 30.0,
            })
        )
        assert eff["b0"] == TRAVEL_FLOOR_SECONDS
        assert eff["b1"] == 30.0


class TestSizeCapViolations:
    def test_overfilled_school_reported(self):
        district = line_district([[{W: 10}, {B: 10}], [{B: 10}]])
        config = ConstraintConfig(max_size_increase_fraction=0.15,
                                  max_travel_increase_fraction=10.0)
        plan = district.baseline_plan.with_move("b1", "s1")  # s1: 10 -> 20 > 11
        violations = check_feasibility(district, plan, config)
        assert kinds(violations) == {ViolationKind.SIZE_CAP}
        [v] = violations
        assert v.subject == "s1"
        assert v.measured == 20.0
        assert v.bound == 11.0


class TestAnchors:
    def test_moving_anchor_is_violation(self):
        district = line_district([[{W: 4}, {B: 2}], [{B: 4}]])
        config = ConstraintConfig(max_travel_increase_fraction=100.0,
                                  max_size_increase_fraction=100.0,
                                  enforce_contiguity=False)
        plan = district.baseline_plan.with_move("b0", "s1")  # b0 anchors s0
        violations = check_feasibility(district, plan, config)
        assert ViolationKind.ANCHOR_MOVED in kinds(violations)


class TestContiguity:
    def test_connected_move_is_fine(self):
        district = line_district([[{W: 4}, {B: 2}], [{B: 4}, {W: 2}]])
        config = ConstraintConfig(max_travel_increase_fraction=100.0,
                                  max_size_increase_fraction=100.0)
        plan = district.baseline_plan.with_move("b1", "s1")  # b1 touches b2
        assert check_feasibility(district, plan, config) == []

    def test_stranding_move_is_violation(self):
        district = line_district([[{W: 4}, {B: 2}], [{B: 4}, {W: 2}]])
        config = ConstraintConfig(max_travel_increase_fraction=100.0,
                                  max_size_increase_fraction=100.0)
        plan = district.baseline_plan.with_move("b3", "s0")  # b3 only touches b2
        violations = check_feasibility(district, plan, config)
        assert kinds(violations) == {ViolationKind.CONTIGUITY}
        assert violations[0].subject == "b3"

    def test_toggle_off_permits_disconnected_zones(self):
        district = line_district([[{W: 4}, {B: 2}], [{B: 4}, {W: 2}]])
        config = ConstraintConfig(max_travel_increase_fraction=100.0,
                                  max_size_increase_fraction=100.0,
                                  enforce_contiguity=False)
        plan = district.baseline_plan.with_move("b3", "s0")
        assert check_feasibility(district, plan, config) == []

    def test_baseline_noncontiguous_blocks_stay_exempt(self):
        # b2 starts disconnected from its school s0 (b1 belongs to s1)
        district = make_district(
            blocks={
                "b0": (0.0, 0.00, ("b1",)),
                "b1": (0.0, 0.01, ("b0", "b2")),
                "b2": (0.0, 0.02, ("b1",)),
            },
            schools={"s0": (0.0, 0.0, "b0"), "s1": (0.0, 0.01, "b1")},
            plan={"b0": "s0", "b1": "s1", "b2": "s0"},
            students={"b0": {W: 2}, "b1": {B: 2}, "b2": {W: 2}},
        )
        config = ConstraintConfig(max_travel_increase_fraction=100.0,
                                  max_size_increase_fraction=100.0)
        assert check_feasibility(district, district.baseline_plan, config) == []
        # and b2 may keep moving between zones without contiguity complaints
        plan = district.baseline_plan.with_move("b2", "s1")
        assert check_feasibility(district, plan, config) == []

    def test_contiguous_blocks_matches_independent_reachability(self):
        rng = random.Random(31)
        for _ in range(30):
            district = random_grid_district(rng)
            plan = district.baseline_plan
            # scramble a few assignments to create disconnection chances
            school_ids = sorted(district.schools)
            for block_id in sorted(district.blocks)[: len(district.blocks) // 3]:
                plan = plan.with_move(block_id, rng.choice(school_ids))
            expected = set()
            for school in district.schools.values():
                zone = {b for b, s in plan.assignment.items() if s == school.id}
                if school.containing_block_id not in zone:
                    continue
                graph = nx.Graph()
                graph.add_nodes_from(zone)
                for b in zone:
                    for nb in district.blocks[b].adjacent_block_ids:
                        if nb in zone:
                            graph.add_edge(b, nb)
                expected |= nx.node_connected_component(graph, school.containing_block_id)
            assert contiguous_blocks(district, plan) == frozenset(expected)


class TestStatusQuoFeasible:
    def test_baseline_always_feasible_for_nonnegative_configs(self):
        rng = random.Random(77)
        for _ in range(40):
            district = random_grid_district(rng)
            config = ConstraintConfig(
                max_travel_increase_fraction=rng.choice([0.0, 0.25, 0.5, 1.0, 3.0]),
                max_size_increase_fraction=rng.choice([0.0, 0.15, 0.5, 2.0]),
                enforce_contiguity=rng.random() < 0.5,
            )
            assert check_feasibility(district, district.baseline_plan, config) == []


class TestEnumerateMoves:
    def test_every_move_preserves_feasibility(self):
        rng = random.Random(99)
        for _ in range(25):
            district = random_grid_district(rng)
            config = ConstraintConfig(
                max_travel_increase_fraction=rng.choice([0.0, 0.5, 1.0]),
                max_size_increase_fraction=rng.choice([0.0, 0.15, 1.0]),
                enforce_contiguity=rng.random() < 0.5,
            )
            for block_id, target in enumerate_moves(
                district, district.baseline_plan, config
            ):
                plan = district.baseline_plan.with_move(block_id, target)
                assert check_feasibility(district, plan, config) == [], (
                    block_id, target, config,
                )

    def test_anchors_never_move(self):
        rng = random.Random(5)
        for _ in range(10):
            district = random_grid_district(rng)
            config = ConstraintConfig(max_travel_increase_fraction=5.0,
                                      max_size_increase_fraction=5.0)
            anchors = set(district.anchor_blocks().values())
            for block_id, _ in enumerate_moves(district, district.baseline_plan, config):
                assert block_id not in anchors

    def test_moves_target_adjacent_zones_only(self):
        district = line_district([[{W: 2}], [{B: 2}], [{W: 2}]])
        config = ConstraintConfig(max_travel_increase_fraction=100.0,
                                  max_size_increase_fraction=100.0)
        moves = enumerate_moves(district, district.baseline_plan, config)
        # b0/b1/b2 anchor their schools, so no block may move at all
        assert moves == []

    def test_size_cap_blocks_moves(self):
        district = line_district([[{W: 10}, {B: 2}], [{B: 10}]])
        loose = ConstraintConfig(max_travel_increase_fraction=100.0,
                                 max_size_increase_fraction=1.0,
                                 enforce_contiguity=False)
        tight = loose.replace(max_size_increase_fraction=0.0)
        assert ("b1", "s1") in enumerate_moves(district, district.baseline_plan, loose)
        assert ("b1", "s1") not in enumerate_moves(district, district.baseline_plan, tight)
