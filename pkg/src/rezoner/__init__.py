"""Attendance-boundary rezoning toolkit.

Redraws school attendance zones to reduce White/non-White segregation
while capping each block's travel increase, each school's size growth,
and (optionally) preserving zone contiguity.
"""

from .estimation import AllocationInput, UnallocatableError, allocate_students
from .feasibility import (
    FeasibilityViolation,
    ViolationKind,
    check_feasibility,
    contiguous_blocks,
    enumerate_moves,
    size_limits,
)
from .geo import (
    BoundaryPolygonSet,
    HaversineTravelTimeProvider,
    MatrixTravelTimeProvider,
    TravelTimeProvider,
    assign_blocks_to_schools,
    build_adjacency,
    travel_time,
)
from .metrics import (
    OutcomeReport,
    SegregationScore,
    UndefinedIndexError,
    dissimilarity,
    interaction_exposure,
    max_term,
    outcome_report,
)
from .model import (
    AssignmentPlan,
    Block,
    ConstraintConfig,
    District,
    Group,
    ModelViolation,
    ObjectiveMode,
    School,
    validate_district,
)
from .solver import (
    InstanceTooLargeError,
    SolveResult,
    SweepResult,
    SweepRow,
    Termination,
    brute_force,
    solve,
    sweep,
)
from .synthetic import generate_synthetic_district

__version__ = "0.1.0"

__all__ = [
    "AllocationInput",
    "AssignmentPlan",
    "Block",
    "BoundaryPolygonSet",
    "ConstraintConfig",
    "District",
    "FeasibilityViolation",
    "Group",
    "HaversineTravelTimeProvider",
    "InstanceTooLargeError",
    "MatrixTravelTimeProvider",
    "ModelViolation",
    "ObjectiveMode",
    "OutcomeReport",
    "School",
    "SegregationScore",
    "SolveResult",
    "SweepResult",
    "SweepRow",
    "Termination",
    "TravelTimeProvider",
    "UnallocatableError",
    "UndefinedIndexError",
    "ViolationKind",
    "allocate_students",
    "assign_blocks_to_schools",
    "brute_force",
    "build_adjacency",
    "check_feasibility",
    "contiguous_blocks",
    "dissimilarity",
    "enumerate_moves",
    "generate_synthetic_district",
    "interaction_exposure",
    "max_term",
    "outcome_report",
    "size_limits",
    "solve",
    "sweep",
    "travel_time",
    "validate_district",
]
