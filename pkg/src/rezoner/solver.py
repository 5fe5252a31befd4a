"""Plan search: annealed local moves, an exhaustive oracle, sensitivity sweeps.

The searcher walks feasibility-preserving reassignments of boundary
blocks (plus occasional two-block swaps to escape size-cap deadlocks),
cooling geometrically and restarting from the incumbent when stuck.
Objectives are tracked in exact integer/rational arithmetic; floats
appear only in acceptance probabilities and reported values.

Determinism: the search runs on a virtual clock — a time budget buys
``budget * ITERS_PER_SECOND`` move evaluations — and never consults the
wall clock, so identical inputs replay identical results on any host.
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .feasibility import check_feasibility, contiguous_blocks, effective_baseline_travel, size_limits
from .geo import HaversineTravelTimeProvider, TravelTimeProvider, travel_time
from .metrics import UndefinedIndexError, outcome_report
from .model import AssignmentPlan, ConstraintConfig, District, Group, ObjectiveMode

#: Virtual clock rate: one budget second buys this many move evaluations.
ITERS_PER_SECOND = 50_000

INITIAL_TEMPERATURE = 0.02
FINAL_TEMPERATURE = 1e-5
COOLING_FRACTION = 0.8  # tail of the budget runs greedy polish at zero temperature
SWAP_PROBABILITY = 0.15
STAGNATION_LIMIT = 10_000  # consecutive rejections before restarting from the incumbent

ORACLE_MAX_FREE_BLOCKS = 14
ORACLE_MAX_SCHOOLS = 3

SWEEP_GRID: tuple[tuple[float, bool], ...] = (
    (0.5, True), (1.0, True), (0.5, False), (1.0, False),
)
SWEEP_SIZE_FRACTION = 0.15

_FOCAL = Group.WHITE


class Termination(str, Enum):
    TIME_BUDGET = "time_budget"
    LOCAL_OPTIMUM = "local_optimum"
    PROVED_OPTIMAL = "proved_optimal"


class InstanceTooLargeError(ValueError):
    """Exhaustive enumeration refused; the instance needs the annealed search."""


@dataclass(frozen=True)
class SolveResult:
    best_plan: AssignmentPlan
    best_objective: float
    baseline_objective: float
    trace: tuple[tuple[float, float], ...]
    termination: Termination
    seed: int
    objective_mode: ObjectiveMode

    def to_json_obj(self) -> dict:
        return {
            "seed": self.seed,
            "objective_mode": self.objective_mode.value,
            "termination": self.termination.value,
            "baseline_objective": self.baseline_objective,
            "best_objective": self.best_objective,
            "trace": [[t, v] for t, v in self.trace],
            "best_plan": self.best_plan.to_json_obj(),
        }

    def trace_csv(self) -> str:
        lines = ["elapsed_seconds,objective"]
        lines += [f"{t!r},{v!r}" for t, v in self.trace]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SweepRow:
    config: ConstraintConfig
    baseline_objective: float | None
    best_objective: float | None
    relative_change: float | None
    switcher_fraction: float | None
    mean_travel_delta_minutes: float | None
    error: str | None = None
    trace: tuple[tuple[float, float], ...] = ()

    def to_json_obj(self) -> dict:
        return {
            "config": self.config.to_json_obj(),
            "baseline_objective": self.baseline_objective,
            "best_objective": self.best_objective,
            "relative_change": self.relative_change,
            "switcher_fraction": self.switcher_fraction,
            "mean_travel_delta_minutes": self.mean_travel_delta_minutes,
            "error": self.error,
            "trace": [[t, v] for t, v in self.trace],
        }


@dataclass(frozen=True)
class SweepResult:
    district_id: str
    restarts: int
    rows: tuple[SweepRow, ...]

    def to_json_obj(self) -> dict:
        return {
            "district_id": self.district_id,
            "restarts": self.restarts,
            "rows": [r.to_json_obj() for r in self.rows],
        }

    def to_csv(self) -> str:
        def cell(v) -> str:
            if v is None:
                return ""
            if isinstance(v, bool):
                return str(v).lower()
            return str(v)

        lines = [
            "max_travel_increase_fraction,max_size_increase_fraction,enforce_contiguity,"
            "objective_mode,seed,time_budget_seconds,baseline_objective,best_objective,"
            "relative_change,switcher_fraction,mean_travel_delta_minutes,error"
        ]
        for r in self.rows:
            c = r.config
            lines.append(",".join([
                cell(c.max_travel_increase_fraction), cell(c.max_size_increase_fraction),
                cell(c.enforce_contiguity), c.objective_mode.value, cell(c.seed),
                cell(c.time_budget_seconds), cell(r.baseline_objective), cell(r.best_objective),
                cell(r.relative_change), cell(r.switcher_fraction),
                cell(r.mean_travel_delta_minutes), cell(r.error),
            ]))
        return "\n".join(lines) + "\n"


def updated_pair_terms(
    school_f: list[int], school_o: list[int], f_move: int, o_move: int,
    donor: int, receiver: int, focal_total: int, other_total: int,
) -> tuple[int, int]:
    """Post-move |f*OT - o*FT| terms for the two schools a reassignment touches.

    This is the incremental core of the objective update: a single-block
    move changes only the donor's and receiver's terms of the summed index.
    """
    new_donor = abs(
        (school_f[donor] - f_move) * other_total - (school_o[donor] - o_move) * focal_total
    )
    new_receiver = abs(
        (school_f[receiver] + f_move) * other_total - (school_o[receiver] + o_move) * focal_total
    )
    return new_donor, new_receiver


def _swap_terms(
    school_f: list[int], school_o: list[int],
    z1: int, f1: int, o1: int, z2: int, f2: int, o2: int,
    focal_total: int, other_total: int,
) -> tuple[int, int]:
    """Post-swap terms for the two zones exchanging blocks (f1,o1) and (f2,o2)."""
    new_1 = abs(
        (school_f[z1] - f1 + f2) * other_total - (school_o[z1] - o1 + o2) * focal_total
    )
    new_2 = abs(
        (school_f[z2] - f2 + f1) * other_total - (school_o[z2] - o2 + o1) * focal_total
    )
    return new_1, new_2


def _reach(adj: list[list[int]], members, start: int) -> set[int]:
    """Blocks in ``members`` reachable from ``start`` along adjacency."""
    if start not in members:
        return set()
    seen = {start}
    stack = [start]
    while stack:
        cur = stack.pop()
        for n in adj[cur]:
            if n in members and n not in seen:
                seen.add(n)
                stack.append(n)
    return seen


class _SearchContext:
    """District cross-indexed into flat arrays for the inner loop."""

    def __init__(
        self,
        district: District,
        config: ConstraintConfig,
        provider: TravelTimeProvider,
    ):
        config.validate()
        self.district = district
        self.config = config
        self.provider = provider
        self.block_ids = sorted(district.blocks)
        self.school_ids = sorted(district.schools)
        block_index = {b: i for i, b in enumerate(self.block_ids)}
        school_index = {s: i for i, s in enumerate(self.school_ids)}
        self.block_index = block_index
        self.school_index = school_index
        n_blocks = len(self.block_ids)
        n_schools = len(self.school_ids)

        self.adj: list[list[int]] = [
            sorted(
                block_index[a]
                for a in district.blocks[b].adjacent_block_ids
                if a in block_index
            )
            for b in self.block_ids
        ]

        self.f_blk: list[int] = []
        self.o_blk: list[int] = []
        for b in self.block_ids:
            counts = district.block_students(b)
            f = counts[_FOCAL]
            total = sum(counts.values())
            self.f_blk.append(f)
            self.o_blk.append(total - f)
        self.n_blk = [f + o for f, o in zip(self.f_blk, self.o_blk)]
        self.focal_total = sum(self.f_blk)
        self.other_total = sum(self.o_blk)
        if self.focal_total == 0:
            raise UndefinedIndexError(f"no {_FOCAL.value} students in the district")
        if self.other_total == 0:
            raise UndefinedIndexError(f"no students outside group {_FOCAL.value}")
        self.dissim_den = 2 * self.focal_total * self.other_total
        self.term_den = self.focal_total * self.other_total

        x = config.max_travel_increase_fraction
        eff = effective_baseline_travel(district, provider)
        all_schools = frozenset(range(n_schools))
        self.allowed: list[frozenset[int]] = []
        for bi, b in enumerate(self.block_ids):
            if self.n_blk[bi] == 0:
                self.allowed.append(all_schools)  # travel cap vacuous without students
                continue
            cap = (1.0 + x) * eff[b]
            block = district.blocks[b]
            self.allowed.append(frozenset(
                si for si, s in enumerate(self.school_ids)
                if travel_time(block, district.schools[s], provider) <= cap
            ))

        lims = size_limits(district, config.max_size_increase_fraction)
        self.limit = [lims[s] for s in self.school_ids]
        self.anchor_of = [
            block_index[district.schools[s].containing_block_id] for s in self.school_ids
        ]
        self.is_anchor = [False] * n_blocks
        for a in self.anchor_of:
            self.is_anchor[a] = True
        self.movable = [bi for bi in range(n_blocks) if not self.is_anchor[bi]]
        self.baseline_assign = [
            school_index[district.baseline_plan.school_for(b)] for b in self.block_ids
        ]
        if config.enforce_contiguity:
            base = contiguous_blocks(district, district.baseline_plan)
            self.constrained = [b in base for b in self.block_ids]
        else:
            self.constrained = [False] * n_blocks
        self.mode = config.objective_mode

    def plan_from(self, assign: list[int]) -> AssignmentPlan:
        return AssignmentPlan({
            self.block_ids[bi]: self.school_ids[si] for bi, si in enumerate(assign)
        })

    def key_float(self, key: tuple) -> float:
        if self.mode is ObjectiveMode.DISSIMILARITY:
            return key[0] / self.dissim_den
        if self.mode is ObjectiveMode.INTERACTION_EXPOSURE:
            return float(1 - (-key[0]) / Fraction(self.focal_total))
        return key[0] / self.term_den

    def lower_bound_key(self) -> tuple | None:
        """Provably unbeatable key, when the mode has one."""
        if self.mode is ObjectiveMode.DISSIMILARITY:
            return (0,)
        if self.mode is ObjectiveMode.LEXIMIN:
            return (0, 0)
        return None


class _State:
    """Mutable per-plan bookkeeping the chain updates move by move."""

    __slots__ = (
        "assign", "school_f", "school_o", "school_n",
        "terms", "num", "zones", "connected", "expo",
    )

    def __init__(self, ctx: _SearchContext, assign: list[int]):
        n_schools = len(ctx.school_ids)
        self.assign = assign
        self.school_f = [0] * n_schools
        self.school_o = [0] * n_schools
        for bi, si in enumerate(assign):
            self.school_f[si] += ctx.f_blk[bi]
            self.school_o[si] += ctx.o_blk[bi]
        self.school_n = [f + o for f, o in zip(self.school_f, self.school_o)]
        ft, ot = ctx.focal_total, ctx.other_total
        self.terms = [
            abs(self.school_f[s] * ot - self.school_o[s] * ft) for s in range(n_schools)
        ]
        self.num = sum(self.terms)
        self.zones: list[set[int]] = [set() for _ in range(n_schools)]
        for bi, si in enumerate(assign):
            self.zones[si].add(bi)
        self.connected = [False] * len(assign)
        for s in range(n_schools):
            for m in _reach(ctx.adj, self.zones[s], ctx.anchor_of[s]):
                self.connected[m] = True
        self.expo = Fraction(0)
        for s in range(n_schools):
            if self.school_n[s]:
                self.expo += Fraction(self.school_f[s] * self.school_o[s], self.school_n[s])

    def key(self, mode: ObjectiveMode) -> tuple:
        if mode is ObjectiveMode.DISSIMILARITY:
            return (self.num,)
        if mode is ObjectiveMode.INTERACTION_EXPOSURE:
            return (-self.expo,)
        return (max(self.terms), self.num)


def _expo_term(f: int, o: int) -> float:
    n = f + o
    return (f * o / n) if n else 0.0


def _expo_frac(f: int, o: int) -> Fraction:
    n = f + o
    return Fraction(f * o, n) if n else Fraction(0)


def _run_chain(
    ctx: _SearchContext,
    chain_seed: int,
    total_iters: int,
    base_elapsed: float,
    best: dict,
    trace: list[tuple[float, float]],
    on_trace,
) -> Termination:
    """One annealing chain from the baseline; updates ``best`` and ``trace`` in place."""
    rng = random.Random(chain_seed)
    randf = rng.random
    randi = rng.randrange
    exp_ = math.exp

    mode = ctx.mode
    is_dissim = mode is ObjectiveMode.DISSIMILARITY
    is_expo = mode is ObjectiveMode.INTERACTION_EXPOSURE
    adj = ctx.adj
    allowed = ctx.allowed
    limit = ctx.limit
    f_blk, o_blk, n_blk = ctx.f_blk, ctx.o_blk, ctx.n_blk
    ft, ot = ctx.focal_total, ctx.other_total
    anchor_of = ctx.anchor_of
    is_anchor = ctx.is_anchor
    movable = ctx.movable
    m_count = len(movable)
    n_sch = len(ctx.school_ids)
    enforce = ctx.config.enforce_contiguity
    constrained = ctx.constrained
    dissim_scale = 1.0 / ctx.dissim_den
    lex_scale = 1.0 / ctx.term_den
    inv_ft = 1.0 / ft
    ips = float(ITERS_PER_SECOND)
    lower = ctx.lower_bound_key()

    st = _State(ctx, list(ctx.baseline_assign))
    assign = st.assign
    zones = st.zones
    connected = st.connected
    school_f, school_o, school_n = st.school_f, st.school_o, st.school_n
    terms = st.terms
    num = st.num
    expo = st.expo
    cur_m = max(terms)

    best_key = best["key"]

    def record_if_best(k_iter: int) -> bool:
        """Snapshot the current plan when it beats the incumbent; True if proved optimal."""
        nonlocal best_key
        if is_dissim:
            key = (num,)
        elif is_expo:
            key = (-expo,)
        else:
            key = (cur_m, num)
        if key < best_key:
            best_key = key
            best["key"] = key
            best["assign"] = list(assign)
            point = (base_elapsed + k_iter / ips, ctx.key_float(key))
            trace.append(point)
            if on_trace is not None:
                on_trace(point[0], point[1])
            if lower is not None and key <= lower:
                return True
        return False

    cooling_iters = min(total_iters, max(1, int(total_iters * COOLING_FRACTION)))
    alpha = (FINAL_TEMPERATURE / INITIAL_TEMPERATURE) ** (1.0 / cooling_iters)
    temp = INITIAL_TEMPERATURE
    reheats = 0
    rejections = 0
    k = 0

    while k < cooling_iters:
        k += 1
        temp *= alpha
        if temp < FINAL_TEMPERATURE:
            temp = FINAL_TEMPERATURE

        if rejections >= STAGNATION_LIMIT:
            # restart from the incumbent, partially reheated
            st = _State(ctx, list(best["assign"]))
            assign = st.assign
            zones = st.zones
            connected = st.connected
            school_f, school_o, school_n = st.school_f, st.school_o, st.school_n
            terms = st.terms
            num = st.num
            expo = st.expo
            cur_m = max(terms)
            reheats += 1
            temp = max(INITIAL_TEMPERATURE * (0.5 ** reheats), FINAL_TEMPERATURE * 10.0)
            rejections = 0

        do_swap = randf() < SWAP_PROBABILITY
        bi = movable[randi(m_count)]
        z1 = assign[bi]
        if enforce:
            # contiguous zones only ever trade across their borders
            nbrs = adj[bi]
            if not nbrs:
                rejections += 1
                continue
            nb = nbrs[randi(len(nbrs))]
            z2 = assign[nb]
        elif do_swap:
            # free-form zones: pair any two blocks, sizes stay balanced
            nb = movable[randi(m_count)]
            z2 = assign[nb]
        else:
            nb = -1
            z2 = randi(n_sch)
        if z1 == z2:
            rejections += 1
            continue

        if do_swap and nb >= 0 and not is_anchor[nb]:
            # exchange bi and nb between their zones
            f1, o1, n1 = f_blk[bi], o_blk[bi], n_blk[bi]
            f2, o2, n2 = f_blk[nb], o_blk[nb], n_blk[nb]
            if (n1 and z2 not in allowed[bi]) or (n2 and z1 not in allowed[nb]):
                rejections += 1
                continue
            if (school_n[z1] - n1 + n2 > limit[z1]) or (school_n[z2] - n2 + n1 > limit[z2]):
                rejections += 1
                continue
            new_1, new_2 = _swap_terms(school_f, school_o, z1, f1, o1, z2, f2, o2, ft, ot)
            d_num = new_1 + new_2 - terms[z1] - terms[z2]
            if is_dissim:
                d_obj = d_num * dissim_scale
            elif is_expo:
                fa, oa = school_f[z1] - f1 + f2, school_o[z1] - o1 + o2
                fb, ob = school_f[z2] - f2 + f1, school_o[z2] - o2 + o1
                d_obj = (
                    _expo_term(school_f[z1], school_o[z1]) + _expo_term(school_f[z2], school_o[z2])
                    - _expo_term(fa, oa) - _expo_term(fb, ob)
                ) * inv_ft
            else:
                new_m = max(new_1, new_2, *(
                    terms[s] for s in range(len(terms)) if s != z1 and s != z2
                )) if len(terms) > 2 else max(new_1, new_2)
                d_obj = (new_m - cur_m) * lex_scale + d_num * dissim_scale * 1e-3
            if d_obj > 0.0 and randf() >= exp_(-d_obj / temp):
                rejections += 1
                continue
            if enforce:
                set1 = (zones[z1] - {bi}) | {nb}
                seen1 = _reach(adj, set1, anchor_of[z1])
                if any(constrained[m] and m not in seen1 for m in set1):
                    rejections += 1
                    continue
                set2 = (zones[z2] - {nb}) | {bi}
                seen2 = _reach(adj, set2, anchor_of[z2])
                if any(constrained[m] and m not in seen2 for m in set2):
                    rejections += 1
                    continue
            if is_expo:
                expo += (
                    _expo_frac(school_f[z1] - f1 + f2, school_o[z1] - o1 + o2)
                    + _expo_frac(school_f[z2] - f2 + f1, school_o[z2] - o2 + o1)
                    - _expo_frac(school_f[z1], school_o[z1])
                    - _expo_frac(school_f[z2], school_o[z2])
                )
            assign[bi], assign[nb] = z2, z1
            zones[z1].discard(bi); zones[z1].add(nb)
            zones[z2].discard(nb); zones[z2].add(bi)
            school_f[z1] += f2 - f1; school_o[z1] += o2 - o1; school_n[z1] += n2 - n1
            school_f[z2] += f1 - f2; school_o[z2] += o1 - o2; school_n[z2] += n1 - n2
            num += new_1 + new_2 - terms[z1] - terms[z2]
            terms[z1], terms[z2] = new_1, new_2
            if not (is_dissim or is_expo):
                cur_m = max(terms)
            if enforce:
                for m in zones[z1]:
                    connected[m] = m in seen1
                for m in zones[z2]:
                    connected[m] = m in seen2
            rejections = 0
            if record_if_best(k):
                return Termination.PROVED_OPTIMAL
            continue

        # single-block move: bi leaves z1 for neighbor zone z2
        f_b, o_b, n_b = f_blk[bi], o_blk[bi], n_blk[bi]
        if n_b and z2 not in allowed[bi]:
            rejections += 1
            continue
        if n_b and school_n[z2] + n_b > limit[z2]:
            rejections += 1
            continue
        new_a, new_b = updated_pair_terms(school_f, school_o, f_b, o_b, z1, z2, ft, ot)
        d_num = new_a + new_b - terms[z1] - terms[z2]
        if is_dissim:
            d_obj = d_num * dissim_scale
        elif is_expo:
            d_obj = (
                _expo_term(school_f[z1], school_o[z1]) + _expo_term(school_f[z2], school_o[z2])
                - _expo_term(school_f[z1] - f_b, school_o[z1] - o_b)
                - _expo_term(school_f[z2] + f_b, school_o[z2] + o_b)
            ) * inv_ft
        else:
            new_m = max(new_a, new_b, *(
                terms[s] for s in range(len(terms)) if s != z1 and s != z2
            )) if len(terms) > 2 else max(new_a, new_b)
            d_obj = (new_m - cur_m) * lex_scale + d_num * dissim_scale * 1e-3
        if d_obj > 0.0 and randf() >= exp_(-d_obj / temp):
            rejections += 1
            continue
        donor_seen = None
        if enforce:
            attach = False
            for n in nbrs:
                if assign[n] == z2 and connected[n]:
                    attach = True
                    break
            if constrained[bi] and not attach:
                rejections += 1
                continue
            same_zone = 0
            for n in nbrs:
                if assign[n] == z1:
                    same_zone += 1
                    if same_zone > 1:
                        break
            if same_zone > 1:  # bi may be a cut block of its zone
                members = zones[z1] - {bi}
                donor_seen = _reach(adj, members, anchor_of[z1])
                bad = False
                for m in members:
                    if constrained[m] and m not in donor_seen:
                        bad = True
                        break
                if bad:
                    rejections += 1
                    continue
        if is_expo:
            expo += (
                _expo_frac(school_f[z1] - f_b, school_o[z1] - o_b)
                + _expo_frac(school_f[z2] + f_b, school_o[z2] + o_b)
                - _expo_frac(school_f[z1], school_o[z1])
                - _expo_frac(school_f[z2], school_o[z2])
            )
        assign[bi] = z2
        zones[z1].discard(bi)
        zones[z2].add(bi)
        school_f[z1] -= f_b; school_o[z1] -= o_b; school_n[z1] -= n_b
        school_f[z2] += f_b; school_o[z2] += o_b; school_n[z2] += n_b
        num += d_num
        terms[z1], terms[z2] = new_a, new_b
        if not (is_dissim or is_expo):
            cur_m = max(terms)
        if enforce:
            if donor_seen is not None:
                for m in zones[z1]:
                    connected[m] = m in donor_seen
            connected[bi] = attach
        rejections = 0
        if record_if_best(k):
            return Termination.PROVED_OPTIMAL

    # greedy polish: restart from the incumbent, accept only exact improvements
    allowed_sorted = [sorted(s) for s in allowed]
    st = _State(ctx, list(best["assign"]))
    assign = st.assign
    zones = st.zones
    connected = st.connected
    school_f, school_o, school_n = st.school_f, st.school_o, st.school_n
    terms = st.terms
    num = st.num
    expo = st.expo
    cur_m = max(terms)

    improved = True
    while improved:
        improved = False
        for bi in movable:
            z1 = assign[bi]
            nbrs = adj[bi]
            if enforce:
                targets = sorted({assign[n] for n in nbrs} - {z1})
            else:
                targets = [z2 for z2 in allowed_sorted[bi] if z2 != z1]
            for z2 in targets:
                if k >= total_iters:
                    return Termination.TIME_BUDGET
                k += 1
                f_b, o_b, n_b = f_blk[bi], o_blk[bi], n_blk[bi]
                if n_b and (z2 not in allowed[bi] or school_n[z2] + n_b > limit[z2]):
                    continue
                new_a, new_b = updated_pair_terms(school_f, school_o, f_b, o_b, z1, z2, ft, ot)
                d_num = new_a + new_b - terms[z1] - terms[z2]
                if is_dissim:
                    if d_num >= 0:
                        continue
                elif is_expo:
                    d_frac = (
                        _expo_frac(school_f[z1] - f_b, school_o[z1] - o_b)
                        + _expo_frac(school_f[z2] + f_b, school_o[z2] + o_b)
                        - _expo_frac(school_f[z1], school_o[z1])
                        - _expo_frac(school_f[z2], school_o[z2])
                    )
                    if d_frac <= 0:
                        continue
                else:
                    new_m = max(new_a, new_b, *(
                        terms[s] for s in range(len(terms)) if s != z1 and s != z2
                    )) if len(terms) > 2 else max(new_a, new_b)
                    if (new_m, num + d_num) >= (cur_m, num):
                        continue
                donor_seen = None
                if enforce:
                    attach = False
                    for n in nbrs:
                        if assign[n] == z2 and connected[n]:
                            attach = True
                            break
                    if constrained[bi] and not attach:
                        continue
                    same_zone = sum(1 for n in nbrs if assign[n] == z1)
                    if same_zone > 1:
                        members = zones[z1] - {bi}
                        donor_seen = _reach(adj, members, anchor_of[z1])
                        if any(constrained[m] and m not in donor_seen for m in members):
                            continue
                if is_expo:
                    expo += d_frac
                assign[bi] = z2
                zones[z1].discard(bi)
                zones[z2].add(bi)
                school_f[z1] -= f_b; school_o[z1] -= o_b; school_n[z1] -= n_b
                school_f[z2] += f_b; school_o[z2] += o_b; school_n[z2] += n_b
                num += d_num
                terms[z1], terms[z2] = new_a, new_b
                if not (is_dissim or is_expo):
                    cur_m = max(terms)
                if enforce:
                    if donor_seen is not None:
                        for m in zones[z1]:
                            connected[m] = m in donor_seen
                    connected[bi] = attach
                improved = True
                if record_if_best(k):
                    return Termination.PROVED_OPTIMAL
                break  # re-evaluate this block's remaining targets next pass

        if improved:
            continue
        # single moves exhausted; try pairwise swaps (adjacent when contiguous)
        for bi in movable:
            z1 = assign[bi]
            for nb in (adj[bi] if enforce else movable):
                if nb <= bi or is_anchor[nb] or assign[nb] == z1:
                    continue
                if k >= total_iters:
                    return Termination.TIME_BUDGET
                k += 1
                z2 = assign[nb]
                f1, o1, n1 = f_blk[bi], o_blk[bi], n_blk[bi]
                f2, o2, n2 = f_blk[nb], o_blk[nb], n_blk[nb]
                if (n1 and z2 not in allowed[bi]) or (n2 and z1 not in allowed[nb]):
                    continue
                if school_n[z1] - n1 + n2 > limit[z1] or school_n[z2] - n2 + n1 > limit[z2]:
                    continue
                new_1, new_2 = _swap_terms(school_f, school_o, z1, f1, o1, z2, f2, o2, ft, ot)
                d_num = new_1 + new_2 - terms[z1] - terms[z2]
                if is_dissim:
                    if d_num >= 0:
                        continue
                elif is_expo:
                    d_frac = (
                        _expo_frac(school_f[z1] - f1 + f2, school_o[z1] - o1 + o2)
                        + _expo_frac(school_f[z2] - f2 + f1, school_o[z2] - o2 + o1)
                        - _expo_frac(school_f[z1], school_o[z1])
                        - _expo_frac(school_f[z2], school_o[z2])
                    )
                    if d_frac <= 0:
                        continue
                else:
                    new_m = max(new_1, new_2, *(
                        terms[s] for s in range(len(terms)) if s != z1 and s != z2
                    )) if len(terms) > 2 else max(new_1, new_2)
                    if (new_m, num + d_num) >= (cur_m, num):
                        continue
                if enforce:
                    set1 = (zones[z1] - {bi}) | {nb}
                    seen1 = _reach(adj, set1, anchor_of[z1])
                    if any(constrained[m] and m not in seen1 for m in set1):
                        continue
                    set2 = (zones[z2] - {nb}) | {bi}
                    seen2 = _reach(adj, set2, anchor_of[z2])
                    if any(constrained[m] and m not in seen2 for m in set2):
                        continue
                if is_expo:
                    expo += d_frac
                assign[bi], assign[nb] = z2, z1
                zones[z1].discard(bi); zones[z1].add(nb)
                zones[z2].discard(nb); zones[z2].add(bi)
                school_f[z1] += f2 - f1; school_o[z1] += o2 - o1; school_n[z1] += n2 - n1
                school_f[z2] += f1 - f2; school_o[z2] += o1 - o2; school_n[z2] += n1 - n2
                num += d_num
                terms[z1], terms[z2] = new_1, new_2
                if not (is_dissim or is_expo):
                    cur_m = max(terms)
                if enforce:
                    for m in zones[z1]:
                        connected[m] = m in seen1
                    for m in zones[z2]:
                        connected[m] = m in seen2
                improved = True
                if record_if_best(k):
                    return Termination.PROVED_OPTIMAL
                break
            if improved:
                break

    return Termination.LOCAL_OPTIMUM


def solve(
    district: District,
    config: ConstraintConfig,
    travel_provider: TravelTimeProvider | None = None,
    restarts: int = 1,
    on_trace=None,
) -> SolveResult:
    """Search for a feasible plan minimizing the configured objective.

    Runs ``restarts`` independent annealing chains from the baseline
    (chain seeds derived from ``config.seed``), each on its own slice of
    the virtual clock, and returns the best plan found.  The result is
    never infeasible and never worse than the baseline.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    provider = travel_provider if travel_provider is not None else HaversineTravelTimeProvider()
    ctx = _SearchContext(district, config, provider)
    violations = check_feasibility(district, district.baseline_plan, config, provider)
    if violations:
        raise ValueError(f"baseline plan violates its own constraints: {violations[0].detail}")

    baseline_state = _State(ctx, list(ctx.baseline_assign))
    baseline_key = baseline_state.key(ctx.mode)
    baseline_value = ctx.key_float(baseline_key)
    best = {"assign": list(ctx.baseline_assign), "key": baseline_key}
    trace: list[tuple[float, float]] = [(0.0, baseline_value)]
    if on_trace is not None:
        on_trace(0.0, baseline_value)

    lower = ctx.lower_bound_key()
    if (lower is not None and baseline_key <= lower) or len(ctx.school_ids) == 1 or not ctx.movable:
        # baseline is provably optimal: at the objective's floor, or the only plan
        return SolveResult(
            best_plan=district.baseline_plan,
            best_objective=baseline_value,
            baseline_objective=baseline_value,
            trace=tuple(trace),
            termination=Termination.PROVED_OPTIMAL,
            seed=config.seed,
            objective_mode=ctx.mode,
        )

    per_chain_iters = max(1, round(config.time_budget_seconds * ITERS_PER_SECOND))
    terminations: list[Termination] = []
    for r in range(restarts):
        chain_seed = config.seed * 1_000_003 + r
        term = _run_chain(
            ctx, chain_seed, per_chain_iters,
            r * config.time_budget_seconds, best, trace, on_trace,
        )
        terminations.append(term)
        if term is Termination.PROVED_OPTIMAL:
            break

    if Termination.PROVED_OPTIMAL in terminations:
        termination = Termination.PROVED_OPTIMAL
    elif all(t is Termination.LOCAL_OPTIMUM for t in terminations):
        termination = Termination.LOCAL_OPTIMUM
    else:
        termination = Termination.TIME_BUDGET

    return SolveResult(
        best_plan=ctx.plan_from(best["assign"]),
        best_objective=ctx.key_float(best["key"]),
        baseline_objective=baseline_value,
        trace=tuple(trace),
        termination=termination,
        seed=config.seed,
        objective_mode=ctx.mode,
    )


def brute_force(
    district: District,
    config: ConstraintConfig,
    travel_provider: TravelTimeProvider | None = None,
) -> SolveResult:
    """Prove the optimum by enumerating every assignment of non-anchor blocks.

    Only instances with at most ``ORACLE_MAX_FREE_BLOCKS`` non-anchor
    blocks and ``ORACLE_MAX_SCHOOLS`` schools are accepted; ties are
    broken by the lexicographically smallest plan encoding.
    """
    provider = travel_provider if travel_provider is not None else HaversineTravelTimeProvider()
    ctx = _SearchContext(district, config, provider)
    free = [bi for bi in range(len(ctx.block_ids)) if not ctx.is_anchor[bi]]
    n_schools = len(ctx.school_ids)
    if len(free) > ORACLE_MAX_FREE_BLOCKS:
        raise InstanceTooLargeError(
            f"{len(free)} non-anchor blocks exceed the enumerable bound "
            f"{ORACLE_MAX_FREE_BLOCKS}; use solve() instead"
        )
    if n_schools > ORACLE_MAX_SCHOOLS:
        raise InstanceTooLargeError(
            f"{n_schools} schools exceed the enumerable bound "
            f"{ORACLE_MAX_SCHOOLS}; use solve() instead"
        )
    violations = check_feasibility(district, district.baseline_plan, config, provider)
    if violations:
        raise ValueError(f"baseline plan violates its own constraints: {violations[0].detail}")

    baseline_state = _State(ctx, list(ctx.baseline_assign))
    baseline_key = baseline_state.key(ctx.mode)
    baseline_value = ctx.key_float(baseline_key)

    mode = ctx.mode
    ft, ot = ctx.focal_total, ctx.other_total
    f_blk, o_blk, n_blk = ctx.f_blk, ctx.o_blk, ctx.n_blk
    limit = ctx.limit
    enforce = ctx.config.enforce_contiguity

    # bitmask adjacency for leaf contiguity floods
    bit_adj = [0] * len(ctx.block_ids)
    for bi, nbrs in enumerate(ctx.adj):
        mask = 0
        for n in nbrs:
            mask |= 1 << n
        bit_adj[bi] = mask
    constrained_mask = 0
    for bi, c in enumerate(ctx.constrained):
        if c:
            constrained_mask |= 1 << bi
    anchor_bit = [1 << a for a in ctx.anchor_of]

    assign = list(ctx.baseline_assign)
    school_f = [0] * n_schools
    school_o = [0] * n_schools
    school_n = [0] * n_schools
    zone_mask = [0] * n_schools
    for si in range(n_schools):
        a = ctx.anchor_of[si]
        school_f[si] = f_blk[a]
        school_o[si] = o_blk[a]
        school_n[si] = n_blk[a]
        zone_mask[si] = 1 << a
        assign[a] = si

    remaining = [0] * (len(free) + 1)
    for i in range(len(free) - 1, -1, -1):
        remaining[i] = remaining[i + 1] + n_blk[free[i]]
    slack = sum(limit[s] - school_n[s] for s in range(n_schools))

    options = [
        sorted(ctx.allowed[bi]) if n_blk[bi] else list(range(n_schools)) for bi in free
    ]

    best_key: tuple | None = None
    best_assign: list[int] | None = None

    def zone_connected_ok(si: int) -> bool:
        zmask = zone_mask[si]
        need = zmask & constrained_mask
        if need == 0:
            return True
        reach = anchor_bit[si]
        frontier = reach
        while frontier:
            grow = 0
            m = frontier
            while m:
                low = m & -m
                grow |= bit_adj[low.bit_length() - 1]
                m ^= low
            frontier = grow & zmask & ~reach
            reach |= frontier
        return need & ~reach == 0

    def leaf_key() -> tuple:
        terms = [abs(school_f[s] * ot - school_o[s] * ft) for s in range(n_schools)]
        total = sum(terms)
        if mode is ObjectiveMode.DISSIMILARITY:
            return (total,)
        if mode is ObjectiveMode.INTERACTION_EXPOSURE:
            e = Fraction(0)
            for s in range(n_schools):
                if school_n[s]:
                    e += Fraction(school_f[s] * school_o[s], school_n[s])
            return (-e,)
        return (max(terms), total)

    def descend(i: int) -> None:
        nonlocal slack, best_key, best_assign
        if i == len(free):
            if enforce and not all(zone_connected_ok(s) for s in range(n_schools)):
                return
            key = leaf_key()
            if best_key is None or key < best_key:
                best_key = key
                best_assign = list(assign)
            return
        bi = free[i]
        nb = n_blk[bi]
        fb, ob = f_blk[bi], o_blk[bi]
        bit = 1 << bi
        for si in options[i]:
            if nb and school_n[si] + nb > limit[si]:
                continue
            if remaining[i + 1] > slack - nb:
                continue  # students left over can no longer fit anywhere
            assign[bi] = si
            school_f[si] += fb; school_o[si] += ob; school_n[si] += nb
            zone_mask[si] |= bit
            slack -= nb
            descend(i + 1)
            slack += nb
            zone_mask[si] &= ~bit
            school_f[si] -= fb; school_o[si] -= ob; school_n[si] -= nb
        assign[bi] = -1

    descend(0)
    if best_key is None:  # baseline always enumerable, so this cannot happen
        raise RuntimeError("exhaustive search found no feasible plan")

    best_value = ctx.key_float(best_key)
    trace = [(0.0, baseline_value)]
    if best_key < baseline_key:
        trace.append((0.0, best_value))
    return SolveResult(
        best_plan=ctx.plan_from(best_assign),
        best_objective=best_value,
        baseline_objective=baseline_value,
        trace=tuple(trace),
        termination=Termination.PROVED_OPTIMAL,
        seed=config.seed,
        objective_mode=mode,
    )


def _sweep_row(
    district: District,
    config: ConstraintConfig,
    provider: TravelTimeProvider,
    restarts: int,
) -> SweepRow:
    try:
        result = solve(district, config, provider, restarts=restarts)
        report = outcome_report(district, district.baseline_plan, result.best_plan, provider)
        white = report.group_outcome(_FOCAL)
        return SweepRow(
            config=config,
            baseline_objective=result.baseline_objective,
            best_objective=result.best_objective,
            relative_change=white.segregation_relative_change,
            switcher_fraction=report.switcher_fraction,
            mean_travel_delta_minutes=report.mean_travel_delta_minutes,
            trace=result.trace,
        )
    except Exception as exc:  # a failed row must not sink its siblings
        return SweepRow(
            config=config,
            baseline_objective=None,
            best_objective=None,
            relative_change=None,
            switcher_fraction=None,
            mean_travel_delta_minutes=None,
            error=f"{type(exc).__name__}: {exc}",
        )


def sweep(
    district: District,
    base_config: ConstraintConfig,
    travel_provider: TravelTimeProvider | None = None,
    restarts: int = 1,
    workers: int = 1,
) -> SweepResult:
    """Solve the four sensitivity configurations and report one row each.

    The grid crosses travel slack 50% and 100% with contiguity on and
    off, at a fixed 15% size slack; every row reruns the full solve with
    the row's own config, so any row is independently reproducible.
    """
    provider = travel_provider if travel_provider is not None else HaversineTravelTimeProvider()
    configs = [
        base_config.replace(
            max_travel_increase_fraction=x,
            max_size_increase_fraction=SWEEP_SIZE_FRACTION,
            enforce_contiguity=contiguity,
        )
        for x, contiguity in SWEEP_GRID
    ]
    if workers <= 1:
        rows = [_sweep_row(district, c, provider, restarts) for c in configs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(configs))) as pool:
            futures = [pool.submit(_sweep_row, district, c, provider, restarts) for c in configs]
            rows = [f.result() for f in futures]
    return SweepResult(district_id=district.id, restarts=restarts, rows=tuple(rows))
