"""Joint speed, core and sequencing choice on a discrete ladder.

The exact engine enumerates core assignments and per-core orders, solving
the resulting mapped instance exactly at each leaf; it is a reference
oracle for tiny graphs, not a production path.  The practical route is the
relax-round-and-list approximation with a (2r)^(alpha-1) guarantee.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

import numpy as np

from .continuous import build_time_program
from .discrete import (
    DiscreteSolveResult,
    InstanceTooLarge,
    LevelAssignment,
    _assignment,
    round_up_levels,
)
from . import discrete as _discrete
from .graph import (
    DISCRETE,
    TaskGraph,
    augment_with_mapping_order,
    completion_times,
    reachability_masks,
)
from .optim.convex import SolveStatus, solve_convex
from .scheduling import Schedule, SchedSolveResult, _critical_path_value, list_schedule

TIME_EPS = 1e-9
DEFAULT_EXACT_TASK_CAP = 12


@dataclass
class DiscreteSchedResult:
    schedule: Schedule | None
    assignment: LevelAssignment | None
    status: SolveStatus
    lower_bound: float = np.inf
    gap: float = np.inf
    residual_slack: float | None = None
    flags: tuple[str, ...] = ()


def _require_discrete(graph: TaskGraph) -> None:
    graph.ensure_valid()
    if graph.speed_model.kind != DISCRETE:
        raise ValueError("a discrete speed ladder is required")


def apx_d_sched(graph: TaskGraph) -> DiscreteSchedResult:
    """Relax, round speeds up to the ladder, then list-schedule.

    The relaxation caps volume and completion times at D/2 with speeds in
    [v_1, v_k]; rounding up only shortens tasks, so the Graham bound keeps
    the makespan within the deadline.  No speed lowering happens afterwards
    (speeds must stay on the ladder); the leftover slack is reported.
    """
    _require_discrete(graph)
    model = graph.speed_model
    lv = np.asarray(model.levels, dtype=float)
    w = graph.weights
    if graph.cores is None:
        res = _discrete.apx_d_speed(graph)
        if res.status is not SolveStatus.OPTIMAL or res.assignment is None:
            return DiscreteSchedResult(None, None, res.status, flags=res.flags)
        schedule = _earliest_start_schedule(graph, res.assignment, np.arange(graph.n))
        slack = graph.deadline - schedule.makespan
        return DiscreteSchedResult(
            schedule, res.assignment, SolveStatus.OPTIMAL,
            residual_slack=slack, flags=res.flags + ("unbounded_cores",),
        )

    m = graph.cores
    half = graph.deadline / 2.0
    fastest = np.where(w > 0, w / lv[-1], 0.0)
    vol_ok = float(fastest.sum()) / m <= half * (1.0 + TIME_EPS)
    cp_ok = _critical_path_value(graph, fastest) <= half * (1.0 + TIME_EPS)
    if not (vol_ok and cp_ok):
        return DiscreteSchedResult(None, None, SolveStatus.INFEASIBLE)
    program = build_time_program(
        graph, s_min=lv[0], s_max=lv[-1], completion_cap=half, volume_cores=m
    )
    sol = solve_convex(program, tol=1e-9)
    if sol.status is not SolveStatus.OPTIMAL:
        return DiscreteSchedResult(None, None, sol.status)
    with np.errstate(divide="ignore"):
        s_bar = np.where(w > 0, w / np.maximum(sol.x, 1e-300), lv[-1])
    s_bar = np.clip(s_bar, lv[0], lv[-1])
    levels = round_up_levels(s_bar, lv, w)
    assignment = _assignment(graph, levels)
    schedule = list_schedule(
        graph, assignment.times, m, priority=sol.d, speeds=assignment.speeds
    )
    slack = graph.deadline - schedule.makespan
    return DiscreteSchedResult(
        schedule, assignment, SolveStatus.OPTIMAL, residual_slack=slack
    )


def _earliest_start_schedule(
    graph: TaskGraph, assignment: LevelAssignment, cores: np.ndarray
) -> Schedule:
    x = assignment.times
    finish = completion_times(graph, x)
    return Schedule(
        assignment.task_ids,
        np.asarray(cores, dtype=int),
        finish - x,
        assignment.speeds,
        graph.weights.copy(),
        graph.speed_model.alpha,
    )


def _canonical_core_assignments(n: int, m: int):
    """Assignments up to core relabeling: task 0 on core 0, and a task may
    only open the next unused core."""

    def rec(i: int, used: int, current: list[int]):
        if i == n:
            yield tuple(current)
            return
        for c in range(min(used + 1, m)):
            current.append(c)
            yield from rec(i + 1, max(used, c + 1), current)
            current.pop()

    yield from rec(0, 0, [])


def _core_orders(members: list[int], reach: list[int]):
    """Permutations of one core's tasks that respect the precedence closure."""
    for perm in itertools.permutations(members):
        ok = True
        for a, b in zip(perm, perm[1:]):
            # b scheduled after a on this core; forbidden if b precedes a.
            if (reach[b] >> a) & 1:
                ok = False
                break
        if ok:
            yield perm


def ilp_d_sched(
    graph: TaskGraph,
    budget: float = 5.0,
    max_tasks: int = DEFAULT_EXACT_TASK_CAP,
) -> DiscreteSchedResult:
    """Exact joint choice of levels, cores and sequencing (tiny instances).

    Exhausts (core assignment, per-core order) pairs, solving the induced
    mapped instance exactly per leaf.  Above ``max_tasks`` tasks the search
    is refused; exports of the full integer model are available through
    ``optim.lpfile`` for external solvers.
    """
    _require_discrete(graph)
    n = graph.n
    if n > max_tasks:
        raise InstanceTooLarge(
            f"{n} tasks exceed the exact-search cap of {max_tasks}; export the model instead"
        )
    if graph.cores is None:
        res = _discrete.ilp_d_speed(graph, budget=budget)
        if res.assignment is None:
            return DiscreteSchedResult(None, None, res.status, res.lower_bound, res.gap)
        schedule = _earliest_start_schedule(graph, res.assignment, np.arange(n))
        return DiscreteSchedResult(
            schedule, res.assignment, res.status, res.lower_bound, res.gap,
            flags=("unbounded_cores",),
        )
    if n == 0:
        empty = _assignment(graph, np.zeros(0, dtype=int))
        return DiscreteSchedResult(
            _earliest_start_schedule(graph, empty, np.zeros(0)), empty,
            SolveStatus.OPTIMAL, 0.0, 0.0,
        )

    m = graph.cores
    reach = reachability_masks(graph)
    lv = np.asarray(graph.speed_model.levels, dtype=float)
    w = graph.weights
    ids = [t.id for t in graph.tasks]
    t0 = time.perf_counter()

    best: tuple[float, LevelAssignment, Schedule] | None = None
    best_bound = np.inf
    timed_out = False
    any_leaf_feasible = False

    for assign in _canonical_core_assignments(n, m):
        if timed_out:
            break
        members: dict[int, list[int]] = {}
        for i, c in enumerate(assign):
            members.setdefault(c, []).append(i)
        order_space = [list(_core_orders(v, reach)) for v in members.values()]
        if any(not s for s in order_space):
            continue
        for combo in itertools.product(*order_space):
            if time.perf_counter() - t0 > budget:
                timed_out = True
                break
            core_order = {c: [ids[i] for i in perm] for c, perm in zip(members, combo)}
            try:
                mapped = augment_with_mapping_order(graph, core_order)
            except Exception:
                continue
            # Cheap feasibility screen at the fastest level.
            fastest = np.where(w > 0, w / lv[-1], 0.0)
            if _critical_path_value(mapped, fastest) > graph.deadline * (1.0 + 1e-9):
                continue
            leaf = _discrete.ilp_d_speed(mapped, budget=max(0.1, budget - (time.perf_counter() - t0)))
            if leaf.status is SolveStatus.TIME_LIMIT:
                timed_out = True
            if leaf.assignment is None:
                continue
            any_leaf_feasible = True
            energy = leaf.assignment.total_energy
            if best is None or energy < best[0]:
                la = _assignment(graph, leaf.assignment.levels)
                cores_vec = np.array(assign)
                augmented_graph = mapped
                x = la.times
                finish = completion_times(augmented_graph, x)
                schedule = Schedule(
                    la.task_ids, cores_vec, finish - x, la.speeds,
                    graph.weights.copy(), graph.speed_model.alpha,
                )
                best = (energy, la, schedule)

    if best is None:
        if timed_out:
            return DiscreteSchedResult(None, None, SolveStatus.TIME_LIMIT)
        return DiscreteSchedResult(None, None, SolveStatus.INFEASIBLE)
    energy, la, schedule = best
    status = SolveStatus.TIME_LIMIT if timed_out else SolveStatus.OPTIMAL
    gap = np.inf if timed_out else 0.0
    bound = 0.0 if timed_out else energy
    return DiscreteSchedResult(schedule, la, status, bound, gap)
