"""Continuous-speed assignment under a fixed mapping.

Two routes to the same optimum: an exact convex program over execution
times, and a linear-time recursion over the series-parallel decomposition
that is exact whenever the speed bounds stay inactive.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .graph import (
    CONTINUOUS,
    TaskGraph,
    completion_times,
    critical_path_time,
    deadline_feasible,
)
from .optim.convex import ConvexProgram, ConvexSolution, SolveStatus, solve_convex
from .spdecomp import LEAF, PARALLEL, SERIES, SpNode, sp_decompose

# Tolerance on s_min/s_max when deciding whether the recursion's speeds
# violate the model bounds.
SPEED_BOUND_REL_TOL = 1e-9


class SpgStatus(Enum):
    EXACT = "exact"
    SPEED_BOUND_VIOLATED = "speed_bound_violated"
    NOT_SERIES_PARALLEL = "not_series_parallel"


@dataclass(frozen=True)
class SpeedAssignment:
    """Per-task uniform speeds with the derived times and energies."""

    task_ids: tuple[str, ...]
    speeds: np.ndarray
    weights: np.ndarray
    alpha: float

    @property
    def times(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            x = np.where(self.weights > 0, self.weights / self.speeds, 0.0)
        return x

    @property
    def energies(self) -> np.ndarray:
        return self.weights * self.speeds ** (self.alpha - 1.0)

    @property
    def total_energy(self) -> float:
        return float(self.energies.sum())

    def speed_of(self, task_id: str) -> float:
        return float(self.speeds[self.task_ids.index(task_id)])


@dataclass
class SpeedSolveResult:
    assignment: SpeedAssignment | None
    status: SolveStatus
    solution: ConvexSolution | None = None


@dataclass
class SpgResult:
    assignment: SpeedAssignment | None
    status: SpgStatus


def build_time_program(
    graph: TaskGraph,
    *,
    s_min: float | None = None,
    s_max: float | None = None,
    completion_cap: float | None = None,
    volume_cores: int | None = None,
    x_lo: np.ndarray | None = None,
    x_hi: np.ndarray | None = None,
    start_hint: tuple[np.ndarray, np.ndarray] | None = None,
) -> ConvexProgram:
    """Convex program over (x, d): precedence, deadline cap, speed boxes.

    ``completion_cap`` defaults to the instance deadline; passing the
    relaxed cap D/2 together with ``volume_cores`` yields the scheduling
    relaxation.  Explicit ``x_lo``/``x_hi`` boxes override the speed-derived
    ones (branch-and-bound nodes).  Zero-weight tasks get the box [0, 0].
    """
    model = graph.speed_model
    lo_s = model.s_min if s_min is None else s_min
    hi_s = model.s_max if s_max is None else s_max
    cap = graph.deadline if completion_cap is None else completion_cap
    n = graph.n
    w = graph.weights
    if x_lo is None:
        x_lo = np.where(w > 0, w / hi_s, 0.0)
    if x_hi is None:
        x_hi = np.where(w > 0, w / lo_s, 0.0)
    # No execution time can exceed the completion cap; tightening the box
    # keeps all program data on one scale.
    x_hi = np.minimum(x_hi, np.where(w > 0, cap, x_hi))
    x_hi = np.maximum(x_hi, x_lo)
    rows: list = []
    for j in range(n):
        rows.append(({n + j: 1.0}, "<=", cap))          # d_j <= cap
        rows.append(({j: 1.0, n + j: -1.0}, "<=", 0.0))  # x_j <= d_j
    for a, b in graph.edge_indices:
        rows.append(({n + a: 1.0, b: 1.0, n + b: -1.0}, "<=", 0.0))  # d_a + x_b <= d_b
    if volume_cores is not None:
        rows.append(({j: 1.0 / volume_cores for j in range(n) if w[j] > 0}, "<=", cap))
    if start_hint is None:
        start_hint = _interior_hint(graph, x_lo, x_hi, cap, volume_cores)
    return ConvexProgram.from_rows(w, model.alpha, x_lo, x_hi, rows, start_hint)


def _interior_hint(
    graph: TaskGraph,
    x_lo: np.ndarray,
    x_hi: np.ndarray,
    cap: float,
    volume_cores: int | None,
) -> tuple[np.ndarray, np.ndarray] | None:
    """Strictly feasible (x, d) built from a forward pass, if one exists."""
    n = graph.n
    if n == 0:
        return None
    theta = 0.5
    for _ in range(50):
        x = x_lo + theta * (x_hi - x_lo)
        finish = completion_times(graph, x)
        slack = cap - float(finish.max())
        vol_ok = True
        if volume_cores is not None:
            vol_ok = float(x.sum()) / volume_cores < cap * (1.0 - 1e-7)
        if slack > 1e-7 * cap and vol_ok:
            # Spread the remaining slack so every row is strictly slack.
            order = {u: i for i, u in enumerate(graph.topo_order)}
            delta = slack / (2.0 * (n + 1))
            d = np.array([finish[j] + delta * (order[j] + 1) for j in range(n)])
            return x, d
        theta *= 0.25
    return None


def cvx_speed(graph: TaskGraph, tol: float = 1e-9) -> SpeedSolveResult:
    """Exact minimum-energy speeds via the convex program."""
    graph.ensure_valid()
    model = graph.speed_model
    if model.kind != CONTINUOUS:
        raise ValueError("cvx_speed requires a continuous speed model")
    return _cvx_on(graph, model.s_min, model.s_max, tol)


def _cvx_on(graph: TaskGraph, s_min: float, s_max: float, tol: float = 1e-9) -> SpeedSolveResult:
    w = graph.weights
    n = graph.n
    if n == 0:
        empty = SpeedAssignment((), np.zeros(0), np.zeros(0), graph.speed_model.alpha)
        return SpeedSolveResult(empty, SolveStatus.OPTIMAL)
    fastest = np.where(w > 0, w / s_max, 0.0)
    if not deadline_feasible(graph, fastest):
        return SpeedSolveResult(None, SolveStatus.INFEASIBLE)
    program = build_time_program(graph, s_min=s_min, s_max=s_max)
    sol = solve_convex(program, tol)
    if sol.status is not SolveStatus.OPTIMAL:
        return SpeedSolveResult(None, sol.status, sol)
    speeds = np.where(w > 0, w / np.maximum(sol.x, 1e-300), s_max)
    speeds = np.clip(speeds, s_min, s_max)
    ids = tuple(t.id for t in graph.tasks)
    return SpeedSolveResult(
        SpeedAssignment(ids, speeds, w.copy(), graph.speed_model.alpha),
        SolveStatus.OPTIMAL,
        sol,
    )


def spg_speed(graph: TaskGraph) -> SpgResult:
    """Equivalent-weight recursion over the series-parallel decomposition.

    Ignores the speed bounds; when some computed speed falls outside
    [s_min, s_max] the assignment is still returned with status
    SPEED_BOUND_VIOLATED so the caller can fall back to cvx_speed.
    """
    graph.ensure_valid()
    model = graph.speed_model
    alpha = model.alpha
    ids = tuple(t.id for t in graph.tasks)
    w = graph.weights
    if graph.n == 0:
        return SpgResult(SpeedAssignment(ids, np.zeros(0), w, alpha), SpgStatus.EXACT)
    decomp = sp_decompose(graph)
    if decomp is None:
        return SpgResult(None, SpgStatus.NOT_SERIES_PARALLEL)

    speeds: dict[str, float] = {}

    def assign(node: SpNode, speed: float) -> None:
        if node.kind == LEAF:
            speeds[node.task] = speed if node.weight > 0 else model.s_max
            return
        left, right = node.children
        if node.kind == SERIES:
            assign(left, speed)
            assign(right, speed)
        else:
            if node.weight <= 0:
                assign(left, 0.0)
                assign(right, 0.0)
                return
            assign(left, speed * left.weight / node.weight)
            assign(right, speed * right.weight / node.weight)

    root_speed = decomp.equivalent_weight / graph.deadline
    assign(decomp.root, root_speed)
    s = np.array([speeds[i] for i in ids])
    assignment = SpeedAssignment(ids, s, w.copy(), alpha)
    active = w > 0
    lo_ok = s[active] >= model.s_min * (1.0 - SPEED_BOUND_REL_TOL)
    hi_ok = s[active] <= model.s_max * (1.0 + SPEED_BOUND_REL_TOL)
    if bool(np.all(lo_ok & hi_ok)):
        return SpgResult(assignment, SpgStatus.EXACT)
    return SpgResult(assignment, SpgStatus.SPEED_BOUND_VIOLATED)


def optimal_continuous_speeds(
    graph: TaskGraph, *, s_min: float | None = None, s_max: float | None = None
) -> tuple[SpeedAssignment | None, SolveStatus, list[str]]:
    """Best continuous speeds: the SP recursion, else the convex program.

    Returns (assignment, status, flags); flags record when the fallback ran.
    """
    model = graph.speed_model
    lo = model.s_min if s_min is None else s_min
    hi = model.s_max if s_max is None else s_max
    flags: list[str] = []
    spg = spg_speed(graph)
    if spg.status is SpgStatus.EXACT and s_min is None and s_max is None:
        return spg.assignment, SolveStatus.OPTIMAL, flags
    if spg.status is SpgStatus.EXACT:
        s = spg.assignment.speeds
        w = graph.weights
        within = np.all(
            (s[w > 0] >= lo * (1.0 - SPEED_BOUND_REL_TOL))
            & (s[w > 0] <= hi * (1.0 + SPEED_BOUND_REL_TOL))
        )
        if within:
            return spg.assignment, SolveStatus.OPTIMAL, flags
    flags.append("spg_fallback_cvx")
    res = _cvx_on(graph, lo, hi)
    return res.assignment, res.status, flags


def continuous_optimum_energy(graph: TaskGraph) -> tuple[float | None, SolveStatus]:
    """Minimum continuous-speed energy for the graph (bounds from the model)."""
    model = graph.speed_model
    assignment, status, _ = optimal_continuous_speeds(
        graph, s_min=model.s_min, s_max=model.s_max
    )
    if status is not SolveStatus.OPTIMAL or assignment is None:
        return None, status
    return assignment.total_energy, status
