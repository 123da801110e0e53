"""Core scheduling: Graham list placement, the relaxed convex program,
speed lowering, and the independent schedule validator.

The joint speeds-and-scheduling problem is NP-hard, so the solver here is
an approximation: solve the relaxation with volume and critical path capped
at half the deadline, fix the implied speeds, list-schedule, then stretch
the schedule back onto the full deadline by lowering speeds uniformly.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .continuous import (
    SpeedAssignment,
    _cvx_on,
    build_time_program,
    optimal_continuous_speeds,
)
from .graph import (
    CONTINUOUS,
    DISCRETE,
    TaskGraph,
    Violation,
    deadline_feasible,
)
from .optim.convex import SolveStatus, solve_convex

TIME_EPS = 1e-9


@dataclass(frozen=True)
class Schedule:
    """Placed schedule: per-task core, start time and speed."""

    task_ids: tuple[str, ...]
    cores: np.ndarray
    starts: np.ndarray
    speeds: np.ndarray
    weights: np.ndarray
    alpha: float

    @property
    def times(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.weights > 0, self.weights / self.speeds, 0.0)

    @property
    def completions(self) -> np.ndarray:
        return self.starts + self.times

    @property
    def makespan(self) -> float:
        return float(self.completions.max()) if len(self.starts) else 0.0

    @property
    def energies(self) -> np.ndarray:
        return self.weights * self.speeds ** (self.alpha - 1.0)

    @property
    def total_energy(self) -> float:
        return float(self.energies.sum())

    def rows(self):
        for i, tid in enumerate(self.task_ids):
            yield tid, int(self.cores[i]), float(self.starts[i]), float(self.speeds[i])


@dataclass
class SchedSolveResult:
    schedule: Schedule | None
    status: SolveStatus
    relaxation_energy: float | None = None
    flags: tuple[str, ...] = ()


def list_schedule(
    graph: TaskGraph,
    times,
    m: int,
    priority=None,
    speeds=None,
) -> Schedule:
    """Graham list scheduling with the given execution times on m cores.

    Tasks are taken in a topological order (ready tasks sorted by
    ``priority``, ties by task index) and each goes to the core with the
    smallest last completion time, lowest index first.  The resulting
    makespan never exceeds volume + critical path; that bound is checked on
    every call and a violation raises, since it would mean a bug.
    """
    n = graph.n
    x = np.asarray(times, dtype=float)
    if m < 1:
        raise ValueError("need at least one core")
    prio = np.zeros(n) if priority is None else np.asarray(priority, dtype=float)

    indeg = [len(p) for p in graph.predecessors]
    ready = [(prio[i], i) for i in range(n) if indeg[i] == 0]
    heapq.heapify(ready)
    core_avail = [(0.0, c) for c in range(m)]
    heapq.heapify(core_avail)
    starts = np.zeros(n)
    finish = np.zeros(n)
    cores = np.zeros(n, dtype=int)
    placed = 0
    while ready:
        _, u = heapq.heappop(ready)
        avail, core = heapq.heappop(core_avail)
        ready_at = max((finish[p] for p in graph.predecessors[u]), default=0.0)
        start = max(avail, ready_at)
        starts[u] = start
        finish[u] = start + x[u]
        cores[u] = core
        heapq.heappush(core_avail, (finish[u], core))
        placed += 1
        for v in graph.successors[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(ready, (prio[v], v))
    if placed != n:
        raise ValueError("cannot schedule a cyclic graph")

    if speeds is None:
        w = graph.weights
        with np.errstate(divide="ignore", invalid="ignore"):
            speeds = np.where(
                (w > 0) & (x > 0), w / np.where(x > 0, x, 1.0), graph.speed_model.s_max
            )
    schedule = Schedule(
        tuple(t.id for t in graph.tasks),
        cores,
        starts,
        np.asarray(speeds, dtype=float),
        graph.weights.copy(),
        graph.speed_model.alpha,
    )
    volume = float(x.sum()) / m
    chain = _critical_path_value(graph, x)
    c = schedule.makespan
    if c > volume + chain + TIME_EPS * (1.0 + volume + chain):
        raise RuntimeError(
            f"list schedule makespan {c} exceeds volume+critical-path bound "
            f"{volume + chain}; this is a bug"
        )
    return schedule


def _critical_path_value(graph: TaskGraph, x: np.ndarray) -> float:
    finish = np.zeros(graph.n)
    for u in graph.topo_order:
        ready = max((finish[p] for p in graph.predecessors[u]), default=0.0)
        finish[u] = ready + x[u]
    return float(finish.max()) if graph.n else 0.0


def apx_sched(graph: TaskGraph) -> SchedSolveResult:
    """Relax-and-round scheduling for continuous speeds.

    Solves the relaxation (volume and completions capped at D/2), fixes the
    implied speeds, list-schedules, then lowers all speeds by makespan/D to
    use up the remaining deadline; the lowering clamps at s_min per task.
    Infeasibility of the relaxation signals that any solution would need
    speeds above s_max/2.
    """
    graph.ensure_valid()
    model = graph.speed_model
    if model.kind != CONTINUOUS:
        raise ValueError("apx_sched requires a continuous speed model")
    if graph.cores is None:
        # Unbounded cores: the pure speed problem already yields a schedule
        # with one task per core.
        res = _cvx_on(graph, model.s_min, model.s_max)
        if res.status is not SolveStatus.OPTIMAL:
            return SchedSolveResult(None, res.status)
        schedule = _dedicated_core_schedule(graph, res.assignment)
        return SchedSolveResult(
            schedule, SolveStatus.OPTIMAL, res.assignment.total_energy, ("unbounded_cores",)
        )
    return _relax_round_lower(graph, model.s_min, model.s_max, lower=True)


def _relax_round_lower(
    graph: TaskGraph, s_min: float, s_max: float, lower: bool
) -> SchedSolveResult:
    n = graph.n
    m = graph.cores
    w = graph.weights
    half = graph.deadline / 2.0
    fastest = np.where(w > 0, w / s_max, 0.0)
    vol_ok = float(fastest.sum()) / m <= half * (1.0 + TIME_EPS)
    cp_ok = _critical_path_value(graph, fastest) <= half * (1.0 + TIME_EPS)
    if not (vol_ok and cp_ok):
        return SchedSolveResult(None, SolveStatus.INFEASIBLE)
    program = build_time_program(
        graph, s_min=s_min, s_max=s_max, completion_cap=half, volume_cores=m
    )
    sol = solve_convex(program, tol=1e-9)
    if sol.status is not SolveStatus.OPTIMAL:
        return SchedSolveResult(None, sol.status)
    x = sol.x
    speeds = np.where(w > 0, w / np.maximum(x, 1e-300), s_max)
    speeds = np.clip(speeds, s_min, s_max)
    times = np.where(w > 0, w / speeds, 0.0)
    schedule = list_schedule(graph, times, m, priority=sol.d, speeds=speeds)
    relax_energy = float(np.sum(w * speeds ** (graph.speed_model.alpha - 1.0)))
    flags: list[str] = []
    if lower:
        schedule, clamped = _lower_speeds(graph, schedule, s_min)
        if clamped:
            flags.append("smin_clamped")
    return SchedSolveResult(schedule, SolveStatus.OPTIMAL, relax_energy, tuple(flags))


def _lower_speeds(graph: TaskGraph, schedule: Schedule, s_min: float) -> tuple[Schedule, bool]:
    """Stretch the schedule onto [0, D] by lowering speeds by makespan/D."""
    d = graph.deadline
    c = schedule.makespan
    if c <= 0 or c >= d * (1.0 - 1e-12):
        return schedule, False
    factor = c / d
    lowered = schedule.speeds * factor
    clamped = False
    active = schedule.weights > 0
    if np.any(lowered[active] < s_min):
        clamped = True
    lowered = np.where(active, np.maximum(lowered, s_min), schedule.speeds)
    stretched = Schedule(
        schedule.task_ids,
        schedule.cores.copy(),
        schedule.starts * (d / c),
        lowered,
        schedule.weights,
        schedule.alpha,
    )
    return stretched, clamped


def _dedicated_core_schedule(graph: TaskGraph, assignment: SpeedAssignment) -> Schedule:
    x = assignment.times
    starts = np.zeros(graph.n)
    for u in graph.topo_order:
        starts[u] = max(
            (starts[p] + x[p] for p in graph.predecessors[u]), default=0.0
        )
    return Schedule(
        assignment.task_ids,
        np.arange(graph.n),
        starts,
        assignment.speeds.copy(),
        assignment.weights,
        assignment.alpha,
    )


def continuous_lower_bound(graph: TaskGraph) -> tuple[float | None, SolveStatus]:
    """Optimum with only precedence and the deadline: a bound for any core count.

    Discrete instances are relaxed to the continuous interval [v_1, v_k].
    """
    assignment, status, _ = optimal_continuous_speeds(
        graph, s_min=graph.speed_model.s_min, s_max=graph.speed_model.s_max
    )
    if status is not SolveStatus.OPTIMAL or assignment is None:
        return None, status
    return assignment.total_energy, status


def validate_schedule(graph: TaskGraph, schedule: Schedule) -> list[Violation]:
    """Independent checks: overlap, precedence, deadline, speed eligibility."""
    out: list[Violation] = []
    n = graph.n
    if tuple(t.id for t in graph.tasks) != schedule.task_ids:
        return [Violation("TaskSetMismatch", "schedule does not cover the instance tasks")]
    model = graph.speed_model
    x = schedule.times
    comp = schedule.completions
    scale = 1.0 + graph.deadline

    for i, t in enumerate(graph.tasks):
        s = schedule.speeds[i]
        if t.weight > 0:
            if model.kind == DISCRETE:
                if not any(abs(s - v) <= 1e-9 * max(1.0, v) for v in model.levels):
                    out.append(Violation("IneligibleSpeed", f"task {t.id!r} at speed {s}"))
            else:
                if not (
                    model.s_min * (1.0 - 1e-9) <= s <= model.s_max * (1.0 + 1e-9)
                ):
                    out.append(Violation("IneligibleSpeed", f"task {t.id!r} at speed {s}"))
        if schedule.starts[i] < -TIME_EPS * scale:
            out.append(Violation("NegativeStart", f"task {t.id!r} starts at {schedule.starts[i]}"))
        if comp[i] > graph.deadline + TIME_EPS * scale:
            out.append(
                Violation("DeadlineExceeded", f"task {t.id!r} completes at {comp[i]}")
            )
        core = int(schedule.cores[i])
        if core < 0 or (graph.cores is not None and core >= graph.cores):
            out.append(Violation("BadCoreIndex", f"task {t.id!r} on core {core}"))

    for a, b in graph.edge_indices:
        if schedule.starts[b] < comp[a] - TIME_EPS * scale:
            out.append(
                Violation(
                    "PrecedenceViolated",
                    f"{graph.tasks[b].id!r} starts before {graph.tasks[a].id!r} completes",
                )
            )

    by_core: dict[int, list[int]] = {}
    for i in range(n):
        by_core.setdefault(int(schedule.cores[i]), []).append(i)
    for core, members in by_core.items():
        members.sort(key=lambda i: schedule.starts[i])
        for i, j in zip(members, members[1:]):
            if schedule.starts[j] < comp[i] - TIME_EPS * scale:
                out.append(
                    Violation(
                        "CoreOverlap",
                        f"tasks {graph.tasks[i].id!r} and {graph.tasks[j].id!r} overlap on core {core}",
                    )
                )
    return out
