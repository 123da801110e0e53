"""Discrete-ladder speed assignment under a fixed mapping.

Three routes: exact branch-and-bound over the ladder, the polynomial
round-up of the continuous optimum (feasible by construction, energy within
r^(alpha-1) of optimal), and an exhaustive oracle for small instances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .continuous import build_time_program, optimal_continuous_speeds
from .graph import DISCRETE, TaskGraph, completion_times, deadline_feasible
from .optim.bnb import BnBNode, BnBResult, solve_bnb
from .optim.convex import SolveStatus

# Relative tolerance when snapping a continuous speed onto a ladder level.
LEVEL_SNAP_REL_TOL = 1e-9
BRUTE_FORCE_GUARD = 10_000_000
_BRUTE_CHUNK = 200_000


class InstanceTooLarge(ValueError):
    """Enumeration guard tripped."""


@dataclass(frozen=True)
class LevelAssignment:
    """Per-task ladder level indices with the derived speeds and energies."""

    task_ids: tuple[str, ...]
    levels: np.ndarray
    ladder: tuple[float, ...]
    weights: np.ndarray
    alpha: float

    @property
    def speeds(self) -> np.ndarray:
        return np.asarray(self.ladder, dtype=float)[self.levels]

    @property
    def times(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.weights > 0, self.weights / self.speeds, 0.0)

    @property
    def energies(self) -> np.ndarray:
        return self.weights * self.speeds ** (self.alpha - 1.0)

    @property
    def total_energy(self) -> float:
        return float(self.energies.sum())

    def level_of(self, task_id: str) -> int:
        return int(self.levels[self.task_ids.index(task_id)])


@dataclass
class DiscreteSolveResult:
    assignment: LevelAssignment | None
    status: SolveStatus
    lower_bound: float = np.inf
    gap: float = np.inf
    nodes: int = 0
    flags: tuple[str, ...] = ()


def _level_feasibility(graph: TaskGraph, ladder: np.ndarray):
    w = graph.weights

    def is_feasible(levels: np.ndarray) -> bool:
        with np.errstate(divide="ignore"):
            x = np.where(w > 0, w / ladder[levels], 0.0)
        return deadline_feasible(graph, x)

    return is_feasible


def round_up_levels(speeds: np.ndarray, ladder: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Smallest ladder level at or above each speed (ties snap exactly)."""
    k = len(ladder)
    idx = np.searchsorted(ladder, speeds * (1.0 - LEVEL_SNAP_REL_TOL), side="left")
    idx = np.clip(idx, 0, k - 1)
    idx[weights == 0] = k - 1
    return idx.astype(int)


def _assignment(graph: TaskGraph, levels: np.ndarray) -> LevelAssignment:
    return LevelAssignment(
        tuple(t.id for t in graph.tasks),
        np.asarray(levels, dtype=int),
        graph.speed_model.levels,
        graph.weights.copy(),
        graph.speed_model.alpha,
    )


def _require_discrete(graph: TaskGraph) -> None:
    graph.ensure_valid()
    if graph.speed_model.kind != DISCRETE:
        raise ValueError("a discrete speed ladder is required")


def greedy_lower(
    graph: TaskGraph,
    levels: np.ndarray,
    max_passes: int = 3,
    time_limit: float | None = None,
) -> np.ndarray:
    """Lower single tasks one level at a time while the deadline still holds."""
    import time as _time

    t0 = _time.perf_counter()
    lv = np.asarray(graph.speed_model.levels, dtype=float)
    w = graph.weights
    alpha = graph.speed_model.alpha
    is_feasible = _level_feasibility(graph, lv)
    out = np.asarray(levels, dtype=int).copy()
    for _ in range(max_passes):
        improved = False
        savings = np.where(
            (out > 0) & (w > 0),
            w * (lv[out] ** (alpha - 1.0) - lv[np.maximum(out - 1, 0)] ** (alpha - 1.0)),
            0.0,
        )
        for count, j in enumerate(np.argsort(-savings)):
            if savings[j] <= 0:
                break
            if time_limit is not None and count % 32 == 0 and (
                _time.perf_counter() - t0 > time_limit
            ):
                return out
            out[j] -= 1
            if is_feasible(out):
                improved = True
            else:
                out[j] += 1
        if not improved:
            break
    return out


def ilp_d_speed(graph: TaskGraph, budget: float = 5.0, rel_tol: float = 1e-9) -> DiscreteSolveResult:
    """Exact minimum-energy level assignment (branch-and-bound).

    Within the budget the result is proven optimal to ``rel_tol``; on
    TIME_LIMIT the best incumbent and the proven global lower bound are
    returned.
    """
    import time as _time

    t0 = _time.perf_counter()
    _require_discrete(graph)
    model = graph.speed_model
    lv = np.asarray(model.levels, dtype=float)
    w = graph.weights
    n = graph.n
    if n == 0:
        return DiscreteSolveResult(_assignment(graph, np.zeros(0, dtype=int)), SolveStatus.OPTIMAL, 0.0, 0.0)
    is_feasible = _level_feasibility(graph, lv)
    if not is_feasible(np.full(n, len(lv) - 1)):
        return DiscreteSolveResult(None, SolveStatus.INFEASIBLE)

    def build(node: BnBNode):
        x_lo = np.where(w > 0, w / lv[node.hi_level], 0.0)
        x_hi = np.where(w > 0, w / lv[node.lo_level], 0.0)
        return build_time_program(graph, x_lo=x_lo, x_hi=x_hi)

    def round_heuristic(x_star, lo_lv, hi_lv):
        with np.errstate(divide="ignore"):
            s_bar = np.where(w > 0, w / np.maximum(x_star, 1e-300), lv[-1])
        return round_up_levels(np.minimum(s_bar, lv[-1]), lv, w)

    # Seed the search with the polynomial rounding, polished greedily; both
    # stages charge against the same budget as the search itself.
    seed = None
    apx = apx_d_speed(graph)
    if apx.status is SolveStatus.OPTIMAL and apx.assignment is not None:
        polish_limit = max(0.1, 0.3 * budget - (_time.perf_counter() - t0))
        seed = greedy_lower(graph, apx.assignment.levels, time_limit=polish_limit)

    res: BnBResult = solve_bnb(
        build,
        lv,
        is_feasible=is_feasible,
        weights=w,
        alpha=model.alpha,
        time_budget=max(0.1, budget - (_time.perf_counter() - t0)),
        round_heuristic=round_heuristic,
        rel_tol=rel_tol,
        initial_incumbent=seed,
    )
    if res.levels is None:
        return DiscreteSolveResult(None, res.status, res.lower_bound, res.gap, res.nodes)
    return DiscreteSolveResult(
        _assignment(graph, res.levels), res.status, res.lower_bound, res.gap, res.nodes
    )


def apx_d_speed(graph: TaskGraph) -> DiscreteSolveResult:
    """Round the continuous optimum up to the ladder.

    The continuous stage is the series-parallel recursion with a convex
    fallback, bounded to [v_1, v_k]; rounding up never lengthens a task, so
    the deadline still holds and the energy is within r^(alpha-1) of the
    discrete optimum.
    """
    _require_discrete(graph)
    model = graph.speed_model
    lv = np.asarray(model.levels, dtype=float)
    assignment, status, flags = optimal_continuous_speeds(
        graph, s_min=model.levels[0], s_max=model.levels[-1]
    )
    if status is not SolveStatus.OPTIMAL or assignment is None:
        return DiscreteSolveResult(None, status, flags=tuple(flags))
    speeds = np.minimum(assignment.speeds, lv[-1] * (1.0 + LEVEL_SNAP_REL_TOL))
    levels = round_up_levels(speeds, lv, graph.weights)
    out = _assignment(graph, levels)
    return DiscreteSolveResult(out, SolveStatus.OPTIMAL, flags=tuple(flags))


def brute_force_discrete(graph: TaskGraph) -> DiscreteSolveResult:
    """Exhaustive oracle: enumerate every level vector, keep the cheapest.

    Ties break toward the lexicographically smallest vector.  Guarded to
    k^n <= 10^7 assignments.
    """
    _require_discrete(graph)
    model = graph.speed_model
    lv = np.asarray(model.levels, dtype=float)
    k = len(lv)
    n = graph.n
    if n == 0:
        return DiscreteSolveResult(_assignment(graph, np.zeros(0, dtype=int)), SolveStatus.OPTIMAL, 0.0, 0.0)
    total = k**n
    if total > BRUTE_FORCE_GUARD:
        raise InstanceTooLarge(f"{k}^{n} = {total} assignments exceed the enumeration guard")

    w = graph.weights
    alpha = model.alpha
    deadline = graph.deadline * (1.0 + 1e-9)
    topo = graph.topo_order
    preds = graph.predecessors
    energies_by_level = w[None, :] * lv[:, None] ** (alpha - 1.0)  # (k, n)

    best_energy = np.inf
    best_assign: np.ndarray | None = None
    powers = k ** np.arange(n - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, _BRUTE_CHUNK):
        stop = min(start + _BRUTE_CHUNK, total)
        ids = np.arange(start, stop, dtype=np.int64)
        assign = (ids[:, None] // powers[None, :]) % k  # lexicographic order
        with np.errstate(divide="ignore"):
            x = np.where(w[None, :] > 0, w[None, :] / lv[assign], 0.0)
        finish = np.zeros_like(x)
        for u in topo:
            ready = np.zeros(len(ids))
            for p in preds[u]:
                np.maximum(ready, finish[:, p], out=ready)
            finish[:, u] = ready + x[:, u]
        feasible = finish.max(axis=1) <= deadline
        if not feasible.any():
            continue
        energy = energies_by_level[assign, np.arange(n)[None, :]].sum(axis=1)
        energy[~feasible] = np.inf
        pos = int(np.argmin(energy))
        if energy[pos] < best_energy:
            best_energy = float(energy[pos])
            best_assign = assign[pos].astype(int)
    if best_assign is None:
        return DiscreteSolveResult(None, SolveStatus.INFEASIBLE)
    return DiscreteSolveResult(
        _assignment(graph, best_assign), SolveStatus.OPTIMAL, best_energy, 0.0
    )
