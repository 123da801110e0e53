"""Branch-and-bound over discrete speed ladders.

Nodes restrict each task to a contiguous ladder interval; the bound is the
continuous relaxation of the node, tightened to the lower convex hull of
the ladder points (exactly the linear relaxation of the underlying integer
program, solved with the same barrier core and certified dually).  Search
is best-first; the round-up child of a split is explored first because it
always stays feasible.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .convex import (
    PIN_WIDTH,
    ConvexProgram,
    SolveStatus,
    X_FLOOR,
    _barrier_minimize,
    _certified_bound,
    _fitted_dual_bound,
    _Objective,
    _phase1,
)

REL_GAP = 1e-9
_MAX_NODES = 1_000_000


@dataclass
class BnBNode:
    """Per-task admissible ladder interval [lo_level, hi_level], inclusive."""

    lo_level: np.ndarray
    hi_level: np.ndarray
    parent_bound: float
    depth: int

    def pinned(self) -> np.ndarray:
        return self.lo_level == self.hi_level


@dataclass
class BnBResult:
    status: SolveStatus
    levels: np.ndarray | None
    energy: float
    lower_bound: float
    gap: float
    nodes: int


@dataclass
class _HullSolution:
    ok: bool
    x: np.ndarray | None
    objective: float
    bound: float


def _solve_hull(
    program: ConvexProgram,
    levels: np.ndarray,
    lo_lv: np.ndarray,
    hi_lv: np.ndarray,
    tol: float,
) -> _HullSolution:
    """Linear relaxation of the node over the ladder-point lower hull.

    This is the LP relaxation of the integer program restricted to the
    node's ladder intervals (epigraph form over the chords between
    consecutive ladder points).  The LP itself is delegated to linprog;
    its multipliers are passed through the exact dual certifier, so the
    returned bound never depends on the LP solver's internal tolerances.
    """
    from scipy.optimize import linprog

    n = program.n
    w = program.weights
    alpha = program.alpha
    lo = np.maximum(np.asarray(program.x_lo, dtype=float), 0.0)
    hi = np.asarray(program.x_hi, dtype=float)

    pinned = (hi - lo) <= PIN_WIDTH * np.maximum(1.0, np.abs(hi))
    pin_val = 0.5 * (lo + hi)
    lo = np.maximum(lo, X_FLOOR)
    hi = np.maximum(hi, lo)
    free = np.where(~pinned)[0]
    nf = len(free)

    const = 0.0
    for j in np.where(pinned & (w > 0))[0]:
        const += w[j] ** alpha * pin_val[j] ** (1.0 - alpha)

    # Hull epigraph variables for free tasks with real energy terms.
    hull_tasks = [int(j) for j in free if w[j] > 0]
    nvar = nf + n + len(hull_tasks)
    pos_of_free = {int(j): k for k, j in enumerate(free)}
    pos_of_hull = {j: nf + n + k for k, j in enumerate(hull_tasks)}

    a_full = program.a_rows.tocsc()
    pin_full = np.zeros(2 * n)
    pin_full[:n] = np.where(pinned, pin_val, 0.0)
    rhs = program.rhs - a_full @ pin_full
    keep = np.concatenate([free, np.arange(n, 2 * n)])
    a_struct = a_full[:, keep].tocsr()
    if nvar > a_struct.shape[1]:
        pad = sp.csr_matrix((a_struct.shape[0], nvar - a_struct.shape[1]))
        a_struct = sp.hstack([a_struct, pad], format="csr")

    # Unit time and unit energy normalization, value-preserving overall.
    t_scale = float(max(np.abs(rhs).max(initial=0.0), hi[free].max(initial=0.0), 0.0))
    if not np.isfinite(t_scale) or t_scale <= 0.0:
        t_scale = 1.0
    rhs = rhs / t_scale
    lo = np.maximum(lo / t_scale, X_FLOOR)
    hi = np.maximum(hi / t_scale, lo)
    e_scale = 0.0
    for j in hull_tasks:
        e_scale = max(e_scale, w[j] * levels[int(hi_lv[j])] ** (alpha - 1.0))
    if e_scale <= 0.0:
        e_scale = 1.0

    rows_i, rows_j, rows_v, rows_b = [], [], [], []
    rcount = 0

    def add_row(cols: dict[int, float], b: float) -> None:
        nonlocal rcount
        for c, v in cols.items():
            rows_i.append(rcount)
            rows_j.append(c)
            rows_v.append(v)
        rows_b.append(b)
        rcount += 1

    for j in hull_tasks:
        xs = w[j] / levels[int(lo_lv[j]) : int(hi_lv[j]) + 1][::-1] / t_scale  # ascending x
        es = (
            w[j] * levels[int(lo_lv[j]) : int(hi_lv[j]) + 1][::-1] ** (alpha - 1.0)
        ) / e_scale
        xk, tk = pos_of_free[j], pos_of_hull[j]
        for (x1, e1), (x2, e2) in zip(zip(xs, es), zip(xs[1:], es[1:])):
            if x2 - x1 <= 1e-300:
                continue
            slope = (e2 - e1) / (x2 - x1)
            intercept = e1 - slope * x1
            add_row({xk: slope, tk: -1.0}, -intercept)

    a_extra = sp.csr_matrix((rows_v, (rows_i, rows_j)), shape=(rcount, nvar))
    a_all = sp.vstack([a_struct, a_extra], format="csr")
    b_all = np.concatenate([rhs, np.array(rows_b)])

    lin = np.zeros(nvar)
    for j in hull_tasks:
        lin[pos_of_hull[j]] = 1.0
    obj = _Objective.linear(nvar, lin)

    bounds = (
        [(lo[j], hi[j]) for j in free]
        + [(0.0, None)] * n
        + [(0.0, None)] * len(hull_tasks)
    )
    res = linprog(lin, A_ub=a_all, b_ub=b_all, bounds=bounds, method="highs")
    if res.status == 2:
        return _HullSolution(False, None, np.inf, np.inf)
    if res.status != 0 or res.x is None:
        return _HullSolution(False, None, np.inf, np.inf)

    z = np.asarray(res.x, dtype=float)
    x = pin_val.copy()
    x[free] = z[:nf] * t_scale
    fval = float(lin @ z) * e_scale + const

    domains = {k: (lo[j], hi[j]) for k, j in enumerate(free)}
    lam = None
    try:
        lam = np.maximum(-np.asarray(res.ineqlin.marginals, dtype=float), 0.0)
    except AttributeError:
        lam = None
    cert = None
    if lam is not None and len(lam) == a_all.shape[0]:
        cert = _certified_bound(obj, a_all, b_all, lam, domains, {})
    if cert is None or cert < float(lin @ z) - 1e-6 * (1.0 + abs(float(lin @ z))):
        # Marginals unusable; refit multipliers from the primal point.
        slacks = b_all - a_all @ z
        refit = _fitted_dual_bound(
            obj, a_all, b_all, z, np.maximum(slacks, 0.0), domains, {}
        )
        if refit is not None and (cert is None or refit > cert):
            cert = refit
    if cert is None:
        # No certificate: fall back to a slightly deflated LP value; the
        # search remains correct because exact leaf checks gate pruning.
        cert = float(lin @ z) - 1e-6 * (1.0 + abs(float(lin @ z)))
    bound = cert * e_scale + const
    return _HullSolution(True, x, fval, min(bound, fval))


def _branch_levels(
    s_bar: float, levels: np.ndarray, lo: int, hi: int
) -> int:
    """Largest level index in [lo, hi-1] whose speed is <= the relaxed speed."""
    split = int(np.searchsorted(levels, s_bar * (1.0 + 1e-12), side="right")) - 1
    return min(max(split, lo), hi - 1)


def solve_bnb(
    build_relaxation: Callable[[BnBNode], ConvexProgram],
    levels: Sequence[float],
    *,
    is_feasible: Callable[[np.ndarray], bool],
    weights: np.ndarray,
    alpha: float,
    time_budget: float = 5.0,
    incumbent_callback: Callable[[np.ndarray, float], None] | None = None,
    round_heuristic: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray | None] | None = None,
    rel_tol: float = REL_GAP,
    node_trace: Callable[[BnBNode, float], None] | None = None,
    initial_incumbent: np.ndarray | None = None,
) -> BnBResult:
    """Exact search for a minimum-energy ladder assignment.

    ``is_feasible`` must decide feasibility of a complete level vector
    exactly (it is the ground truth the search is measured against);
    ``round_heuristic(x_star, lo_lv, hi_lv)`` may propose incumbents.
    """
    lv = np.asarray(levels, dtype=float)
    k = len(lv)
    if k == 0:
        raise ValueError("empty speed ladder")
    w = np.asarray(weights, dtype=float)
    n = len(w)
    t0 = time.perf_counter()

    def energy_of(assign: np.ndarray) -> float:
        return float(np.sum(w * lv[assign] ** (alpha - 1.0)))

    if n == 0:
        return BnBResult(SolveStatus.OPTIMAL, np.zeros(0, dtype=int), 0.0, 0.0, 0.0, 0)

    root_lo = np.zeros(n, dtype=int)
    root_hi = np.full(n, k - 1, dtype=int)
    # Zero-weight tasks run at the top level by convention.
    root_lo[w == 0] = k - 1
    if not is_feasible(root_hi):
        return BnBResult(SolveStatus.INFEASIBLE, None, np.inf, np.inf, np.inf, 0)

    incumbent: np.ndarray | None = None
    inc_energy = np.inf

    def offer(assign: np.ndarray | None) -> None:
        nonlocal incumbent, inc_energy
        if assign is None:
            return
        assign = np.asarray(assign, dtype=int)
        if not is_feasible(assign):
            return
        e = energy_of(assign)
        if e < inc_energy:
            incumbent, inc_energy = assign.copy(), e
            if incumbent_callback is not None:
                incumbent_callback(incumbent, inc_energy)

    heap: list[tuple[float, int, BnBNode, np.ndarray | None]] = []
    seq = 0
    nodes = 0
    offer(initial_incumbent)

    def margin() -> float:
        return rel_tol * abs(inc_energy) + 1e-15 if np.isfinite(inc_energy) else np.inf

    def evaluate(node: BnBNode) -> None:
        """Bound + heuristics; pushes the node unless closed."""
        nonlocal seq, nodes
        nodes += 1
        if node.pinned().all():
            offer(node.lo_level)
            if node_trace is not None:
                node_trace(node, energy_of(node.lo_level))
            return
        program = build_relaxation(node)
        sol = _solve_hull(program, lv, node.lo_level, node.hi_level, tol=1e-9)
        if not sol.ok:
            # Hull relaxation judged the node infeasible; trust the exact
            # check instead (boundary cases have empty interior).
            if is_feasible(node.hi_level):
                bound = node.parent_bound
                xs = None
            else:
                return
        else:
            bound = max(sol.bound, node.parent_bound)
            xs = sol.x
        if node_trace is not None:
            node_trace(node, bound)
        if round_heuristic is not None and xs is not None:
            offer(round_heuristic(xs, node.lo_level, node.hi_level))
        if np.isfinite(inc_energy) and bound >= inc_energy - margin():
            return
        heapq.heappush(heap, (bound, seq, node, xs))
        seq += 1

    root = BnBNode(root_lo, root_hi, -np.inf, 0)
    evaluate(root)

    status = SolveStatus.OPTIMAL
    global_lb = inc_energy
    while heap:
        if time.perf_counter() - t0 > time_budget or nodes > _MAX_NODES:
            status = SolveStatus.TIME_LIMIT
            global_lb = heap[0][0]
            break
        bound, _, node, xs = heapq.heappop(heap)
        if np.isfinite(inc_energy) and bound >= inc_energy - margin():
            global_lb = inc_energy
            break
        free = np.where(~node.pinned())[0]
        if xs is None:
            j = int(free[0])
            split = (int(node.lo_level[j]) + int(node.hi_level[j])) // 2
        else:
            s_bar = np.where(xs[free] > 0, w[free] / np.maximum(xs[free], 1e-300), lv[-1])
            lo_i = node.lo_level[free]
            hi_i = node.hi_level[free]
            splits = np.array(
                [_branch_levels(s, lv, int(a), int(b)) for s, a, b in zip(s_bar, lo_i, hi_i)]
            )
            # Cost difference between rounding the relaxed speed down vs up;
            # zero when the relaxed speed already sits on a ladder level.
            ceil_idx = np.clip(
                np.searchsorted(lv, s_bar * (1.0 - 1e-12), side="left"), lo_i, hi_i
            )
            down = np.maximum(splits, lo_i)
            score = w[free] * (lv[ceil_idx] ** (alpha - 1.0) - lv[down] ** (alpha - 1.0))
            pick = int(np.argmax(score))
            j = int(free[pick])
            split = int(splits[pick])
        # Round-up child first: it keeps the fastest speeds available.
        hi_child = BnBNode(node.lo_level.copy(), node.hi_level.copy(), bound, node.depth + 1)
        hi_child.lo_level[j] = split + 1
        lo_child = BnBNode(node.lo_level.copy(), node.hi_level.copy(), bound, node.depth + 1)
        lo_child.hi_level[j] = split
        for child in (hi_child, lo_child):
            if is_feasible(child.hi_level):
                evaluate(child)
    else:
        global_lb = inc_energy if incumbent is not None else np.inf

    if incumbent is None:
        if status is SolveStatus.TIME_LIMIT:
            return BnBResult(status, None, np.inf, global_lb, np.inf, nodes)
        return BnBResult(SolveStatus.INFEASIBLE, None, np.inf, np.inf, np.inf, nodes)
    gap = 0.0
    if status is SolveStatus.TIME_LIMIT and inc_energy > 0:
        gap = max(0.0, (inc_energy - global_lb) / inc_energy)
    return BnBResult(status, incumbent, inc_energy, min(global_lb, inc_energy), gap, nodes)
