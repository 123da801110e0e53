"""Task graph data model: weighted DAG, deadline, speed model, core mapping.

All structures are immutable after construction; structural queries are
cached on first use, so instances are safe to share across threads.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

# Relative slack allowed when comparing path lengths against the deadline.
# Shared by every feasibility check (brute force, B&B, validators) so that
# boundary instances are classified consistently everywhere.
DEADLINE_REL_TOL = 1e-9

CONTINUOUS = "continuous"
DISCRETE = "discrete"


class GraphStructureError(ValueError):
    """Raised when an operation requires an acyclic graph and finds a cycle."""


class InfeasibleOrderError(ValueError):
    """Raised when per-core sequences contradict the precedence relation."""


class InvalidInstanceError(ValueError):
    """Raised when an algorithm receives a graph that fails validation."""

    def __init__(self, violations: list["Violation"]):
        self.violations = violations
        super().__init__("; ".join(f"{v.code}: {v.detail}" for v in violations))


@dataclass(frozen=True)
class Violation:
    """One invariant violation, with a machine-readable code."""

    code: str
    detail: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.detail}"


@dataclass(frozen=True)
class Task:
    id: str
    weight: float
    mapped_core: int | None = None


@dataclass(frozen=True)
class SpeedModel:
    """Eligible core speeds: a continuous interval or a discrete ladder.

    For the discrete kind, ``levels`` is strictly increasing and
    ``s_min``/``s_max`` coincide with its endpoints.  ``alpha`` is the
    power-law exponent: a core at speed s draws power s**alpha.
    """

    kind: str
    s_min: float
    s_max: float
    alpha: float = 3.0
    levels: tuple[float, ...] = ()

    @staticmethod
    def continuous(s_min: float, s_max: float, alpha: float = 3.0) -> "SpeedModel":
        return SpeedModel(CONTINUOUS, float(s_min), float(s_max), float(alpha))

    @staticmethod
    def discrete(levels: Sequence[float], alpha: float = 3.0) -> "SpeedModel":
        lv = tuple(float(v) for v in levels)
        if not lv:
            raise ValueError("discrete speed model needs at least one level")
        return SpeedModel(DISCRETE, lv[0], lv[-1], float(alpha), lv)

    @property
    def max_ratio(self) -> float:
        """Largest ratio between adjacent ladder speeds (1.0 when k <= 1)."""
        if self.kind != DISCRETE or len(self.levels) < 2:
            return 1.0
        lv = self.levels
        return max(lv[i + 1] / lv[i] for i in range(len(lv) - 1))

    def continuous_relaxation(self) -> "SpeedModel":
        """Continuous model spanning the same speed range."""
        return SpeedModel(CONTINUOUS, self.s_min, self.s_max, self.alpha)

    def violations(self) -> list[Violation]:
        out = []
        if self.kind not in (CONTINUOUS, DISCRETE):
            out.append(Violation("BadSpeedModel", f"unknown kind {self.kind!r}"))
            return out
        if not self.s_min > 0:
            out.append(Violation("NonPositiveSpeed", f"s_min={self.s_min} must be > 0"))
        if self.s_max < self.s_min:
            out.append(Violation("BadSpeedModel", f"s_max={self.s_max} < s_min={self.s_min}"))
        if self.alpha < 1.0:
            out.append(Violation("BadSpeedModel", f"alpha={self.alpha} must be >= 1"))
        if self.kind == DISCRETE:
            if not self.levels:
                out.append(Violation("BadSpeedLadder", "discrete model with no levels"))
            else:
                if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
                    out.append(Violation("BadSpeedLadder", "levels must be strictly increasing"))
                if self.levels[0] != self.s_min or self.levels[-1] != self.s_max:
                    out.append(Violation("BadSpeedLadder", "s_min/s_max must match ladder endpoints"))
        return out


@dataclass(frozen=True)
class TaskGraph:
    """Node-weighted DAG with a global deadline and a speed model.

    ``cores`` is the number of identical cores, or None for an unbounded
    machine.  An instance where every task carries ``mapped_core`` (with the
    per-core order already encoded as edges) is a mapping instance; one where
    no task does is a speeds-and-scheduling instance.  Mixed instances are
    rejected by :func:`validate`.
    """

    tasks: tuple[Task, ...]
    edges: tuple[tuple[str, str], ...]
    deadline: float
    speed_model: SpeedModel
    cores: int | None = None

    # ---- derived structure (cached, treats the graph as immutable) ----

    @property
    def n(self) -> int:
        return len(self.tasks)

    @cached_property
    def index(self) -> dict[str, int]:
        return {t.id: i for i, t in enumerate(self.tasks)}

    @cached_property
    def weights(self) -> np.ndarray:
        return np.array([t.weight for t in self.tasks], dtype=float)

    @cached_property
    def edge_indices(self) -> tuple[tuple[int, int], ...]:
        idx = self.index
        return tuple((idx[a], idx[b]) for a, b in self.edges if a in idx and b in idx)

    @cached_property
    def successors(self) -> tuple[tuple[int, ...], ...]:
        succ: list[list[int]] = [[] for _ in range(self.n)]
        seen = set()
        for a, b in self.edge_indices:
            if (a, b) not in seen:
                seen.add((a, b))
                succ[a].append(b)
        return tuple(tuple(s) for s in succ)

    @cached_property
    def predecessors(self) -> tuple[tuple[int, ...], ...]:
        pred: list[list[int]] = [[] for _ in range(self.n)]
        for a, succs in enumerate(self.successors):
            for b in succs:
                pred[b].append(a)
        return tuple(tuple(p) for p in pred)

    @cached_property
    def topo_order(self) -> tuple[int, ...]:
        """Topological order by Kahn's algorithm; raises on cycles."""
        indeg = [len(p) for p in self.predecessors]
        ready = deque(i for i in range(self.n) if indeg[i] == 0)
        order = []
        while ready:
            u = ready.popleft()
            order.append(u)
            for v in self.successors[u]:
                indeg[v] -= 1
                if indeg[v] == 0:
                    ready.append(v)
        if len(order) != self.n:
            raise GraphStructureError("precedence graph contains a cycle")
        return tuple(order)

    @property
    def is_mapping_instance(self) -> bool:
        return self.n > 0 and all(t.mapped_core is not None for t in self.tasks)

    def task_by_id(self, task_id: str) -> Task:
        return self.tasks[self.index[task_id]]

    def with_cores(self, cores: int | None) -> "TaskGraph":
        return replace(self, cores=cores)

    def ensure_valid(self) -> None:
        vs = validate(self)
        if vs:
            raise InvalidInstanceError(vs)


def validate(graph: TaskGraph) -> list[Violation]:
    """Collect every invariant violation; an empty list means well formed."""
    out: list[Violation] = []
    seen_ids: set[str] = set()
    for t in graph.tasks:
        if t.id in seen_ids:
            out.append(Violation("DuplicateTask", f"task id {t.id!r} appears more than once"))
        seen_ids.add(t.id)
        if not (t.weight >= 0):
            out.append(Violation("NegativeWeight", f"task {t.id!r} has weight {t.weight}"))
        if t.mapped_core is not None:
            if t.mapped_core < 0 or (graph.cores is not None and t.mapped_core >= graph.cores):
                out.append(
                    Violation("CoreIndexOutOfRange", f"task {t.id!r} mapped to core {t.mapped_core}")
                )
    for a, b in graph.edges:
        if a not in graph.index or b not in graph.index:
            out.append(Violation("DanglingEdge", f"edge ({a!r}, {b!r}) references unknown task"))
    if not (graph.deadline > 0):
        out.append(Violation("NonPositiveDeadline", f"deadline={graph.deadline}"))
    out.extend(graph.speed_model.violations())
    if graph.cores is not None and graph.cores < 1:
        out.append(Violation("BadCoreCount", f"cores={graph.cores}"))
    mapped = sum(1 for t in graph.tasks if t.mapped_core is not None)
    if 0 < mapped < graph.n:
        out.append(Violation("MixedMapping", f"{mapped} of {graph.n} tasks carry a core mapping"))
    try:
        graph.topo_order
    except GraphStructureError:
        out.append(Violation("CycleDetected", "precedence graph contains a cycle"))
    return out


def critical_path_time(graph: TaskGraph, times: Sequence[float] | Mapping[str, float]) -> float:
    """Longest path weight under per-task execution times, one topological pass."""
    x = _times_array(graph, times)
    if graph.n == 0:
        return 0.0
    finish = np.zeros(graph.n)
    preds = graph.predecessors
    for u in graph.topo_order:
        ready = max((finish[p] for p in preds[u]), default=0.0)
        finish[u] = ready + x[u]
    return float(finish.max())


def completion_times(graph: TaskGraph, times: Sequence[float] | Mapping[str, float]) -> np.ndarray:
    """Earliest-completion vector under the given execution times."""
    x = _times_array(graph, times)
    finish = np.zeros(graph.n)
    preds = graph.predecessors
    for u in graph.topo_order:
        ready = max((finish[p] for p in preds[u]), default=0.0)
        finish[u] = ready + x[u]
    return finish


def deadline_feasible(graph: TaskGraph, times: Sequence[float] | Mapping[str, float]) -> bool:
    """Whether the critical path meets the deadline, up to DEADLINE_REL_TOL."""
    return critical_path_time(graph, times) <= graph.deadline * (1.0 + DEADLINE_REL_TOL)


def _times_array(graph: TaskGraph, times: Sequence[float] | Mapping[str, float]) -> np.ndarray:
    if isinstance(times, Mapping):
        x = np.array([times[t.id] for t in graph.tasks], dtype=float)
    else:
        x = np.asarray(times, dtype=float)
        if x.shape != (graph.n,):
            raise ValueError(f"expected {graph.n} execution times, got shape {x.shape}")
    if graph.n and x.min() < 0:
        raise ValueError("execution times must be nonnegative")
    return x


def augment_with_mapping_order(
    graph: TaskGraph, core_order: Mapping[int, Sequence[str]]
) -> TaskGraph:
    """Encode per-core execution sequences as extra chain edges.

    Every task must appear in exactly one sequence.  The returned graph has
    each task's ``mapped_core`` set and one edge between consecutive tasks of
    each sequence; if the result would be cyclic the order contradicts the
    precedence relation and InfeasibleOrderError is raised.
    """
    seen: dict[str, int] = {}
    for core, seq in core_order.items():
        for tid in seq:
            if tid not in graph.index:
                raise InfeasibleOrderError(f"unknown task {tid!r} in order for core {core}")
            if tid in seen:
                raise InfeasibleOrderError(f"task {tid!r} listed on cores {seen[tid]} and {core}")
            seen[tid] = core
    missing = [t.id for t in graph.tasks if t.id not in seen]
    if missing:
        raise InfeasibleOrderError(f"tasks missing from the core order: {missing}")

    new_tasks = tuple(replace(t, mapped_core=seen[t.id]) for t in graph.tasks)
    edge_set = set(graph.edges)
    new_edges = list(graph.edges)
    for seq in core_order.values():
        for a, b in zip(seq, seq[1:]):
            if (a, b) not in edge_set:
                edge_set.add((a, b))
                new_edges.append((a, b))
    out = replace(graph, tasks=new_tasks, edges=tuple(new_edges))
    try:
        out.topo_order
    except GraphStructureError as exc:
        raise InfeasibleOrderError("core order induces a precedence cycle") from exc
    return out


def reachability_masks(graph: TaskGraph) -> list[int]:
    """Per-node bitmask of strictly reachable nodes (transitive closure)."""
    reach = [0] * graph.n
    for u in reversed(graph.topo_order):
        acc = 0
        for v in graph.successors[u]:
            acc |= (1 << v) | reach[v]
        reach[u] = acc
    return reach


def transitive_reduction(graph: TaskGraph) -> list[tuple[int, int]]:
    """Minimal edge set with the same transitive closure, as index pairs."""
    reach = reachability_masks(graph)
    reduced: list[tuple[int, int]] = []
    for u in range(graph.n):
        succs = list(dict.fromkeys(graph.successors[u]))
        if not succs:
            continue
        full = [(1 << v) | reach[v] for v in succs]
        prefix = [0] * (len(succs) + 1)
        for i, m in enumerate(full):
            prefix[i + 1] = prefix[i] | m
        suffix = [0] * (len(succs) + 1)
        for i in range(len(succs) - 1, -1, -1):
            suffix[i] = suffix[i + 1] | full[i]
        for i, v in enumerate(succs):
            others = prefix[i] | suffix[i + 1]
            if not (others >> v) & 1:
                reduced.append((u, v))
    return reduced
