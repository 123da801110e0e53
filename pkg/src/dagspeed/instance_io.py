"""Instance and solution file formats (JSON, strict parsing).

Unknown fields are rejected everywhere so that typos in benchmark configs
surface as errors instead of silently changing the experiment.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .graph import SpeedModel, Task, TaskGraph, augment_with_mapping_order

_TOP_KEYS = {"alpha", "deadline", "cores", "speeds", "tasks", "edges", "core_order"}
_TASK_KEYS = {"id", "weight", "core"}


class InstanceFormatError(ValueError):
    """Malformed instance or solution file."""


def _reject_unknown(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise InstanceFormatError(f"unknown field(s) {sorted(unknown)} in {where}")


def _require(obj: dict, key: str, where: str) -> Any:
    if key not in obj:
        raise InstanceFormatError(f"missing field {key!r} in {where}")
    return obj[key]


def _as_number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InstanceFormatError(f"{where} must be a number, got {value!r}")
    return float(value)


def loads_instance(text: str) -> TaskGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InstanceFormatError("instance document must be a JSON object")
    _reject_unknown(doc, _TOP_KEYS, "instance")

    alpha = _as_number(_require(doc, "alpha", "instance"), "alpha")
    deadline = _as_number(_require(doc, "deadline", "instance"), "deadline")
    cores = doc.get("cores")
    if cores is not None:
        if isinstance(cores, bool) or not isinstance(cores, int):
            raise InstanceFormatError("cores must be an integer")

    speeds = _require(doc, "speeds", "instance")
    if not isinstance(speeds, dict):
        raise InstanceFormatError("speeds must be an object")
    kind = _require(speeds, "kind", "speeds")
    if kind == "continuous":
        _reject_unknown(speeds, {"kind", "min", "max"}, "speeds")
        model = SpeedModel.continuous(
            _as_number(_require(speeds, "min", "speeds"), "speeds.min"),
            _as_number(_require(speeds, "max", "speeds"), "speeds.max"),
            alpha,
        )
    elif kind == "discrete":
        _reject_unknown(speeds, {"kind", "levels"}, "speeds")
        levels = _require(speeds, "levels", "speeds")
        if not isinstance(levels, list) or not levels:
            raise InstanceFormatError("speeds.levels must be a nonempty array")
        model = SpeedModel.discrete([_as_number(v, "speed level") for v in levels], alpha)
    else:
        raise InstanceFormatError(f"speeds.kind must be continuous or discrete, got {kind!r}")

    raw_tasks = _require(doc, "tasks", "instance")
    if not isinstance(raw_tasks, list):
        raise InstanceFormatError("tasks must be an array")
    tasks = []
    for entry in raw_tasks:
        if not isinstance(entry, dict):
            raise InstanceFormatError("each task must be an object")
        _reject_unknown(entry, _TASK_KEYS, "task")
        tid = _require(entry, "id", "task")
        if not isinstance(tid, str):
            raise InstanceFormatError(f"task id must be a string, got {tid!r}")
        weight = _as_number(_require(entry, "weight", "task"), f"weight of {tid!r}")
        core = entry.get("core")
        if core is not None and (isinstance(core, bool) or not isinstance(core, int)):
            raise InstanceFormatError(f"core of task {tid!r} must be an integer")
        tasks.append(Task(tid, weight, core))

    raw_edges = _require(doc, "edges", "instance")
    if not isinstance(raw_edges, list):
        raise InstanceFormatError("edges must be an array")
    edges = []
    for pair in raw_edges:
        if not (isinstance(pair, list) and len(pair) == 2 and all(isinstance(p, str) for p in pair)):
            raise InstanceFormatError(f"each edge must be a [from, to] pair of ids, got {pair!r}")
        edges.append((pair[0], pair[1]))

    graph = TaskGraph(tuple(tasks), tuple(edges), deadline, model, cores)

    core_order = doc.get("core_order")
    if core_order is not None:
        if not isinstance(core_order, dict):
            raise InstanceFormatError("core_order must be an object keyed by core index")
        order: dict[int, list[str]] = {}
        for key, seq in core_order.items():
            try:
                core_idx = int(key)
            except ValueError:
                raise InstanceFormatError(f"core_order key {key!r} is not a core index") from None
            if not (isinstance(seq, list) and all(isinstance(s, str) for s in seq)):
                raise InstanceFormatError(f"core_order[{key!r}] must be an array of task ids")
            order[core_idx] = seq
        for t in tasks:
            if t.mapped_core is not None and (
                t.id not in order.get(t.mapped_core, [])
            ):
                raise InstanceFormatError(
                    f"task {t.id!r} maps to core {t.mapped_core} but is absent from its order"
                )
        graph = augment_with_mapping_order(graph, order)
    return graph


def load_instance(path: str | Path) -> TaskGraph:
    return loads_instance(Path(path).read_text(encoding="utf-8"))


def instance_to_dict(graph: TaskGraph) -> dict:
    model = graph.speed_model
    if model.kind == "discrete":
        speeds: dict[str, Any] = {"kind": "discrete", "levels": list(model.levels)}
    else:
        speeds = {"kind": "continuous", "min": model.s_min, "max": model.s_max}
    doc: dict[str, Any] = {
        "alpha": model.alpha,
        "deadline": graph.deadline,
        "speeds": speeds,
        "tasks": [
            {"id": t.id, "weight": t.weight, **({"core": t.mapped_core} if t.mapped_core is not None else {})}
            for t in graph.tasks
        ],
        "edges": [[a, b] for a, b in graph.edges],
    }
    if graph.cores is not None:
        doc["cores"] = graph.cores
    return doc


def save_instance(graph: TaskGraph, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(graph), indent=2) + "\n", encoding="utf-8")


def schedule_to_dict(schedule) -> dict:
    return {
        "makespan": schedule.makespan,
        "tasks": {
            tid: {"core": int(c), "start": float(s), "speed": float(v)}
            for tid, c, s, v in schedule.rows()
        },
    }


def save_schedule(schedule, path: str | Path) -> None:
    Path(path).write_text(json.dumps(schedule_to_dict(schedule), indent=2) + "\n", encoding="utf-8")


def load_schedule_dict(path: str | Path) -> dict:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict):
        raise InstanceFormatError("schedule document must be a JSON object")
    _reject_unknown(doc, {"makespan", "tasks"}, "schedule")
    tasks = _require(doc, "tasks", "schedule")
    if not isinstance(tasks, dict):
        raise InstanceFormatError("schedule.tasks must be an object keyed by task id")
    for tid, entry in tasks.items():
        if not isinstance(entry, dict):
            raise InstanceFormatError(f"schedule entry for {tid!r} must be an object")
        _reject_unknown(entry, {"core", "start", "speed"}, f"schedule entry {tid!r}")
        for k in ("core", "start", "speed"):
            _require(entry, k, f"schedule entry {tid!r}")
    return doc
