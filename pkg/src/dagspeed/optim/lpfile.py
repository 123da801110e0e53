"""LP-format export of the discrete integer models.

Writes the standard LP text format (objective, subject-to rows, bounds,
binary section) so benchmark instances can be reproduced with an external
MILP solver.  Variables are index-named (y{i}_{l}, d{i}, z{i}_{c},
e{i}_{j}); a comment header maps indices back to task ids.
"""

from __future__ import annotations

from pathlib import Path

from ..graph import DISCRETE, TaskGraph


def _num(x: float) -> str:
    return f"{x:.17g}"


def _term(coef: float, var: str) -> str:
    sign = "+" if coef >= 0 else "-"
    return f"{sign} {_num(abs(coef))} {var}"


def _emit(rows: list[str]) -> str:
    return "\n".join(rows) + "\n"


def speed_ilp_lp(graph: TaskGraph) -> str:
    """Integer model for speed assignment under a fixed mapping.

    Binaries y{i}_{l} pick one ladder level per task; d{i} carries the
    completion time.  One assignment row and one timing row per task, one
    row per precedence edge; the deadline sits in the d bounds.
    """
    graph.ensure_valid()
    if graph.speed_model.kind != DISCRETE:
        raise ValueError("LP export needs a discrete speed ladder")
    lv = graph.speed_model.levels
    alpha = graph.speed_model.alpha
    n = graph.n
    d = graph.deadline
    out = ["\\ speed-assignment ILP (one level per task, deadline via d bounds)"]
    for i, t in enumerate(graph.tasks):
        out.append(f"\\ task {i}: id={t.id}")
    obj_terms = []
    for i, t in enumerate(graph.tasks):
        for l, v in enumerate(lv):
            obj_terms.append(_term(t.weight * v ** (alpha - 1.0), f"y{i}_{l}"))
    out.append("Minimize")
    out.append(" obj: " + " ".join(obj_terms))
    out.append("Subject To")
    for i, t in enumerate(graph.tasks):
        terms = [_term(t.weight / v, f"y{i}_{l}") for l, v in enumerate(lv)]
        terms.append(_term(-1.0, f"d{i}"))
        out.append(f" time{i}: " + " ".join(terms) + " <= 0")
    for e, (a, b) in enumerate(graph.edge_indices):
        terms = [_term(1.0, f"d{a}")]
        terms += [_term(graph.tasks[b].weight / v, f"y{b}_{l}") for l, v in enumerate(lv)]
        terms.append(_term(-1.0, f"d{b}"))
        out.append(f" prec{e}: " + " ".join(terms) + " <= 0")
    for i in range(n):
        out.append(
            f" assign{i}: " + " ".join(_term(1.0, f"y{i}_{l}") for l in range(len(lv))) + " = 1"
        )
    out.append("Bounds")
    for i in range(n):
        out.append(f" 0 <= d{i} <= {_num(d)}")
    out.append("Binary")
    for i in range(n):
        for l in range(len(lv)):
            out.append(f" y{i}_{l}")
    out.append("End")
    return _emit(out)


def sched_ilp_lp(graph: TaskGraph) -> str:
    """Integer model with core binaries z{i}_{c} and order binaries e{i}_{j}.

    Every ordered task pair carries a big-M timing row (M equals the
    deadline, the tightest valid choice since completions stay below it);
    original edges pin e to 1, and the core rows force an orientation
    between any two tasks sharing a core.
    """
    graph.ensure_valid()
    if graph.speed_model.kind != DISCRETE:
        raise ValueError("LP export needs a discrete speed ladder")
    if graph.cores is None:
        raise ValueError("the scheduling model needs a finite core count")
    lv = graph.speed_model.levels
    alpha = graph.speed_model.alpha
    n = graph.n
    m = graph.cores
    d = graph.deadline
    out = ["\\ speeds-and-scheduling ILP (levels, cores, pairwise sequencing)"]
    for i, t in enumerate(graph.tasks):
        out.append(f"\\ task {i}: id={t.id}")
    obj_terms = []
    for i, t in enumerate(graph.tasks):
        for l, v in enumerate(lv):
            obj_terms.append(_term(t.weight * v ** (alpha - 1.0), f"y{i}_{l}"))
    out.append("Minimize")
    out.append(" obj: " + " ".join(obj_terms))
    out.append("Subject To")
    for i, t in enumerate(graph.tasks):
        terms = [_term(t.weight / v, f"y{i}_{l}") for l, v in enumerate(lv)]
        terms.append(_term(-1.0, f"d{i}"))
        out.append(f" time{i}: " + " ".join(terms) + " <= 0")
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            terms = [_term(1.0, f"d{i}")]
            terms += [_term(graph.tasks[j].weight / v, f"y{j}_{l}") for l, v in enumerate(lv)]
            terms.append(_term(-1.0, f"d{j}"))
            terms.append(_term(d, f"e{i}_{j}"))
            out.append(f" order{i}_{j}: " + " ".join(terms) + f" <= {_num(d)}")
    for i in range(n):
        out.append(
            f" assign{i}: " + " ".join(_term(1.0, f"y{i}_{l}") for l in range(len(lv))) + " = 1"
        )
    for i in range(n):
        out.append(
            f" onecore{i}: " + " ".join(_term(1.0, f"z{i}_{c}") for c in range(m)) + " = 1"
        )
    edge_set = set(graph.edge_indices)
    for a, b in sorted(edge_set):
        out.append(f" fix{a}_{b}: + 1 e{a}_{b} = 1")
    for i in range(n):
        for j in range(i + 1, n):
            for c in range(m):
                row = " ".join(
                    [
                        _term(1.0, f"z{i}_{c}"),
                        _term(1.0, f"z{j}_{c}"),
                        _term(-1.0, f"e{i}_{j}"),
                        _term(-1.0, f"e{j}_{i}"),
                    ]
                )
                out.append(f" core{i}_{j}_{c}: {row} <= 1")
    out.append("Bounds")
    for i in range(n):
        out.append(f" 0 <= d{i} <= {_num(d)}")
    out.append("Binary")
    for i in range(n):
        for l in range(len(lv)):
            out.append(f" y{i}_{l}")
    for i in range(n):
        for c in range(m):
            out.append(f" z{i}_{c}")
    for i in range(n):
        for j in range(n):
            if i != j:
                out.append(f" e{i}_{j}")
    out.append("End")
    return _emit(out)


def export_model(graph: TaskGraph, path: str | Path, model: str = "auto") -> Path:
    """Write the instance's integer model as an LP file.

    ``model`` picks "speed" or "sched"; "auto" exports the scheduling model
    when the instance carries a core count and the speed model otherwise.
    """
    if model == "auto":
        model = "sched" if graph.cores is not None else "speed"
    if model == "speed":
        text = speed_ilp_lp(graph)
    elif model == "sched":
        text = sched_ilp_lp(graph)
    else:
        raise ValueError(f"unknown model kind {model!r}")
    p = Path(path)
    p.write_text(text, encoding="utf-8")
    return p
