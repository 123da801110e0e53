import random

import numpy as np
import pytest

from dagspeed import SpeedModel, Task, TaskGraph


def make_graph(weights, edges, deadline, model=None, cores=None, mapped=None):
    """Small-graph helper: weights list, edges as index pairs."""
    if model is None:
        model = SpeedModel.continuous(0.01, 100.0, 3.0)
    tasks = []
    for i, w in enumerate(weights):
        core = None if mapped is None else mapped[i]
        tasks.append(Task(f"t{i}", float(w), core))
    named = tuple((f"t{a}", f"t{b}") for a, b in edges)
    return TaskGraph(tuple(tasks), named, float(deadline), model, cores)


def random_dag_edges(n, rng, density=0.3):
    edges = []
    for j in range(1, n):
        for i in range(j):
            if rng.random() < density:
                edges.append((i, j))
    return edges


def enumerate_path_lengths(graph, times):
    """Oracle: longest path by explicit enumeration over all paths."""
    best = 0.0
    n = graph.n

    def walk(u, acc):
        nonlocal best
        acc = acc + times[u]
        best = max(best, acc)
        for v in graph.successors[u]:
            walk(v, acc)

    for u in range(n):
        if not graph.predecessors[u]:
            walk(u, 0.0)
    return best


@pytest.fixture
def rng():
    return random.Random(20240817)
