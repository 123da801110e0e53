"""Series-parallel recognition and decomposition of task graphs.

A graph is series-parallel when it is a single task, a series composition
(everything in the first part precedes everything in the second), or a
parallel composition (no constraints across parts).  Recognition works on
the transitive reduction by exhaustively applying two local merges:

* chain merge: u -> v where u has out-degree 1 and v in-degree 1 becomes a
  Series node;
* twin merge: two nodes with identical predecessor and successor sets
  become a Parallel node.

If the graph shrinks to a single node it was series-parallel and the merge
history is the decomposition tree; otherwise the order contains the
forbidden N structure and None is returned.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .graph import TaskGraph, transitive_reduction

SERIES = "series"
PARALLEL = "parallel"
LEAF = "task"


@dataclass(frozen=True)
class SpNode:
    """Decomposition tree node; ``weight`` is the equivalent weight."""

    kind: str
    weight: float
    task: str | None = None
    children: tuple["SpNode", ...] = ()

    def leaves(self) -> list["SpNode"]:
        if self.kind == LEAF:
            return [self]
        out = []
        for c in self.children:
            out.extend(c.leaves())
        return out


@dataclass(frozen=True)
class SpDecomposition:
    root: SpNode
    alpha: float

    @property
    def equivalent_weight(self) -> float:
        return self.root.weight

    def leaf_ids(self) -> list[str]:
        return [leaf.task for leaf in self.root.leaves()]

    def precedence_pairs(self) -> set[tuple[str, str]]:
        """All ordered pairs (a, b) with a preceding b in the induced order."""
        pairs: set[tuple[str, str]] = set()

        def walk(node: SpNode) -> list[str]:
            if node.kind == LEAF:
                return [node.task]
            left = walk(node.children[0])
            right = walk(node.children[1])
            if node.kind == SERIES:
                pairs.update((a, b) for a in left for b in right)
            return left + right

        walk(self.root)
        return pairs


def _series_weight(w1: float, w2: float) -> float:
    return w1 + w2


def _parallel_weight(w1: float, w2: float, alpha: float) -> float:
    return (w1**alpha + w2**alpha) ** (1.0 / alpha)


def sp_decompose(graph: TaskGraph) -> SpDecomposition | None:
    """Decompose into a series/parallel tree, or None if not series-parallel.

    The induced precedence relation of the returned tree has the same
    transitive closure as the input graph.
    """
    n = graph.n
    alpha = graph.speed_model.alpha
    if n == 0:
        return None
    if n == 1:
        t = graph.tasks[0]
        return SpDecomposition(SpNode(LEAF, t.weight, t.id), alpha)

    # Adjacency of the transitive reduction, indexable past n for merge nodes.
    preds: list[set[int] | None] = [set() for _ in range(n)]
    succs: list[set[int] | None] = [set() for _ in range(n)]
    for u, v in transitive_reduction(graph):
        succs[u].add(v)
        preds[v].add(u)
    nodes: list[SpNode | None] = [
        SpNode(LEAF, t.weight, t.id) for t in graph.tasks
    ]

    alive = n
    # Maps a (preds, succs) signature to one candidate twin; entries go stale
    # after merges and are re-validated on lookup.
    twin_cache: dict[tuple[frozenset[int], frozenset[int]], int] = {}
    work = deque(range(n))
    queued = [True] * n

    def push(i: int) -> None:
        if i < len(queued) and nodes[i] is not None and not queued[i]:
            queued[i] = True
            work.append(i)

    def merge(a: int, b: int, kind: str) -> int:
        nonlocal alive
        w = len(nodes)
        if kind == SERIES:
            node = SpNode(SERIES, _series_weight(nodes[a].weight, nodes[b].weight),
                          children=(nodes[a], nodes[b]))
            new_preds, new_succs = set(preds[a]), set(succs[b])
        else:
            node = SpNode(PARALLEL, _parallel_weight(nodes[a].weight, nodes[b].weight, alpha),
                          children=(nodes[a], nodes[b]))
            new_preds, new_succs = set(preds[a]), set(succs[a])
        nodes.append(node)
        preds.append(new_preds)
        succs.append(new_succs)
        queued.append(False)
        for p in new_preds:
            succs[p].discard(a)
            succs[p].discard(b)
            succs[p].add(w)
        for s in new_succs:
            preds[s].discard(a)
            preds[s].discard(b)
            preds[s].add(w)
        nodes[a] = nodes[b] = None
        preds[a] = preds[b] = succs[a] = succs[b] = None
        alive -= 1
        push(w)
        for nb in new_preds | new_succs:
            push(nb)
        return w

    while work and alive > 1:
        v = work.popleft()
        queued[v] = False
        if nodes[v] is None:
            continue
        # Chain merge with the unique successor.
        if len(succs[v]) == 1:
            (u,) = succs[v]
            if len(preds[u]) == 1:
                merge(v, u, SERIES)
                continue
        # Chain merge with the unique predecessor.
        if len(preds[v]) == 1:
            (p,) = preds[v]
            if len(succs[p]) == 1:
                merge(p, v, SERIES)
                continue
        # Twin merge with a node sharing both neighbor sets.
        sig = (frozenset(preds[v]), frozenset(succs[v]))
        other = twin_cache.get(sig)
        if (
            other is not None
            and other != v
            and nodes[other] is not None
            and preds[other] == preds[v]
            and succs[other] == succs[v]
        ):
            w = merge(other, v, PARALLEL)
            # The merged node keeps the shared neighbor sets, so it is the
            # natural new candidate for this signature.
            twin_cache[sig] = w
            continue
        twin_cache[sig] = v

    if alive != 1:
        return None
    root = next(node for node in nodes if node is not None)
    return SpDecomposition(root, alpha)
