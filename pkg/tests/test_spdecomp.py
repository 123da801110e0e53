import itertools
import random

import numpy as np
import pytest

from dagspeed import SpeedModel, sp_decompose
from dagspeed.bench import GeneratorConfig, generate
from dagspeed.spdecomp import LEAF, PARALLEL, SERIES, SpDecomposition, SpNode

from conftest import make_graph


def closure_pairs(graph):
    from dagspeed.graph import reachability_masks

    reach = reachability_masks(graph)
    ids = [t.id for t in graph.tasks]
    out = set()
    for i in range(graph.n):
        for j in range(graph.n):
            if (reach[i] >> j) & 1:
                out.add((ids[i], ids[j]))
    return out


class TestSmallCases:
    def test_chain_is_series(self):
        g = make_graph([1, 1], [(0, 1)], 1.0)
        d = sp_decompose(g)
        assert d is not None and d.root.kind == SERIES
        assert [c.task for c in d.root.children] == ["t0", "t1"]

    def test_independent_pair_is_parallel(self):
        g = make_graph([1, 1], [], 1.0)
        d = sp_decompose(g)
        assert d is not None and d.root.kind == PARALLEL

    def test_single_task(self):
        g = make_graph([2.5], [], 1.0)
        d = sp_decompose(g)
        assert d.root.kind == LEAF and d.equivalent_weight == 2.5

    def test_n_graph_rejected(self):
        g = make_graph([1, 1, 1, 1], [(0, 2), (0, 3), (1, 3)], 1.0)
        assert sp_decompose(g) is None

    def test_n_graph_has_no_sp_tree_exhaustively(self):
        # No 4-leaf series/parallel tree induces exactly the N precedences
        # {(a,c),(a,d),(b,d)}: the N really is a forbidden structure.
        target = {("a", "c"), ("a", "d"), ("b", "d")}
        leaves = ["a", "b", "c", "d"]

        def trees(items):
            if len(items) == 1:
                yield SpNode(LEAF, 1.0, items[0])
                return
            for cut in range(1, len(items)):
                for left in trees(items[:cut]):
                    for right in trees(items[cut:]):
                        for kind in (SERIES, PARALLEL):
                            yield SpNode(kind, 0.0, children=(left, right))

        found = False
        for perm in itertools.permutations(leaves):
            for tree in trees(list(perm)):
                pairs = SpDecomposition(tree, 3.0).precedence_pairs()
                if pairs == target:
                    found = True
        assert not found

    def test_diamond_decomposes(self):
        g = make_graph([1, 1, 1, 1], [(0, 1), (0, 2), (1, 3), (2, 3)], 1.0)
        d = sp_decompose(g)
        assert d is not None
        assert closure_pairs(g) == d.precedence_pairs()

    def test_redundant_edges_do_not_matter(self):
        g1 = make_graph([1, 1, 1], [(0, 1), (1, 2)], 1.0)
        g2 = make_graph([1, 1, 1], [(0, 1), (1, 2), (0, 2)], 1.0)
        d1, d2 = sp_decompose(g1), sp_decompose(g2)
        assert d1.precedence_pairs() == d2.precedence_pairs()


class TestEquivalentWeight:
    def test_series_adds(self):
        g = make_graph([3, 4], [(0, 1)], 1.0)
        assert sp_decompose(g).equivalent_weight == pytest.approx(7.0)

    def test_parallel_alpha_norm(self):
        g = make_graph([3, 4], [], 1.0, SpeedModel.continuous(0.01, 100, 3.0))
        w = sp_decompose(g).equivalent_weight
        assert w == pytest.approx(91 ** (1 / 3))
        assert w == pytest.approx(4.49794, abs=1e-5)

    def test_recursion_recomputable(self, rng):
        for seed in range(10):
            cfg = GeneratorConfig("sp-random", n=rng.randint(2, 60), seed=seed)
            g = generate(cfg)
            d = sp_decompose(g)
            assert d is not None
            alpha = g.speed_model.alpha

            def recompute(node):
                if node.kind == LEAF:
                    return node.weight
                a, b = (recompute(c) for c in node.children)
                if node.kind == SERIES:
                    got = a + b
                else:
                    got = (a**alpha + b**alpha) ** (1 / alpha)
                assert node.weight == pytest.approx(got, rel=1e-12)
                return got

            recompute(d.root)

    def test_scale_covariance(self, rng):
        cfg = GeneratorConfig("sp-random", n=40, seed=5)
        g = generate(cfg)
        w0 = sp_decompose(g).equivalent_weight
        c = 3.7
        tasks = tuple(
            type(t)(t.id, t.weight * c, t.mapped_core) for t in g.tasks
        )
        g2 = type(g)(tasks, g.edges, g.deadline, g.speed_model, g.cores)
        assert sp_decompose(g2).equivalent_weight == pytest.approx(c * w0, rel=1e-12)


class TestRandomSpGraphs:
    def test_closure_equality_up_to_200_nodes(self):
        for seed in range(25):
            n = random.Random(seed).randint(2, 200)
            g = generate(GeneratorConfig("sp-random", n=n, seed=seed))
            d = sp_decompose(g)
            assert d is not None, f"seed {seed} generated an undecomposable SP graph"
            assert sorted(d.leaf_ids()) == sorted(t.id for t in g.tasks)
            assert d.precedence_pairs() == closure_pairs(g)

    def test_layered_graphs_are_rejected(self):
        rejected = 0
        for seed in range(8):
            g = generate(GeneratorConfig("layered-dag", n=30, seed=seed, density=0.3))
            if sp_decompose(g) is None:
                rejected += 1
        assert rejected == 8
