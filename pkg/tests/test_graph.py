import random

import numpy as np
import pytest

from dagspeed import (
    InfeasibleOrderError,
    SpeedModel,
    Task,
    TaskGraph,
    augment_with_mapping_order,
    critical_path_time,
    validate,
)
from dagspeed.graph import GraphStructureError, transitive_reduction

from conftest import enumerate_path_lengths, make_graph, random_dag_edges


def codes(violations):
    return {v.code for v in violations}


class TestValidate:
    def test_two_cycle_detected(self):
        g = make_graph([1.0, 1.0], [(0, 1), (1, 0)], 1.0)
        assert "CycleDetected" in codes(validate(g))

    def test_minimal_instance_is_clean(self):
        g = make_graph([1.0], [], 1.0, SpeedModel.continuous(0.1, 2.0))
        assert validate(g) == []

    def test_core_index_out_of_range(self):
        g = make_graph([1.0, 1.0], [], 1.0, cores=2, mapped=[0, 3])
        assert "CoreIndexOutOfRange" in codes(validate(g))

    def test_mixed_mapping_rejected(self):
        g = make_graph([1.0, 1.0], [], 1.0, cores=2, mapped=[0, None])
        assert "MixedMapping" in codes(validate(g))

    def test_dangling_edge(self):
        g = TaskGraph(
            (Task("a", 1.0),), (("a", "ghost"),), 1.0, SpeedModel.continuous(0.1, 1.0)
        )
        assert "DanglingEdge" in codes(validate(g))

    def test_negative_weight_and_deadline(self):
        g = make_graph([-1.0], [], 0.0)
        got = codes(validate(g))
        assert "NegativeWeight" in got and "NonPositiveDeadline" in got

    def test_bad_ladder(self):
        model = SpeedModel("discrete", 1.0, 2.0, 3.0, (1.0, 2.0, 1.5))
        g = make_graph([1.0], [], 1.0, model)
        assert "BadSpeedLadder" in codes(validate(g))

    def test_zero_weight_allowed(self):
        g = make_graph([0.0, 1.0], [(0, 1)], 1.0)
        assert validate(g) == []


class TestCriticalPath:
    def test_chain(self):
        g = make_graph([1, 1, 1], [(0, 1), (1, 2)], 10.0)
        assert critical_path_time(g, [1.0, 2.0, 3.0]) == pytest.approx(6.0)

    def test_independent_max(self):
        g = make_graph([1, 1], [], 10.0)
        assert critical_path_time(g, [5.0, 2.0]) == pytest.approx(5.0)

    def test_diamond_takes_heavier_branch(self):
        g = make_graph([1, 1, 1, 1], [(0, 1), (0, 2), (1, 3), (2, 3)], 10.0)
        x = [1.0, 1.0, 2.0, 1.0]
        oracle = enumerate_path_lengths(g, x)
        assert oracle == pytest.approx(4.0)
        assert critical_path_time(g, x) == pytest.approx(oracle)

    def test_matches_enumeration_on_random_dags(self, rng):
        for _ in range(30):
            n = rng.randint(1, 9)
            g = make_graph([1] * n, random_dag_edges(n, rng, 0.4), 10.0)
            x = [rng.uniform(0, 2) for _ in range(n)]
            assert critical_path_time(g, x) == pytest.approx(
                enumerate_path_lengths(g, x), rel=1e-12
            )

    def test_monotone_in_every_coordinate(self, rng):
        for _ in range(20):
            n = rng.randint(2, 8)
            g = make_graph([1] * n, random_dag_edges(n, rng, 0.35), 10.0)
            x = [rng.uniform(0.1, 2) for _ in range(n)]
            base = critical_path_time(g, x)
            j = rng.randrange(n)
            bumped = list(x)
            bumped[j] += rng.uniform(0, 3)
            assert critical_path_time(g, bumped) >= base - 1e-12

    def test_cycle_raises(self):
        g = make_graph([1, 1], [(0, 1), (1, 0)], 1.0)
        with pytest.raises(GraphStructureError):
            critical_path_time(g, [1.0, 1.0])

    def test_accepts_mapping_by_id(self):
        g = make_graph([1, 1], [(0, 1)], 10.0)
        assert critical_path_time(g, {"t0": 1.0, "t1": 2.5}) == pytest.approx(3.5)


class TestAugment:
    def test_serialization_edge_added(self):
        g = make_graph([1, 1], [], 1.0)
        out = augment_with_mapping_order(g, {0: ["t0", "t1"]})
        assert ("t0", "t1") in out.edges
        assert all(t.mapped_core == 0 for t in out.tasks)

    def test_contradicting_order_rejected(self):
        g = make_graph([1, 1], [(0, 1)], 1.0)
        with pytest.raises(InfeasibleOrderError):
            augment_with_mapping_order(g, {0: ["t1", "t0"]})

    def test_cross_core_edges_kept_acyclic(self):
        g = make_graph([1, 1, 1, 1], [(0, 3)], 1.0)
        out = augment_with_mapping_order(g, {0: ["t0", "t2"], 1: ["t1", "t3"]})
        assert set(out.edges) == {("t0", "t3"), ("t0", "t2"), ("t1", "t3")}
        out.topo_order  # must not raise

    def test_missing_task_rejected(self):
        g = make_graph([1, 1], [], 1.0)
        with pytest.raises(InfeasibleOrderError):
            augment_with_mapping_order(g, {0: ["t0"]})

    def test_duplicate_listing_rejected(self):
        g = make_graph([1, 1], [], 1.0)
        with pytest.raises(InfeasibleOrderError):
            augment_with_mapping_order(g, {0: ["t0", "t1"], 1: ["t1"]})


class TestTransitiveReduction:
    def test_removes_shortcut(self):
        g = make_graph([1, 1, 1], [(0, 1), (1, 2), (0, 2)], 1.0)
        assert set(transitive_reduction(g)) == {(0, 1), (1, 2)}

    def test_preserves_closure_on_random_dags(self, rng):
        from dagspeed.graph import reachability_masks

        for _ in range(20):
            n = rng.randint(2, 10)
            g = make_graph([1] * n, random_dag_edges(n, rng, 0.5), 1.0)
            reduced = transitive_reduction(g)
            g2 = make_graph([1] * n, reduced, 1.0)
            assert reachability_masks(g) == reachability_masks(g2)


class TestSpeedModel:
    def test_max_ratio(self):
        m = SpeedModel.discrete([1.0, 1.5, 3.0])
        assert m.max_ratio == pytest.approx(2.0)

    def test_max_ratio_single_level(self):
        assert SpeedModel.discrete([2.0]).max_ratio == 1.0

    def test_continuous_relaxation(self):
        m = SpeedModel.discrete([1.0, 4.0], alpha=2.5)
        c = m.continuous_relaxation()
        assert (c.kind, c.s_min, c.s_max, c.alpha) == ("continuous", 1.0, 4.0, 2.5)
