import math
import random

import numpy as np
import pytest

from dagspeed import (
    SolveStatus,
    SpeedModel,
    SpgStatus,
    critical_path_time,
    cvx_speed,
    optimal_continuous_speeds,
    spg_speed,
)
from dagspeed.bench import GeneratorConfig, generate

from conftest import make_graph


class TestCvxSpeed:
    def test_single_task_stretches(self):
        g = make_graph([1.0], [], 2.0, SpeedModel.continuous(0.1, 2.0, 3.0))
        r = cvx_speed(g)
        assert r.status is SolveStatus.OPTIMAL
        assert r.assignment.speeds[0] == pytest.approx(0.5, rel=1e-6)
        assert r.assignment.total_energy == pytest.approx(0.25, rel=1e-6)

    def test_chain_splits_deadline(self):
        # Oracle: grid search over the deadline split.
        grid = np.linspace(0.01, 1.99, 2000)
        best = (1.0 / grid + 1.0 / (2.0 - grid)).min()
        g = make_graph([1.0, 1.0], [(0, 1)], 2.0, SpeedModel.continuous(0.1, 10.0, 2.0))
        r = cvx_speed(g)
        assert r.status is SolveStatus.OPTIMAL
        assert r.assignment.total_energy == pytest.approx(best, rel=1e-5)
        assert r.assignment.speeds == pytest.approx([1.0, 1.0], rel=1e-4)

    def test_infeasible_when_smax_misses(self):
        g = make_graph([3.0], [], 2.0, SpeedModel.continuous(0.1, 1.0, 3.0))
        assert cvx_speed(g).status is SolveStatus.INFEASIBLE

    def test_requires_continuous_model(self):
        g = make_graph([1.0], [], 2.0, SpeedModel.discrete([1.0, 2.0]))
        with pytest.raises(ValueError):
            cvx_speed(g)

    def test_monotone_in_deadline(self):
        g0 = make_graph([1, 2, 1, 1], [(0, 1), (0, 2), (1, 3), (2, 3)], 1.0,
                        SpeedModel.continuous(0.05, 20.0, 3.0))
        prev = np.inf
        for d in np.linspace(0.6, 4.0, 10):
            g = type(g0)(g0.tasks, g0.edges, float(d), g0.speed_model, g0.cores)
            r = cvx_speed(g)
            assert r.status is SolveStatus.OPTIMAL
            energy = r.assignment.total_energy
            assert energy <= prev * (1 + 1e-9)
            prev = energy

    def test_deadline_tight_at_optimum(self):
        for seed in range(5):
            g = generate(GeneratorConfig("sp-random", n=12, seed=seed,
                                         speed_kind="continuous", slack=2.0,
                                         speed_min=0.001, speed_max=1000.0))
            r = cvx_speed(g)
            assert r.status is SolveStatus.OPTIMAL
            cp = critical_path_time(g, r.assignment.times)
            assert cp == pytest.approx(g.deadline, rel=1e-6)


class TestSpgSpeed:
    def test_single_task(self):
        g = make_graph([4.0], [], 2.0, SpeedModel.continuous(0.01, 100.0, 3.0))
        r = spg_speed(g)
        assert r.status is SpgStatus.EXACT
        assert r.assignment.speeds[0] == pytest.approx(2.0)
        assert r.assignment.total_energy == pytest.approx(16.0)

    def test_parallel_then_series(self):
        g = make_graph([1, 1, 1], [(0, 2), (1, 2)], 2.0,
                       SpeedModel.continuous(0.01, 100.0, 2.0))
        r = spg_speed(g)
        assert r.status is SpgStatus.EXACT
        w = math.sqrt(2) + 1
        assert r.assignment.speed_of("t2") == pytest.approx(w / 2, rel=1e-12)
        # Parallel child speed: parent speed scaled by its weight share.
        assert r.assignment.speed_of("t0") == pytest.approx((w / 2) / math.sqrt(2), rel=1e-12)
        assert r.assignment.speed_of("t0") == pytest.approx(0.85355, abs=1e-5)
        assert r.assignment.total_energy == pytest.approx(w**2 / 2, rel=1e-12)
        # The two stages tile the deadline exactly.
        x = r.assignment.times
        assert x[0] + x[2] == pytest.approx(2.0, abs=1e-9)

    def test_energy_matches_weight_formula(self):
        for seed in range(8):
            g = generate(GeneratorConfig("sp-random", n=25, seed=seed,
                                         speed_kind="continuous",
                                         speed_min=1e-6, speed_max=1e6))
            from dagspeed import sp_decompose
            d = sp_decompose(g)
            r = spg_speed(g)
            assert r.status is SpgStatus.EXACT
            alpha = g.speed_model.alpha
            expected = d.equivalent_weight**alpha / g.deadline ** (alpha - 1)
            assert r.assignment.total_energy == pytest.approx(expected, rel=1e-12)

    def test_not_series_parallel(self):
        g = make_graph([1, 1, 1, 1], [(0, 2), (0, 3), (1, 3)], 2.0)
        assert spg_speed(g).status is SpgStatus.NOT_SERIES_PARALLEL

    def test_bound_violation_flagged_but_returned(self):
        # Tight deadline forces speeds above s_max.
        g = make_graph([10.0], [], 1.0, SpeedModel.continuous(0.5, 2.0, 3.0))
        r = spg_speed(g)
        assert r.status is SpgStatus.SPEED_BOUND_VIOLATED
        assert r.assignment.speeds[0] == pytest.approx(10.0)

    def test_zero_weight_gets_smax(self):
        g = make_graph([0.0, 1.0], [(0, 1)], 2.0, SpeedModel.continuous(0.1, 5.0, 3.0))
        r = spg_speed(g)
        assert r.status is SpgStatus.EXACT
        assert r.assignment.speeds[0] == pytest.approx(5.0)
        assert r.assignment.times[0] == 0.0
        assert r.assignment.total_energy == pytest.approx(1.0 / 4.0, rel=1e-12)

    def test_series_children_tile_allotted_window(self):
        for seed in range(6):
            g = generate(GeneratorConfig("sp-random", n=30, seed=100 + seed,
                                         speed_kind="continuous",
                                         speed_min=1e-6, speed_max=1e6))
            r = spg_speed(g)
            assert r.status is SpgStatus.EXACT
            cp = critical_path_time(g, r.assignment.times)
            assert cp == pytest.approx(g.deadline, abs=1e-9 * (1 + g.deadline))


class TestAgreement:
    def test_spg_equals_cvx_on_sp_graphs(self):
        for seed in range(12):
            n = random.Random(seed).randint(2, 60)
            g = generate(GeneratorConfig("sp-random", n=n, seed=seed,
                                         speed_kind="continuous",
                                         speed_min=1e-5, speed_max=1e5,
                                         slack=random.Random(seed ^ 99).uniform(1.3, 3.0)))
            spg = spg_speed(g)
            assert spg.status is SpgStatus.EXACT
            cvx = cvx_speed(g)
            assert cvx.status is SolveStatus.OPTIMAL
            e_spg = spg.assignment.total_energy
            e_cvx = cvx.assignment.total_energy
            assert abs(e_spg - e_cvx) <= 1e-6 * e_cvx


class TestBestContinuous:
    def test_fallback_on_non_sp(self):
        g = make_graph([1, 1, 1, 1], [(0, 2), (0, 3), (1, 3)], 4.0,
                       SpeedModel.continuous(0.05, 10.0, 3.0))
        assignment, status, flags = optimal_continuous_speeds(g)
        assert status is SolveStatus.OPTIMAL
        assert "spg_fallback_cvx" in flags
        assert assignment is not None

    def test_no_fallback_on_sp(self):
        g = make_graph([1, 1], [(0, 1)], 4.0, SpeedModel.continuous(0.05, 10.0, 3.0))
        assignment, status, flags = optimal_continuous_speeds(g)
        assert flags == []
        assert status is SolveStatus.OPTIMAL

    def test_bound_violation_falls_back_to_clamped_cvx(self):
        g = make_graph([10.0, 10.0], [(0, 1)], 1.0, SpeedModel.continuous(0.5, 30.0, 3.0))
        assignment, status, flags = optimal_continuous_speeds(g)
        assert status is SolveStatus.OPTIMAL
        assert "spg_fallback_cvx" not in flags or assignment is not None
