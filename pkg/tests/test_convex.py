import random

import numpy as np
import pytest
from scipy.optimize import minimize as scipy_min

from dagspeed import ConvexProgram, SolveStatus, solve_convex


def chain_program(weights, alpha, deadline, lo, hi):
    n = len(weights)
    rows = []
    for j in range(n):
        rows.append(({n + j: 1.0}, "<=", deadline))
        rows.append(({j: 1.0, n + j: -1.0}, "<=", 0.0))
    for j in range(n - 1):
        rows.append(({n + j: 1.0, j + 1: 1.0, n + j + 1: -1.0}, "<=", 0.0))
    return ConvexProgram.from_rows(weights, alpha, lo, hi, rows)


class TestSpecExamples:
    def test_single_task_stretches_to_deadline(self):
        p = ConvexProgram.from_rows(
            [1.0], 3.0, [0.5], [10.0],
            rows=[({1: 1.0}, "<=", 1.0), ({0: 1.0, 1: -1.0}, "<=", 0.0)],
        )
        s = solve_convex(p)
        assert s.status is SolveStatus.OPTIMAL
        assert s.x[0] == pytest.approx(1.0, rel=1e-6)
        assert s.objective == pytest.approx(1.0, rel=1e-6)

    def test_single_task_pinched_box(self):
        # Box lower bound w/s_max = 1 equals the deadline: the feasible set
        # is a single point, still solvable.
        p = ConvexProgram.from_rows(
            [2.0], 3.0, [1.0], [20.0],
            rows=[({1: 1.0}, "<=", 1.0), ({0: 1.0, 1: -1.0}, "<=", 0.0)],
        )
        s = solve_convex(p)
        assert s.status is SolveStatus.OPTIMAL
        assert s.x[0] == pytest.approx(1.0, rel=1e-5)
        assert s.objective == pytest.approx(8.0, rel=1e-4)

    def test_two_task_chain_splits_evenly(self):
        # Oracle: grid search over the split of the deadline.
        grid = np.linspace(0.01, 1.99, 3000)
        vals = 1.0 / grid + 1.0 / (2.0 - grid)
        expected = vals.min()
        assert expected == pytest.approx(2.0, abs=1e-5)
        p = chain_program([1.0, 1.0], 2.0, 2.0, [0.05, 0.05], [20.0, 20.0])
        s = solve_convex(p)
        assert s.status is SolveStatus.OPTIMAL
        assert s.objective == pytest.approx(2.0, rel=1e-6)
        assert s.x == pytest.approx([1.0, 1.0], rel=1e-4)


class TestContracts:
    def test_infeasible_detected(self):
        p = ConvexProgram.from_rows(
            [1.0], 3.0, [2.0], [10.0],
            rows=[({1: 1.0}, "<=", 1.0), ({0: 1.0, 1: -1.0}, "<=", 0.0)],
        )
        assert solve_convex(p).status is SolveStatus.INFEASIBLE

    def test_empty_box_is_infeasible(self):
        p = ConvexProgram.from_rows(
            [1.0], 3.0, [2.0], [1.0],
            rows=[({1: 1.0}, "<=", 5.0), ({0: 1.0, 1: -1.0}, "<=", 0.0)],
        )
        assert solve_convex(p).status is SolveStatus.INFEASIBLE

    def test_equality_row(self):
        p = ConvexProgram.from_rows(
            [1.0], 3.0, [0.1, ], [10.0],
            rows=[
                ({1: 1.0}, "<=", 2.0),
                ({0: 1.0, 1: -1.0}, "<=", 0.0),
                ({0: 1.0}, "=", 0.7),
            ],
        )
        s = solve_convex(p)
        assert s.status is SolveStatus.OPTIMAL
        assert s.x[0] == pytest.approx(0.7, abs=1e-6)
        assert s.objective == pytest.approx(1.0 / 0.7**2, rel=1e-5)

    def test_duality_gap_certificate(self):
        rng = random.Random(11)
        for _ in range(20):
            n = rng.randint(1, 6)
            w = [rng.uniform(0.2, 3.0) for _ in range(n)]
            alpha = rng.choice([1.5, 2.0, 3.0])
            d = rng.uniform(0.7 * n, 2.5 * n)
            p = chain_program(w, alpha, d, [x / 5 for x in w], [x / 0.05 for x in w])
            s = solve_convex(p, tol=1e-8)
            assert s.status is SolveStatus.OPTIMAL
            assert s.certified
            assert s.lower_bound <= s.objective + 1e-12
            assert s.objective - s.lower_bound <= 1e-6 * (1.0 + abs(s.objective))

    def test_matches_scipy_oracle(self):
        rng = random.Random(3)
        for _ in range(12):
            n = rng.randint(1, 5)
            w = [rng.uniform(0.3, 2.5) for _ in range(n)]
            alpha = rng.choice([1.5, 2.0, 3.0])
            d = rng.uniform(0.8 * n, 2.0 * n)
            lo = [x / 4 for x in w]
            hi = [x / 0.05 for x in w]
            p = chain_program(w, alpha, d, lo, hi)
            s = solve_convex(p)
            assert s.status is SolveStatus.OPTIMAL

            def f(x):
                return sum(wi**alpha * xi ** (1 - alpha) for wi, xi in zip(w, x))

            cons = [
                {"type": "ineq", "fun": (lambda x, k=k: d - sum(x[: k + 1]))}
                for k in range(n)
            ]
            r = scipy_min(
                f,
                x0=[max(l * 1.01, min(d / n, h * 0.99)) for l, h in zip(lo, hi)],
                bounds=list(zip(lo, hi)),
                constraints=cons,
                method="SLSQP",
                options={"maxiter": 500, "ftol": 1e-12},
            )
            assert s.objective == pytest.approx(r.fun, rel=1e-5, abs=1e-8)

    def test_zero_weight_tasks_are_pinned(self):
        p = ConvexProgram.from_rows(
            [0.0, 1.0], 3.0, [0.0, 0.25], [0.0, 10.0],
            rows=[
                ({2: 1.0}, "<=", 2.0),
                ({3: 1.0}, "<=", 2.0),
                ({0: 1.0, 2: -1.0}, "<=", 0.0),
                ({1: 1.0, 3: -1.0}, "<=", 0.0),
                ({2: 1.0, 1: 1.0, 3: -1.0}, "<=", 0.0),
            ],
        )
        s = solve_convex(p)
        assert s.status is SolveStatus.OPTIMAL
        assert s.x[0] == 0.0
        assert s.objective == pytest.approx(1.0 / 4.0, rel=1e-5)

    def test_alpha_one_objective_is_constant(self):
        p = chain_program([1.0, 1.0], 1.0, 4.0, [0.1, 0.1], [3.0, 3.0])
        s = solve_convex(p)
        assert s.status is SolveStatus.OPTIMAL
        assert s.objective == pytest.approx(2.0, rel=1e-9)
