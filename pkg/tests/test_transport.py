"""Exact optimal transport: values, couplings, dual potentials."""

import random
from fractions import Fraction

import pytest

from coalgame import TransportProblem, wasserstein1
from coalgame.transport import coupling_feasible

F = Fraction


def make_problem(points, cost, left, right) -> TransportProblem:
    n = len(points)
    matrix = [[F(cost[i][j]) for j in range(n)] for i in range(n)]
    return TransportProblem(
        points=tuple(points),
        cost=matrix,
        mass_left=[F(x) for x in left],
        mass_right=[F(x) for x in right],
    )


class TestHandWorkedInstances:
    def test_identical_marginals_cost_zero(self):
        p = make_problem(["a", "b"], [[0, 1], [1, 0]], [F(1, 2), F(1, 2)], [F(1, 2), F(1, 2)])
        sol = wasserstein1(p)
        assert sol.value == 0

    def test_point_masses_pay_the_distance(self):
        p = make_problem(["a", "b"], [[0, F(2, 3)], [F(2, 3), 0]], [1, 0], [0, 1])
        sol = wasserstein1(p)
        assert sol.value == F(2, 3)

    def test_split_mass(self):
        # half of the left mass must travel at cost 1/3
        p = make_problem(["a", "b"], [[0, F(1, 3)], [F(1, 3), 0]], [F(1, 2), F(1, 2)], [1, 0])
        sol = wasserstein1(p)
        assert sol.value == F(1, 6)

    def test_branching_example_pair(self):
        # mu = {3: 1/2, 4: 1/4, 5: 1/4}, nu = {6: 3/8, 7: 5/8} with the
        # one-step distances d(3,6)=0, d(4,7)=d(5,7)=0 and 1 elsewhere:
        # the optimal plan leaks exactly the shifted weight 1/8.
        points = ["3", "4", "5", "6", "7"]
        d = {
            ("3", "6"): 0, ("3", "7"): 1,
            ("4", "6"): 1, ("4", "7"): 0,
            ("5", "6"): 1, ("5", "7"): 0,
        }
        cost = [[0] * 5 for _ in range(5)]
        for i, u in enumerate(points):
            for j, v in enumerate(points):
                if u == v:
                    continue
                key = (u, v) if (u, v) in d else (v, u)
                cost[i][j] = F(d.get(key, 1))
        p = make_problem(
            points, cost, [F(1, 2), F(1, 4), F(1, 4), 0, 0], [0, 0, 0, F(3, 8), F(5, 8)]
        )
        sol = wasserstein1(p)
        assert sol.value == F(1, 8)

    def test_three_point_cycle(self):
        # moving 1/3 around a unit triangle costs 1/3
        p = make_problem(
            ["a", "b", "c"],
            [[0, 1, 1], [1, 0, 1], [1, 1, 0]],
            [F(2, 3), F(1, 3), 0],
            [F(1, 3), F(1, 3), F(1, 3)],
        )
        sol = wasserstein1(p)
        assert sol.value == F(1, 3)


class TestSolutionCertificates:
    """Every solution ships a primal coupling and a dual potential whose
    objectives agree; checking both sides proves optimality exactly."""

    def _random_problem(self, rng: random.Random) -> TransportProblem:
        n = rng.randint(2, 5)
        points = [f"p{i}" for i in range(n)]
        cost = [[F(0)] * n for _ in range(n)]
        for i in range(n):
            for j in range(i + 1, n):
                c = F(rng.randint(0, 8), 8)
                cost[i][j] = c
                cost[j][i] = c
        # triangle-close the matrix so it is a pseudometric
        for k in range(n):
            for i in range(n):
                for j in range(n):
                    if cost[i][j] > cost[i][k] + cost[k][j]:
                        cost[i][j] = cost[i][k] + cost[k][j]
        raw_l = [rng.randint(0, 4) for _ in range(n)]
        raw_r = [rng.randint(0, 4) for _ in range(n)]
        if sum(raw_l) == 0:
            raw_l[0] = 1
        if sum(raw_r) == 0:
            raw_r[0] = 1
        left = [F(x, sum(raw_l)) for x in raw_l]
        right = [F(x, sum(raw_r)) for x in raw_r]
        return TransportProblem(points=tuple(points), cost=cost, mass_left=left, mass_right=right)

    def test_primal_dual_consistency(self):
        rng = random.Random(20240817)
        for _ in range(200):
            p = self._random_problem(rng)
            sol = wasserstein1(p)
            n = len(p.points)
            # coupling is nonnegative with the right marginals
            row = [F(0)] * n
            col = [F(0)] * n
            for (i, j), w in sol.coupling.items():
                assert w > 0
                row[i] += w
                col[j] += w
            assert row == list(p.mass_left)
            assert col == list(p.mass_right)
            # primal objective matches the reported value
            primal = sum(w * p.cost[i][j] for (i, j), w in sol.coupling.items())
            assert primal == sol.value
            # dual potential: 1-Lipschitz w.r.t. the cost, same objective
            f = sol.potential
            for i in range(n):
                for j in range(n):
                    assert f[i] - f[j] <= p.cost[i][j]
            dual = sum(f[i] * (p.mass_left[i] - p.mass_right[i]) for i in range(n))
            assert dual == sol.value

    def test_value_bounded_by_diameter(self):
        rng = random.Random(99)
        for _ in range(50):
            p = self._random_problem(rng)
            sol = wasserstein1(p)
            diameter = max(max(r) for r in p.cost)
            assert 0 <= sol.value <= diameter


class TestCouplingFeasible:
    def test_mass_order_on_two_points(self):
        # mass can flow from 0-labelled to anything, 1 only to 1
        admissible = {(0, 0), (0, 1), (1, 1)}
        assert coupling_feasible([F(1, 2), F(1, 2)], [F(0), F(1)], admissible)
        assert not coupling_feasible([F(0), F(1)], [F(1, 2), F(1, 2)], admissible)

    def test_empty_relation(self):
        assert not coupling_feasible([F(1)], [F(1)], set())

    def test_identity_relation(self):
        assert coupling_feasible([F(1, 3), F(2, 3)], [F(1, 3), F(2, 3)], {(0, 0), (1, 1)})
        assert not coupling_feasible([F(2, 3), F(1, 3)], [F(1, 3), F(2, 3)], {(0, 0), (1, 1)})


def test_problem_validates_shapes():
    with pytest.raises(ValueError):
        TransportProblem(
            points=("a",),
            cost=[[F(0), F(1)]],
            mass_left=[F(1)],
            mass_right=[F(1)],
        ).validate()
