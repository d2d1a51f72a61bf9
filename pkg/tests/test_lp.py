import itertools

import numpy as np
import pytest

from flowgdp.errors import LpFailure
from flowgdp.lp import INFEASIBLE, OPTIMAL, UNBOUNDED, require_optimal, solve_lp


def vertex_oracle(c, A, b):
    """Enumerate basic solutions of ``A x <= b, x >= 0`` for small problems."""
    n = len(c)
    G = np.vstack([A, -np.eye(n)])
    h = np.r_[b, np.zeros(n)]
    best = None
    for rows in itertools.combinations(range(len(h)), n):
        M = G[list(rows)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, h[list(rows)])
        if np.all(G @ x <= h + 1e-9):
            v = c @ x
            if best is None or v < best:
                best = v
    return best


def test_single_bound():
    sol = solve_lp([1.0], A_ub=[[-1.0]], b_ub=[-3.0])
    assert sol.status == OPTIMAL
    assert sol.x[0] == pytest.approx(3.0)


def test_two_variable_textbook():
    # min -x - y  s.t.  x + 2y <= 4, 3x + y <= 6
    sol = solve_lp([-1, -1], A_ub=[[1, 2], [3, 1]], b_ub=[4, 6])
    np.testing.assert_allclose(sol.x, [1.6, 1.2], atol=1e-12)
    assert sol.objective == pytest.approx(-2.8)


def test_beale_cycling_example_terminates():
    c = [-0.75, 20, -0.5, 6]
    A = [[0.25, -8, -1, 9], [0.5, -12, -0.5, 3], [0, 0, 1, 0]]
    sol = solve_lp(c, A_ub=A, b_ub=[0, 0, 1])
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(-1.25)
    np.testing.assert_allclose(sol.x, [1, 0, 1, 0], atol=1e-12)


def test_unbounded():
    assert solve_lp([-1, 0], A_ub=[[0, 1]], b_ub=[1]).status == UNBOUNDED


def test_infeasible():
    sol = solve_lp([1, 1], A_ub=[[1, 1]], b_ub=[1], A_eq=[[1, 1]], b_eq=[2])
    assert sol.status == INFEASIBLE
    with pytest.raises(LpFailure):
        require_optimal(sol)


def test_redundant_equalities():
    sol = solve_lp([1, 2], A_eq=[[1, 1], [2, 2]], b_eq=[1, 2])
    assert sol.status == OPTIMAL
    np.testing.assert_allclose(sol.x, [1, 0], atol=1e-12)


def test_names_map_to_values():
    sol = solve_lp([1, 1], A_eq=[[1, 0], [0, 1]], b_eq=[2, 3], names=["a", "b"])
    assert sol.variables == pytest.approx({"a": 2.0, "b": 3.0})


@pytest.mark.parametrize("seed", range(25))
def test_random_problems_match_vertex_enumeration(seed):
    rng = np.random.default_rng(seed)
    n, m = 3, 4
    A = rng.uniform(0.1, 2, size=(m, n))
    b = rng.uniform(1, 5, size=m)
    c = rng.normal(size=n)
    sol = solve_lp(c, A_ub=A, b_ub=b)
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(vertex_oracle(c, A, b), abs=1e-9)
    assert np.all(A @ sol.x <= b + 1e-9)
