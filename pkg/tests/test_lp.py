import numpy as np
import pytest
from scipy.optimize import linprog

from disttest import lp
from disttest.errors import SolverError


def test_small_program():
    # max x + y  s.t. x + 2y <= 4, 3x + y <= 6
    res = lp.solve([-1, -1], A_ub=[[1, 2], [3, 1]], b_ub=[4, 6])
    assert res.value == pytest.approx(-2.8)
    assert np.allclose(res.x, [1.6, 1.2])


def test_equality_and_negative_rhs():
    res = lp.solve([1, 2, 0], A_ub=[[-1, -1, 0]], b_ub=[-1], A_eq=[[1, 1, 1]], b_eq=[2])
    assert res.value == pytest.approx(1.0)


def test_infeasible_and_unbounded():
    with pytest.raises(SolverError):
        lp.solve([1], A_ub=[[1]], b_ub=[-1])
    with pytest.raises(SolverError):
        lp.solve([-1], A_ub=[[-1]], b_ub=[0])


def test_random_programs_match_highs(rng):
    for _ in range(25):
        m, k = rng.integers(2, 8, 2)
        A = rng.normal(size=(m, k))
        b = rng.random(m) + 0.1
        c = rng.normal(size=k)
        A = np.vstack([A, np.ones(k)])
        b = np.append(b, 10.0)
        ref = linprog(c, A_ub=A, b_ub=b, method="highs")
        assert lp.solve(c, A_ub=A, b_ub=b).value == pytest.approx(ref.fun, abs=1e-8)


def test_degenerate_program_terminates():
    # many redundant tight constraints at the origin
    A = np.vstack([np.eye(4), -np.eye(4), np.ones((6, 4))])
    b = np.concatenate([np.zeros(4), np.zeros(4), np.zeros(6)])
    res = lp.solve(-np.ones(4), A_ub=A, b_ub=b)
    assert res.value == pytest.approx(0.0)
