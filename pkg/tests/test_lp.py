import itertools

import numpy as np
import pytest

from swapreg.lp import LpProblem, solve_lp


def test_box_minimum():
    sol = solve_lp(LpProblem(np.array([1.0]), bounds=[(0.0, 1.0)]))
    assert sol.optimal
    assert sol.value == pytest.approx(0.0, abs=1e-9)
    assert sol.x[0] == pytest.approx(0.0, abs=1e-9)


def test_simplex_face():
    sol = solve_lp(LpProblem(np.array([-1.0, -1.0]),
                             a_ub=np.array([[1.0, 1.0]]), b_ub=np.array([1.0]),
                             bounds=[(0.0, None)] * 2))
    assert sol.optimal
    assert sol.value == pytest.approx(-1.0, abs=1e-9)


def test_infeasible():
    sol = solve_lp(LpProblem(np.array([0.0]),
                             a_ub=np.array([[1.0], [-1.0]]),
                             b_ub=np.array([-1.0, 0.0])))
    assert sol.status == "infeasible"


def test_unbounded():
    sol = solve_lp(LpProblem(np.array([-1.0]), bounds=[(0.0, None)]))
    assert sol.status == "unbounded"


def _enumerate_vertices(A, b, lo, hi):
    """All vertices of {lo <= x <= hi, A x <= b} by facet intersection."""
    n = A.shape[1]
    rows = [A[i] for i in range(A.shape[0])]
    rhs = [b[i] for i in range(A.shape[0])]
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        rows.extend([e, -e])
        rhs.extend([hi[j], -lo[j]])
    rows = np.array(rows)
    rhs = np.array(rhs)
    verts = []
    for idx in itertools.combinations(range(rows.shape[0]), n):
        sub = rows[list(idx)]
        if abs(np.linalg.det(sub)) < 1e-9:
            continue
        x = np.linalg.solve(sub, rhs[list(idx)])
        if np.all(rows @ x - rhs <= 1e-8):
            verts.append(x)
    return np.array(verts)


def test_matches_vertex_enumeration_on_random_lps():
    rng = np.random.default_rng(42)
    solved = 0
    while solved < 200:
        n = int(rng.integers(1, 6))
        m = int(rng.integers(1, 9))
        A = rng.normal(size=(m, n))
        x0 = rng.uniform(-1, 1, size=n)
        b = A @ x0 + rng.uniform(0.1, 1.0, size=m)  # x0 strictly feasible
        lo = np.full(n, -2.0)
        hi = np.full(n, 2.0)
        c = rng.normal(size=n)
        verts = _enumerate_vertices(A, b, lo, hi)
        if verts.size == 0:
            continue
        ref = float((verts @ c).min())
        sol = solve_lp(LpProblem(c, A, b, bounds=list(zip(lo, hi))))
        assert sol.optimal
        assert sol.value == pytest.approx(ref, abs=1e-6)
        solved += 1


def test_duality_on_random_instances():
    # primal: min c x s.t. A x >= b, x >= 0; dual: max b y s.t. A^T y <= c, y >= 0
    rng = np.random.default_rng(7)
    for _ in range(40):
        n = int(rng.integers(1, 6))
        m = int(rng.integers(1, 6))
        A = rng.normal(size=(m, n))
        x0 = rng.uniform(0, 1, size=n)
        b = A @ x0 - rng.uniform(0.05, 0.5, size=m)
        c = rng.uniform(0.1, 1.0, size=n)
        primal = solve_lp(LpProblem(c, a_ub=-A, b_ub=-b, bounds=[(0.0, None)] * n))
        dual = solve_lp(LpProblem(-b, a_ub=A.T, b_ub=c, bounds=[(0.0, None)] * m))
        assert primal.optimal and dual.optimal
        assert primal.value == pytest.approx(-dual.value, abs=1e-6)


def test_feasibility_of_returned_points():
    rng = np.random.default_rng(3)
    for _ in range(50):
        n = int(rng.integers(1, 5))
        m = int(rng.integers(1, 6))
        A = rng.normal(size=(m, n))
        x0 = rng.uniform(-1, 1, size=n)
        b = A @ x0 + rng.uniform(0.1, 1.0, size=m)
        c = rng.normal(size=n)
        sol = solve_lp(LpProblem(c, A, b, bounds=[(-3.0, 3.0)] * n))
        assert sol.optimal
        assert np.all(A @ sol.x - b <= 1e-7)
        assert np.all(np.abs(sol.x) <= 3.0 + 1e-9)
        assert sol.value == pytest.approx(float(c @ sol.x), abs=1e-7)
