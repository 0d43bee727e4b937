import sys
from pathlib import Path

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from datalyap.errors import ExternalSolverFailure, NotRegistered
from datalyap.program import NONNEG, SOC, ZERO, ConicProgram
from datalyap.solver import (
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    Solution,
    SolverSettings,
    project_cone,
    read_solution,
    register_external_solver,
    registered_solvers,
    solve,
    unregister_external_solver,
    write_solution,
)

ADAPTER = Path(__file__).with_name("external_solver_cvxpy.py")


def lp_x_ge_3():
    # min x  s.t. x >= 3, written as b - A x = x - 3 in NonNeg
    return ConicProgram(sp.csc_matrix([[-1.0]]), np.array([-3.0]), np.array([1.0]), [(NONNEG, 1)])


def socp_sqrt2():
    # min t  s.t. (t, 1, 1) in the Lorentz cone
    A = sp.csc_matrix(np.array([[-1.0], [0.0], [0.0]]))
    return ConicProgram(A, np.array([0.0, 1.0, 1.0]), np.array([1.0]), [(SOC, 3)])


def soc_oracle(v):
    # closed-form Lorentz projection
    t, u = v[0], v[1:]
    nu = np.linalg.norm(u)
    if nu <= t:
        return v.copy()
    if nu <= -t:
        return np.zeros_like(v)
    a = (t + nu) / 2
    return np.concatenate([[a], a * u / nu])


def test_nonneg_projection():
    assert np.array_equal(project_cone(np.array([-1.0, 2.0]), (NONNEG, 2)), [0.0, 2.0])


def test_zero_projection():
    assert np.array_equal(project_cone(np.array([-1.0, 2.0]), (ZERO, 2)), [0.0, 0.0])


def test_soc_projection_examples():
    assert np.allclose(project_cone(np.array([0.0, 1.0]), (SOC, 2)), [0.5, 0.5])
    v = np.array([2.0, 1.0, 0.0])
    assert np.array_equal(project_cone(v, (SOC, 3)), v)
    assert np.array_equal(project_cone(np.array([-3.0, 1.0, 0.0]), (SOC, 3)), [0.0, 0.0, 0.0])


def test_projection_matches_closed_form():
    rng = np.random.default_rng(0)
    for _ in range(200):
        v = rng.normal(size=4) * 3
        assert np.allclose(project_cone(v, (SOC, 4)), soc_oracle(v), atol=1e-14)


CONES = [(ZERO, 2), (NONNEG, 3), (SOC, 3), (SOC, 4), (SOC, 2)]


def test_projection_idempotent_and_nonexpansive():
    rng = np.random.default_rng(1)
    m = sum(s for _, s in CONES)
    V = rng.normal(size=(10_000, m)) * rng.choice([1e-3, 1.0, 1e3], size=(10_000, 1))
    W = rng.normal(size=(10_000, m)) * rng.choice([1e-3, 1.0, 1e3], size=(10_000, 1))
    for v, w in zip(V, W):
        pv, pw = project_cone(v, CONES), project_cone(w, CONES)
        scale = max(1.0, np.abs(v).max())
        assert np.abs(project_cone(pv, CONES) - pv).max() <= 1e-12 * scale
        assert np.linalg.norm(pv - pw) <= np.linalg.norm(v - w) + 1e-12 * max(scale, np.abs(w).max())


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=6))
def test_soc_projection_lands_in_cone(v):
    p = project_cone(np.array(v), (SOC, len(v)))
    assert np.linalg.norm(p[1:]) <= p[0] + 1e-9 * max(1.0, abs(p[0]))


def test_lp_optimum():
    sol = solve(lp_x_ge_3())
    assert sol.status == OPTIMAL
    assert sol.z[0] == pytest.approx(3.0, abs=1e-6)
    assert sol.objective == pytest.approx(3.0, abs=1e-6)


def test_socp_optimum():
    sol = solve(socp_sqrt2())
    assert sol.status == OPTIMAL
    assert sol.z[0] == pytest.approx(np.sqrt(2), abs=1e-6)


def test_dual_certificate_in_dual_cone():
    sol = solve(socp_sqrt2())
    y = sol.y
    assert np.linalg.norm(y[1:]) <= y[0] + 1e-6
    prog = socp_sqrt2()
    assert np.allclose(prog.c + prog.A.T @ y, 0, atol=1e-6)


def test_infeasible_detected():
    # x <= -1 and x >= 0
    prog = ConicProgram(sp.csc_matrix([[1.0], [-1.0]]), np.array([-1.0, 0.0]), np.array([1.0]), [(NONNEG, 2)])
    assert solve(prog).status == INFEASIBLE


def test_unbounded_detected():
    prog = ConicProgram(sp.csc_matrix([[-1.0]]), np.array([0.0]), np.array([-1.0]), [(NONNEG, 1)])
    assert solve(prog).status == UNBOUNDED


def test_equality_constrained_qp_free_lp():
    # min x1 + x2  s.t. x1 - x2 = 1, x >= 0  -> (1, 0)
    A = sp.csc_matrix(np.array([[1.0, -1.0], [-1.0, 0.0], [0.0, -1.0]]))
    prog = ConicProgram(A, np.array([1.0, 0.0, 0.0]), np.array([1.0, 1.0]), [(ZERO, 1), (NONNEG, 2)])
    sol = solve(prog)
    assert np.allclose(sol.z, [1.0, 0.0], atol=1e-6)


def test_max_iters_reported():
    sol = solve(socp_sqrt2(), SolverSettings(max_iters=3))
    assert sol.status == "MaxIters"
    assert sol.iterations == 3


def test_solution_round_trip(tmp_path):
    sol = solve(lp_x_ge_3())
    write_solution(sol, tmp_path / "s.json")
    again = read_solution(tmp_path / "s.json")
    assert np.array_equal(again.z, sol.z) and again.status == sol.status
    assert Solution.from_dict(sol.to_dict()).to_dict() == sol.to_dict()


def test_solver_deterministic():
    a = solve(socp_sqrt2()).to_dict()
    b = solve(socp_sqrt2()).to_dict()
    assert a == b


def test_unregistered_name():
    with pytest.raises(NotRegistered):
        solve(lp_x_ge_3(), solver="nope")


def test_template_needs_placeholders():
    with pytest.raises(ValueError):
        register_external_solver("bad", "cat {problem}")


def test_external_failure(tmp_path):
    register_external_solver("broken", [sys.executable, "-c", "import sys; sys.exit(3)", "{problem}", "{solution}"])
    try:
        with pytest.raises(ExternalSolverFailure):
            solve(lp_x_ge_3(), solver="broken")
    finally:
        unregister_external_solver("broken")


def test_external_cvxpy_matches_builtin():
    pytest.importorskip("cvxpy")
    register_external_solver("cvx", [sys.executable, str(ADAPTER), "{problem}", "{solution}"])
    try:
        assert "cvx" in registered_solvers()
        ext = solve(lp_x_ge_3(), solver="cvx")
        assert ext.z[0] == pytest.approx(3.0, abs=1e-5)
        assert ext.z[0] == pytest.approx(solve(lp_x_ge_3()).z[0], abs=1e-5)
        ext = solve(socp_sqrt2(), solver="cvx")
        assert ext.z[0] == pytest.approx(np.sqrt(2), abs=1e-5)
    finally:
        unregister_external_solver("cvx")


def random_socp(seed, n=6, m_soc=3):
    """Feasible, bounded random conic program: box on x plus random SOC rows."""
    rng = np.random.default_rng(seed)
    rows, b, cones = [], [], []
    rows.append(np.vstack([np.eye(n), -np.eye(n)]))
    b.append(np.ones(2 * n))
    cones.append((NONNEG, 2 * n))
    x0 = rng.uniform(-0.5, 0.5, n)
    for _ in range(m_soc):
        G = rng.normal(size=(3, n))
        s0 = np.array([2.0 + np.linalg.norm(rng.normal(size=2)), *rng.normal(size=2)])
        rows.append(G)
        b.append(G @ x0 + s0)
        cones.append((SOC, 3))
    A = sp.csc_matrix(np.vstack(rows))
    return ConicProgram(A, np.concatenate(b), rng.normal(size=n), cones)


@pytest.mark.parametrize("seed", range(5))
def test_random_socp_against_cvxpy(seed):
    cp = pytest.importorskip("cvxpy")
    prog = random_socp(seed)
    x = cp.Variable(prog.n_vars)
    A = prog.A.toarray()
    cons, r = [], 0
    for kind, size in prog.cones:
        expr = prog.b[r : r + size] - A[r : r + size] @ x
        cons.append(expr >= 0 if kind == NONNEG else cp.SOC(expr[0], expr[1:]))
        r += size
    ref = cp.Problem(cp.Minimize(prog.c @ x), cons).solve(solver=cp.CLARABEL)
    sol = solve(prog)
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(ref, abs=1e-6 * (1 + abs(ref)))
