import numpy as np
import pytest

from switchctl.homotopy import run_homotopy
from switchctl.objective import ObjectiveParams, grad_smooth
from switchctl.ssn import (
    LITERAL, STANDARD, ActivePattern, SingularNewtonMatrix, complementarity_derivative,
    init_solve, newton_matrix, newton_step, residual, residual_norm, smooth_hessian, ssn_solve,
)

from support import make_config, make_problem, random_control, zero_problem


@pytest.fixture(scope="module")
def small():
    return make_problem(nx=4, M=21)


@pytest.fixture(scope="module")
def converged(small):
    """A few converged (params, u, q) nodes from a homotopy run on the small problem."""
    nodes = []
    rep = run_homotopy(small, 1e-6, 1e-5, make_config().schedule,
                       callback=lambda rec, p, u, q: nodes.append((rec, p, u, q)))
    return [n for n in nodes if n[0].phase != "init" and n[0].newton.converged]


def test_residual_at_origin(small):
    p = ObjectiveParams(1e-3, 0.1, 1e-4, 5.0)
    F1, F2 = residual(np.zeros((2, small.m)), np.zeros(small.m), p, small)
    np.testing.assert_array_equal(F1.ravel(), small.gram.affine_term)
    assert not F2.any()


def test_inactive_complementarity_is_product(small):
    rng = np.random.default_rng(0)
    u = random_control(rng, small.m)
    p = ObjectiveParams(1e-3, 0.1, 1e-4, 5.0)
    _, F2 = residual(u, np.zeros(small.m), p, small)
    np.testing.assert_allclose(F2, 5.0 * u[0] * u[1], rtol=1e-15)


def test_complementarity_derivative_conventions():
    q = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
    np.testing.assert_array_equal(complementarity_derivative(q, 1.0), [1, 0, 0, 0, 1])
    np.testing.assert_array_equal(complementarity_derivative(q, 1.0, LITERAL), [1, 2, 2, 2, 1])
    with pytest.raises(ValueError):
        complementarity_derivative(q, 1.0, "other")


def test_active_pattern_disjoint():
    q = np.linspace(-3, 3, 61)
    pat = ActivePattern.from_q(q, 1.0)
    assert not np.any(pat.upper & pat.lower)
    np.testing.assert_array_equal(pat.active, np.abs(q) > 1.0)


def test_inactive_step_from_single_component(small):
    # |q| <= beta and u2 = 0: the step is the smooth minimizer over {u2 = 0}
    m = small.m
    p = ObjectiveParams(1e-3, 1e6, 1e-4, 1.0)
    u = np.vstack([np.ones(m), np.zeros(m)])
    du, dq, pat = newton_step(u, np.zeros(m), p, small)
    assert not pat.active.any()
    H = smooth_hessian(p, small)
    target = -np.linalg.solve(H[:m, :m], small.gram.affine_term[:m])
    np.testing.assert_allclose(u[0] + du[0], target, rtol=1e-10, atol=1e-10 * np.abs(target).max())
    assert np.max(np.abs(du[1])) <= 1e-12
    # u2 stays zero, so the first component's stationarity holds exactly
    F1, _ = residual(u + du, dq, p, small)
    assert np.max(np.abs(F1[0])) <= 1e-10 * np.abs(small.gram.affine_term).max()


def test_symmetric_step_preserves_symmetry():
    _, problem = zero_problem(control_regions=["all", "all"], y0=1.0)
    rng = np.random.default_rng(4)
    v = rng.standard_normal(problem.m)
    u = np.vstack([v, v])
    du, dq, _ = newton_step(u, np.zeros(problem.m), ObjectiveParams(1e-2, 1.0, 1e-3, 3.0), problem)
    np.testing.assert_allclose(du[0], du[1], rtol=1e-9, atol=1e-12)


def test_all_active_block_elimination(small):
    m = small.m
    rng = np.random.default_rng(5)
    u = random_control(rng, m)
    q = np.where(rng.random(m) < 0.5, -1.0, 1.0) * rng.uniform(2, 3, m)
    p = ObjectiveParams(1e-3, 1.0, 1e-4, 4.0)
    du, dq, pat = newton_step(u, q, p, small)
    assert pat.active.all()
    F1, F2 = residual(u, q, p, small)
    w = small.weights
    c = np.concatenate([w * u[1], w * u[0]])
    r = np.concatenate([p.gamma * u[1], p.gamma * u[0]])
    idx = np.arange(m)
    R = smooth_hessian(p, small)
    R[idx, m + idx] += w * q
    R[m + idx, idx] += w * q
    D = np.zeros((2 * m, m))
    D[idx, idx] = c[:m]
    D[m + idx, idx] = c[m:]
    E = np.zeros((m, 2 * m))
    E[idx, idx] = r[:m]
    E[idx, m + idx] = r[m:]
    # dq = E du + F2 substituted into the first block
    red = R + D @ E
    du_ref = np.linalg.solve(red, -F1.ravel() - D @ F2)
    np.testing.assert_allclose(du.ravel(), du_ref, rtol=1e-8, atol=1e-12)
    np.testing.assert_allclose(dq, E @ du_ref + F2, rtol=1e-8, atol=1e-12)


def test_newton_matrix_block_symmetry(small):
    rng = np.random.default_rng(6)
    u = random_control(rng, small.m)
    q = 0.01 * rng.standard_normal(small.m)
    J = newton_matrix(u, q, ObjectiveParams(1e-3, 1.0, 1e-4, 2.0), small)
    A = J[:2 * small.m, :2 * small.m]
    np.testing.assert_allclose(A, A.T, rtol=0, atol=1e-15 * np.abs(A).max())


def test_singular_matrix_reports_pattern(small):
    p = ObjectiveParams(1e-3, 1.0, 1e-4, 1.0)
    with pytest.raises(SingularNewtonMatrix) as info:
        newton_step(np.zeros((2, small.m)), np.zeros(small.m), p, small)
    assert info.value.pattern.upper.shape == (small.m,)


def test_gamma_zero_rejected(small):
    with pytest.raises(ValueError):
        newton_step(np.zeros((2, small.m)), np.zeros(small.m), ObjectiveParams(1.0), small)


def test_converged_start_takes_no_steps(converged, small):
    rec, p, u, q = converged[-1]
    u2, q2, rep = ssn_solve(u, q, p, small)
    assert rep.iterations == 0 and rep.converged
    np.testing.assert_array_equal(u2, u)


def test_max_iter_zero(small):
    p = ObjectiveParams(1e-3, 1.0, 1e-4, 1.0)
    u0 = np.ones((2, small.m))
    u, q, rep = ssn_solve(u0, np.zeros(small.m), p, small, max_iter=0)
    np.testing.assert_array_equal(u, u0)
    assert rep.iterations == 0 and not rep.converged
    assert rep.termination == "max iterations"
    assert len(rep.residual_norms) == 1


def test_converged_nodes_satisfy_complementarity(converged, small):
    for rec, p, u, q in converged:
        F1, F2 = residual(u, q, p, small)
        assert np.max(np.abs(F2)) <= 1e-7
        assert rec.newton.residual_norms[-1] <= max(1e-7, 1e-6 * rec.newton.residual_norms[0])
        # the first relation is the smooth gradient plus the selection w q (u2, u1)
        sel = grad_smooth(u, p.replace(gamma=0.0), small) + small.weights * q * u[::-1]
        np.testing.assert_allclose(sel, F1, rtol=0, atol=1e-12 * max(1.0, np.abs(F1).max()))


def test_converged_relation_pointwise(converged, small):
    # a fresh solve to tight tolerance reproduces u1 u2 = (max + min) / gamma
    rec, p, u, q = converged[len(converged) // 2]
    u, q, rep = ssn_solve(u, q, p, small, max_iter=20, rel_tol=0.0, abs_tol=1e-13)
    assert rep.converged
    rhs = (np.maximum(0, q - p.beta) + np.minimum(0, q + p.beta)) / p.gamma
    scale = max(1.0, np.abs(u).max() ** 2)
    assert np.max(np.abs(u[0] * u[1] - rhs)) <= 1e-8 * scale


def test_determinism(converged, small):
    rec, p, u, q = converged[3]
    u0 = u + 1e-3
    a = ssn_solve(u0, q, p, small)
    b = ssn_solve(u0, q, p, small)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])
    assert a[2] == b[2]


def test_literal_convention_runs(converged, small):
    rec, p, u, q = converged[-1]
    _, _, rep = ssn_solve(u, q, p, small, convention=LITERAL)
    assert rep.residual_norms[0] == residual_norm(*residual(u, q, p, small))


def test_init_solve_zero_problem():
    _, problem = zero_problem()
    u, q = init_solve(ObjectiveParams(1e-2, eps=1e-3), problem)
    assert not u.any() and not q.any()


def test_init_solve_stationary(small):
    p = ObjectiveParams(1e-3, eps=1e-4)
    u, q = init_solve(p, small)
    g = grad_smooth(u, p, small)
    assert np.linalg.norm(g) <= 1e-10 * np.linalg.norm(small.gram.affine_term)


def test_init_solve_shrinks_with_alpha(small):
    norms = [np.linalg.norm(init_solve(ObjectiveParams(a, eps=1e-4), small)[0]) for a in (1, 10, 100)]
    assert norms[0] > norms[1] > norms[2]


def test_polish_keeps_only_contracting_steps(converged, small):
    rec, p, u, q = converged[2]
    _, _, rep = ssn_solve(u + 1e-2, q, p, small, max_iter=10, polish=3)
    hist = rep.residual_norms
    assert rep.converged
    assert all(b < a for a, b in zip(hist, hist[1:]))
