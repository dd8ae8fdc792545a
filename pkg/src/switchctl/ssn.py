"""Semismooth Newton method for the Moreau-Yosida regularized primal-dual system.

Unknowns are the control ``u`` (shape ``(2, m)``) and the multiplier ``q``
(length ``m``). The residual is

    F1 = K u + g0 + alpha W u + eps L u + W q (u2, u1)
    F2 = gamma u1 u2 - max(0, q - beta) - min(0, q + beta)

with ``W`` the lumped control weights and ``L`` the temporal stiffness.
"""

from dataclasses import dataclass, field
import warnings

import numpy as np
import scipy.linalg as sla

STANDARD = "standard"
LITERAL = "literal"  # alternative selection: q <= beta and q >= -beta


class SingularNewtonMatrix(np.linalg.LinAlgError):
    def __init__(self, msg, pattern):
        super().__init__(msg)
        self.pattern = pattern


@dataclass(frozen=True)
class ActivePattern:
    upper: np.ndarray
    lower: np.ndarray

    @classmethod
    def from_q(cls, q, beta):
        return cls(q > beta, q < -beta)

    @property
    def active(self):
        return self.upper | self.lower


@dataclass
class NewtonReport:
    residual_norms: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    termination: str = ""


def complementarity_derivative(q, beta, convention=STANDARD):
    """Newton derivative of ``max(0, q - beta) + min(0, q + beta)`` w.r.t. ``q``."""
    if convention == STANDARD:
        return ((q > beta) | (q < -beta)).astype(float)
    if convention == LITERAL:
        return (q <= beta).astype(float) + (q >= -beta).astype(float)
    raise ValueError(f"unknown Newton derivative convention {convention!r}")


def residual(u, q, params, problem):
    """Stationarity ``F1`` (shape ``(2, m)``) and complementarity ``F2`` (length ``m``)."""
    u = np.asarray(u, dtype=float)
    q = np.asarray(q, dtype=float)
    w = problem.weights
    beta, gamma = params.beta, params.gamma
    F1 = (problem.gram.K @ u.ravel() + problem.gram.affine_term).reshape(u.shape)
    F1 += params.alpha * w * u
    if params.eps:
        F1 += params.eps * (u @ problem.lap.T)
    F1 += w * q * u[::-1]
    F2 = gamma * u[0] * u[1] - np.maximum(0.0, q - beta) - np.minimum(0.0, q + beta)
    return F1, F2


def residual_norm(F1, F2):
    return float(np.sqrt(np.sum(F1**2) + np.sum(F2**2)))


def smooth_hessian(params, problem):
    """``K + alpha W + eps L`` on the stacked control vector."""
    m = problem.m
    H = problem.gram.K.copy()
    H[np.diag_indices(2 * m)] += params.alpha * np.tile(problem.weights, 2)
    if params.eps:
        H[:m, :m] += params.eps * problem.lap
        H[m:, m:] += params.eps * problem.lap
    return H


def newton_matrix(u, q, params, problem, convention=STANDARD):
    m = problem.m
    w = problem.weights
    u = np.asarray(u, dtype=float)
    J = np.zeros((3 * m, 3 * m))
    J[:2 * m, :2 * m] = smooth_hessian(params, problem)
    idx = np.arange(m)
    J[idx, m + idx] += w * q
    J[m + idx, idx] += w * q
    J[idx, 2 * m + idx] = w * u[1]
    J[m + idx, 2 * m + idx] = w * u[0]
    J[2 * m + idx, idx] = params.gamma * u[1]
    J[2 * m + idx, m + idx] = params.gamma * u[0]
    J[2 * m + idx, 2 * m + idx] = -complementarity_derivative(q, params.beta, convention)
    return J


def newton_step(u, q, params, problem, convention=STANDARD):
    """Solve the Newton system; returns ``(du, dq, pattern)``."""
    if not params.gamma > 0:
        raise ValueError("newton_step requires gamma > 0; use init_solve for gamma = 0")
    m = problem.m
    pattern = ActivePattern.from_q(np.asarray(q), params.beta)
    F1, F2 = residual(u, q, params, problem)
    J = newton_matrix(u, q, params, problem, convention)
    rhs = -np.concatenate([F1.ravel(), F2])
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", sla.LinAlgWarning)
            lu, piv = sla.lu_factor(J, check_finite=True)
    except (ValueError, np.linalg.LinAlgError, sla.LinAlgWarning) as exc:
        raise SingularNewtonMatrix(f"Newton matrix factorization failed: {exc}", pattern) from exc
    if np.any(np.diag(lu) == 0.0):
        raise SingularNewtonMatrix("Newton matrix is singular", pattern)
    d = sla.lu_solve((lu, piv), rhs)
    if not np.all(np.isfinite(d)):
        raise SingularNewtonMatrix("Newton step is not finite", pattern)
    return d[:2 * m].reshape(2, m), d[2 * m:], pattern


def ssn_solve(u0, q0, params, problem, max_iter=5, rel_tol=1e-6, abs_tol=1e-7,
              convention=STANDARD, polish=0):
    """Full-step semismooth Newton iteration; no globalization.

    Converged once ``|F| <= abs_tol`` or ``|F| <= rel_tol |F(u0, q0)|``. After
    that, up to ``polish`` further steps are taken within the ``max_iter``
    budget, each kept only if it at least halves the residual (so rounding-level
    noise and active-set cycling are discarded).
    """
    u = np.array(u0, dtype=float)
    q = np.array(q0, dtype=float)
    report = NewtonReport()
    nrm = residual_norm(*residual(u, q, params, problem))
    report.residual_norms.append(nrm)
    nrm0 = nrm
    polished = 0
    while True:
        reason = ""
        if nrm <= abs_tol:
            reason = "absolute tolerance"
        elif nrm <= rel_tol * nrm0:
            reason = "relative tolerance"
        if reason and (polished >= polish or report.iterations >= max_iter):
            report.converged, report.termination = True, reason
            break
        if report.iterations >= max_iter:
            report.termination = "max iterations"
            break
        if reason:
            polished += 1
            try:
                du, dq, _ = newton_step(u, q, params, problem, convention)
            except SingularNewtonMatrix:
                report.converged, report.termination = True, reason
                break
            nrm_new = residual_norm(*residual(u + du, q + dq, params, problem))
            if not nrm_new <= 0.5 * nrm:
                report.converged, report.termination = True, reason
                break
        else:
            du, dq, _ = newton_step(u, q, params, problem, convention)
        u += du
        q += dq
        report.iterations += 1
        nrm = residual_norm(*residual(u, q, params, problem))
        report.residual_norms.append(nrm)
    return u, q, report


def init_solve(params, problem):
    """Minimizer of the smooth quadratic part (no switching terms); ``q = 0``."""
    H = smooth_hessian(params, problem)
    try:
        c = sla.cho_factor(H)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"smooth Hessian is not positive definite: {exc}") from exc
    u = -sla.cho_solve(c, problem.gram.affine_term)
    return u.reshape(2, problem.m), np.zeros(problem.m)
