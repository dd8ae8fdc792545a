"""Implicit-Euler control-to-state map, its exact discrete adjoint and the Gram matrix.

Controls are arrays of shape ``(2, m)`` with ``m = M`` nodal values in H1 mode
and ``m = M - 1`` interval values in piecewise-constant mode. In H1 mode the
step ``t_k -> t_{k+1}`` is driven by the nodal value at ``t_{k+1}``; in
piecewise-constant mode by the value on interval ``k``.
"""

from dataclasses import dataclass
import logging

import numpy as np
from scipy.sparse.linalg import splu

from .timegrid import H1, MODES

logger = logging.getLogger(__name__)


class ForwardSolveError(RuntimeError):
    pass


class PowerIterationError(RuntimeError):
    def __init__(self, msg, estimate, vector):
        super().__init__(msg)
        self.estimate = estimate
        self.vector = vector


class Discretization:
    """Space-time discretization with a cached factorization of ``M_x + tau A_x``."""

    def __init__(self, mesh, ops, grid, mode=H1):
        if mode not in MODES:
            raise ValueError(f"unknown control mode {mode!r}")
        self.mesh = mesh
        self.ops = ops
        self.grid = grid
        self.mode = mode
        system = (ops.mass + grid.tau * ops.stiffness).tocsc()
        try:
            self._lu = splu(system)
        except RuntimeError as exc:
            raise ForwardSolveError(f"factorization of the time-step matrix failed: {exc}") from exc

    @property
    def m(self):
        return self.grid.control_size(self.mode)

    @property
    def n_nodes(self):
        return self.mesh.n_nodes

    @property
    def ctrl_weights(self):
        return self.grid.control_weights(self.mode)

    def _solve(self, rhs):
        out = self._lu.solve(rhs)
        if not np.all(np.isfinite(out)):
            raise ForwardSolveError("time-step solve produced non-finite values")
        return out

    def forcing(self, u):
        """Per-step control values, shape ``(..., 2, M-1)``."""
        u = np.asarray(u, dtype=float)
        if u.shape[-1] != self.m:
            raise ValueError(f"control has {u.shape[-1]} time values, expected {self.m}")
        return u[..., 1:] if self.mode == H1 else u

    def forcing_transpose(self, gf):
        """Adjoint of :meth:`forcing` in the Euclidean coefficient pairing."""
        if self.mode != H1:
            return gf
        out = np.zeros(gf.shape[:-1] + (self.m,))
        out[..., 1:] = gf
        return out


def solve_forward(disc, u, y0):
    """States ``y[k]`` at all time nodes, shape ``(M, n_nodes)``."""
    ops, grid = disc.ops, disc.grid
    f = disc.forcing(u)
    y = np.empty((grid.M, disc.n_nodes))
    y[0] = y0
    loads = ops.control_loads
    for k in range(grid.M - 1):
        rhs = ops.mass @ y[k] + grid.tau * (loads.T @ f[:, k])
        y[k + 1] = disc._solve(rhs)
    return y


def _linear_states_batch(disc, f):
    """Yield ``(k, Y_k)`` for a batch of zero-initial forward solves.

    ``f`` has shape ``(B, 2, M-1)``; ``Y_k`` has shape ``(n_nodes, B)``.
    """
    ops, grid = disc.ops, disc.grid
    loads = ops.control_loads
    y = np.zeros((disc.n_nodes, f.shape[0]))
    for k in range(grid.M - 1):
        rhs = ops.mass @ y + grid.tau * (loads.T @ f[:, :, k].T)
        y = disc._solve(rhs)
        yield k + 1, y


def obs_inner(disc, a, b):
    """Observation pairing: trapezoidal weights in time, ``obs_mass`` in space."""
    w = disc.grid.weights
    mb = (disc.ops.obs_mass @ np.asarray(b).T).T
    return float(np.sum(w * np.einsum("kn,kn->k", a, mb)))


def ctrl_inner(disc, u, v):
    return float(np.sum(disc.ctrl_weights * u * v))


def adjoint_gradient(disc, r):
    """Coefficient gradient ``G^T W_obs r`` of the linear map ``u -> obs(S_0 u)``.

    This is the Euclidean gradient of ``u -> <obs(S_0 u), r>_obs``; backward
    recursion with transposed time-step solves.
    """
    ops, grid = disc.ops, disc.grid
    r = np.asarray(r, dtype=float)
    if r.shape != (grid.M, disc.n_nodes):
        raise ValueError(f"residual has shape {r.shape}, expected {(grid.M, disc.n_nodes)}")
    data = grid.weights[:, None] * (ops.obs_mass @ r.T).T
    gf = np.zeros((ops.control_loads.shape[0], grid.M - 1))
    p = np.zeros(disc.n_nodes)
    for k in range(grid.M - 1, 0, -1):
        # mass and step matrix are symmetric
        p = disc._solve(data[k] + ops.mass @ p)
        gf[:, k - 1] = grid.tau * (ops.control_loads @ p)
    return disc.forcing_transpose(gf)


def apply_S0_adjoint(disc, r):
    """Adjoint of ``u -> obs(S_0 u)`` w.r.t. the lumped control pairing."""
    return adjoint_gradient(disc, r) / disc.ctrl_weights


@dataclass(frozen=True)
class GramData:
    """``K = G^T W_obs G`` and the affine data of the tracking term.

    ``tracking(u) = 0.5 u.K.u + g0.u + c0`` with ``u`` flattened as ``[u1; u2]``.
    """

    K: np.ndarray
    affine_term: np.ndarray
    const: float
    norm_S0_sq: float


def free_state(disc, y0):
    return solve_forward(disc, np.zeros((2, disc.m)), y0)


def gram_matrix(disc):
    m = disc.m
    basis = np.eye(2 * m).reshape(2 * m, 2, m)
    f = disc.forcing(basis)
    K = np.zeros((2 * m, 2 * m))
    w = disc.grid.weights
    for k, y in _linear_states_batch(disc, f):
        K += w[k] * (y.T @ (disc.ops.obs_mass @ y))
    return 0.5 * (K + K.T)


def assemble_gram(disc, y_d, y0):
    K = gram_matrix(disc)
    r0 = free_state(disc, y0) - y_d
    g0 = adjoint_gradient(disc, r0).ravel()
    c0 = 0.5 * obs_inner(disc, r0, r0)
    w2 = np.tile(disc.ctrl_weights, 2)
    norm = estimate_operator_norm(K, w2)
    return GramData(K, g0, c0, norm)


def estimate_operator_norm(K, weights, rtol=1e-8, max_iter=20000, seed=0):
    """Largest eigenvalue of ``K v = lambda W v`` by power iteration.

    Works on the symmetric form ``W^{-1/2} K W^{-1/2}``; the Rayleigh quotient
    is returned once its relative change falls below ``rtol``.
    """
    s = 1.0 / np.sqrt(np.asarray(weights, dtype=float))
    A = s[:, None] * K * s[None, :]
    if not np.any(A):
        return 0.0
    v = np.random.default_rng(seed).standard_normal(A.shape[0])
    v /= np.linalg.norm(v)
    lam = v @ A @ v
    for it in range(max_iter):
        Av = A @ v
        nrm = np.linalg.norm(Av)
        if nrm == 0.0:
            return 0.0
        v = Av / nrm
        lam_new = v @ A @ v
        if abs(lam_new - lam) <= rtol * abs(lam_new):
            logger.debug("power iteration converged after %d iterations", it + 1)
            return float(lam_new)
        lam = lam_new
    raise PowerIterationError(
        f"power iteration did not reach rtol={rtol} in {max_iter} iterations", float(lam), v
    )
