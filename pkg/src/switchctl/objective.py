"""Objective values, smooth gradient and switching diagnostics."""

from dataclasses import dataclass

import numpy as np

from .forward import obs_inner, solve_forward
from .timegrid import H1


@dataclass(frozen=True)
class ObjectiveParams:
    alpha: float
    beta: float = 0.0
    eps: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        for name in ("beta", "eps", "gamma"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    def replace(self, **kw):
        return ObjectiveParams(**{**self.__dict__, **kw})


@dataclass(frozen=True)
class Problem:
    """Discretization plus target, initial state and the assembled Gram data."""

    disc: object
    y_d: np.ndarray
    y0: np.ndarray
    gram: object

    @property
    def m(self):
        return self.disc.m

    @property
    def weights(self):
        return self.disc.ctrl_weights

    @property
    def mode(self):
        return self.disc.mode

    @property
    def lap(self):
        """Temporal stiffness acting on one control component (zero in pc mode)."""
        if self.mode == H1:
            return self.disc.grid.stiffness
        return np.zeros((self.m, self.m))

    @property
    def T(self):
        return self.disc.grid.T


def eval_tracking(u, problem):
    """``0.5 |S u - y_d|^2_obs`` by an explicit forward solve."""
    r = solve_forward(problem.disc, u, problem.y0) - problem.y_d
    return 0.5 * obs_inner(problem.disc, r, r)


def tracking_from_gram(u, gram):
    """Same value as :func:`eval_tracking`, evaluated from the Gram data.

    Accepts a batch of controls of shape ``(..., 2, m)``.
    """
    u = np.asarray(u, dtype=float)
    flat = u.reshape(u.shape[:-2] + (-1,))
    quad = np.einsum("...i,ij,...j->...", flat, gram.K, flat)
    return 0.5 * quad + flat @ gram.affine_term + gram.const


def eval_switch_penalty(u, weights):
    u = np.asarray(u, dtype=float)
    return np.sum(weights * np.abs(u[..., 0, :] * u[..., 1, :]), axis=-1)


def eval_J(u, params, problem):
    """Discrete objective including the switching and Moreau-Yosida terms."""
    u = np.asarray(u, dtype=float)
    w = problem.weights
    val = tracking_from_gram(u, problem.gram)
    val = val + 0.5 * params.alpha * np.sum(w * u * u, axis=(-2, -1))
    if params.eps:
        lap = problem.lap
        val = val + 0.5 * params.eps * np.einsum("...ij,jk,...ik->...", u, lap, u)
    prod = u[..., 0, :] * u[..., 1, :]
    if params.beta:
        val = val + params.beta * np.sum(w * np.abs(prod), axis=-1)
    if params.gamma:
        val = val + 0.5 * params.gamma * np.sum(w * prod**2, axis=-1)
    return val


def grad_smooth(u, params, problem):
    """Coefficient gradient of all terms except the switching penalty."""
    u = np.asarray(u, dtype=float)
    w = problem.weights
    g = (problem.gram.K @ u.ravel() + problem.gram.affine_term).reshape(u.shape)
    g += params.alpha * w * u
    if params.eps:
        g += params.eps * (u @ problem.lap.T)
    if params.gamma:
        g += params.gamma * w * u * u[::-1] ** 2
    return g


def switching_error(u):
    u = np.asarray(u, dtype=float)
    return float(np.max(np.abs(u[0] * u[1]), initial=0.0))


def count_switching_points(u):
    """Number of ``j`` where the dominance ``|u1| >= |u2|`` differs between ``t_j`` and ``t_{j+1}``."""
    u = np.asarray(u, dtype=float)
    dominant = np.abs(u[0]) >= np.abs(u[1])
    return int(np.count_nonzero(dominant[1:] != dominant[:-1]))


def default_activity_tol(u):
    return 1e-8 * float(np.max(np.abs(u), initial=0.0))


def measure_nonswitching_arcs(u, grid, mode=H1, activity_tol=None):
    """Maximal runs where both components exceed ``activity_tol``.

    In H1 mode each node owns its lumped cell ``[t_j - tau/2, t_j + tau/2]``
    (clipped to ``[0, T]``); in pc mode each value owns its interval.
    Returns ``(arcs, max_length)`` with arcs as ``(start, end)`` times.
    """
    u = np.asarray(u, dtype=float)
    if activity_tol is None:
        activity_tol = default_activity_tol(u)
    both = (np.abs(u[0]) > activity_tol) & (np.abs(u[1]) > activity_tol)
    if mode == H1:
        left = np.clip(grid.nodes - grid.tau / 2, 0.0, grid.T)
        right = np.clip(grid.nodes + grid.tau / 2, 0.0, grid.T)
    else:
        left, right = grid.nodes[:-1], grid.nodes[1:]

    arcs = []
    j, n = 0, len(both)
    while j < n:
        if both[j]:
            start = j
            while j + 1 < n and both[j + 1]:
                j += 1
            arcs.append((float(left[start]), float(right[j])))
        j += 1
    max_len = max((b - a for a, b in arcs), default=0.0)
    return arcs, max_len
