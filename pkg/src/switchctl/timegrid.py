"""Uniform time grid with trapezoidal (lumped) weights and the 1D P1 stiffness."""

from dataclasses import dataclass

import numpy as np

H1 = "h1"
PIECEWISE_CONSTANT = "pc"
MODES = (H1, PIECEWISE_CONSTANT)


@dataclass(frozen=True)
class TimeGrid:
    T: float
    M: int
    nodes: np.ndarray
    tau: float
    weights: np.ndarray
    stiffness: np.ndarray  # dense (M, M)

    def control_weights(self, mode):
        """Pairing weights of the control space: nodal in H1 mode, per interval otherwise."""
        if mode == H1:
            return self.weights
        return np.full(self.M - 1, self.tau)

    def control_size(self, mode):
        return self.M if mode == H1 else self.M - 1

    def control_times(self, mode):
        if mode == H1:
            return self.nodes
        return 0.5 * (self.nodes[:-1] + self.nodes[1:])


def build_time_grid(T, M):
    if not T > 0:
        raise ValueError(f"final time must be positive, got {T}")
    if int(M) != M or M < 2:
        raise ValueError(f"need at least two time nodes, got {M}")
    M = int(M)
    T = float(T)
    tau = T / (M - 1)
    nodes = np.linspace(0.0, T, M)
    weights = np.full(M, tau)
    weights[[0, -1]] = tau / 2

    lap = np.zeros((M, M))
    idx = np.arange(M - 1)
    lap[idx, idx] += 1.0
    lap[idx + 1, idx + 1] += 1.0
    lap[idx, idx + 1] -= 1.0
    lap[idx + 1, idx] -= 1.0
    lap /= tau
    return TimeGrid(T, M, nodes, tau, weights, lap)


def consistent_mass(grid):
    """Consistent 1D P1 mass matrix; only used to cross-check the lumping."""
    M, tau = grid.M, grid.tau
    mass = np.zeros((M, M))
    for k in range(M - 1):
        mass[k:k + 2, k:k + 2] += tau / 6 * np.array([[2.0, 1.0], [1.0, 2.0]])
    return mass
