"""Structured P1 triangulation of the square (-1, 1)^2 and FEM assembly."""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class SpaceMesh:
    nx: int
    nodes: np.ndarray  # (n_nodes, 2)
    triangles: np.ndarray  # (n_tri, 3), counter-clockwise

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    def areas(self):
        p = self.nodes[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def centroids(self):
        return self.nodes[self.triangles].mean(axis=1)


@dataclass(frozen=True)
class Region:
    """Union of whole triangles selected by a predicate on their centroids."""

    name: str
    predicate: Callable[[np.ndarray], np.ndarray] = field(compare=False)

    def mask(self, mesh):
        return np.asarray(self.predicate(mesh.centroids()), dtype=bool)

    @classmethod
    def everywhere(cls, name="all"):
        return cls(name, lambda c: np.ones(len(c), dtype=bool))

    @classmethod
    def halfplane(cls, axis, side, value, name=None):
        if side not in ("le", "lt", "ge", "gt"):
            raise ValueError(f"unknown half-plane side {side!r}")
        ops = {"le": np.less_equal, "lt": np.less, "ge": np.greater_equal, "gt": np.greater}
        op = ops[side]
        return cls(name or f"x{axis + 1}{side}{value:g}", lambda c: op(c[:, axis], value))

    @classmethod
    def box(cls, lo, hi, name=None):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        return cls(name or "box", lambda c: np.all((c >= lo) & (c <= hi), axis=1))


@dataclass(frozen=True)
class SpatialOperators:
    mass: sp.csr_matrix
    stiffness: sp.csr_matrix
    obs_mass: sp.csr_matrix
    control_loads: np.ndarray  # (n_controls, n_nodes)


def build_mesh(nx):
    """Uniform (nx+1)^2 grid on [-1,1]^2, each cell split along its SW-NE diagonal."""
    if int(nx) != nx or nx < 2 or nx % 2:
        raise ValueError(f"nx must be an even integer >= 2, got {nx}")
    nx = int(nx)
    x = np.linspace(-1.0, 1.0, nx + 1)
    X, Y = np.meshgrid(x, x)  # row index = x2, column index = x1
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    i, j = np.meshgrid(np.arange(nx), np.arange(nx))
    n00 = (j * (nx + 1) + i).ravel()
    n10 = n00 + 1
    n01 = n00 + nx + 1
    n11 = n01 + 1
    lower = np.column_stack([n00, n10, n11])
    upper = np.column_stack([n00, n11, n01])
    triangles = np.vstack([lower, upper])
    return SpaceMesh(nx, nodes, triangles)


def _element_matrices(mesh):
    p = mesh.nodes[mesh.triangles]
    area = mesh.areas()
    # gradients of barycentric coordinates
    e = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    grads = np.stack([-e[..., 1], e[..., 0]], axis=-1) / (2.0 * area[:, None, None])
    stiff = area[:, None, None] * np.einsum("tak,tbk->tab", grads, grads)
    ref = (np.ones((3, 3)) + np.eye(3)) / 12.0
    mass = area[:, None, None] * ref
    return mass, stiff


def _scatter(mesh, local, mask=None):
    tri = mesh.triangles
    if mask is not None:
        tri = tri[mask]
        local = local[mask]
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    n = mesh.n_nodes
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def assemble_operators(mesh, control_regions, obs_region, control_scale=1.0):
    """Exact P1 mass, stiffness, observation mass and control load vectors."""
    mass_loc, stiff_loc = _element_matrices(mesh)
    mass = _scatter(mesh, mass_loc)
    stiffness = _scatter(mesh, stiff_loc)
    obs_mass = _scatter(mesh, mass_loc, obs_region.mask(mesh))

    area = mesh.areas()
    loads = np.zeros((len(control_regions), mesh.n_nodes))
    for k, region in enumerate(control_regions):
        m = region.mask(mesh)
        np.add.at(loads[k], mesh.triangles[m].ravel(), np.repeat(area[m] / 3.0, 3))
    return SpatialOperators(mass, stiffness, obs_mass, control_scale * loads)
