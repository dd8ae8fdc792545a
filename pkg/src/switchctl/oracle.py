"""Independent checks: exhaustive grid minimization, finite differences, exact switching."""

from dataclasses import dataclass, replace
import itertools

import numpy as np

from .forward import estimate_operator_norm
from .homotopy import run_homotopy
from .objective import eval_J, grad_smooth
from .timegrid import PIECEWISE_CONSTANT

MAX_ENUMERATION = 10**7


class EnumerationTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class TinyInstance:
    problem: object
    value_grid: tuple

    def __post_init__(self):
        p = self.problem
        if p.mode != PIECEWISE_CONSTANT:
            raise ValueError("tiny instances use piecewise-constant controls")
        if p.disc.mesh.nx > 4 or p.disc.grid.M > 5:
            raise ValueError("tiny instances need nx <= 4 and M <= 5")
        if self.size > MAX_ENUMERATION:
            raise EnumerationTooLarge(f"{self.size} candidates exceed {MAX_ENUMERATION}")

    @property
    def size(self):
        return len(self.value_grid) ** (2 * self.problem.m)


def brute_force_min(instance, params, chunk=65536):
    """Exhaustive minimum of the objective over the product value grid.

    Candidates are enumerated in lexicographic order of the flattened control
    ``[u1; u2]``; the first minimizer wins ties.
    """
    p = instance.problem
    m = p.m
    vals = np.array(sorted(instance.value_grid), dtype=float)
    best_val, best_u = np.inf, None
    combos = itertools.product(range(len(vals)), repeat=2 * m)
    while True:
        idx = np.fromiter(itertools.chain.from_iterable(itertools.islice(combos, chunk)),
                          dtype=np.intp)
        if idx.size == 0:
            break
        batch = vals[idx.reshape(-1, 2 * m)].reshape(-1, 2, m)
        J = eval_J(batch, params, p)
        k = int(np.argmin(J))
        if J[k] < best_val:
            best_val, best_u = float(J[k]), batch[k].copy()
    return best_val, best_u


def fd_gradient_check(problem, params, trials=10, step=1e-5, seed=0, scale=1.0):
    """Worst relative error between ``grad_smooth`` and central differences of ``eval_J``."""
    if params.beta != 0:
        raise ValueError("the finite-difference check needs beta = 0")
    rng = np.random.default_rng(seed)
    shape = (2, problem.m)
    worst = 0.0
    for _ in range(trials):
        u = scale * rng.standard_normal(shape)
        g = grad_smooth(u, params, problem)
        fd = np.empty(u.size)
        for i in range(u.size):
            e = np.zeros(u.size)
            e[i] = step
            e = e.reshape(shape)
            fd[i] = (eval_J(u + e, params, problem) - eval_J(u - e, params, problem)) / (2 * step)
        denom = max(np.linalg.norm(fd), np.linalg.norm(g))
        if denom == 0.0:
            continue
        worst = max(worst, float(np.linalg.norm(fd - g.ravel()) / denom))
    return worst


@dataclass
class SwitchingCheck:
    norm_S0_sq: float
    beta_threshold: float
    beta_max: float
    products: np.ndarray
    max_product: float
    scale: float
    report: object

    @property
    def relative(self):
        return self.max_product / self.scale


def check_exact_switching_pc(problem, alpha, schedule, margin=1.0):
    """Run the homotopy with beta forced above ``|S_0|^2 + alpha`` and inspect the products.

    ``margin`` multiplies the threshold; the beta-up phase then continues past it
    on the schedule's geometric grid.
    """
    if problem.mode != PIECEWISE_CONSTANT:
        raise ValueError("exact switching is only guaranteed for piecewise-constant controls")
    norm = estimate_operator_norm(problem.gram.K, np.tile(problem.weights, 2))
    threshold = norm + alpha
    sched = replace(schedule, beta_floor=margin * threshold)
    rep = run_homotopy(problem, alpha, 0.0, sched)
    prods = rep.u[0] * rep.u[1]
    scale = max(float(np.max(np.abs(rep.u[0])) * np.max(np.abs(rep.u[1]))), 1.0)
    return SwitchingCheck(norm, threshold, rep.beta_max, prods,
                          float(np.max(np.abs(prods), initial=0.0)), scale, rep)
