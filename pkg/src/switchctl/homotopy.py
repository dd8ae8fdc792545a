"""Three-phase (gamma, beta, gamma) continuation around the semismooth Newton solver."""

from dataclasses import dataclass, field, asdict
import logging

import numpy as np

from .objective import ObjectiveParams, count_switching_points, eval_J, switching_error
from .ssn import STANDARD, NewtonReport, SingularNewtonMatrix, init_solve, residual, residual_norm, ssn_solve

logger = logging.getLogger(__name__)

PHASES = ("init", "gamma-up", "beta-up", "gamma-down")


@dataclass(frozen=True)
class HomotopySchedule:
    beta_min: float = 1e-5
    gamma_min: float = 1e-9
    gamma_max: float = 1e2
    factor: float = 10.0
    sw_rel_tol: float = 1e-10
    beta_cap: float = 1e6
    max_iter: int = 5
    rel_tol: float = 1e-6
    abs_tol: float = 1e-7
    convention: str = STANDARD
    # extra Newton steps after the tolerance is met (see ssn_solve)
    polish: int = 1
    # beta-up only stops once beta exceeds this value
    beta_floor: float = 0.0

    def __post_init__(self):
        if not self.beta_min > 0:
            raise ValueError("beta_min must be positive")
        if not 0 < self.gamma_min <= self.gamma_max:
            raise ValueError("need 0 < gamma_min <= gamma_max")
        if not self.factor > 1:
            raise ValueError("factor must exceed 1")
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")

    def gamma_grid(self):
        """Ascending ``gamma_min * factor**k`` up to and including ``gamma_max``."""
        n = int(np.floor(np.log(self.gamma_max / self.gamma_min) / np.log(self.factor) + 1e-9))
        grid = [self.gamma_min * self.factor**k for k in range(n + 1)]
        if not np.isclose(grid[-1], self.gamma_max, rtol=1e-12):
            grid.append(self.gamma_max)
        grid[-1] = self.gamma_max
        return grid


@dataclass
class HomotopyRecord:
    phase: str
    beta: float
    gamma: float
    newton: NewtonReport
    sigma_sw: float
    J: float


@dataclass
class SolveReport:
    u: np.ndarray
    q: np.ndarray
    J: float
    n_switch: int
    sigma_sw: float
    beta_max: float
    residual: float
    switched: bool
    log: list = field(default_factory=list)
    error: str = ""

    def summary(self):
        return {
            "J": self.J,
            "N_sw": self.n_switch,
            "sigma_sw": self.sigma_sw,
            "residual": self.residual,
            "beta_max": self.beta_max,
            "switched": self.switched,
        }


class HomotopyAborted(RuntimeError):
    def __init__(self, msg, log):
        super().__init__(msg)
        self.log = log


def switching_tolerance(u, rel_tol):
    return rel_tol * float(np.max(np.abs(u), initial=0.0))


def run_homotopy(problem, alpha, eps, schedule=HomotopySchedule(), callback=None):
    """Continuation in gamma (up), beta (up, adaptive stop) and gamma (down).

    ``callback(record, params, u, q)`` is called after every node, e.g. to
    inspect intermediate iterates.
    """
    s = schedule
    log = []

    def record(phase, params, u, q, rep):
        J = float(eval_J(u, params, problem))
        log.append(HomotopyRecord(phase, params.beta, params.gamma, rep, switching_error(u), J))
        if callback is not None:
            callback(log[-1], params, u.copy(), q.copy())
        logger.debug("%-10s beta=%.1e gamma=%.1e it=%d res=%.2e sw=%.2e",
                     phase, params.beta, params.gamma, rep.iterations,
                     rep.residual_norms[-1], log[-1].sigma_sw)

    def solve(phase, params, u, q):
        try:
            u, q, rep = ssn_solve(u, q, params, problem, s.max_iter, s.rel_tol, s.abs_tol,
                                  s.convention, s.polish)
        except SingularNewtonMatrix as exc:
            raise HomotopyAborted(
                f"singular Newton matrix in {phase} at beta={params.beta:g}, gamma={params.gamma:g}",
                log) from exc
        record(phase, params, u, q, rep)
        return u, q

    params = ObjectiveParams(alpha, s.beta_min, eps, 0.0)
    u, q = init_solve(params, problem)
    F = residual(u, q, params, problem)
    record("init", params, u, q, NewtonReport([residual_norm(*F)], 0, True, "direct solve"))

    gammas = s.gamma_grid()
    for gamma in gammas:
        params = params.replace(gamma=gamma)
        u, q = solve("gamma-up", params, u, q)

    beta = s.beta_min
    switched = switching_error(u) <= switching_tolerance(u, s.sw_rel_tol) and beta > s.beta_floor
    while not switched and beta < s.beta_cap:
        beta = min(beta * s.factor, s.beta_cap)
        params = params.replace(beta=beta)
        u, q = solve("beta-up", params, u, q)
        switched = (switching_error(u) <= switching_tolerance(u, s.sw_rel_tol)
                    and beta > s.beta_floor)
    if not switched:
        logger.warning("beta cap %.1e reached without switching", s.beta_cap)

    for gamma in reversed(gammas):
        params = params.replace(gamma=gamma)
        u, q = solve("gamma-down", params, u, q)

    final = ObjectiveParams(alpha, beta, eps, 0.0)
    return SolveReport(
        u=u, q=q,
        J=float(eval_J(u, final, problem)),
        n_switch=count_switching_points(u),
        sigma_sw=switching_error(u),
        beta_max=beta,
        residual=log[-1].newton.residual_norms[-1],
        switched=bool(switched),
        log=log,
    )


def sweep(problem, alpha, eps, schedule, parameter, values):
    """Independent homotopy runs over ``alpha`` or ``eps``; failures are kept per entry."""
    if parameter not in ("alpha", "eps"):
        raise ValueError(f"can only sweep alpha or eps, not {parameter!r}")
    reports = []
    for v in values:
        kw = {"alpha": alpha, "eps": eps, parameter: v}
        try:
            reports.append(run_homotopy(problem, kw["alpha"], kw["eps"], schedule))
        except (HomotopyAborted, ValueError, np.linalg.LinAlgError) as exc:
            logger.error("sweep entry %s=%g failed: %s", parameter, v, exc)
            reports.append(exc)
    return reports


def record_dict(rec):
    d = asdict(rec)
    d["newton"] = asdict(rec.newton)
    return d
