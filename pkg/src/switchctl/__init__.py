"""Switching optimal control of the heat equation via a Moreau-Yosida regularized
semismooth Newton method with homotopy."""

from .config import ProblemConfig, build_problem, load_config
from .homotopy import HomotopySchedule, SolveReport, run_homotopy, sweep
from .objective import ObjectiveParams, Problem, eval_J

__all__ = [
    "HomotopySchedule",
    "ObjectiveParams",
    "Problem",
    "ProblemConfig",
    "SolveReport",
    "build_problem",
    "eval_J",
    "load_config",
    "run_homotopy",
    "sweep",
]
