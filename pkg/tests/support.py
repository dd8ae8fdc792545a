"""Shared builders for the test suite (cached: Example-2 runs take ~0.5 s each)."""

from functools import lru_cache

import numpy as np

from switchctl.config import build_problem, config_from_dict
from switchctl.homotopy import run_homotopy


def make_config(**kw):
    d = {"preset": "example2", "eps": 1e-5}
    d.update(kw)
    return config_from_dict(d)


def make_problem(**kw):
    return build_problem(make_config(**kw))


def zero_problem(**kw):
    d = {"alpha": 1e-2, "eps": 1e-3, "target": {"kind": "zero"}, "y0": 0.0, "nx": 4, "M": 11}
    d.update(kw)
    return config_from_dict(d), build_problem(config_from_dict(d))


@lru_cache(maxsize=None)
def example2(eps=1e-5, nx=16, M=101):
    cfg = make_config(eps=eps, nx=nx, M=M)
    problem = build_problem(cfg)
    return cfg, problem


@lru_cache(maxsize=None)
def example2_run(eps=1e-5, nx=16, M=101):
    cfg, problem = example2(eps, nx, M)
    nodes = []
    rep = run_homotopy(problem, cfg.alpha, cfg.eps, cfg.schedule,
                       callback=lambda rec, params, u, q: nodes.append((rec, params, u, q)))
    return rep, nodes


def random_control(rng, m, scale=1.0):
    return scale * rng.standard_normal((2, m))


def tiny_pc(M=4, alpha=1e-6, **kw):
    return make_problem(eps=0.0, mode="pc", nx=4, M=M, alpha=alpha, **kw)


def relerr(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


GRID5 = (-2.0, -1.0, 0.0, 1.0, 2.0)

# Example-2-like tiny piecewise-constant instances: (overrides, value grid)
TINY_SUITE = [
    ({"alpha": 1e-6, "M": 4}, GRID5),
    ({"alpha": 1e-3, "M": 5}, GRID5),
    ({"alpha": 1e-2, "M": 4}, GRID5),
    ({"alpha": 1e-4, "M": 4}, (-20.0, -10.0, 0.0, 10.0, 20.0)),
    ({"alpha": 1e-4, "M": 4,
      "target": {"kind": "generating", "formula": "constant", "params": {"c1": 1.0, "c2": 0.0}}}, GRID5),
    ({"alpha": 1e-3, "M": 4,
      "target": {"kind": "generating", "formula": "constant", "params": {"c1": 2.0, "c2": -1.0}}},
     (-1.0, 0.0, 1.0, 2.0)),
]


def tiny_config(overrides):
    return make_config(eps=0.0, mode="pc", nx=4, **overrides)


ACCEPTANCE_LINES = []


def verdict(number, name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok
