"""Serialization of solve results: controls/state CSV, report JSON, homotopy log CSV."""

import csv
import json
from pathlib import Path

import numpy as np

SUMMARY_COLUMNS = ("value", "J", "N_sw", "sigma_sw", "residual", "beta_max")


def _num(x):
    # repr keeps full round-trip precision
    return repr(float(x))


def report_dict(report, config=None):
    d = {
        "J": report.J,
        "N_sw": report.n_switch,
        "sigma_sw": report.sigma_sw,
        "beta_max": report.beta_max,
        "residual": report.residual,
        "switched": report.switched,
        "u": report.u.tolist(),
        "q": report.q.tolist(),
        "homotopy": [
            {
                "phase": r.phase,
                "beta": r.beta,
                "gamma": r.gamma,
                "iterations": r.newton.iterations,
                "converged": r.newton.converged,
                "termination": r.newton.termination,
                "residual_norms": list(r.newton.residual_norms),
                "sigma_sw": r.sigma_sw,
                "J": r.J,
            }
            for r in report.log
        ],
    }
    if config is not None:
        d["config"] = config.to_dict()
    return d


def write_report_json(report, path, config=None):
    text = json.dumps(report_dict(report, config), indent=2, allow_nan=False)
    Path(path).write_text(text + "\n")


def write_controls_csv(report, times, path):
    u, q = report.u, report.q
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "u1", "u2", "q", "u1u2"])
        for j, t in enumerate(times):
            w.writerow([_num(t), _num(u[0, j]), _num(u[1, j]), _num(q[j]), _num(u[0, j] * u[1, j])])


def write_states_csv(states, times, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"y{i}" for i in range(states.shape[1])])
        for t, y in zip(times, states):
            w.writerow([_num(t)] + [_num(v) for v in y])


def write_homotopy_csv(log, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["phase", "beta", "gamma", "iterations", "residual", "sigma_sw", "J"])
        for r in log:
            w.writerow([r.phase, _num(r.beta), _num(r.gamma), r.newton.iterations,
                        _num(r.newton.residual_norms[-1]), _num(r.sigma_sw), _num(r.J)])


def write_summary_csv(rows, path):
    """``rows`` are ``(value, report_or_exception)`` pairs; failed entries get empty fields."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_COLUMNS)
        for value, rep in rows:
            if isinstance(rep, Exception):
                w.writerow([_num(value)] + [""] * (len(SUMMARY_COLUMNS) - 1))
            else:
                w.writerow([_num(value), _num(rep.J), rep.n_switch, _num(rep.sigma_sw),
                            _num(rep.residual), _num(rep.beta_max)])


def read_controls_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {name: data[:, k] for k, name in enumerate(["t", "u1", "u2", "q", "u1u2"])}


def write_run(report, problem, out_dir, config=None, states=False):
    """Write all artifacts of one homotopy run into ``out_dir``."""
    from .forward import solve_forward

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = problem.disc.grid
    write_controls_csv(report, grid.control_times(problem.mode), out / "controls.csv")
    write_report_json(report, out / "report.json", config)
    write_homotopy_csv(report.log, out / "homotopy.csv")
    if states:
        y = solve_forward(problem.disc, report.u, problem.y0)
        write_states_csv(y, grid.nodes, out / "states.csv")
    return out
