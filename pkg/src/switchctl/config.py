"""JSON problem configuration, the built-in preset, and problem construction."""

from dataclasses import dataclass, field, asdict, fields
import json
from pathlib import Path

import numpy as np

from .forward import Discretization, assemble_gram, solve_forward
from .homotopy import HomotopySchedule
from .mesh import Region, assemble_operators, build_mesh
from .objective import Problem
from .timegrid import H1, MODES, PIECEWISE_CONSTANT, build_time_grid


class ConfigError(ValueError):
    pass


EXAMPLE2_TARGET = {
    "kind": "generating",
    "formula": "sin4cos4",
    "params": {"a1": 20.0, "f1": 2.0, "a2": 10.0, "f2": 1.4},
}

PRESETS = {
    "example2": {
        "alpha": 1e-6,
        "control_scale": 0.1,
        "control_regions": [
            {"type": "halfplane", "axis": 0, "side": "le", "value": 0.0},
            {"type": "halfplane", "axis": 0, "side": "gt", "value": 0.0},
        ],
        "obs_region": "all",
        "target": EXAMPLE2_TARGET,
        "y0": 0.0,
        "schedule": {"beta_min": 1e-5, "gamma_min": 1e-9, "gamma_max": 1e4},
    },
}

DEFAULT_REGIONS = PRESETS["example2"]["control_regions"]


@dataclass(frozen=True)
class ProblemConfig:
    alpha: float
    eps: float
    schedule: HomotopySchedule = field(default_factory=HomotopySchedule)
    T: float = 10.0
    M: int = 101
    nx: int = 16
    mode: str = H1
    control_scale: float = 1.0
    control_regions: tuple = tuple(DEFAULT_REGIONS)
    obs_region: object = "all"
    target: dict = field(default_factory=lambda: {"kind": "zero"})
    y0: object = 0.0
    preset: str = None

    def __post_init__(self):
        validate(self)

    def replace(self, **kw):
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d.update(kw)
        return ProblemConfig(**d)

    def to_dict(self):
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["schedule"] = asdict(self.schedule)
        d["control_regions"] = list(self.control_regions)
        if d["preset"] is None:
            del d["preset"]
        return d


def validate(cfg):
    if cfg.mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {cfg.mode!r}")
    if not cfg.alpha > 0:
        raise ConfigError("alpha must be positive")
    if cfg.eps < 0:
        raise ConfigError("eps must be nonnegative")
    if cfg.mode == H1 and cfg.eps == 0:
        raise ConfigError("eps = 0 requires mode 'pc' (piecewise-constant controls)")
    if cfg.mode == PIECEWISE_CONSTANT and cfg.eps != 0:
        raise ConfigError("piecewise-constant mode requires eps = 0")
    if int(cfg.nx) != cfg.nx or cfg.nx < 2 or cfg.nx % 2:
        raise ConfigError(f"nx must be an even integer >= 2, got {cfg.nx}")
    if int(cfg.M) != cfg.M or cfg.M < 2:
        raise ConfigError(f"M must be an integer >= 2, got {cfg.M}")
    if not cfg.T > 0:
        raise ConfigError("T must be positive")
    if len(cfg.control_regions) != 2:
        raise ConfigError("exactly two control regions are required")
    for spec in list(cfg.control_regions) + [cfg.obs_region]:
        make_region(spec)
    kind = cfg.target.get("kind") if isinstance(cfg.target, dict) else None
    if kind not in ("zero", "generating", "nodal"):
        raise ConfigError(f"target kind must be zero, generating or nodal, got {kind!r}")
    if kind == "generating" and cfg.target.get("formula") not in GENERATORS:
        raise ConfigError(f"unknown generating formula {cfg.target.get('formula')!r}")


def make_region(spec, name=None):
    if spec == "all":
        return Region.everywhere()
    if not isinstance(spec, dict):
        raise ConfigError(f"invalid region {spec!r}")
    kind = spec.get("type")
    try:
        if kind == "halfplane":
            return Region.halfplane(int(spec["axis"]), spec["side"], float(spec["value"]), name)
        if kind == "box":
            return Region.box(spec["lo"], spec["hi"], name)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"invalid region {spec!r}: {exc}") from exc
    raise ConfigError(f"unknown region type {kind!r}")


def _sin4cos4(t, T, a1=20.0, f1=2.0, a2=10.0, f2=1.4):
    return np.vstack([a1 * np.sin(f1 * np.pi * t / T) ** 4, a2 * np.cos(f2 * np.pi * t / T) ** 4])


def _constant(t, T, c1=1.0, c2=0.0):
    return np.vstack([np.full_like(t, c1), np.full_like(t, c2)])


GENERATORS = {"sin4cos4": _sin4cos4, "constant": _constant}


def generating_control(cfg, grid):
    target = cfg.target
    fn = GENERATORS[target["formula"]]
    return fn(grid.control_times(cfg.mode), grid.T, **target.get("params", {}))


def _nodal_array(value, shape, what, base):
    if isinstance(value, (int, float)):
        return np.full(shape, float(value))
    if isinstance(value, str):
        path = Path(value)
        if not path.is_absolute() and base is not None:
            path = base / path
        arr = np.load(path) if path.suffix == ".npy" else np.loadtxt(path, delimiter=",")
    else:
        arr = np.asarray(value, dtype=float)
    arr = np.broadcast_to(arr, shape).astype(float) if arr.shape != shape else arr
    if arr.shape != shape:
        raise ConfigError(f"{what} has shape {arr.shape}, expected {shape}")
    return arr


def build_problem(cfg, base_dir=None):
    """Mesh, operators, time grid, target and Gram data for a config."""
    mesh = build_mesh(cfg.nx)
    regions = [make_region(r, f"omega{i + 1}") for i, r in enumerate(cfg.control_regions)]
    ops = assemble_operators(mesh, regions, make_region(cfg.obs_region, "obs"), cfg.control_scale)
    grid = build_time_grid(cfg.T, cfg.M)
    disc = Discretization(mesh, ops, grid, cfg.mode)
    y0 = _nodal_array(cfg.y0, (mesh.n_nodes,), "y0", base_dir)

    kind = cfg.target["kind"]
    if kind == "zero":
        y_d = np.zeros((grid.M, mesh.n_nodes))
    elif kind == "generating":
        y_d = solve_forward(disc, generating_control(cfg, grid), y0)
    else:
        y_d = _nodal_array(cfg.target["data"], (grid.M, mesh.n_nodes), "target", base_dir)
    return Problem(disc, y_d, y0, assemble_gram(disc, y_d, y0))


def config_from_dict(d):
    d = dict(d)
    preset = d.get("preset")
    merged = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; available: {sorted(PRESETS)}")
        merged.update(json.loads(json.dumps(PRESETS[preset])))
    sched = dict(merged.pop("schedule", {}))
    sched.update(d.pop("schedule", {}) or {})
    merged.update(d)

    known = {f.name for f in fields(ProblemConfig)}
    unknown = set(merged) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in ("alpha", "eps"):
        if key not in merged:
            raise ConfigError(f"missing required key {key!r}")
    sched_known = {f.name for f in fields(HomotopySchedule)}
    if set(sched) - sched_known:
        raise ConfigError(f"unknown schedule keys: {sorted(set(sched) - sched_known)}")
    try:
        merged["schedule"] = HomotopySchedule(**sched)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid schedule: {exc}") from exc
    if "control_regions" in merged:
        merged["control_regions"] = tuple(merged["control_regions"])
    for key in ("alpha", "eps", "T", "control_scale"):
        if key in merged:
            merged[key] = float(merged[key])
    try:
        return ProblemConfig(**merged)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path):
    path = Path(path)
    text = path.read_text()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return config_from_dict(d)


def dump_config(cfg, path):
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2, allow_nan=False) + "\n")

