"""Scenario configuration: defaults, YAML loading, ``key=value`` overrides and validation.

Precedence is command line > config file > built-in defaults. The resolved
configuration is a plain nested dict (what gets written to manifests) that
:func:`build_scenario` turns into typed objects.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from userfollow.controller import ControllerConfig, PIDGains, solve_lqr
from userfollow.errors import ConfigError, NotPositiveDefinite
from userfollow.frames import ArmGeometry, Workspace
from userfollow.observer import ObserverGains, default_gains
from userfollow.plant import ActuatorParams
from userfollow.sim.trajectory import SCENARIOS, scenario_defaults

CONFIG_DIR_ENV = "USERFOLLOW_CONFIG_DIR"

# PID gains from scripts/tune_pid.py (grid search on the in_place scenario).
TUNED_PID = {"kp": [30.0, 30.0], "ki": [0.0, 0.0], "kd": [0.5, 0.5]}

DEFAULTS = {
    "seed": 0,
    "f_s": 200.0,
    "duration": 20.0,
    "fidelity": "kinematic",
    "trajectory": {"source": "generator", "name": "slalom", "params": {}, "path": None},
    "sensing": {"mode": "ideal", "counts_per_rev": 4096, "linear_resolution": 1.0e-4,
                "consistency_tol": 1.0e-2},
    "geometry": {"D": 0.6, "W": 0.45,
                 "workspace": {"x_min": 0.3, "x_max": 1.2, "y_abs_max": 0.35,
                               "theta_abs_max": math.pi / 4}},
    "controller": {"kind": "proposed", "Q": [[200.0, 0.0], [0.0, 200.0]], "R": [[1.0, 0.0], [0.0, 1.0]],
                   "x_d": 0.55, "y_d": 0.0, "x_guard_epsilon": 0.05, "v_max": 1.5, "w_max": 2.0,
                   "feedforward": "observer", "update": "sampled"},
    "pid": copy.deepcopy(TUNED_PID),
    "observer": {"gains": None, "method": "foh"},
    "dynamics": {"gain_K": [0.12, 0.12], "time_constant_tau": [0.35, 0.35], "wheel_track_b": 0.55,
                 "inner_bandwidth": 50.0, "voltage_limit": 24.0, "substeps": 5},
    "initial_offset": [0.0, 0.0],
    "stats": {"window_start": None},
    "compare": {"scenarios": list(SCENARIOS), "jobs": 1},
}


def deep_merge(base: dict, update: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in update.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "params":
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def resolve_config_path(name) -> Path:
    """A literal path, or a file name looked up in ``$USERFOLLOW_CONFIG_DIR``."""
    p = Path(name)
    if p.exists():
        return p
    env = os.environ.get(CONFIG_DIR_ENV)
    if env:
        for cand in (Path(env) / name, Path(env) / f"{name}.yaml"):
            if cand.exists():
                return cand
    raise ConfigError([("config", f"file not found: {name}")])


def load_config_file(path) -> tuple[dict, str | None]:
    """Parse a YAML config (or a run manifest) and return it with its sha256.

    JSON manifests parse as YAML too.
    """
    raw = Path(path).read_bytes()
    try:
        data = yaml.safe_load(raw) or {}
    except yaml.YAMLError as exc:
        raise ConfigError([("config", f"YAML parse error: {exc}")]) from None
    if not isinstance(data, dict):
        raise ConfigError([("config", "top level must be a mapping")])
    digest = hashlib.sha256(raw).hexdigest()
    if "config" in data and "tool" in data:
        # a run manifest: replay its resolved config under the original file hash
        digest = data.get("config_file_sha256", digest)
        data = data["config"]
        if not isinstance(data, dict):
            raise ConfigError([("config", "manifest config must be a mapping")])
    return data, digest


def apply_overrides(cfg: dict, assignments) -> dict:
    """Apply ``dotted.key=value`` strings; values are parsed as YAML scalars."""
    cfg = copy.deepcopy(cfg)
    for item in assignments or ():
        if "=" not in item:
            raise ConfigError([(item, "override must look like key=value")])
        key, _, text = item.partition("=")
        parts = key.strip().split(".")
        try:
            value = yaml.safe_load(text)
        except yaml.YAMLError:
            value = text
        node = cfg
        for part in parts[:-1]:
            if not isinstance(node.get(part), dict):
                if part in node and node[part] is not None:
                    raise ConfigError([(key, f"{part} is not a section")])
                node[part] = {}
            node = node[part]
        node[parts[-1]] = value
    return cfg


def _unknown_keys(data, ref, prefix=""):
    out = []
    for k, v in data.items():
        name = f"{prefix}{k}"
        if k not in ref:
            out.append((name, "unknown key"))
        elif isinstance(v, dict) and isinstance(ref[k], dict) and k != "params":
            out.extend(_unknown_keys(v, ref[k], name + "."))
    return out


def resolve(file_cfg: dict | None = None, overrides=None) -> dict:
    cfg = deep_merge(DEFAULTS, file_cfg or {})
    cfg = apply_overrides(cfg, overrides)
    problems = _unknown_keys(cfg, DEFAULTS)
    if problems:
        raise ConfigError(problems)
    return cfg


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()


@dataclass
class SensingConfig:
    mode: str = "ideal"
    counts_per_rev: float = 4096
    linear_resolution: float = 1e-4
    consistency_tol: float = 1e-2


@dataclass
class DynamicsConfig:
    actuator: ActuatorParams = field(default_factory=ActuatorParams)
    inner_bandwidth: float = 50.0
    voltage_limit: float = 24.0
    substeps: int = 5


@dataclass
class ScenarioConfig:
    """Typed view of a resolved configuration."""

    trajectory_source: str
    scenario: str
    scenario_params: dict
    trajectory_path: str | None
    fidelity: str
    sensing: SensingConfig
    f_s: float
    duration: float
    controller_kind: str
    controller: ControllerConfig
    pid: PIDGains
    observer_gains: ObserverGains
    observer_method: str
    feedforward: str
    control_update: str
    geometry: ArmGeometry
    dynamics: DynamicsConfig
    initial_offset: tuple
    seed: int
    window_start: float | None
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def dt(self) -> float:
        return 1.0 / self.f_s


def _num(problems, key, value, positive=False, nonneg=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        problems.append((key, f"must be a finite number, got {value!r}"))
        return None
    # out-of-range values come back as None so later checks see the fallback
    if positive and value <= 0:
        problems.append((key, f"must be > 0, got {value!r}"))
        return None
    if nonneg and value < 0:
        problems.append((key, f"must be >= 0, got {value!r}"))
        return None
    return float(value)


def _choice(problems, key, value, options):
    if value not in options:
        problems.append((key, f"must be one of {', '.join(options)}, got {value!r}"))
    return value


def _matrix(problems, key, value):
    ok = (isinstance(value, (list, tuple)) and len(value) == 2
          and all(isinstance(r, (list, tuple)) and len(r) == 2 for r in value))
    if not ok:
        problems.append((key, "must be a 2x2 nested list"))
        return ((1.0, 0.0), (0.0, 1.0))
    rows = []
    for i, r in enumerate(value):
        rows.append(tuple(_num(problems, f"{key}[{i}][{j}]", a) or 0.0 for j, a in enumerate(r)))
    return tuple(rows)


def _pair(problems, key, value, positive=False, nonneg=False):
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        problems.append((key, "must be a list of two numbers"))
        return (0.0, 0.0)
    return tuple(_num(problems, f"{key}[{i}]", a, positive=positive, nonneg=nonneg) or 0.0
                 for i, a in enumerate(value))


def build_scenario(cfg: dict) -> ScenarioConfig:
    """Validate a resolved config dict; all problems are reported together."""
    P = []
    f_s = _num(P, "f_s", cfg["f_s"], positive=True) or 200.0
    duration = _num(P, "duration", cfg["duration"], positive=True) or 1.0
    seed = cfg["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        P.append(("seed", f"must be a non-negative integer, got {seed!r}"))
        seed = 0
    fidelity = _choice(P, "fidelity", cfg["fidelity"], ("kinematic", "dynamic"))

    tr = cfg["trajectory"]
    source = _choice(P, "trajectory.source", tr["source"], ("generator", "csv"))
    name = tr.get("name")
    params = tr.get("params") or {}
    if source == "generator":
        if name not in SCENARIOS:
            P.append(("trajectory.name", f"must be one of {', '.join(SCENARIOS)}, got {name!r}"))
        elif not isinstance(params, dict):
            P.append(("trajectory.params", "must be a mapping"))
        else:
            for k in params:
                if k not in scenario_defaults(name):
                    P.append((f"trajectory.params.{k}", f"unknown parameter for {name}"))
    elif source == "csv" and not tr.get("path"):
        P.append(("trajectory.path", "required when trajectory.source is csv"))

    se = cfg["sensing"]
    sensing = SensingConfig(
        _choice(P, "sensing.mode", se["mode"], ("ideal", "quantized")),
        _num(P, "sensing.counts_per_rev", se["counts_per_rev"], positive=True) or 4096,
        _num(P, "sensing.linear_resolution", se["linear_resolution"], positive=True) or 1e-4,
        _num(P, "sensing.consistency_tol", se["consistency_tol"], positive=True) or 1e-2,
    )

    g = cfg["geometry"]
    ws = g["workspace"]
    geometry = None
    try:
        geometry = ArmGeometry(
            _num(P, "geometry.D", g["D"], positive=True) or 0.6,
            _num(P, "geometry.W", g["W"], positive=True) or 0.45,
            Workspace(*(_num(P, f"geometry.workspace.{k}", ws[k]) or 0.0
                        for k in ("x_min", "x_max", "y_abs_max", "theta_abs_max"))),
        )
    except ValueError as exc:
        P.append(("geometry.workspace", str(exc)))

    c = cfg["controller"]
    kind = _choice(P, "controller.kind", c["kind"], ("proposed", "pid"))
    eps = _num(P, "controller.x_guard_epsilon", c["x_guard_epsilon"], positive=True) or 0.05
    x_d = _num(P, "controller.x_d", c["x_d"])
    y_d = _num(P, "controller.y_d", c["y_d"])
    if x_d is not None and x_d <= eps:
        P.append(("controller.x_d", f"must exceed x_guard_epsilon={eps}, got {x_d}"))
    if geometry is not None and x_d is not None and y_d is not None:
        w = geometry.workspace
        if not (w.x_min <= x_d <= w.x_max and abs(y_d) <= w.y_abs_max):
            P.append(("controller", f"setpoint ({x_d}, {y_d}) outside the arm workspace"))
    controller = ControllerConfig(
        Q=_matrix(P, "controller.Q", c["Q"]),
        R=_matrix(P, "controller.R", c["R"]),
        x_d=x_d or 0.55,
        y_d=y_d or 0.0,
        x_guard_epsilon=eps,
        v_max=_num(P, "controller.v_max", c["v_max"], positive=True) or 1.5,
        w_max=_num(P, "controller.w_max", c["w_max"], positive=True) or 2.0,
    )
    try:
        solve_lqr(controller.Q, controller.R)
    except NotPositiveDefinite as exc:
        P.append(("controller.Q/R", str(exc)))
    feedforward = _choice(P, "controller.feedforward", c["feedforward"], ("observer", "truth"))
    update = _choice(P, "controller.update", c["update"], ("sampled", "continuous"))
    if update == "continuous":
        if feedforward != "truth":
            P.append(("controller.update", "continuous update requires controller.feedforward=truth"))
        if fidelity != "kinematic":
            P.append(("controller.update", "continuous update requires fidelity=kinematic"))
        if kind != "proposed":
            P.append(("controller.update", "continuous update is defined for the proposed controller only"))

    pg = cfg["pid"]
    pid = PIDGains(_pair(P, "pid.kp", pg["kp"], nonneg=True), _pair(P, "pid.ki", pg["ki"], nonneg=True),
                   _pair(P, "pid.kd", pg["kd"], nonneg=True))

    ob = cfg["observer"]
    if ob["gains"] is None:
        gains = default_gains(f_s)
    else:
        vals = ob["gains"]
        if not isinstance(vals, (list, tuple)) or len(vals) != 4:
            P.append(("observer.gains", "must be null or a list of four positive numbers"))
            gains = default_gains(f_s)
        else:
            vals = [_num(P, f"observer.gains[{i}]", v, positive=True) or 1.0 for i, v in enumerate(vals)]
            gains = ObserverGains(*vals)
    method = _choice(P, "observer.method", ob["method"], ("zoh", "foh", "euler"))

    dy = cfg["dynamics"]
    substeps = dy["substeps"]
    if isinstance(substeps, bool) or not isinstance(substeps, int) or substeps < 1:
        P.append(("dynamics.substeps", f"must be a positive integer, got {substeps!r}"))
        substeps = 1
    gk = _pair(P, "dynamics.gain_K", dy["gain_K"], positive=True)
    tau = _pair(P, "dynamics.time_constant_tau", dy["time_constant_tau"], positive=True)
    track = _num(P, "dynamics.wheel_track_b", dy["wheel_track_b"], positive=True)
    try:
        actuator = ActuatorParams(gk, tau, track or 0.55)
    except ValueError:
        actuator = ActuatorParams()
    dynamics = DynamicsConfig(
        actuator,
        _num(P, "dynamics.inner_bandwidth", dy["inner_bandwidth"], positive=True) or 50.0,
        _num(P, "dynamics.voltage_limit", dy["voltage_limit"], positive=True) or 24.0,
        substeps,
    )
    offset = _pair(P, "initial_offset", cfg["initial_offset"])
    ws_start = cfg["stats"]["window_start"]
    if ws_start is not None:
        ws_start = _num(P, "stats.window_start", ws_start, nonneg=True)

    if P:
        raise ConfigError(P)
    return ScenarioConfig(
        trajectory_source=source, scenario=name, scenario_params=dict(params),
        trajectory_path=tr.get("path"), fidelity=fidelity, sensing=sensing, f_s=f_s,
        duration=duration, controller_kind=kind, controller=controller, pid=pid,
        observer_gains=gains, observer_method=method, feedforward=feedforward,
        control_update=update, geometry=geometry, dynamics=dynamics, initial_offset=offset,
        seed=seed, window_start=ws_start, raw=copy.deepcopy(cfg),
    )


def scenario_config(overrides=None, **sections) -> ScenarioConfig:
    """Convenience for library use: defaults + nested ``sections`` + dotted overrides."""
    return build_scenario(resolve(sections, overrides))
