"""TOML scenario and system configs: parsing, validation, serialization.

A config file fully determines a run. Sections are fixed per scenario
kind; unknown keys are rejected so typos fail loudly. ``loads``/``dumps``
round-trip to identical values.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .control import ControllerConfig
from .core import ReferenceSignal, StaticPlant, TimeGrid
from .linstab import LinearSystem
from .predict import lti_predictor, numeric_predictor
from .scenarios import (BicycleParams, PendulumParams, ellipse_reference,
                        pendulum_dynamics, swing_reference)

SCENARIO_NAMES = ("pendulum", "static_gain", "lti", "platoon_bicycle", "platoon_unicycle")


class ConfigError(ValueError):
    """Malformed or invalid configuration (carries the parser diagnostic)."""


_ALLOWED = {
    "scenario": {"name"},
    "controller": {"variant", "alpha", "T", "predictor_steps", "singularity_tol", "e2"},
    "grid": {"t0", "tf", "dt"},
    "initial": {"x", "u"},
    "output": {"trace"},
}
_ALLOWED_PLANT = {
    "pendulum": {"M", "m", "l", "g"},
    "static_gain": {"dim"},
    "lti": {"A", "B", "C"},
    "platoon_bicycle": {"mass", "lf", "lr", "Iz", "Caf", "Car"},
    "platoon_unicycle": set(),
}
_ALLOWED_REFERENCE = {
    "kind", "amplitude_scale", "amplitude", "omega", "value", "a", "b", "rate",
    "apex_speed", "top_speed", "radius",
}
_ALLOWED_PLATOON = {"agents", "spacing", "mode", "start_gap", "v0"}


def _check_keys(section: str, table: dict, allowed: set) -> None:
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)}")


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario file contents, one table per section."""

    scenario: dict
    plant: dict
    controller: dict
    grid: dict
    initial: dict
    reference: dict
    platoon: Optional[dict] = None
    output: Optional[dict] = None

    @property
    def name(self) -> str:
        return self.scenario["name"]

    @property
    def is_platoon(self) -> bool:
        return self.name.startswith("platoon_")


def _parse_toml(text: str) -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML parse error: {exc}") from exc


def loads(text: str) -> ScenarioConfig:
    data = _parse_toml(text)
    known_sections = {"scenario", "plant", "controller", "grid", "initial",
                      "reference", "platoon", "output"}
    unknown = set(data) - known_sections
    if unknown:
        raise ConfigError(f"unknown sections: {sorted(unknown)}")
    for sec in ("scenario", "controller", "grid"):
        if sec not in data:
            raise ConfigError(f"missing required section [{sec}]")
    name = data["scenario"].get("name")
    if name not in SCENARIO_NAMES:
        raise ConfigError(f"scenario name must be one of {SCENARIO_NAMES}, got {name!r}")
    _check_keys("scenario", data["scenario"], _ALLOWED["scenario"])
    _check_keys("plant", data.get("plant", {}), _ALLOWED_PLANT[name])
    ctrl = dict(data["controller"])
    _check_keys("controller", ctrl, _ALLOWED["controller"])
    if "e2" in ctrl:
        _check_keys("controller.e2", ctrl["e2"], {"kind", "value"})
    _check_keys("grid", data["grid"], _ALLOWED["grid"])
    _check_keys("initial", data.get("initial", {}), _ALLOWED["initial"])
    _check_keys("reference", data.get("reference", {}), _ALLOWED_REFERENCE)
    if "platoon" in data:
        _check_keys("platoon", data["platoon"], _ALLOWED_PLATOON)
    if "output" in data:
        _check_keys("output", data["output"], _ALLOWED["output"])
    cfg = ScenarioConfig(
        scenario=dict(data["scenario"]), plant=dict(data.get("plant", {})),
        controller=ctrl, grid=dict(data["grid"]), initial=dict(data.get("initial", {})),
        reference=dict(data.get("reference", {})), platoon=data.get("platoon"),
        output=data.get("output"),
    )
    grid(cfg)  # validates t0/tf/dt eagerly
    return cfg


def load_path(path) -> ScenarioConfig:
    with open(path, "rb") as fh:
        text = fh.read().decode("utf-8")
    return loads(text)


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise ConfigError(f"cannot serialize value of type {type(v).__name__}")


def dumps(cfg: ScenarioConfig) -> str:
    out = []
    sections = [("scenario", cfg.scenario), ("plant", cfg.plant),
                ("controller", cfg.controller), ("grid", cfg.grid),
                ("initial", cfg.initial), ("reference", cfg.reference),
                ("platoon", cfg.platoon), ("output", cfg.output)]
    for sec_name, table in sections:
        if not table:
            continue
        sub = {k: v for k, v in table.items() if isinstance(v, dict)}
        plain = {k: v for k, v in table.items() if not isinstance(v, dict)}
        out.append(f"[{sec_name}]")
        for k, v in plain.items():
            out.append(f"{k} = {_toml_value(v)}")
        for k, v in sub.items():
            out.append(f"[{sec_name}.{k}]")
            for kk, vv in v.items():
                out.append(f"{kk} = {_toml_value(vv)}")
        out.append("")
    return "\n".join(out)


def grid(cfg: ScenarioConfig) -> TimeGrid:
    g = cfg.grid
    try:
        return TimeGrid(float(g.get("t0", 0.0)), float(g["tf"]), float(g["dt"]))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"invalid [grid]: {exc}") from exc


def controller(cfg: ScenarioConfig, alpha: Optional[float] = None) -> ControllerConfig:
    c = cfg.controller
    e2 = None
    if "e2" in c:
        spec = c["e2"]
        if spec.get("kind") != "constant":
            raise ConfigError("only constant e2 injectors are configurable")
        vec = np.asarray(spec["value"], dtype=float)
        e2 = lambda t: vec
    try:
        return ControllerConfig(
            variant=c["variant"],
            alpha=float(alpha if alpha is not None else c.get("alpha", 1.0)),
            T=float(c.get("T", 0.0)),
            singularity_tol=float(c.get("singularity_tol", 1e-10)),
            e2_injector=e2,
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"invalid [controller]: {exc}") from exc


def _reference(cfg: ScenarioConfig, domain) -> ReferenceSignal:
    r = cfg.reference
    kind = r.get("kind")
    if kind == "pendulum_swing":
        return swing_reference(float(r.get("amplitude_scale", 1.0)), domain=domain)
    if kind == "sine":
        amp = float(r.get("amplitude", 1.0))
        om = float(r.get("omega", 1.0))
        return ReferenceSignal(
            m=1, r=lambda t: np.array([amp * np.sin(om * t)]),
            rdot=lambda t: np.array([amp * om * np.cos(om * t)]),
            eta=amp * om, domain=domain)
    if kind == "constant":
        vec = np.asarray(r.get("value", [1.0]), dtype=float)
        zero = np.zeros_like(vec)
        return ReferenceSignal(m=vec.size, r=lambda t: vec, rdot=lambda t: zero,
                               eta=0.0, domain=domain)
    if kind == "ellipse":
        return ellipse_reference(float(r.get("a", 1.1)), float(r.get("b", 0.7)),
                                 float(r.get("rate", 0.06)), domain=domain)
    raise ConfigError(f"unknown reference kind {kind!r}")


def build_single_run(cfg: ScenarioConfig):
    """(plant, predictor, controller, reference, x0, u0, grid) for a
    single-agent scenario."""
    if cfg.is_platoon:
        raise ConfigError("platoon config passed to a single-run builder")
    g = grid(cfg)
    ctrl = controller(cfg)
    T = ctrl.T
    domain = (g.t0, g.tf + T)
    ref = _reference(cfg, domain)
    steps = int(cfg.controller.get("predictor_steps", 100))
    if cfg.name == "pendulum":
        params = PendulumParams(**{k: float(v) for k, v in cfg.plant.items()})
        plant = pendulum_dynamics(params)
        pred = numeric_predictor(plant, T, steps)
        x0 = np.asarray(cfg.initial.get("x", [np.pi / 6.0, 0.0]), dtype=float)
        u0 = np.asarray(cfg.initial.get("u", [0.0]), dtype=float)
        return plant, pred, ctrl, ref, x0, u0, g
    if cfg.name == "static_gain":
        dim = int(cfg.plant.get("dim", 1))
        plant = StaticPlant(m=dim, g=lambda u: u, dgdu=lambda u: np.eye(dim))
        u0 = np.asarray(cfg.initial.get("u", [0.0] * dim), dtype=float)
        return plant, None, ctrl, ref, np.zeros(0), u0, g
    if cfg.name == "lti":
        A = np.asarray(cfg.plant["A"], dtype=float)
        B = np.asarray(cfg.plant["B"], dtype=float)
        C = np.asarray(cfg.plant["C"], dtype=float)
        from .core import PlantModel
        plant = PlantModel(n=A.shape[0], m=B.shape[1],
                           f=lambda x, u: A @ x + B @ u, h=lambda x: C @ x,
                           f_batch=lambda X, U: X @ A.T + U @ B.T)
        pred = lti_predictor(A, B, C, T)
        x0 = np.asarray(cfg.initial.get("x", [0.0] * A.shape[0]), dtype=float)
        u0 = np.asarray(cfg.initial.get("u", [0.0] * B.shape[1]), dtype=float)
        return plant, pred, ctrl, ref, x0, u0, g
    raise ConfigError(f"no single-run builder for {cfg.name!r}")


def build_platoon_run(cfg: ScenarioConfig):
    """(platoon config, plant, predictor, leader reference, path, x0s, u0s,
    grid) for a platoon scenario; path is None in target-line mode."""
    from .scenarios import bicycle_platoon_scenario, unicycle_platoon_scenario
    if not cfg.is_platoon:
        raise ConfigError("single-run config passed to the platoon builder")
    g = grid(cfg)
    ctrl = cfg.controller
    pl = cfg.platoon or {}
    if cfg.name == "platoon_bicycle":
        params = BicycleParams(**{k: float(v) for k, v in cfg.plant.items()})
        pcfg, plant, pred, ref, path, x0, u0, _ = bicycle_platoon_scenario(
            agents=int(pl.get("agents", 4)), spacing=float(pl.get("spacing", 10.0)),
            alpha=float(ctrl.get("alpha", 100.0)), T=float(ctrl.get("T", 0.5)),
            dt=g.dt, tf=g.tf,
            predictor_steps=int(ctrl.get("predictor_steps", 1000)), params=params)
        return pcfg, plant, pred, ref, path, x0, u0, g
    pcfg, plant, pred, ref, x0, u0, _ = unicycle_platoon_scenario(
        agents=int(pl.get("agents", 4)), spacing=float(pl.get("spacing", 0.25)),
        alpha=float(ctrl.get("alpha", 45.0)), T=float(ctrl.get("T", 0.25)),
        dt=g.dt, tf=g.tf, start_gap=float(pl.get("start_gap", 0.75)),
        v0=float(pl.get("v0", 0.05)))
    return pcfg, plant, pred, ref, None, x0, u0, g


def load_system(path) -> LinearSystem:
    """Parse a [system] config (A, B, C, T, variant) for certification."""
    with open(path, "rb") as fh:
        data = _parse_toml(fh.read().decode("utf-8"))
    if "system" not in data:
        raise ConfigError("missing required section [system]")
    unknown = set(data) - {"system"}
    if unknown:
        raise ConfigError(f"unknown sections: {sorted(unknown)}")
    sys_tbl = data["system"]
    _check_keys("system", sys_tbl, {"A", "B", "C", "T", "variant"})
    try:
        return LinearSystem(
            A=np.asarray(sys_tbl["A"], dtype=float),
            B=np.asarray(sys_tbl["B"], dtype=float),
            C=np.asarray(sys_tbl["C"], dtype=float),
            T=float(sys_tbl["T"]),
            variant=sys_tbl.get("variant", "basic"),
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"invalid [system]: {exc}") from exc
