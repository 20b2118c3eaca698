"""Benchmark systems: inverted pendulum, bicycle platoon, unicycle platoon."""

from __future__ import annotations

import numpy as np

from ..control import ControllerConfig
from ..core import TimeGrid
from ..predict import numeric_predictor, unicycle_predictor
from .bicycle import (BicycleParams, bicycle_dynamics, cornering_force_front,
                      default_platoon_path, default_speed_schedule,
                      path_reference)
from .paths import (PathPolyline, SpeedSchedule, approx_interagent_distance,
                    nearest_point_arclength, s_curve_path)
from .pendulum import (PendulumParams, pendulum_accel, pendulum_dynamics,
                       pendulum_energy, pendulum_scenario, swing_reference)
from .platoon import (PlatoonConfig, PlatoonResult, follower_target_line,
                      run_platoon)
from .unicycle import ellipse_reference, unicycle_dynamics

__all__ = [
    "BicycleParams", "PathPolyline", "PendulumParams", "PlatoonConfig",
    "PlatoonResult", "SpeedSchedule", "approx_interagent_distance",
    "bicycle_dynamics", "bicycle_platoon_scenario", "cornering_force_front",
    "default_platoon_path", "default_speed_schedule", "ellipse_reference",
    "follower_target_line", "nearest_point_arclength", "path_reference",
    "pendulum_accel", "pendulum_dynamics", "pendulum_energy",
    "pendulum_scenario", "run_platoon", "s_curve_path", "swing_reference",
    "unicycle_dynamics", "unicycle_platoon_scenario",
]


def bicycle_platoon_scenario(agents: int = 4, spacing: float = 10.0,
                             alpha: float = 100.0, T: float = 0.5,
                             dt: float = 0.01, tf: float = 38.0,
                             predictor_steps: int = 1000,
                             params: BicycleParams = BicycleParams()):
    """Four vehicles from a standing start on the crest path.

    All vehicles begin at the path origin, aligned with the initial
    tangent, with controller state (2, 0). The predictor sub-step is
    T/1000 for this scenario.
    Returns (platoon config, plant, predictor, leader reference, path,
    x0 stack, u0 stack, grid).
    """
    plant = bicycle_dynamics(params)
    pred = numeric_predictor(plant, T, predictor_steps)
    schedule = default_speed_schedule()
    path = default_platoon_path(schedule, tf=tf, lookahead=T)
    ref = path_reference(path, schedule, domain=(0.0, tf + T))
    cfg = PlatoonConfig(agent_count=agents, spacing=spacing,
                        controller=ControllerConfig("basic", alpha=alpha, T=T),
                        follower_mode="arclength_offset")
    grid = TimeGrid(0.0, tf, dt)
    start = path.point_at(0.0)
    heading = float(np.arctan2(*path.tangent_at(0.0)[::-1]))
    x0 = np.tile(np.array([start[0], start[1], 0.0, 0.0, heading, 0.0]), (agents, 1))
    u0 = np.tile(np.array([2.0, 0.0]), (agents, 1))
    return cfg, plant, pred, ref, path, x0, u0, grid


def unicycle_platoon_scenario(agents: int = 4, spacing: float = 0.25,
                              alpha: float = 45.0, T: float = 0.25,
                              dt: float = 0.01, tf: float = 200.0,
                              start_gap: float = 0.75, v0: float = 0.05):
    """Four robots chasing an elliptic leader track by the target-line rule.

    Robots start in a column below the arena center, headed up the column
    (+y), spaced ``start_gap`` apart so each begins well off its target.
    Returns (platoon config, plant, predictor, leader reference, x0 stack,
    u0 stack, grid).
    """
    plant = unicycle_dynamics()
    pred = unicycle_predictor(T)
    ref = ellipse_reference(domain=(0.0, tf + T))
    cfg = PlatoonConfig(agent_count=agents, spacing=spacing,
                        controller=ControllerConfig("intermediate", alpha=alpha, T=T),
                        follower_mode="target_line")
    grid = TimeGrid(0.0, tf, dt)
    x0 = np.stack([np.array([0.0, -start_gap * i, np.pi / 2.0]) for i in range(agents)])
    u0 = np.tile(np.array([v0, 0.0]), (agents, 1))
    return cfg, plant, pred, ref, x0, u0, grid
