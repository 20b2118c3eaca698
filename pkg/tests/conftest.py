"""Shared fixtures: the expensive benchmark runs, executed once per session.

Each fixture returns (result, wall_seconds) so the acceptance tests can
assert on runtime no matter which test triggered the run.
"""

import time

import pytest

from nrflow import ControllerConfig, TimeGrid, run_closed_loop
from nrflow.scenarios import (bicycle_platoon_scenario, pendulum_scenario,
                              run_platoon, swing_reference,
                              unicycle_platoon_scenario)


@pytest.fixture(scope="session")
def pendulum_full_run():
    plant, pred, cfg, ref, x0, u0, grid = pendulum_scenario()
    t0 = time.perf_counter()
    trace = run_closed_loop(plant, pred, cfg, ref, x0, u0, grid)
    return trace, time.perf_counter() - t0


@pytest.fixture(scope="session")
def pendulum_attenuated_run():
    plant, pred, cfg, ref, x0, u0, grid = pendulum_scenario(amplitude_scale=0.8)
    t0 = time.perf_counter()
    trace = run_closed_loop(plant, pred, cfg, ref, x0, u0, grid)
    return trace, time.perf_counter() - t0


@pytest.fixture(scope="session")
def pendulum_lyapunov_run():
    plant, pred, _, _, x0, u0, _ = pendulum_scenario()
    cfg = ControllerConfig("enhanced", alpha=1.0, T=0.2)
    ref = swing_reference(1.0, domain=(0.0, 3.5))
    grid = TimeGrid(0.0, 3.0, 1e-3)
    t0 = time.perf_counter()
    trace = run_closed_loop(plant, pred, cfg, ref, x0, u0, grid)
    return trace, time.perf_counter() - t0


@pytest.fixture(scope="session")
def bicycle_platoon_run():
    cfg, plant, pred, ref, path, x0, u0, grid = bicycle_platoon_scenario()
    t0 = time.perf_counter()
    result = run_platoon(cfg, plant, pred, grid, x0, u0, leader_ref=ref, path=path)
    return result, path, time.perf_counter() - t0


@pytest.fixture(scope="session")
def unicycle_platoon_run():
    cfg, plant, pred, ref, x0, u0, grid = unicycle_platoon_scenario()
    t0 = time.perf_counter()
    result = run_platoon(cfg, plant, pred, grid, x0, u0, leader_ref=ref)
    return result, time.perf_counter() - t0
