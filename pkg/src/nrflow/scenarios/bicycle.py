"""Slip-aware bicycle model and the four-vehicle path-following platoon."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..core import PlantModel, ReferenceSignal
from .paths import PathPolyline, SpeedSchedule, s_curve_path

# Longitudinal-speed floor used inside the slip-angle terms. The tire
# forces divide by v_l; at a standing start the raw model is stiff enough
# to destabilize forward Euler at dt = 0.01 (the slip and yaw relaxation
# rates scale as 1/v_l), so v_l is clamped to this floor there.
V_FLOOR = 0.6


@dataclass(frozen=True)
class BicycleParams:
    mass: float = 1700.0
    lf: float = 1.5
    lr: float = 1.5
    Iz: float = 2500.0
    Caf: float = 29963.5
    Car: float = 29963.5

    def __post_init__(self):
        if min(self.mass, self.lf, self.lr, self.Iz, self.Caf, self.Car) <= 0.0:
            raise ValueError("bicycle parameters must be positive")


@njit(cache=True)
def _bicycle_rhs(X, U, out, mass, lf, lr, Iz, Caf, Car, v_floor):
    k = X.shape[0]
    for i in range(k):
        z1, z2, vl, vn, psi, psid = X[i]
        al, df = U[i]
        v_eff = vl if vl > v_floor else v_floor
        Fcf = Caf * (df - np.arctan((vn + lf * psid) / v_eff))
        Fcr = -Car * np.arctan((vn - lr * psid) / v_eff)
        cpsi = np.cos(psi)
        spsi = np.sin(psi)
        out[i, 0] = vl * cpsi - vn * spsi
        out[i, 1] = vl * spsi + vn * cpsi
        out[i, 2] = psid * vn + al
        out[i, 3] = -psid * vl + 2.0 * (Fcf * np.cos(df) + Fcr) / mass
        out[i, 4] = psid
        out[i, 5] = 2.0 * (lf * Fcf * np.cos(df) - lr * Fcr) / Iz
    return out


@njit(cache=True)
def _bicycle_propagate(X, U, dt, steps, mass, lf, lr, Iz, Caf, Car, v_floor):
    cur = X.copy()
    rhs = np.empty_like(cur)
    for _ in range(steps):
        _bicycle_rhs(cur, U, rhs, mass, lf, lr, Iz, Caf, Car, v_floor)
        cur += dt * rhs
    return cur


def bicycle_dynamics(p: BicycleParams = BicycleParams(), v_floor: float = V_FLOOR) -> PlantModel:
    """State (z1, z2, v_l, v_n, psi, psi_dot), input (a_l, delta_f),
    output (z1, z2)."""

    args = (p.mass, p.lf, p.lr, p.Iz, p.Caf, p.Car, v_floor)

    def f(x, u):
        out = np.empty((1, 6))
        _bicycle_rhs(x[None, :], np.asarray(u, dtype=float)[None, :], out, *args)
        return out[0]

    def f_batch(X, U):
        out = np.empty_like(X)
        return _bicycle_rhs(X, U, out, *args)

    def propagate_batch(X, U, dt, steps):
        return _bicycle_propagate(np.ascontiguousarray(X), np.ascontiguousarray(U),
                                  dt, steps, *args)

    def h(x):
        return x[:2]

    return PlantModel(n=6, m=2, f=f, h=h, f_batch=f_batch,
                      propagate_batch=propagate_batch, name="bicycle")


def cornering_force_front(p: BicycleParams, vl, vn, psid, delta_f, v_floor: float = V_FLOOR) -> float:
    """Front-tire lateral force from the slip angle."""
    v_eff = max(vl, v_floor)
    return p.Caf * (delta_f - np.arctan((vn + p.lf * psid) / v_eff))


def default_speed_schedule(apex_speed: float = 8.66, top_speed: float = 20.0) -> SpeedSchedule:
    """Standing start, two top-speed plateaus, slow apex between them."""
    return SpeedSchedule.from_knots([
        (0.0, 0.0), (10.0, top_speed), (15.0, top_speed), (19.0, apex_speed),
        (21.0, apex_speed), (25.0, top_speed), (30.0, top_speed), (38.0, top_speed),
    ])


def default_platoon_path(schedule: SpeedSchedule, radius: float = 30.0,
                         tf: float = 38.0, lookahead: float = 0.5,
                         tail_margin: float = 20.0) -> PathPolyline:
    """Crest path sized so the slow apex of the schedule lands mid-arc."""
    half_turn = np.radians(45.0)
    arc_len = 2.0 * half_turn * radius
    apex_s = schedule.arclength(20.0)
    straight_in = apex_s - 0.5 * arc_len
    total_needed = schedule.arclength(tf + lookahead) + tail_margin
    straight_out = total_needed - straight_in - arc_len
    return s_curve_path(straight_in, straight_out, radius)


def path_reference(path: PathPolyline, schedule: SpeedSchedule, domain=None) -> ReferenceSignal:
    """Leader reference: the path traversed at the scheduled speed."""

    def r(t):
        return path.point_at(schedule.arclength(t))

    def rdot(t):
        return schedule.speed(t) * path.tangent_at(schedule.arclength(t))

    return ReferenceSignal(m=2, r=r, rdot=rdot, domain=domain)
