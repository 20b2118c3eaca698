"""Cart-mounted inverted pendulum tracking a swing between +30 and -90 degrees."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..control import ControllerConfig
from ..core import PlantModel, ReferenceSignal, TimeGrid
from ..predict import numeric_predictor


@dataclass(frozen=True)
class PendulumParams:
    """Cart mass M, bob mass m, rod length l, gravity g (weightless rod,
    point mass, no friction)."""

    M: float = 1.0
    m: float = 0.2
    l: float = 2.0
    g: float = 9.81

    def __post_init__(self):
        if min(self.M, self.m, self.l, self.g) <= 0.0:
            raise ValueError("pendulum parameters must be positive")


def pendulum_accel(p: PendulumParams, theta: float, theta_dot: float, force: float) -> float:
    """Angular acceleration of the rod, theta measured to the left of upright.

    From the Lagrangian of the cart-rod pair (force F on the cart along +z,
    bob at (z - l sin0, l cos0)):

        (M l + m l sin^2) thdd + m l thd^2 sin cos - (M+m) g sin = F cos

    so the upright pose is unstable, as an inverted pendulum must be.
    """
    s, c = np.sin(theta), np.cos(theta)
    num = force * c - p.m * p.l * theta_dot ** 2 * s * c + (p.M + p.m) * p.g * s
    return num / (p.M * p.l + p.m * p.l * s * s)


@njit(cache=True)
def _pendulum_propagate(X, U, dt, steps, M, m, l, g):
    cur = X.copy()
    for _ in range(steps):
        for i in range(cur.shape[0]):
            th = cur[i, 0]
            thd = cur[i, 1]
            s = np.sin(th)
            c = np.cos(th)
            num = U[i, 0] * c - m * l * thd * thd * s * c + (M + m) * g * s
            acc = num / (M * l + m * l * s * s)
            cur[i, 0] = th + dt * thd
            cur[i, 1] = thd + dt * acc
    return cur


def pendulum_dynamics(p: PendulumParams = PendulumParams()) -> PlantModel:
    """State (theta, theta_dot), input F (force on the cart), output theta."""

    def f(x, u):
        return np.array([x[1], pendulum_accel(p, x[0], x[1], u[0])])

    def f_batch(X, U):
        th = X[:, 0]
        thd = X[:, 1]
        s = np.sin(th)
        c = np.cos(th)
        num = U[:, 0] * c - p.m * p.l * thd * thd * s * c + (p.M + p.m) * p.g * s
        acc = num / (p.M * p.l + p.m * p.l * s * s)
        return np.stack([thd, acc], axis=1)

    def propagate_batch(X, U, dt, steps):
        return _pendulum_propagate(np.ascontiguousarray(X), np.ascontiguousarray(U),
                                   dt, steps, p.M, p.m, p.l, p.g)

    def h(x):
        return x[:1]

    return PlantModel(n=2, m=1, f=f, h=h, f_batch=f_batch,
                      propagate_batch=propagate_batch, name="pendulum")


def pendulum_energy(p: PendulumParams, x) -> float:
    """First integral of the unforced reduced model.

    E = 0.5 l (M + m sin^2) thd^2 + (M+m) g cos(theta); constant along
    force-free trajectories (potential peaks at the upright pose).
    """
    theta, theta_dot = x
    kinetic = 0.5 * p.l * (p.M + p.m * np.sin(theta) ** 2) * theta_dot ** 2
    potential = (p.M + p.m) * p.g * np.cos(theta)
    return float(kinetic + potential)


def swing_reference(amplitude_scale: float = 1.0, domain=None) -> ReferenceSignal:
    """r(t) = -pi/6 + scale * (pi/3) sin t; full scale touches -90 degrees."""
    amp = amplitude_scale * np.pi / 3.0

    def r(t):
        return np.array([-np.pi / 6.0 + amp * np.sin(t)])

    def rdot(t):
        return np.array([amp * np.cos(t)])

    return ReferenceSignal(m=1, r=r, rdot=rdot, eta=amp, domain=domain)


def pendulum_scenario(alpha: float = 35.0, T: float = 0.2, dt: float = 0.01,
                      tf: float = 25.0, amplitude_scale: float = 1.0,
                      variant: str = "full", predictor_steps: int = 100,
                      params: PendulumParams = PendulumParams()):
    """The benchmark pendulum run: start at (pi/6, 0), force 0.

    Returns (plant, predictor, controller config, reference, x0, u0, grid).
    """
    plant = pendulum_dynamics(params)
    pred = numeric_predictor(plant, T, predictor_steps)
    cfg = ControllerConfig(variant=variant, alpha=alpha, T=T)
    grid = TimeGrid(0.0, tf, dt)
    ref = swing_reference(amplitude_scale, domain=(0.0, tf + T))
    x0 = np.array([np.pi / 6.0, 0.0])
    u0 = np.array([0.0])
    return plant, pred, cfg, ref, x0, u0, grid
