"""Kinematic unicycle robots and the elliptic leader track."""

from __future__ import annotations

import numpy as np

from ..core import PlantModel, ReferenceSignal


def unicycle_dynamics() -> PlantModel:
    """State (z1, z2, psi), input (v, omega), output (z1, z2)."""

    def f(x, u):
        return np.array([u[0] * np.cos(x[2]), u[0] * np.sin(x[2]), u[1]])

    def f_batch(X, U):
        return np.stack([U[:, 0] * np.cos(X[:, 2]),
                         U[:, 0] * np.sin(X[:, 2]),
                         U[:, 1]], axis=1)

    def h(x):
        return x[:2]

    return PlantModel(n=3, m=2, f=f, h=h, f_batch=f_batch, name="unicycle")


def ellipse_reference(a: float = 1.1, b: float = 0.7, rate: float = 0.06,
                      domain=None) -> ReferenceSignal:
    """r(t) = (a sin(rate t), b cos(rate t))."""

    def r(t):
        return np.array([a * np.sin(rate * t), b * np.cos(rate * t)])

    def rdot(t):
        return np.array([a * rate * np.cos(rate * t), -b * rate * np.sin(rate * t)])

    eta = rate * max(a, b)
    return ReferenceSignal(m=2, r=r, rdot=rdot, eta=eta, domain=domain)
