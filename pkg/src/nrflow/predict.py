"""Output predictors: yhat(t+T) = g(x(t), u(t)) and their Jacobians.

Three constructions are provided:

* ``numeric_predictor`` -- integrates the plant forward with the input
  frozen and differentiates the result by central finite differences;
  works for any plant.
* ``lti_predictor`` -- closed form for xdot = Ax + Bu, y = Cx; the
  prediction map is affine with constant Jacobians.
* ``unicycle_predictor`` -- closed form for the kinematic unicycle,
  including the straight-line limit as the turn rate approaches zero.
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from .core import PlantModel
from .errors import NumericOverflowError, SingularPredictorError
from .integrate import euler_step, expm, expm_integral, rk4_step


class PredictorModel:
    """Lookahead output map g with partial Jacobians, fixed horizon T.

    ``eval_all`` returns (g, dg/dx, dg/du) in one call; implementations
    may fuse the three evaluations for speed.
    """

    def __init__(self, g: Callable, dgdx: Callable, dgdu: Callable,
                 T: float, n: int, m: int,
                 eval_all: Optional[Callable] = None,
                 eval_gu: Optional[Callable] = None, name: str = ""):
        if T <= 0.0:
            raise ValueError("prediction horizon T must be positive")
        self.g = g
        self.dgdx = dgdx
        self.dgdu = dgdu
        self.T = T
        self.n = n
        self.m = m
        self.name = name
        self._eval_all = eval_all
        self._eval_gu = eval_gu

    def eval_all(self, x, u):
        """(g, dg/dx, dg/du) at (x, u), possibly fused."""
        if self._eval_all is not None:
            return self._eval_all(x, u)
        return self.g(x, u), self.dgdx(x, u), self.dgdu(x, u)

    def eval_gu(self, x, u):
        """(g, dg/du) at (x, u); cheaper than eval_all for finite differences."""
        if self._eval_gu is not None:
            return self._eval_gu(x, u)
        return self.g(x, u), self.dgdu(x, u)


def fd_jacobian(g, x, u, axis: str, step: float) -> np.ndarray:
    """Central-difference Jacobian of g(x, u) along the state or input axis.

    Column j is (g(.+step e_j) - g(.-step e_j)) / (2 step).
    """
    if step <= 0.0:
        raise ValueError("step must be positive")
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if axis == "state":
        base, k = x, x.size
    elif axis == "input":
        base, k = u, u.size
    else:
        raise ValueError("axis must be 'state' or 'input'")
    cols = []
    for j in range(k):
        hi = base.copy()
        lo = base.copy()
        hi[j] += step
        lo[j] -= step
        if axis == "state":
            gp, gm = g(hi, u), g(lo, u)
        else:
            gp, gm = g(x, hi), g(x, lo)
        col = (np.asarray(gp, dtype=float) - np.asarray(gm, dtype=float)) / (2.0 * step)
        if not np.all(np.isfinite(col)):
            raise NumericOverflowError(0.0, context=("fd_jacobian", axis, j))
        cols.append(col)
    return np.column_stack(cols)


def _fd_steps(v: np.ndarray, scale: float) -> np.ndarray:
    # per-coordinate step 1e-6 * max(1, |coordinate|) by default
    return scale * np.maximum(1.0, np.abs(v))


def numeric_predictor(plant: PlantModel, T: float, inner_steps: int = 100,
                      method: str = "euler", fd_scale: float = 1e-6) -> PredictorModel:
    """Predictor that integrates the plant forward with frozen input.

    g(x, u) = h(xi(t+T)) where xi solves the state equation with u held
    constant; Jacobians are central finite differences of g with
    per-coordinate steps ``fd_scale * max(1, |coord|)``. The nominal value
    and both Jacobians are obtained from a single batched propagation when
    the plant provides a batch evaluator.
    """
    if T <= 0.0:
        raise ValueError("T must be positive")
    if inner_steps < 1:
        raise ValueError("inner_steps must be >= 1")
    n, m = plant.n, plant.m
    dt = T / inner_steps
    stepper = euler_step if method == "euler" else rk4_step

    def _propagate_rows(X: np.ndarray, U: np.ndarray) -> np.ndarray:
        try:
            return _propagate_rows_inner(X, U)
        except NumericOverflowError as exc:
            raise NumericOverflowError(exc.t, context=("prediction", X[0], U[0])) from exc

    def _propagate_rows_inner(X: np.ndarray, U: np.ndarray) -> np.ndarray:
        # X: (k, n) states, U: (k, m) matching inputs
        if method == "euler" and plant.propagate_batch is not None:
            out = plant.propagate_batch(X, U, dt, inner_steps)
        elif plant.f_batch is not None:
            fb = plant.f_batch
            out = X.copy()
            if method == "euler":
                for _ in range(inner_steps):
                    out += dt * fb(out, U)
            else:
                for _ in range(inner_steps):
                    k1 = fb(out, U)
                    k2 = fb(out + 0.5 * dt * k1, U)
                    k3 = fb(out + 0.5 * dt * k2, U)
                    k4 = fb(out + dt * k3, U)
                    out += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        else:
            out = np.empty_like(X)
            for i in range(X.shape[0]):
                xi = X[i]
                for k in range(inner_steps):
                    xi = stepper(plant.f, xi, U[i], dt, t=k * dt)
                out[i] = xi
        if not np.all(np.isfinite(out)):
            raise NumericOverflowError(T, context=("prediction", X[0], U[0]))
        return out

    def _outputs(X: np.ndarray) -> np.ndarray:
        return np.stack([np.asarray(plant.h(row), dtype=float) for row in X])

    def g(x, u):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        final = _propagate_rows(x[None, :], u[None, :])
        return np.asarray(plant.h(final[0]), dtype=float)

    def _perturbation_stack(x, u, with_state: bool):
        sx = _fd_steps(x, fd_scale) if with_state else None
        su = _fd_steps(u, fd_scale)
        nn = n if with_state else 0
        k = 1 + 2 * nn + 2 * m
        X = np.tile(x, (k, 1))
        U = np.tile(u, (k, 1))
        for j in range(nn):
            X[1 + 2 * j, j] += sx[j]
            X[2 + 2 * j, j] -= sx[j]
        for j in range(m):
            U[1 + 2 * nn + 2 * j, j] += su[j]
            U[2 + 2 * nn + 2 * j, j] -= su[j]
        return X, U, sx, su

    def eval_all(x, u):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        X, U, sx, su = _perturbation_stack(x, u, with_state=True)
        Y = _outputs(_propagate_rows(X, U))
        yhat = Y[0]
        dgdx = np.column_stack([
            (Y[1 + 2 * j] - Y[2 + 2 * j]) / (2.0 * sx[j]) for j in range(n)
        ]) if n else np.zeros((m, 0))
        dgdu = np.column_stack([
            (Y[1 + 2 * n + 2 * j] - Y[2 + 2 * n + 2 * j]) / (2.0 * su[j]) for j in range(m)
        ])
        return yhat, dgdx, dgdu

    def eval_gu(x, u):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        X, U, _, su = _perturbation_stack(x, u, with_state=False)
        Y = _outputs(_propagate_rows(X, U))
        dgdu = np.column_stack([
            (Y[1 + 2 * j] - Y[2 + 2 * j]) / (2.0 * su[j]) for j in range(m)
        ])
        return Y[0], dgdu

    def dgdx(x, u):
        return eval_all(x, u)[1]

    def dgdu(x, u):
        return eval_gu(x, u)[1]

    return PredictorModel(g, dgdx, dgdu, T, n, m, eval_all=eval_all,
                          eval_gu=eval_gu, name=f"numeric[{method},{inner_steps}]")


def lti_predictor(A, B, C, T: float, singular_tol: float = 1e-12) -> PredictorModel:
    """Closed-form predictor for the LTI plant (A, B, C).

    g(x, u) = C e^{AT} x + C (int_0^T e^{As} ds) B u, with constant
    Jacobians. Raises SingularPredictorError when the input Jacobian is
    singular beyond ``singular_tol`` (reciprocal condition number).
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    C = np.asarray(C, dtype=float)
    n = A.shape[0]
    m = B.shape[1]
    if A.shape != (n, n) or B.shape != (n, m) or C.shape != (m, n):
        raise ValueError("inconsistent LTI dimensions")
    CeAT = C @ expm(A * T)
    Dmat = C @ expm_integral(A, T) @ B
    svals = np.linalg.svd(Dmat, compute_uv=False)
    rc = 0.0 if svals[0] == 0.0 else float(svals[-1] / svals[0])
    if rc < singular_tol:
        raise SingularPredictorError(
            f"input Jacobian C (int e^As ds) B is singular (rcond={rc:.3e})"
        )

    def g(x, u):
        return CeAT @ np.asarray(x, dtype=float) + Dmat @ np.asarray(u, dtype=float)

    def dgdx(x, u):
        return CeAT

    def dgdu(x, u):
        return Dmat

    def eval_all(x, u):
        return g(x, u), CeAT, Dmat

    pred = PredictorModel(g, dgdx, dgdu, T, n, m, eval_all=eval_all, name="lti")
    pred.CeAT = CeAT
    pred.Dmat = Dmat
    return pred


def unicycle_predictor(T: float, omega_eps: float = 1e-9) -> PredictorModel:
    """Closed-form predictor for the kinematic unicycle.

    State (z1, z2, psi), input (v, omega), output (z1, z2). For
    |omega| >= omega_eps the constant-input motion is an arc; below the
    threshold the straight-line limit is used. Both branches are
    differentiated analytically; the low-omega Jacobian uses the series
    limit so dg/du stays invertible for v != 0.
    """
    if omega_eps <= 0.0:
        raise ValueError("omega_eps must be positive")

    def g(x, u):
        z1, z2, psi = x
        v, om = u
        if abs(om) >= omega_eps:
            return np.array([
                z1 + (v / om) * (np.sin(psi + om * T) - np.sin(psi)),
                z2 + (v / om) * (-np.cos(psi + om * T) + np.cos(psi)),
            ])
        return np.array([z1 + v * T * np.cos(psi), z2 + v * T * np.sin(psi)])

    def dgdx(x, u):
        _, _, psi = x
        v, om = u
        out = np.zeros((2, 3))
        out[0, 0] = 1.0
        out[1, 1] = 1.0
        if abs(om) >= omega_eps:
            out[0, 2] = (v / om) * (np.cos(psi + om * T) - np.cos(psi))
            out[1, 2] = (v / om) * (np.sin(psi + om * T) - np.sin(psi))
        else:
            out[0, 2] = -v * T * np.sin(psi)
            out[1, 2] = v * T * np.cos(psi)
        return out

    def dgdu(x, u):
        _, _, psi = x
        v, om = u
        out = np.empty((2, 2))
        if abs(om) >= omega_eps:
            ds = np.sin(psi + om * T) - np.sin(psi)
            dc = -np.cos(psi + om * T) + np.cos(psi)
            out[0, 0] = ds / om
            out[1, 0] = dc / om
            out[0, 1] = v * (-ds / om ** 2 + T * np.cos(psi + om * T) / om)
            out[1, 1] = v * (-dc / om ** 2 + T * np.sin(psi + om * T) / om)
        else:
            # series limit of the arc branch as omega -> 0
            out[0, 0] = T * np.cos(psi)
            out[1, 0] = T * np.sin(psi)
            out[0, 1] = -v * T ** 2 * np.sin(psi) / 2.0
            out[1, 1] = v * T ** 2 * np.cos(psi) / 2.0
        return out

    return PredictorModel(g, dgdx, dgdu, T, 3, 2, name="unicycle")
