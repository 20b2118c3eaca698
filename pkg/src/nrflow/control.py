"""Variable-gain integrator controllers and the closed-loop simulator.

The control law is a continuous-time analogue of the Newton-Raphson
iteration: udot is the inverse input Jacobian of the predicted output
applied to a correction term. Five variants are supported:

* ``memoryless``    udot = alpha (dg/du)^-1 (r(t) - g(u))          [static plants]
* ``basic``         udot = alpha J^-1 (r(t+T) - yhat)
* ``enhanced``      udot = J^-1 (r(t+T) - yhat + rdot(t+T) - dg/dx f)
* ``full``          udot = J^-1 (alpha (r(t+T) - yhat) + rdot(t+T) - dg/dx f + e2(t))
* ``intermediate``  udot = J^-1 (alpha (r(t+T) - yhat) - dg/dx f)

with J = dg/du. ``enhanced`` takes no gain: it is the variant whose
tracking-error energy satisfies Vdot = -2V exactly along nonsingular
trajectories. The ``full`` variant accepts an injectable additive error
e2(t) in the feedforward term; basic and intermediate are recovered from
``full`` by the substitutions e2 = -rdot(t+T) + dg/dx f and
e2 = -rdot(t+T) respectively.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import AugmentedState, PlantModel, ReferenceSignal, StaticPlant, TimeGrid
from .errors import (InsufficientDataError, NumericOverflowError,
                     SingularJacobianError)
from .predict import PredictorModel, fd_jacobian

VARIANTS = ("memoryless", "basic", "enhanced", "full", "intermediate")


@dataclass(frozen=True)
class ControllerConfig:
    """Controller variant, speedup gain, horizon, and numeric guards.

    ``singularity_tol`` is the floor on the reciprocal condition number of
    dg/du below which the run aborts. ``e2_injector`` adds a time-dependent
    error inside the feedforward term and is only meaningful for the
    ``full`` variant.
    """

    variant: str
    alpha: float = 1.0
    T: float = 0.0
    singularity_tol: float = 1e-10
    e2_injector: Optional[Callable[[float], np.ndarray]] = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}, expected one of {VARIANTS}")
        if self.alpha <= 0.0:
            raise ValueError("alpha must be positive")
        if self.e2_injector is not None and self.variant != "full":
            raise ValueError("e2_injector is only supported by the 'full' variant")


def _rcond(J: np.ndarray) -> float:
    """Reciprocal 2-norm condition number, with closed forms for m <= 2."""
    if J.shape == (1, 1):
        return 1.0 if J[0, 0] != 0.0 and np.isfinite(J[0, 0]) else 0.0
    if J.shape == (2, 2):
        a, b, c, d = J[0, 0], J[0, 1], J[1, 0], J[1, 1]
        tr = a * a + b * b + c * c + d * d
        det = a * d - b * c
        disc = max(tr * tr - 4.0 * det * det, 0.0)
        root = np.sqrt(disc)
        smax2 = 0.5 * (tr + root)
        smin2 = 0.5 * (tr - root)
        if smax2 <= 0.0 or not np.isfinite(smax2):
            return 0.0
        return float(np.sqrt(max(smin2, 0.0) / smax2))
    svals = np.linalg.svd(J, compute_uv=False)
    return 0.0 if svals[0] == 0.0 else float(svals[-1] / svals[0])


def _solve_guarded(J: np.ndarray, rhs: np.ndarray, tol: float, t: float, x, u) -> np.ndarray:
    rc = _rcond(J)
    if rc < tol:
        raise SingularJacobianError(t, np.array(x), np.array(u), rc)
    if J.shape == (1, 1):
        return rhs / J[0, 0]
    return np.linalg.solve(J, rhs)


def _static_jacobian(plant: StaticPlant, u: np.ndarray) -> np.ndarray:
    if plant.dgdu is not None:
        return np.asarray(plant.dgdu(u), dtype=float).reshape(plant.m, plant.m)
    return fd_jacobian(lambda _x, uu: plant.g(uu), np.zeros(0), u, "input", 1e-6)


def _variant_rhs(cfg: ControllerConfig, yhat, r_ahead, rdot_ahead, drift, t: float):
    """Correction term fed through the inverse input Jacobian."""
    err = r_ahead - yhat
    if cfg.variant == "basic":
        return cfg.alpha * err
    if cfg.variant == "enhanced":
        return err + rdot_ahead - drift
    if cfg.variant == "full":
        rhs = cfg.alpha * err + rdot_ahead - drift
        if cfg.e2_injector is not None:
            rhs = rhs + np.asarray(cfg.e2_injector(t), dtype=float)
        return rhs
    if cfg.variant == "intermediate":
        return cfg.alpha * err - drift
    raise ValueError(f"variant {cfg.variant!r} has no dynamic-plant rate")


def rate_from_targets(cfg: ControllerConfig, pred: PredictorModel, plant: PlantModel,
                      x: np.ndarray, u: np.ndarray, t: float,
                      r_ahead: np.ndarray, rdot_ahead: Optional[np.ndarray] = None) -> np.ndarray:
    """udot for a dynamic-plant variant given the lookahead targets directly.

    Platoon runners call this with per-tick follower targets; ``control_rate``
    wraps it for targets drawn from a ReferenceSignal.
    """
    if cfg.variant == "basic":
        yhat, J = pred.eval_gu(x, u)
        drift = None
    else:
        yhat, dgdx, J = pred.eval_all(x, u)
        drift = dgdx @ np.asarray(plant.f(x, u), dtype=float)
    rhs = _variant_rhs(cfg, yhat, r_ahead, rdot_ahead, drift, t)
    return _solve_guarded(J, rhs, cfg.singularity_tol, t, x, u)


def control_rate(cfg: ControllerConfig, pred: Optional[PredictorModel],
                 plant, ref: ReferenceSignal, state: AugmentedState) -> np.ndarray:
    """udot for the configured variant at the given augmented state."""
    if cfg.variant == "memoryless":
        if not isinstance(plant, StaticPlant):
            raise TypeError("memoryless variant needs a StaticPlant")
        y = np.asarray(plant.g(state.u), dtype=float)
        J = _static_jacobian(plant, state.u)
        rhs = cfg.alpha * (ref(state.t) - y)
        return _solve_guarded(J, rhs, cfg.singularity_tol, state.t, state.x, state.u)

    if pred is None:
        raise ValueError("dynamic variants need a predictor")
    t_ahead = state.t + pred.T
    rdot_ahead = ref.deriv(t_ahead) if cfg.variant in ("enhanced", "full") else None
    return rate_from_targets(cfg, pred, plant, state.x, state.u, state.t,
                             ref(t_ahead), rdot_ahead)


def step_closed_loop(plant, pred: Optional[PredictorModel], cfg: ControllerConfig,
                     ref: ReferenceSignal, state: AugmentedState, dt: float) -> AugmentedState:
    """One forward-Euler step of the joint system (xdot, udot)."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    udot = control_rate(cfg, pred, plant, ref, state)
    if isinstance(plant, StaticPlant):
        x_next = state.x
    else:
        x_next = state.x + dt * np.asarray(plant.f(state.x, state.u), dtype=float)
    u_next = state.u + dt * udot
    if not (np.all(np.isfinite(x_next)) and np.all(np.isfinite(u_next))):
        raise NumericOverflowError(state.t)
    return AugmentedState(x_next, u_next, state.t + dt)


@dataclass
class ClosedLoopTrace:
    """Time series of one closed-loop run plus summary statistics.

    Columns follow the simulation grid: state x, input u, output y, the
    lookahead prediction yhat(t+T), the reference r(t) and r(t+T), and the
    tracking-error energy V = 0.5 ||r(t+T) - yhat(t+T)||^2. A failed run
    carries the partial trace up to the failure together with the error.
    """

    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    y: np.ndarray
    yhat: np.ndarray
    r: np.ndarray
    r_ahead: np.ndarray
    v: np.ndarray
    T: float
    success: bool = True
    error: Optional[Exception] = None
    tail_fraction: float = 0.2

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0]) if self.t.size > 1 else 0.0

    def _tail(self) -> slice:
        start = int(np.floor(self.t.size * (1.0 - self.tail_fraction)))
        return slice(min(start, self.t.size - 1), self.t.size)

    @property
    def tail_tracking_error(self) -> float:
        """max ||r(t) - y(t)|| over the final tail window."""
        sl = self._tail()
        return float(np.max(np.linalg.norm(self.r[sl] - self.y[sl], axis=1)))

    @property
    def tail_ref_pred_error(self) -> float:
        """max ||r(t+T) - yhat(t+T)|| over the final tail window."""
        sl = self._tail()
        return float(np.max(np.linalg.norm(self.r_ahead[sl] - self.yhat[sl], axis=1)))

    @property
    def peak_input(self) -> float:
        return float(np.max(np.linalg.norm(self.u, axis=1))) if self.u.size else 0.0

    def lyapunov_fit_slope(self) -> float:
        """Slope of a least-squares line through log V(t) (V > 0 records)."""
        mask = self.v > 0.0
        if np.count_nonzero(mask) < 2:
            raise InsufficientDataError("not enough positive V records for a log fit")
        return float(np.polyfit(self.t[mask], np.log(self.v[mask]), 1)[0])


def run_closed_loop(plant, pred: Optional[PredictorModel], cfg: ControllerConfig,
                    ref: ReferenceSignal, x0, u0, grid: TimeGrid) -> ClosedLoopTrace:
    """Simulate the closed loop over the grid by forward Euler.

    On a singular Jacobian or numeric overflow the partial trace up to the
    failure is returned with ``success=False`` and the error attached.
    """
    static = isinstance(plant, StaticPlant)
    m = plant.m
    n = 0 if static else plant.n
    lookahead = 0.0 if static else pred.T
    times = grid.times()
    N = times.size

    t_arr = np.empty(N)
    x_arr = np.empty((N, n))
    u_arr = np.empty((N, m))
    y_arr = np.empty((N, m))
    yhat_arr = np.empty((N, m))
    r_arr = np.empty((N, m))
    ra_arr = np.empty((N, m))
    v_arr = np.empty(N)

    x = np.asarray(x0, dtype=float).copy() if not static else np.zeros(0)
    u = np.asarray(u0, dtype=float).copy()
    if not static and x.shape != (n,):
        raise ValueError(f"x0 has shape {x.shape}, expected ({n},)")
    if u.shape != (m,):
        raise ValueError(f"u0 has shape {u.shape}, expected ({m},)")
    if cfg.variant in ("enhanced", "full") and ref.rdot is None:
        raise ValueError(f"variant {cfg.variant!r} requires a reference derivative")

    needs_drift = cfg.variant in ("enhanced", "full", "intermediate")
    needs_rdot = cfg.variant in ("enhanced", "full")
    error: Optional[Exception] = None
    filled = 0
    # overflow shows up as inf/nan and is converted to an error below
    with np.errstate(over="ignore", invalid="ignore"):
        for i, t in enumerate(times):
            try:
                r_now = ref(t)
                r_ahead = ref(t + lookahead) if lookahead else r_now
                fx = drift = J = None
                if static:
                    y = np.asarray(plant.g(u), dtype=float)
                    yhat = y
                else:
                    y = np.asarray(plant.h(x), dtype=float)
                    fx = np.asarray(plant.f(x, u), dtype=float)
                    if needs_drift:
                        yhat, dgdx, J = pred.eval_all(x, u)
                        drift = dgdx @ fx
                    else:
                        yhat, J = pred.eval_gu(x, u)
                t_arr[i] = t
                x_arr[i] = x
                u_arr[i] = u
                y_arr[i] = y
                yhat_arr[i] = yhat
                r_arr[i] = r_now
                ra_arr[i] = r_ahead
                diff = r_ahead - yhat
                v_arr[i] = 0.5 * float(diff @ diff)
                filled = i + 1
                if i == N - 1:
                    break
                if static:
                    J = _static_jacobian(plant, u)
                    rhs = cfg.alpha * (r_now - y)
                else:
                    rdot_ahead = ref.deriv(t + lookahead) if needs_rdot else None
                    rhs = _variant_rhs(cfg, yhat, r_ahead, rdot_ahead, drift, t)
                udot = _solve_guarded(J, rhs, cfg.singularity_tol, t, x, u)
                if not static:
                    x = x + grid.dt * fx
                u = u + grid.dt * udot
                if not (np.all(np.isfinite(x)) and np.all(np.isfinite(u))):
                    raise NumericOverflowError(t)
            except (SingularJacobianError, NumericOverflowError) as exc:
                error = exc
                break

    sl = slice(0, filled)
    return ClosedLoopTrace(
        t=t_arr[sl], x=x_arr[sl], u=u_arr[sl], y=y_arr[sl], yhat=yhat_arr[sl],
        r=r_arr[sl], r_ahead=ra_arr[sl], v=v_arr[sl], T=lookahead,
        success=error is None, error=error,
    )


def asymptotic_errors(trace: ClosedLoopTrace) -> tuple[float, float]:
    """(eta1_hat, tracking_tail) estimated from a successful trace.

    eta1_hat is the tail max of ||yhat(s) - y(s)|| with the prediction made
    at s - T aligned against the realized output at s; tracking_tail is the
    tail max of ||r(t) - y(t)||.
    """
    if not trace.success:
        raise InsufficientDataError("trace marked unsuccessful")
    if trace.T > 0.0:
        if trace.t[-1] - trace.t[0] < 2.0 * trace.T:
            raise InsufficientDataError("horizon shorter than twice the prediction horizon")
        k = int(round(trace.T / trace.dt))
        if k < 1:
            raise InsufficientDataError("grid too coarse to align predictions")
        pred_err = np.linalg.norm(trace.yhat[:-k] - trace.y[k:], axis=1)
        start = int(np.floor(pred_err.size * (1.0 - trace.tail_fraction)))
        eta1_hat = float(np.max(pred_err[start:]))
    else:
        eta1_hat = 0.0
    return eta1_hat, trace.tail_tracking_error
