"""Shared domain types: time grids, plants, reference signals, augmented state.

All types here are immutable after construction and safe to share between
threads. Vectors are dense 1-D float arrays; dimensions are validated once
at construction (every shipped scenario has n, m <= 6).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .errors import ReferenceDomainError


def as_vector(v, dim: int, name: str = "vector") -> np.ndarray:
    """Coerce to a float vector of the given length."""
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if arr.shape != (dim,):
        raise ValueError(f"{name} has shape {arr.shape}, expected ({dim},)")
    return arr


@dataclass(frozen=True)
class TimeGrid:
    """Uniform simulation grid on [t0, tf] with step dt."""

    t0: float
    tf: float
    dt: float

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.tf <= self.t0:
            raise ValueError("tf must exceed t0")
        if self.steps < 1:
            raise ValueError("grid must contain at least one step")

    @property
    def steps(self) -> int:
        return int(round((self.tf - self.t0) / self.dt))

    def times(self) -> np.ndarray:
        """Grid times t0, t0+dt, ..., tf (steps + 1 points)."""
        return self.t0 + self.dt * np.arange(self.steps + 1)


@dataclass(frozen=True)
class PlantModel:
    """Dynamic plant: state equation xdot = f(x, u), output y = h(x).

    The reference, control input, and output all share dimension m; the
    state has dimension n. Optional fields:

    * ``f_batch``: evaluates f on a (k, n) stack of states and a (k, m)
      stack of inputs at once; used to speed up finite-difference
      prediction.
    * ``propagate_batch``: fully fused constant-input forward-Euler
      propagation of a state stack, signature (X, U, dt, steps) -> X_final.
      Scenario modules may supply a compiled kernel here.
    * ``dfdx``/``dfdu``/``dhdx``: analytic Jacobians when available.
    """

    n: int
    m: int
    f: Callable[[np.ndarray, np.ndarray], np.ndarray]
    h: Callable[[np.ndarray], np.ndarray]
    dfdx: Optional[Callable] = None
    dfdu: Optional[Callable] = None
    dhdx: Optional[Callable] = None
    f_batch: Optional[Callable] = None
    propagate_batch: Optional[Callable] = None
    name: str = ""

    def __post_init__(self):
        x0 = np.zeros(self.n)
        u0 = np.zeros(self.m)
        fx = np.asarray(self.f(x0, u0), dtype=float)
        if fx.shape != (self.n,):
            raise ValueError(f"f returned shape {fx.shape}, expected ({self.n},)")
        hx = np.asarray(self.h(x0), dtype=float)
        if hx.shape != (self.m,):
            raise ValueError(f"h returned shape {hx.shape}, expected ({self.m},)")


@dataclass(frozen=True)
class StaticPlant:
    """Memoryless plant y = g(u) with square input/output dimension m."""

    m: int
    g: Callable[[np.ndarray], np.ndarray]
    dgdu: Optional[Callable] = None

    def __post_init__(self):
        u0 = np.zeros(self.m)
        gu = np.asarray(self.g(u0), dtype=float)
        if gu.shape != (self.m,):
            raise ValueError(f"g returned shape {gu.shape}, expected ({self.m},)")


@dataclass(frozen=True)
class ReferenceSignal:
    """Target trajectory r(t), optionally with derivative and rate bound.

    ``domain`` is the closed interval on which r may be evaluated; scenario
    builders extend it past the simulation horizon so that r(t + T) stays
    in range. ``eta`` is a sup-norm bound on rdot, used only by analysis
    code; when absent it can be estimated by sampling (``estimate_eta``).
    """

    m: int
    r: Callable[[float], np.ndarray]
    rdot: Optional[Callable[[float], np.ndarray]] = None
    eta: Optional[float] = None
    domain: Optional[Tuple[float, float]] = None

    def __call__(self, t: float) -> np.ndarray:
        if self.domain is not None and not (self.domain[0] - 1e-12 <= t <= self.domain[1] + 1e-12):
            raise ReferenceDomainError(t, self.domain)
        return as_vector(self.r(t), self.m, "r(t)")

    def deriv(self, t: float) -> np.ndarray:
        if self.rdot is None:
            raise ValueError("reference has no derivative map")
        if self.domain is not None and not (self.domain[0] - 1e-12 <= t <= self.domain[1] + 1e-12):
            raise ReferenceDomainError(t, self.domain)
        return as_vector(self.rdot(t), self.m, "rdot(t)")

    def check_derivative_consistency(self, t0: float, t1: float, samples: int = 10,
                                     rtol: float = 1e-4, seed: int = 0) -> None:
        """Verify rdot against a central difference of r at random times.

        Raises ValueError on mismatch; a no-op when rdot is absent.
        """
        if self.rdot is None:
            return
        rng = np.random.default_rng(seed)
        h = 1e-6 * max(1.0, abs(t1 - t0))
        for t in rng.uniform(t0 + h, t1 - h, size=samples):
            fd = (self(t + h) - self(t - h)) / (2.0 * h)
            an = self.deriv(t)
            scale = max(1.0, float(np.linalg.norm(an)))
            if np.linalg.norm(fd - an) > rtol * scale:
                raise ValueError(
                    f"rdot inconsistent with r at t={t:.6g}: fd={fd}, analytic={an}"
                )

    def estimate_eta(self, times) -> float:
        """Max ||rdot|| over the sample times (finite differences if needed)."""
        if self.rdot is not None:
            return float(max(np.linalg.norm(self.deriv(t)) for t in times))
        h = 1e-6
        return float(max(
            np.linalg.norm((self(t + h) - self(t - h)) / (2.0 * h)) for t in times
        ))


def eval_reference(ref: ReferenceSignal, t: float, lookahead: float = 0.0) -> np.ndarray:
    """r(t + lookahead), with the signal's domain enforced."""
    return ref(t + lookahead)


@dataclass(frozen=True)
class AugmentedState:
    """Joint closed-loop state (x, u) at time t."""

    x: np.ndarray
    u: np.ndarray
    t: float

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float))
