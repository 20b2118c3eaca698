"""Leader-follower platoon simulation with two follower-reference modes.

``arclength_offset``: followers aim for the point on the reference path
one spacing behind where their immediate leader will be at the lookahead
time (the leader's projected arclength advanced by its path speed). They
use the plain gain-scaled controller since follower references have no
derivative available.

``target_line``: followers aim for the point at distance d from the
leader's own predicted position, along the line from that prediction
toward the follower. If the leader keeps a straight course the chain
converges to that line at spacing d.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from ..control import (ClosedLoopTrace, ControllerConfig, _solve_guarded,
                       _variant_rhs)
from ..core import PlantModel, ReferenceSignal, TimeGrid
from ..errors import (CoincidentAgentsError, NumericOverflowError,
                      SingularJacobianError)
from ..predict import PredictorModel
from .paths import PathPolyline

FOLLOWER_MODES = ("arclength_offset", "target_line")


@dataclass(frozen=True)
class PlatoonConfig:
    agent_count: int
    spacing: float
    controller: ControllerConfig
    follower_mode: str

    def __post_init__(self):
        if self.agent_count < 1:
            raise ValueError("agent_count must be >= 1")
        if self.spacing <= 0.0:
            raise ValueError("spacing must be positive")
        if self.follower_mode not in FOLLOWER_MODES:
            raise ValueError(f"follower_mode must be one of {FOLLOWER_MODES}")
        if self.controller.variant not in ("basic", "intermediate"):
            # follower references have no derivative map
            raise ValueError("platoon controllers must be 'basic' or 'intermediate'")


def follower_target_line(leader_pred, follower_pos, d: float,
                         fallback_heading: Optional[float] = None) -> np.ndarray:
    """Point at distance d from leader_pred toward follower_pos.

    When the two points coincide (closer than 1e-9 m) the target is placed
    d behind the leader along ``fallback_heading``; without a heading the
    situation is an error.
    """
    leader_pred = np.asarray(leader_pred, dtype=float)
    follower_pos = np.asarray(follower_pos, dtype=float)
    gap = follower_pos - leader_pred
    norm = float(np.linalg.norm(gap))
    if norm < 1e-9:
        if fallback_heading is None:
            raise CoincidentAgentsError("leader prediction coincides with follower position")
        return leader_pred - d * np.array([np.cos(fallback_heading), np.sin(fallback_heading)])
    return leader_pred + (d / norm) * gap


@dataclass
class PlatoonResult:
    """Per-agent traces plus platoon-level metrics.

    ``euclid[k, i]`` is the Euclidean distance between agents i and i+1 at
    tick k. When a path is available, ``approx_dist`` holds the
    offsets-plus-arclength distance measure (signed gap, not clipped), and
    ``lateral``/``arclengths`` the per-agent normal offsets and projected
    arclengths.
    """

    traces: List[ClosedLoopTrace]
    t: np.ndarray
    euclid: np.ndarray
    approx_dist: Optional[np.ndarray] = None
    lateral: Optional[np.ndarray] = None
    arclengths: Optional[np.ndarray] = None
    success: bool = True
    error: Optional[Exception] = None

    @property
    def agent_count(self) -> int:
        return len(self.traces)


def run_platoon(cfg: PlatoonConfig, plant: PlantModel, pred: PredictorModel,
                grid: TimeGrid, x0s, u0s, *,
                leader_ref: ReferenceSignal,
                path: Optional[PathPolyline] = None,
                metric_path: Optional[PathPolyline] = None) -> PlatoonResult:
    """Simulate all agents in lockstep over the grid.

    ``leader_ref`` must cover [t0, tf + T]. ``arclength_offset`` mode
    requires ``path`` (the curve followers project onto, normally the same
    one the leader reference traverses). ``metric_path`` enables path-based
    metrics in target_line mode.
    """
    if cfg.follower_mode == "arclength_offset" and path is None:
        raise ValueError("arclength_offset mode requires a path")
    k = cfg.agent_count
    n, m = plant.n, plant.m
    T = pred.T
    d = cfg.spacing
    times = grid.times()
    N = times.size
    mpath = path if path is not None else metric_path

    X = np.array(x0s, dtype=float).reshape(k, n).copy()
    U = np.array(u0s, dtype=float).reshape(k, m).copy()

    cols = dict(t=np.empty(N), x=np.empty((N, n)), u=np.empty((N, m)),
                y=np.empty((N, m)), yhat=np.empty((N, m)), r=np.empty((N, m)),
                r_ahead=np.empty((N, m)), v=np.empty(N))
    per_agent = [
        {key: arr.copy() for key, arr in cols.items()} for _ in range(k)
    ]
    euclid = np.full((N, k - 1), np.nan)
    approx = np.full((N, k - 1), np.nan) if mpath is not None else None
    lateral = np.full((N, k), np.nan) if mpath is not None else None
    arcs = np.full((N, k), np.nan) if mpath is not None else None

    ctrl = cfg.controller
    needs_drift = ctrl.variant == "intermediate"
    error: Optional[Exception] = None
    filled = 0
    for step, t in enumerate(times):
        try:
            Y = np.stack([np.asarray(plant.h(X[i]), dtype=float) for i in range(k)])
            FX = np.stack([np.asarray(plant.f(X[i], U[i]), dtype=float) for i in range(k)])
            if needs_drift:
                parts = [pred.eval_all(X[i], U[i]) for i in range(k)]
                jacs = [p[2] for p in parts]
                drifts = [p[1] @ FX[i] for i, p in enumerate(parts)]
            else:
                parts = [pred.eval_gu(X[i], U[i]) for i in range(k)]
                jacs = [p[1] for p in parts]
                drifts = [None] * k
            yhats = np.stack([p[0] for p in parts])

            # references for this tick
            r_now = np.empty((k, m))
            r_ahead = np.empty((k, m))
            r_now[0] = leader_ref(t)
            r_ahead[0] = leader_ref(t + T)
            if mpath is not None:
                projections = [mpath.project(Y[i]) for i in range(k)]
            for i in range(1, k):
                if cfg.follower_mode == "arclength_offset":
                    s_lead, _ = projections[i - 1]
                    v_long = float(FX[i - 1, :2] @ path.tangent_at(s_lead))
                    r_ahead[i] = path.point_at(s_lead + v_long * T - d)
                    r_now[i] = path.point_at(s_lead - d)
                else:
                    heading = float(X[i - 1][2]) if n >= 3 else None
                    r_ahead[i] = follower_target_line(yhats[i - 1], Y[i], d, heading)
                    r_now[i] = follower_target_line(Y[i - 1], Y[i], d, heading)

            for i in range(k):
                rec = per_agent[i]
                rec["t"][step] = t
                rec["x"][step] = X[i]
                rec["u"][step] = U[i]
                rec["y"][step] = Y[i]
                rec["yhat"][step] = yhats[i]
                rec["r"][step] = r_now[i]
                rec["r_ahead"][step] = r_ahead[i]
                diff = r_ahead[i] - yhats[i]
                rec["v"][step] = 0.5 * float(diff @ diff)
            if k > 1:
                euclid[step] = np.linalg.norm(Y[:-1] - Y[1:], axis=1)
            if mpath is not None:
                for i in range(k):
                    arcs[step, i] = projections[i][0]
                    lateral[step, i] = projections[i][1]
                for i in range(1, k):
                    approx[step, i - 1] = (projections[i - 1][1] + projections[i][1]
                                           + projections[i - 1][0] - projections[i][0])
            filled = step + 1
            if step == N - 1:
                break

            rates = np.empty((k, m))
            for i in range(k):
                rhs = _variant_rhs(ctrl, yhats[i], r_ahead[i], None, drifts[i], t)
                rates[i] = _solve_guarded(jacs[i], rhs, ctrl.singularity_tol,
                                          t, X[i], U[i])
            X += grid.dt * FX
            U += grid.dt * rates
            if not (np.all(np.isfinite(X)) and np.all(np.isfinite(U))):
                raise NumericOverflowError(t)
        except (SingularJacobianError, NumericOverflowError, CoincidentAgentsError) as exc:
            error = exc
            break

    sl = slice(0, filled)
    traces = [
        ClosedLoopTrace(
            t=rec["t"][sl], x=rec["x"][sl], u=rec["u"][sl], y=rec["y"][sl],
            yhat=rec["yhat"][sl], r=rec["r"][sl], r_ahead=rec["r_ahead"][sl],
            v=rec["v"][sl], T=T, success=error is None, error=error,
        )
        for rec in per_agent
    ]
    return PlatoonResult(
        traces=traces, t=times[sl], euclid=euclid[sl],
        approx_dist=approx[sl] if approx is not None else None,
        lateral=lateral[sl] if lateral is not None else None,
        arclengths=arcs[sl] if arcs is not None else None,
        success=error is None, error=error,
    )
