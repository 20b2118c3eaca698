"""Planar polyline paths: projection, arclength, and platoon distance measure."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NegativeArclengthError


@dataclass(frozen=True)
class PathPolyline:
    """Ordered planar points with cumulative arclength."""

    points: np.ndarray  # (N, 2)
    cumlen: np.ndarray  # (N,)

    @classmethod
    def from_points(cls, points) -> "PathPolyline":
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise ValueError("path needs at least two planar points")
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        if np.any(seg <= 0.0):
            raise ValueError("consecutive path points must be distinct")
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        return cls(points=pts, cumlen=cum)

    @property
    def length(self) -> float:
        return float(self.cumlen[-1])

    def point_at(self, s: float) -> np.ndarray:
        """Point at arclength s, clamped to the path ends."""
        s = float(np.clip(s, 0.0, self.length))
        i = int(np.searchsorted(self.cumlen, s, side="right") - 1)
        i = min(max(i, 0), self.points.shape[0] - 2)
        seg_len = self.cumlen[i + 1] - self.cumlen[i]
        w = (s - self.cumlen[i]) / seg_len
        return (1.0 - w) * self.points[i] + w * self.points[i + 1]

    def tangent_at(self, s: float) -> np.ndarray:
        s = float(np.clip(s, 0.0, self.length))
        i = int(np.searchsorted(self.cumlen, s, side="right") - 1)
        i = min(max(i, 0), self.points.shape[0] - 2)
        d = self.points[i + 1] - self.points[i]
        return d / np.linalg.norm(d)

    def project(self, q) -> tuple[float, float]:
        """(arclength, distance) of the closest point on the path to q.

        Ties are broken toward the smallest arclength.
        """
        q = np.asarray(q, dtype=float)
        a = self.points[:-1]
        d = self.points[1:] - a
        seg_len2 = np.einsum("ij,ij->i", d, d)
        w = np.clip(np.einsum("ij,ij->i", q - a, d) / seg_len2, 0.0, 1.0)
        foot = a + w[:, None] * d
        dist = np.linalg.norm(foot - q, axis=1)
        best = int(np.argmin(dist))  # argmin takes the first (smallest s) on ties
        s = self.cumlen[best] + w[best] * np.sqrt(seg_len2[best])
        return float(s), float(dist[best])


def nearest_point_arclength(path: PathPolyline, q) -> tuple[float, float]:
    """Arclength of the nearest path point to q and the distance to it."""
    return path.project(q)


def approx_interagent_distance(path: PathPolyline, leader, follower) -> float:
    """Platoon distance measure: offsets to the path plus arclength between.

    dist(leader, path) + dist(follower, path) + (s_leader - s_follower).
    Raises NegativeArclengthError when the follower projects ahead of the
    leader (overtaking).
    """
    s_lead, d_lead = path.project(leader)
    s_fol, d_fol = path.project(follower)
    if s_lead < s_fol:
        raise NegativeArclengthError(s_lead, s_fol)
    return d_lead + d_fol + (s_lead - s_fol)


def s_curve_path(straight_in: float, straight_out: float, radius: float,
                 half_turn_deg: float = 45.0, resolution: float = 0.1) -> PathPolyline:
    """Two straight segments joined by a circular arc over a crest.

    The approach straight climbs at +half_turn_deg, the arc turns clockwise
    through 2*half_turn_deg (curvature 1/radius, crest at mid-arc), and the
    exit straight descends at -half_turn_deg.
    """
    th = np.radians(half_turn_deg)
    hdg_in = np.array([np.cos(th), np.sin(th)])
    p0 = np.zeros(2)
    p1 = p0 + straight_in * hdg_in
    center = p1 + radius * np.array([np.sin(th), -np.cos(th)])

    pts = [p0]
    n_in = max(int(np.ceil(straight_in / resolution)), 1)
    for k in range(1, n_in + 1):
        pts.append(p0 + (straight_in * k / n_in) * hdg_in)
    arc_len = 2.0 * th * radius
    n_arc = max(int(np.ceil(arc_len / resolution)), 2)
    for k in range(1, n_arc + 1):
        hdg = th - 2.0 * th * k / n_arc
        pts.append(center + radius * np.array([-np.sin(hdg), np.cos(hdg)]))
    p2 = pts[-1]
    hdg_out = np.array([np.cos(th), -np.sin(th)])
    n_out = max(int(np.ceil(straight_out / resolution)), 1)
    for k in range(1, n_out + 1):
        pts.append(p2 + (straight_out * k / n_out) * hdg_out)
    return PathPolyline.from_points(np.array(pts))


@dataclass(frozen=True)
class SpeedSchedule:
    """Piecewise-linear speed profile v(t) with closed-form arclength."""

    knot_t: np.ndarray
    knot_v: np.ndarray

    @classmethod
    def from_knots(cls, knots) -> "SpeedSchedule":
        t = np.asarray([k[0] for k in knots], dtype=float)
        v = np.asarray([k[1] for k in knots], dtype=float)
        if np.any(np.diff(t) <= 0.0):
            raise ValueError("knot times must be strictly increasing")
        if np.any(v < 0.0):
            raise ValueError("speeds must be nonnegative")
        return cls(knot_t=t, knot_v=v)

    def speed(self, t: float) -> float:
        return float(np.interp(t, self.knot_t, self.knot_v))

    def arclength(self, t: float) -> float:
        """Integral of the speed from the first knot to t (held constant
        beyond the last knot)."""
        t0 = self.knot_t[0]
        if t <= t0:
            return 0.0
        seg_s = np.concatenate([[0.0], np.cumsum(
            0.5 * (self.knot_v[1:] + self.knot_v[:-1]) * np.diff(self.knot_t))])
        if t >= self.knot_t[-1]:
            return float(seg_s[-1] + self.knot_v[-1] * (t - self.knot_t[-1]))
        i = int(np.searchsorted(self.knot_t, t, side="right") - 1)
        dt = t - self.knot_t[i]
        v0 = self.knot_v[i]
        slope = (self.knot_v[i + 1] - v0) / (self.knot_t[i + 1] - self.knot_t[i])
        return float(seg_s[i] + v0 * dt + 0.5 * slope * dt * dt)
