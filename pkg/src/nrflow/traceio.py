"""Delimited trace files: one row per grid step, 9 significant digits.

Header: t, x_1..x_n, u_1..u_m, y_1..y_m, r_1..r_m, yhat_1..yhat_m, V.
"""

from __future__ import annotations

import csv
from typing import TextIO

import numpy as np

from .control import ClosedLoopTrace


def _fmt(v: float) -> str:
    return f"{v:.9g}"


def trace_header(n: int, m: int) -> list[str]:
    cols = ["t"]
    cols += [f"x_{i + 1}" for i in range(n)]
    cols += [f"u_{i + 1}" for i in range(m)]
    cols += [f"y_{i + 1}" for i in range(m)]
    cols += [f"r_{i + 1}" for i in range(m)]
    cols += [f"yhat_{i + 1}" for i in range(m)]
    cols.append("V")
    return cols


def write_trace(fh: TextIO, trace: ClosedLoopTrace) -> None:
    n = trace.x.shape[1]
    m = trace.u.shape[1]
    writer = csv.writer(fh)
    writer.writerow(trace_header(n, m))
    for i in range(trace.t.size):
        row = [trace.t[i], *trace.x[i], *trace.u[i], *trace.y[i],
               *trace.r[i], *trace.yhat[i], trace.v[i]]
        writer.writerow(_fmt(v) for v in row)


def save_trace(path, trace: ClosedLoopTrace) -> None:
    with open(path, "w", newline="") as fh:
        write_trace(fh, trace)


def read_trace(fh: TextIO) -> dict:
    """Columns of a trace file as arrays keyed t, x, u, y, r, yhat, v."""
    reader = csv.reader(fh)
    header = next(reader)
    if header[0] != "t" or header[-1] != "V":
        raise ValueError("not a trace file: bad header")
    n = sum(1 for c in header if c.startswith("x_"))
    m = sum(1 for c in header if c.startswith("u_"))
    if len(header) != 1 + n + 4 * m + 1:
        raise ValueError(f"trace header has {len(header)} columns, expected {1 + n + 4 * m + 1}")
    data = np.array([[float(v) for v in row] for row in reader])
    if data.size and np.any(np.diff(data[:, 0]) <= 0.0):
        raise ValueError("trace times are not strictly increasing")
    out = {"t": data[:, 0], "x": data[:, 1:1 + n]}
    at = 1 + n
    for key in ("u", "y", "r", "yhat"):
        out[key] = data[:, at:at + m]
        at += m
    out["v"] = data[:, at]
    return out


def load_trace(path) -> dict:
    with open(path, newline="") as fh:
        return read_trace(fh)
