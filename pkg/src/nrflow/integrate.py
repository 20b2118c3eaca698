"""Fixed-step ODE kernels and small dense matrix exponentials.

Forward Euler is the canonical integrator throughout the toolkit (it is
what the simulations are calibrated against); a classical fourth-order
Runge-Kutta step is provided behind the same interface for convergence
and oracle studies. All functions here are pure.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericOverflowError, UnsupportedDimensionError


def euler_step(f, x, u, dt: float, t: float = 0.0) -> np.ndarray:
    """One explicit Euler step x + dt * f(x, u).

    Raises NumericOverflowError (tagged with ``t``) if the result is not
    finite.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    out = x + dt * np.asarray(f(x, u), dtype=float)
    if not np.all(np.isfinite(out)):
        raise NumericOverflowError(t)
    return out


def rk4_step(f, x, u, dt: float, t: float = 0.0) -> np.ndarray:
    """One classical fourth-order Runge-Kutta step with frozen input."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    k1 = np.asarray(f(x, u), dtype=float)
    k2 = np.asarray(f(x + 0.5 * dt * k1, u), dtype=float)
    k3 = np.asarray(f(x + 0.5 * dt * k2, u), dtype=float)
    k4 = np.asarray(f(x + dt * k3, u), dtype=float)
    out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise NumericOverflowError(t)
    return out


_STEPPERS = {"euler": euler_step, "rk4": rk4_step}


def integrate_const_input(f, x0, u, span: float, steps: int, method: str = "euler") -> np.ndarray:
    """Propagate xdot = f(x, u) over ``span`` seconds holding u constant.

    Returns the final state after ``steps`` uniform sub-steps.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if span <= 0.0:
        raise ValueError("span must be positive")
    step = _STEPPERS[method]
    dt = span / steps
    x = np.asarray(x0, dtype=float)
    for k in range(steps):
        x = step(f, x, u, dt, t=k * dt)
    return x


# Diagonal Pade approximants for the matrix exponential (orders 3..13),
# selected by the 1-norm of the argument, with scaling and squaring above
# the largest threshold.
_PADE_COEFFS = {
    3: np.array([120.0, 60.0, 12.0, 1.0]),
    5: np.array([30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0]),
    7: np.array([17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0]),
    9: np.array([17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
                 2162160.0, 110880.0, 3960.0, 90.0, 1.0]),
    13: np.array([64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                  1187353796428800.0, 129060195264000.0, 10559470521600.0,
                  670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
                  960960.0, 16380.0, 182.0, 1.0]),
}
_PADE_THETA = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
    (13, 5.371920351148152e0),
]


def _pade_uv(M: np.ndarray, order: int):
    n = M.shape[0]
    c = _PADE_COEFFS[order]
    ident = np.eye(n)
    if order < 13:
        powers = {0: ident, 2: M @ M}
        top = (order - 1) // 2
        for k in range(2, top + 1):
            powers[2 * k] = powers[2 * (k - 1)] @ powers[2]
        U = np.zeros_like(M)
        V = np.zeros_like(M)
        for j in range(order, 0, -2):
            U += c[j] * powers[j - 1]
        U = M @ U
        for j in range(order - 1, -1, -2):
            V += c[j] * powers[j]
        return U, V
    M2 = M @ M
    M4 = M2 @ M2
    M6 = M2 @ M4
    U = M @ (M6 @ (c[13] * M6 + c[11] * M4 + c[9] * M2)
             + c[7] * M6 + c[5] * M4 + c[3] * M2 + c[1] * ident)
    V = (M6 @ (c[12] * M6 + c[10] * M4 + c[8] * M2)
         + c[6] * M6 + c[4] * M4 + c[2] * M2 + c[0] * ident)
    return U, V


def expm(M) -> np.ndarray:
    """Matrix exponential by scaling and squaring with diagonal Pade.

    Supports square matrices up to dimension 16; relative accuracy is
    ~1e-10 or better for ||M|| <= 10.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expm needs a square matrix, got shape {M.shape}")
    if M.shape[0] > 16:
        raise UnsupportedDimensionError(f"expm supports dimension <= 16, got {M.shape[0]}")
    if not np.all(np.isfinite(M)):
        raise ValueError("expm argument has non-finite entries")
    norm = np.linalg.norm(M, 1)
    for order, theta in _PADE_THETA:
        if norm <= theta:
            U, V = _pade_uv(M, order)
            return np.linalg.solve(V - U, V + U)
    # scale down into the order-13 region, square back up
    squarings = max(0, int(np.ceil(np.log2(norm / _PADE_THETA[-1][1]))))
    U, V = _pade_uv(M / (2.0 ** squarings), 13)
    F = np.linalg.solve(V - U, V + U)
    for _ in range(squarings):
        F = F @ F
    return F


def expm_integral(A, T: float) -> np.ndarray:
    """The integral of e^{A s} over s in [0, T].

    Equals A^{-1}(e^{AT} - I) when A is nonsingular, but is computed as a
    block of the exponential of [[A, I], [0, 0]] so it remains well
    defined for singular A.
    """
    A = np.asarray(A, dtype=float)
    if T <= 0.0:
        raise ValueError("T must be positive")
    n = A.shape[0]
    block = np.zeros((2 * n, 2 * n))
    block[:n, :n] = A
    block[:n, n:] = np.eye(n)
    return expm(block * T)[:n, n:]
