"""Gain-uniform stability certification for LTI closed loops.

For the linear plant xdot = Ax + Bu, y = Cx under the prediction-based
integrator controller, the joint (x, u) dynamics are linear:

    zdot = Phi_alpha z + Psi_alpha r(t+T).

The characteristic polynomial of Phi_alpha is a bivariate polynomial
P_alpha(s) = sum_i alpha^i P_{m-i}(s) with deg P_i <= n + i. Two
alpha-independent polynomials decide stability for all sufficiently large
gains: P0 (the coefficient of alpha^m) and Q (built from the leading
s-coefficients of the P_i). If both are Hurwitz, bounded root-locus
branches end at the roots of P0 and unbounded branches escape along the
ray directions of Q's roots, so the loop matrix is eventually Hurwitz
with an input gain that stays O(1); the certificate is sufficient only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (DegenerateStructureError, SingularPredictorError,
                     UnsupportedDimensionError)
from .integrate import expm, expm_integral

_ANALYSIS_VARIANTS = ("basic", "full", "intermediate")


@dataclass(frozen=True)
class LinearSystem:
    """LTI plant plus the controller variant used to close the loop.

    ``full`` here means the feedforward variant with no injected error;
    it shares its loop matrix with ``intermediate`` (the reference
    derivative enters only through the exogenous input). The memoryless
    and enhanced variants have no gain-parameterized family to certify.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    T: float
    variant: str = "basic"
    singular_tol: float = 1e-12

    def __post_init__(self):
        object.__setattr__(self, "A", np.asarray(self.A, dtype=float))
        object.__setattr__(self, "B", np.asarray(self.B, dtype=float))
        object.__setattr__(self, "C", np.asarray(self.C, dtype=float))
        n, m = self.n, self.m
        if self.A.shape != (n, n) or self.B.shape != (n, m) or self.C.shape != (m, n):
            raise ValueError("inconsistent system dimensions")
        if self.T <= 0.0:
            raise ValueError("T must be positive")
        if self.variant not in _ANALYSIS_VARIANTS:
            raise ValueError(
                f"stability analysis supports variants {_ANALYSIS_VARIANTS}, got {self.variant!r}"
            )
        svals = np.linalg.svd(self.dgdu, compute_uv=False)
        rc = 0.0 if svals[0] == 0.0 else float(svals[-1] / svals[0])
        if rc < self.singular_tol:
            raise SingularPredictorError(
                f"predictor input Jacobian singular (rcond={rc:.3e}); cannot certify"
            )

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def exp_AT(self) -> np.ndarray:
        return expm(self.A * self.T)

    @property
    def dgdu(self) -> np.ndarray:
        return self.C @ expm_integral(self.A, self.T) @ self.B


def build_phi_psi(sys: LinearSystem, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Loop matrix Phi_alpha and input matrix Psi_alpha at a given gain.

    Phi has block structure [[A, B], [paired controller rows]]; its last m
    rows are affine в alpha. Psi is (n+m) x m with a zero top block and
    alpha D^-1 at the bottom, D = dg/du.
    """
    n, m = sys.n, sys.m
    D = sys.dgdu
    Dinv = np.linalg.inv(D)
    Gx = sys.C @ sys.exp_AT
    phi = np.zeros((n + m, n + m))
    phi[:n, :n] = sys.A
    phi[:n, n:] = sys.B
    if sys.variant == "basic":
        phi[n:, :n] = -alpha * (Dinv @ Gx)
        phi[n:, n:] = -alpha * np.eye(m)
    else:  # full (no injected error) and intermediate share the loop matrix
        phi[n:, :n] = -Dinv @ (alpha * Gx + Gx @ sys.A)
        phi[n:, n:] = -(alpha * np.eye(m) + Dinv @ (Gx @ sys.B))
    psi = np.zeros((n + m, m))
    psi[n:, :] = alpha * Dinv
    return phi, psi


@dataclass(frozen=True)
class BivariatePoly:
    """Coefficients a[i, j] of P_alpha(s) = sum_i alpha^i P_{m-i}(s).

    ``coeffs[i, j]`` multiplies alpha^i... more precisely it is the
    coefficient of s^j in P_i, stored as an (m+1) x (n+m+1) array with the
    structural zeros a[i, j] = 0 for j > n + i. The leading coefficient
    a[m, n+m] is normalized to 1.
    """

    m: int
    n: int
    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=float))
        if self.coeffs.shape != (self.m + 1, self.n + self.m + 1):
            raise ValueError("coefficient table has wrong shape")
        if abs(self.coeffs[self.m, self.n + self.m] - 1.0) > 1e-8:
            raise DegenerateStructureError("leading coefficient a[m, n+m] is not 1")
        for i in range(self.m + 1):
            tail = self.coeffs[i, self.n + i + 1:]
            if tail.size and np.max(np.abs(tail)) > 1e-8:
                raise DegenerateStructureError(
                    f"P_{i} has degree above n+{i}; structure violated"
                )

    def s_coeffs(self, alpha: float) -> np.ndarray:
        """Descending s-coefficients of P_alpha at a fixed gain."""
        powers = alpha ** np.arange(self.m + 1)
        asc = powers @ self.coeffs[::-1]  # alpha^i multiplies P_{m-i}
        return asc[::-1]

    def evaluate(self, alpha: float, s: complex) -> complex:
        return complex(np.polyval(self.s_coeffs(alpha), s))


def char_poly_bivariate(sys: LinearSystem, snap: bool = True) -> BivariatePoly:
    """Recover all a[i, j] from characteristic polynomials of Phi_alpha.

    det(sI - Phi_alpha) is evaluated at the gains 1, 2, ..., m+1 and the
    per-s-power Vandermonde systems are solved for the alpha coefficients.
    Entries below 1e-9 of the largest magnitude in their s-column are
    snapped to zero (``snap=False`` returns the raw recovery, used by
    structure tests).
    """
    n, m = sys.n, sys.m
    if m > 8:
        raise UnsupportedDimensionError("coefficient recovery supports m <= 8")
    alphas = np.arange(1, m + 2, dtype=float)
    rows = []
    for a in alphas:
        phi, _ = build_phi_psi(sys, a)
        rows.append(np.poly(np.linalg.eigvals(phi)).real[::-1])  # ascending in s
    samples = np.stack(rows)  # (m+1, n+m+1): samples[k, j] = sum_i alphas[k]^i a[m-i, j]
    vand = np.vander(alphas, N=m + 1, increasing=True)
    sol = np.linalg.solve(vand, samples)  # sol[i, j] = a[m-i, j]
    coeffs = sol[::-1].copy()  # coeffs[i, j] = a[i, j]
    if snap:
        col_max = np.maximum(np.max(np.abs(coeffs), axis=0), 1e-300)
        coeffs[np.abs(coeffs) < 1e-9 * col_max] = 0.0
        for i in range(m + 1):
            coeffs[i, n + i + 1:] = 0.0
        coeffs /= coeffs[m, n + m]
    return BivariatePoly(m=m, n=n, coeffs=coeffs)


def extract_p0_q(p: BivariatePoly) -> tuple[np.ndarray, np.ndarray]:
    """(P0, Q) as descending coefficient arrays.

    P0 is the alpha^m coefficient polynomial (degree n); Q collects the
    leading s-coefficient of each P_i: Q(s) = sum_i a[m-i, n+m-i] s^{m-i}.
    Raises DegenerateStructureError when a[0, n] vanishes (P0 would drop
    degree and the high-gain analysis breaks down).
    """
    if p.coeffs[0, p.n] == 0.0:
        raise DegenerateStructureError("a[0, n] = 0: deg(P0) < n, certification undefined")
    p0 = p.coeffs[0, : p.n + 1][::-1].copy()
    q = np.array([p.coeffs[p.m - i, p.n + p.m - i] for i in range(p.m + 1)])
    return p0, q


@dataclass(frozen=True)
class StabilityCertificate:
    """Outcome of the two-polynomial Hurwitz test.

    ``alpha_stable`` asserts stability for all gains above some threshold;
    ``not_certified`` asserts nothing unless ``rhp_root`` is set, in which
    case a root with positive real part rules stability out.
    ``witness_alpha`` is a gain at which the loop matrix was numerically
    confirmed Hurwitz (no minimality claim).
    """

    p0: np.ndarray
    p0_roots: np.ndarray
    q: np.ndarray
    q_roots: np.ndarray
    verdict: str
    witness_alpha: Optional[float] = None
    rhp_root: bool = False
    hurwitz_tol: float = 1e-9

    @property
    def alpha_stable(self) -> bool:
        return self.verdict == "alpha_stable"


def certify(sys: LinearSystem, hurwitz_tol: float = 1e-9,
            witness_alpha: float = 1e3) -> StabilityCertificate:
    """Certify gain-uniform stability via the P0/Q Hurwitz test.

    Roots are computed as balanced companion-matrix eigenvalues. The
    verdict is ``alpha_stable`` iff every root of P0 and Q has real part
    below -hurwitz_tol; in that case the loop matrix is also checked to be
    Hurwitz at ``witness_alpha`` as a numerical cross-check (escalating the
    gain if necessary).
    """
    p = char_poly_bivariate(sys)
    p0, q = extract_p0_q(p)
    p0_roots = np.roots(p0)
    q_roots = np.roots(q)
    all_roots = np.concatenate([p0_roots, q_roots])
    stable = bool(np.all(all_roots.real < -hurwitz_tol))
    rhp = bool(np.any(all_roots.real > 1e-6))
    witness = None
    if stable:
        for a in (witness_alpha, 1e4, 1e5, 1e6):
            phi, _ = build_phi_psi(sys, a)
            if np.all(np.linalg.eigvals(phi).real < 0.0):
                witness = float(a)
                break
    return StabilityCertificate(
        p0=p0, p0_roots=p0_roots, q=q, q_roots=q_roots,
        verdict="alpha_stable" if stable else "not_certified",
        witness_alpha=witness, rhp_root=rhp, hurwitz_tol=hurwitz_tol,
    )


@dataclass
class RootLocus:
    """Root paths of P_alpha(s) over an ascending gain schedule.

    ``branches[k, b]`` is root b at gain ``alphas[k]``; branches are formed
    by nearest-neighbor matching between consecutive gains. ``ambiguous``
    flags gains where two pairings were closer than 1e-12 apart (resolved
    by index order).
    """

    alphas: np.ndarray
    branches: np.ndarray
    ambiguous: np.ndarray


def root_locus(sys: LinearSystem, alphas: Sequence[float]) -> RootLocus:
    alphas = np.asarray(list(alphas), dtype=float)
    if alphas.size == 0:
        raise ValueError("alphas must be nonempty")
    if np.any(np.diff(alphas) <= 0.0) or np.any(alphas <= 0.0):
        raise ValueError("alphas must be positive and strictly ascending")
    p = char_poly_bivariate(sys)
    k = p.n + p.m
    branches = np.empty((alphas.size, k), dtype=complex)
    ambiguous = np.zeros(alphas.size, dtype=bool)
    prev = None
    for idx, a in enumerate(alphas):
        roots = np.roots(p.s_coeffs(a))
        if prev is None:
            order = np.argsort([(r.real, r.imag) for r in roots], axis=0)[:, 0]
            branches[idx] = roots[order]
        else:
            taken = np.zeros(k, dtype=bool)
            row = np.empty(k, dtype=complex)
            for b in range(k):
                d = np.abs(roots - prev[b])
                d[taken] = np.inf
                best = int(np.argmin(d))
                runner = np.partition(d, 1)[1] if k > 1 else np.inf
                if np.isfinite(runner) and abs(runner - d[best]) < 1e-12:
                    ambiguous[idx] = True
                taken[best] = True
                row[b] = roots[best]
            branches[idx] = row
        prev = branches[idx]
    return RootLocus(alphas=alphas, branches=branches, ambiguous=ambiguous)


def qtilde_identity_check(p: BivariatePoly, trials: int, seed: int = 0,
                          q_coeffs: Optional[np.ndarray] = None) -> bool:
    """Check Qtilde_alpha(alpha s) == alpha^m Q(s) at random (alpha, s).

    Qtilde_alpha is assembled from the leading s-coefficients of ``p``;
    Q defaults to the extraction from the same table (in which case the
    identity is structural) but can be overridden to cross-check one
    coefficient table against another.
    """
    if q_coeffs is None:
        _, q_coeffs = extract_p0_q(p)
    q_coeffs = np.asarray(q_coeffs, dtype=float)
    # lead[i] = a[m-i, n+m-i], the s^{m-i} coefficient of the scaled family
    lead = np.array([p.coeffs[p.m - i, p.n + p.m - i] for i in range(p.m + 1)])
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        alpha = rng.uniform(0.5, 50.0)
        s = complex(rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0))
        lhs = 0.0 + 0.0j
        for i in range(p.m + 1):
            lhs += (alpha ** i) * lead[i] * (alpha * s) ** (p.m - i)
        rhs = (alpha ** p.m) * complex(np.polyval(q_coeffs, s))
        scale = max(abs(lhs), abs(rhs), 1.0)
        if abs(lhs - rhs) > 1e-8 * scale:
            return False
    return True
