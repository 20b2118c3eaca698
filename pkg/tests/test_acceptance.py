"""Acceptance suite: every criterion at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one summary line
per criterion.
"""

import time

import numpy as np
import pytest

from nrflow import (ControllerConfig, LinearSystem, PlantModel,
                    ReferenceSignal, StaticPlant, TimeGrid, build_phi_psi,
                    certify, char_poly_bivariate, control_rate, extract_p0_q,
                    fd_jacobian, lti_predictor, numeric_predictor,
                    qtilde_identity_check, root_locus, run_closed_loop)
from nrflow.core import AugmentedState
from nrflow.errors import SingularPredictorError
from nrflow.predict import unicycle_predictor

WORKED = LinearSystem(A=[[2.0, 1.0], [-1.0, -1.0]], B=[[0.0], [1.0]],
                      C=[[-10.0, 1.0]], T=0.25)


def _report(num: int, ok: bool, detail: str) -> None:
    print(f"\ncriterion {num:2d}: {'PASS' if ok else 'FAIL'} - {detail}")


def test_criterion_01_exponential_error_decay(pendulum_lyapunov_run):
    trace, elapsed = pendulum_lyapunov_run
    assert trace.success
    slope = trace.lyapunov_fit_slope()
    dev = float(np.max(np.abs(trace.v - trace.v[0] * np.exp(-2.0 * trace.t))) / trace.v[0])
    ok = abs(slope + 2.0) <= 0.04 and dev <= 0.05 and elapsed < 5.0
    _report(1, ok, f"logV slope {slope:.4f} (target -2.00 +/- 0.04), "
                   f"pointwise dev {dev:.2%} (<= 5%), {elapsed:.2f}s (< 5s)")
    assert slope == pytest.approx(-2.0, abs=0.04)
    assert dev <= 0.05
    assert elapsed < 5.0


def test_criterion_02_memoryless_tracking_bound():
    plant = StaticPlant(m=1, g=lambda u: u.copy(), dgdu=lambda u: np.eye(1))
    ref = ReferenceSignal(m=1, r=lambda t: np.array([np.sin(t)]),
                          rdot=lambda t: np.array([np.cos(t)]), eta=1.0)
    t0 = time.perf_counter()
    tails = {}
    for alpha in (10.0, 100.0):
        trace = run_closed_loop(plant, None, ControllerConfig("memoryless", alpha=alpha),
                                ref, np.zeros(0), np.zeros(1), TimeGrid(0.0, 20.0, 1e-3))
        assert trace.success
        tails[alpha] = trace.tail_tracking_error
    elapsed = time.perf_counter() - t0
    ok = all(tails[a] <= 1.05 / a for a in tails) and elapsed < 1.0
    _report(2, ok, "tail errors " + ", ".join(
        f"a={a:g}: {tails[a]:.5f} (<= {1.05 / a:.5f})" for a in tails)
        + f", {elapsed:.2f}s (< 1s)")
    for a, err in tails.items():
        assert err <= 1.05 / a
    assert elapsed < 1.0


def test_criterion_03_speedup_attenuates_injected_error():
    pred = lti_predictor([[-1.0]], [[1.0]], [[1.0]], T=1.0)
    plant = PlantModel(n=1, m=1, f=lambda x, u: -x + u, h=lambda x: x.copy())
    ref = ReferenceSignal(m=1, r=lambda t: np.array([1.0]), rdot=lambda t: np.zeros(1))
    t0 = time.perf_counter()
    tails = []
    for alpha in (1.0, 10.0, 100.0):
        cfg = ControllerConfig("full", alpha=alpha, T=1.0,
                               e2_injector=lambda t: np.array([1.0]))
        trace = run_closed_loop(plant, pred, cfg, ref, np.zeros(1), np.zeros(1),
                                TimeGrid(0.0, 20.0, 1e-3))
        assert trace.success
        tails.append(trace.tail_ref_pred_error)
    elapsed = time.perf_counter() - t0
    ratios = [tails[0] / tails[1], tails[1] / tails[2]]
    ok = (all(t <= 1.05 / a for t, a in zip(tails, (1.0, 10.0, 100.0)))
          and min(ratios) >= 9.0 and elapsed < 5.0)
    _report(3, ok, f"tails {[f'{t:.4g}' for t in tails]}, decade ratios "
                   f"{[f'{r:.2f}' for r in ratios]} (>= 9), {elapsed:.2f}s (< 5s)")
    for t_err, a in zip(tails, (1.0, 10.0, 100.0)):
        assert t_err <= 1.05 / a
    assert min(ratios) >= 9.0
    assert elapsed < 5.0


def test_criterion_04_worked_example_certificate():
    t0 = time.perf_counter()
    poly = char_poly_bivariate(WORKED)
    p0, q = extract_p0_q(poly)
    cert = certify(WORKED)
    phi, _ = build_phi_psi(WORKED, 1e3)
    eigs = np.linalg.eigvals(phi)
    elapsed = time.perf_counter() - t0
    p0_ok = (abs(p0[0] - 1.0) <= 0.05 and abs(p0[1] - 16.19) <= 0.05
             and abs(p0[2] - 97.18) <= 0.05)
    q_ok = np.allclose(q, [1.0, 1.0], atol=1e-6)
    hurwitz = bool(np.all(eigs.real < 0.0))
    ok = p0_ok and q_ok and cert.alpha_stable and hurwitz and elapsed < 1.0
    _report(4, ok, f"P0 {np.round(p0, 4)}, Q {np.round(q, 8)}, verdict "
                   f"{cert.verdict}, max Re eig at 1e3 = {eigs.real.max():.3f}, "
                   f"{elapsed:.2f}s (< 1s)")
    assert p0_ok and q_ok
    assert cert.alpha_stable
    assert hurwitz
    assert elapsed < 1.0


def test_criterion_05_root_locus_asymptotics():
    t0 = time.perf_counter()
    alphas = np.logspace(0.0, 4.0, 60)
    locus = root_locus(WORKED, alphas)
    p0, _ = extract_p0_q(char_poly_bivariate(WORKED))
    p0_roots = np.roots(p0)
    final = locus.branches[-1]
    unb = int(np.argmax(np.abs(final)))
    bounded_dists = [min(abs(final[b] - r) for r in p0_roots)
                     for b in range(3) if b != unb]
    angle = np.degrees(abs(np.angle(final[unb])))
    ratio = abs(final[unb]) / 1e4
    elapsed = time.perf_counter() - t0
    ok = (max(bounded_dists) <= 1e-2 and abs(angle - 180.0) <= 2.0
          and 0.5 <= ratio <= 2.0 and elapsed < 5.0)
    _report(5, ok, f"bounded dists {[f'{d:.4f}' for d in bounded_dists]} (<= 0.01), "
                   f"angle {angle:.3f} deg (180 +/- 2), |s|/gain {ratio:.4f} in [0.5, 2], "
                   f"{elapsed:.2f}s (< 5s)")
    assert max(bounded_dists) <= 1e-2
    assert abs(angle - 180.0) <= 2.0
    assert 0.5 <= ratio <= 2.0
    assert elapsed < 5.0


def test_criterion_06_pendulum_reproduction(pendulum_full_run, pendulum_attenuated_run):
    full, t_full = pendulum_full_run
    attenuated, t_att = pendulum_attenuated_run
    assert full.success and attenuated.success
    mask = full.t >= 1.0
    max_err = float(np.max(np.abs(full.r[mask, 0] - full.y[mask, 0])))
    peak_ratio = attenuated.peak_input / full.peak_input
    elapsed = t_full + t_att
    err_ok = max_err <= 0.03
    ratio_ok = peak_ratio <= 0.20
    ok = err_ok and ratio_ok and elapsed < 30.0
    _report(6, ok, f"max |r-theta| for t>=1: {max_err:.4f} rad (<= 0.03), "
                   f"attenuated/full input peak {peak_ratio:.3f} (<= 0.20), "
                   f"peaks {attenuated.peak_input:.1f}/{full.peak_input:.1f}, "
                   f"{elapsed:.1f}s (< 30s)")
    assert ratio_ok, f"attenuated peak ratio {peak_ratio:.3f} exceeds 0.20"
    assert elapsed < 30.0
    assert err_ok, (
        f"max tracking error {max_err:.4f} rad exceeds the 0.03 rad bound; "
        "the post-singularity upswing lag of the frozen-input prediction is "
        f"{max_err:.4f} rad at these exact gains, while the error near the "
        "horizontal pose itself stays below 0.03")


def test_criterion_07_unicycle_platoon(unicycle_platoon_run):
    result, elapsed_sim = unicycle_platoon_run
    assert result.success
    t0 = time.perf_counter()
    tail = result.t >= 150.0
    spacing = result.euclid[tail]
    spacing_ok = bool(np.all(np.abs(spacing - 0.25) <= 0.03))
    ratios = []
    for tr in result.traces:
        err = np.linalg.norm(tr.r - tr.y, axis=1)
        ratios.append(float(np.max(err[tail]) / err[0]))
    tracking_ok = all(r < 0.01 for r in ratios)

    # closed-form predictor vs dense numeric integration on random states
    rng = np.random.default_rng(123)
    N, T = 1000, 0.25
    X = np.column_stack([rng.uniform(-2, 2, N), rng.uniform(-2, 2, N),
                         rng.uniform(-np.pi, np.pi, N)])
    U = np.column_stack([rng.uniform(0, 1, N), rng.uniform(-2, 2, N)])

    def rhs(X):
        return np.column_stack([U[:, 0] * np.cos(X[:, 2]),
                                U[:, 0] * np.sin(X[:, 2]), U[:, 1]])

    dt = T / 1000
    Z = X.copy()
    for _ in range(1000):
        k1 = rhs(Z)
        k2 = rhs(Z + 0.5 * dt * k1)
        k3 = rhs(Z + 0.5 * dt * k2)
        k4 = rhs(Z + dt * k3)
        Z += (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    pred = unicycle_predictor(T)
    closed = np.stack([pred.g(X[i], U[i]) for i in range(N)])
    pred_gap = float(np.max(np.linalg.norm(closed - Z[:, :2], axis=1)))
    elapsed = elapsed_sim + (time.perf_counter() - t0)
    ok = spacing_ok and tracking_ok and pred_gap <= 1e-6 and elapsed < 30.0
    _report(7, ok, f"spacing [{spacing.min():.4f}, {spacing.max():.4f}] "
                   f"(0.25 +/- 0.03), error ratios {[f'{r:.1e}' for r in ratios]} "
                   f"(< 1e-2), predictor gap {pred_gap:.2e} (<= 1e-6), "
                   f"{elapsed:.1f}s (< 30s)")
    assert spacing_ok
    assert tracking_ok
    assert pred_gap <= 1e-6
    assert elapsed < 30.0


def test_criterion_08_bicycle_platoon(bicycle_platoon_run):
    result, path, elapsed = bicycle_platoon_run
    assert result.success
    max_lat = result.lateral.max(axis=0)
    lat_ok = max_lat[3] <= 0.6
    monotone_ok = bool(np.all(np.diff(max_lat) >= 0.0))
    # the exit straight begins after the arc; wait 10 m past it to settle
    from nrflow.scenarios import default_speed_schedule
    sched = default_speed_schedule()
    arc = 2.0 * np.radians(45.0) * 30.0
    s_exit = sched.arclength(20.0) + arc / 2.0
    on_final = result.arclengths[:, 3] > s_exit + 10.0
    dists = result.approx_dist[on_final]
    dist_ok = bool(np.all(np.abs(dists - 10.0) <= 1.0))
    ok = lat_ok and monotone_ok and dist_ok and elapsed < 120.0
    _report(8, ok, f"max lateral {np.round(max_lat, 3)} (A4 <= 0.6, monotone), "
                   f"final-straight distances [{dists.min():.2f}, {dists.max():.2f}] "
                   f"(10 +/- 1), {elapsed:.1f}s (< 120s)")
    assert lat_ok
    assert monotone_ok
    assert dist_ok
    assert elapsed < 120.0


def test_criterion_09_oracle_equivalence_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(77)

    # closed-form vs numeric prediction on random second-order systems
    checked = 0
    while checked < 20:
        A = rng.normal(size=(2, 2))
        T = rng.uniform(0.2, 1.0)
        scale = np.linalg.norm(A, 2) * T
        if scale > 2.0:
            A *= 2.0 / scale * rng.uniform(0.3, 1.0)
        B = rng.normal(size=(2, 1))
        C = rng.normal(size=(1, 2))
        try:
            closed = lti_predictor(A, B, C, T, singular_tol=1e-6)
        except SingularPredictorError:
            continue
        plant = PlantModel(n=2, m=1, f=lambda x, u, A=A, B=B: A @ x + B @ u,
                           h=lambda x, C=C: C @ x,
                           f_batch=lambda X, U, A=A, B=B: X @ A.T + U @ B.T)
        numeric = numeric_predictor(plant, T, inner_steps=10 ** 4)
        x, u = rng.normal(size=2), rng.normal(size=1)
        want = closed.g(x, u)
        got = numeric.g(x, u)
        assert np.linalg.norm(got - want) <= 5e-3 * max(1.0, np.linalg.norm(want))
        checked += 1

    # finite differences against analytic input Jacobians
    uni = unicycle_predictor(T=0.25)
    for _ in range(50):
        x = np.array([rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-np.pi, np.pi)])
        u = np.array([rng.uniform(0.05, 1.0), rng.uniform(0.05, 2.0) * rng.choice([-1, 1])])
        ref = uni.dgdu(x, u)
        tol = max(1e-5, 1e-4 * np.linalg.norm(ref))
        assert np.max(np.abs(fd_jacobian(uni.g, x, u, "input", 1e-6) - ref)) <= tol

    # scaled-family identity on random certifiable systems
    built = 0
    while built < 20:
        n = int(rng.integers(1, 5))
        m = int(rng.integers(1, 3))
        try:
            sys = LinearSystem(A=rng.normal(size=(n, n)), B=rng.normal(size=(n, m)),
                               C=rng.normal(size=(m, n)), T=rng.uniform(0.2, 1.0),
                               singular_tol=1e-4)
        except SingularPredictorError:
            continue
        assert qtilde_identity_check(char_poly_bivariate(sys), trials=20)
        built += 1
    elapsed = time.perf_counter() - t0
    ok = elapsed < 10.0
    _report(9, ok, f"20 predictor pairs (5e-3), 50 Jacobian points, 20 identity "
                   f"systems, {elapsed:.1f}s (< 10s)")
    assert elapsed < 10.0


def test_criterion_10_variant_equivalence():
    rng = np.random.default_rng(99)
    worst = 0.0
    checked = 0
    while checked < 20:
        A = rng.normal(size=(2, 2))
        B = rng.normal(size=(2, 2))
        C = rng.normal(size=(2, 2))
        T = rng.uniform(0.2, 1.0)
        try:
            pred = lti_predictor(A, B, C, T, singular_tol=1e-3)
        except SingularPredictorError:
            continue
        plant = PlantModel(n=2, m=2, f=lambda x, u, A=A, B=B: A @ x + B @ u,
                           h=lambda x, C=C: C @ x)
        x, u = rng.normal(size=2), rng.normal(size=2)
        t = rng.uniform(0.0, 5.0)
        r_vec, rd_vec = rng.normal(size=2), rng.normal(size=2)
        ref = ReferenceSignal(m=2, r=lambda tt, v=r_vec: v, rdot=lambda tt, v=rd_vec: v)
        alpha = rng.uniform(1.0, 50.0)
        state = AugmentedState(x, u, t)
        basic = control_rate(ControllerConfig("basic", alpha=alpha, T=T),
                             pred, plant, ref, state)
        e2_vec = -rd_vec + pred.dgdx(x, u) @ plant.f(x, u)
        full = control_rate(ControllerConfig("full", alpha=alpha, T=T,
                                             e2_injector=lambda tt, v=e2_vec: v),
                            pred, plant, ref, state)
        worst = max(worst, float(np.max(np.abs(basic - full))))
        checked += 1
    ok = worst <= 1e-10
    _report(10, ok, f"worst pointwise rate gap {worst:.2e} (<= 1e-10) over 20 points")
    assert worst <= 1e-10
