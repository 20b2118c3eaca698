"""Command-line front end: simulate, certify, rootlocus, sweep-alpha.

Exit codes: 0 success, 2 config error, 3 singular-Jacobian abort,
4 numeric overflow, 5 certification declined.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import config as cfgmod
from .control import run_closed_loop
from .errors import NumericOverflowError, SingularJacobianError
from .linstab import certify, root_locus
from .scenarios import run_platoon
from .traceio import save_trace

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SINGULAR = 3
EXIT_OVERFLOW = 4
EXIT_NOT_CERTIFIED = 5


def _parse_alphas(spec: str) -> np.ndarray:
    """Gain schedules: 'a:b:count' (log-spaced) or a comma list."""
    if ":" in spec:
        lo, hi, count = spec.split(":")
        vals = np.logspace(np.log10(float(lo)), np.log10(float(hi)), int(count))
    else:
        vals = np.array([float(v) for v in spec.split(",")])
    if np.any(vals <= 0.0):
        raise ValueError("gains must be positive")
    return np.unique(vals)


def _error_exit(trace_error) -> int:
    if isinstance(trace_error, SingularJacobianError):
        return EXIT_SINGULAR
    if isinstance(trace_error, NumericOverflowError):
        return EXIT_OVERFLOW
    return EXIT_OK


def _summary_lines(trace) -> list[str]:
    lines = [
        f"tail tracking error : {trace.tail_tracking_error:.6g}",
        f"tail |r - yhat|     : {trace.tail_ref_pred_error:.6g}",
        f"peak input          : {trace.peak_input:.6g}",
    ]
    try:
        lines.append(f"log-V fit slope     : {trace.lyapunov_fit_slope():.6g}")
    except Exception:
        lines.append("log-V fit slope     : n/a")
    return lines


def cmd_simulate(args) -> int:
    try:
        cfg = cfgmod.load_path(args.config)
    except (cfgmod.ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = args.out or (cfg.output or {}).get("trace")
    prefix = os.path.splitext(out)[0] if out else "trace"

    if cfg.is_platoon:
        pcfg, plant, pred, ref, path, x0, u0, grid = cfgmod.build_platoon_run(cfg)
        result = run_platoon(pcfg, plant, pred, grid, x0, u0,
                             leader_ref=ref, path=path)
        for i, tr in enumerate(result.traces):
            if out:
                base, ext = os.path.splitext(out)
                save_trace(f"{base}_agent{i + 1}{ext or '.csv'}", tr)
            print(f"agent {i + 1}:")
            for line in _summary_lines(tr):
                print("  " + line)
        if result.euclid.size:
            tail = result.t >= result.t[0] + 0.8 * (result.t[-1] - result.t[0])
            print(f"tail spacing range  : [{result.euclid[tail].min():.6g}, "
                  f"{result.euclid[tail].max():.6g}]")
        if args.plot:
            from .plots import plot_platoon
            for p in plot_platoon(result, prefix, path=path):
                print(f"wrote {p}")
        if not result.success:
            print(f"run failed: {result.error}", file=sys.stderr)
            return _error_exit(result.error)
        return EXIT_OK

    try:
        plant, pred, ctrl, ref, x0, u0, grid = cfgmod.build_single_run(cfg)
    except cfgmod.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    trace = run_closed_loop(plant, pred, ctrl, ref, x0, u0, grid)
    if out:
        save_trace(out, trace)
        print(f"wrote {out}")
    for line in _summary_lines(trace):
        print(line)
    if args.plot:
        from .plots import plot_trace
        for p in plot_trace(trace, prefix):
            print(f"wrote {p}")
    if not trace.success:
        print(f"run failed: {trace.error}", file=sys.stderr)
        return _error_exit(trace.error)
    return EXIT_OK


def cmd_certify(args) -> int:
    try:
        system = cfgmod.load_system(args.config)
    except (cfgmod.ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    cert = certify(system)

    def poly_str(c):
        deg = len(c) - 1
        terms = []
        for i, v in enumerate(c):
            p = deg - i
            if p == 0:
                terms.append(f"{v:.6g}")
            elif p == 1:
                terms.append(f"{v:.6g} s")
            else:
                terms.append(f"{v:.6g} s^{p}")
        return " + ".join(terms)

    if args.json:
        print(json.dumps({
            "verdict": cert.verdict,
            "p0": list(cert.p0),
            "p0_roots": [[r.real, r.imag] for r in cert.p0_roots],
            "q": list(cert.q),
            "q_roots": [[r.real, r.imag] for r in cert.q_roots],
            "witness_alpha": cert.witness_alpha,
            "rhp_root": cert.rhp_root,
        }, indent=2))
    else:
        print(f"P0(s) = {poly_str(cert.p0)}")
        print(f"  roots: {np.array2string(cert.p0_roots, precision=6)}")
        print(f"Q(s)  = {poly_str(cert.q)}")
        print(f"  roots: {np.array2string(cert.q_roots, precision=6)}")
        print(f"verdict: {cert.verdict}")
        if cert.witness_alpha is not None:
            print(f"loop matrix confirmed Hurwitz at gain {cert.witness_alpha:g}")
        if cert.rhp_root:
            print("advisory: root in RHP, the loop is not stable at high gain")
    return EXIT_OK if cert.alpha_stable else EXIT_NOT_CERTIFIED


def cmd_rootlocus(args) -> int:
    try:
        system = cfgmod.load_system(args.config)
        alphas = _parse_alphas(args.alphas)
    except (cfgmod.ConfigError, OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    locus = root_locus(system, alphas)
    rows = [["alpha", "branch_id", "re", "im"]]
    for k, a in enumerate(locus.alphas):
        for b in range(locus.branches.shape[1]):
            rows.append([f"{a:.9g}", str(b),
                         f"{locus.branches[k, b].real:.9g}",
                         f"{locus.branches[k, b].imag:.9g}"])
    if args.out:
        with open(args.out, "w", newline="") as fh:
            csv.writer(fh).writerows(rows)
        print(f"wrote {args.out}")
    else:
        for row in rows:
            print(",".join(row))
    if locus.ambiguous.any():
        print(f"note: ambiguous branch matching at {int(locus.ambiguous.sum())} gain(s), "
              "resolved by index order", file=sys.stderr)
    if args.plot:
        from .plots import plot_root_locus
        prefix = os.path.splitext(args.out)[0] if args.out else "rootlocus"
        for p in plot_root_locus(locus, prefix):
            print(f"wrote {p}")
    return EXIT_OK


def cmd_sweep_alpha(args) -> int:
    try:
        cfg = cfgmod.load_path(args.config)
        alphas = _parse_alphas(args.alphas)
        if cfg.is_platoon:
            raise cfgmod.ConfigError("gain sweeps support single-agent scenarios only")
    except (cfgmod.ConfigError, OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    def one(alpha: float):
        plant, pred, _, ref, x0, u0, grid = cfgmod.build_single_run(cfg)
        ctrl = cfgmod.controller(cfg, alpha=alpha)
        trace = run_closed_loop(plant, pred, ctrl, ref, x0, u0, grid)
        if trace.success:
            return alpha, trace.tail_ref_pred_error, trace.tail_tracking_error, ""
        return alpha, float("nan"), float("nan"), str(trace.error)

    workers = max(1, int(os.environ.get("NRFLOW_THREADS", "1")))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, alphas))
    else:
        results = [one(a) for a in alphas]
    results.sort(key=lambda r: r[0])

    rows = [["alpha", "tail_max_ref_pred_error", "tail_max_tracking_error", "error"]]
    rows += [[f"{a:.9g}", f"{pe:.9g}", f"{te:.9g}", msg] for a, pe, te, msg in results]
    if args.out:
        with open(args.out, "w", newline="") as fh:
            csv.writer(fh).writerows(rows)
        print(f"wrote {args.out}")
    else:
        for row in rows:
            print(",".join(row))
    if args.plot:
        from .plots import plot_sweep
        prefix = os.path.splitext(args.out)[0] if args.out else "sweep"
        ok = [r for r in results if r[3] == ""]
        if ok:
            for p in plot_sweep([r[0] for r in ok], [r[1] for r in ok],
                                [r[2] for r in ok], prefix):
                print(f"wrote {p}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nrflow",
        description="Prediction-based Newton-flow tracking control toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario config")
    p.add_argument("config")
    p.add_argument("--out", help="trace CSV path (platoons get one file per agent)")
    p.add_argument("--plot", action="store_true", help="render figures next to the CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("certify", help="high-gain stability certificate for an LTI loop")
    p.add_argument("config")
    p.add_argument("--json", action="store_true", help="machine-readable certificate")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("rootlocus", help="trace closed-loop roots over a gain schedule")
    p.add_argument("config")
    p.add_argument("--alphas", required=True, help="'lo:hi:count' (log) or comma list")
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_rootlocus)

    p = sub.add_parser("sweep-alpha", help="tail errors as a function of the gain")
    p.add_argument("config")
    p.add_argument("--alphas", required=True, help="'lo:hi:count' (log) or comma list")
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_sweep_alpha)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
