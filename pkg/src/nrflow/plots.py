"""Figure rendering for CLI reports (written next to the delimited output)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_trace(trace, prefix):
    """Tracking, input, and error-energy figures for one run."""
    written = []
    m = trace.y.shape[1]
    fig, axes = plt.subplots(m, 1, sharex=True, squeeze=False)
    for j in range(m):
        ax = axes[j, 0]
        ax.plot(trace.t, trace.y[:, j], label=f"y_{j + 1}")
        ax.plot(trace.t, trace.r[:, j], "--", label=f"r_{j + 1}")
        ax.set_ylabel("output")
        ax.legend(loc="best", fontsize=8)
    axes[-1, 0].set_xlabel("t [s]")
    written.append(_save(fig, f"{prefix}_tracking.png"))

    fig, ax = plt.subplots()
    for j in range(trace.u.shape[1]):
        ax.plot(trace.t, trace.u[:, j], label=f"u_{j + 1}")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("input")
    ax.legend(loc="best", fontsize=8)
    written.append(_save(fig, f"{prefix}_input.png"))

    pos = trace.v > 0
    if pos.any():
        fig, ax = plt.subplots()
        ax.semilogy(trace.t[pos], trace.v[pos])
        ax.set_xlabel("t [s]")
        ax.set_ylabel("V")
        written.append(_save(fig, f"{prefix}_energy.png"))
    return written


def plot_platoon(result, prefix, path=None):
    written = []
    fig, ax = plt.subplots()
    if path is not None:
        ax.plot(path.points[:, 0], path.points[:, 1], "k--", lw=0.8, label="path")
    for i, tr in enumerate(result.traces):
        ax.plot(tr.y[:, 0], tr.y[:, 1], label=f"agent {i + 1}")
    ax.set_xlabel("z1 [m]")
    ax.set_ylabel("z2 [m]")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="best", fontsize=8)
    written.append(_save(fig, f"{prefix}_plane.png"))

    if result.lateral is not None:
        fig, ax = plt.subplots()
        for i in range(result.lateral.shape[1]):
            ax.plot(result.t, result.lateral[:, i], label=f"agent {i + 1}")
        ax.set_xlabel("t [s]")
        ax.set_ylabel("lateral offset [m]")
        ax.legend(loc="best", fontsize=8)
        written.append(_save(fig, f"{prefix}_lateral.png"))

    dist = result.approx_dist if result.approx_dist is not None else result.euclid
    label = "approx distance [m]" if result.approx_dist is not None else "distance [m]"
    fig, ax = plt.subplots()
    for i in range(dist.shape[1]):
        ax.plot(result.t, dist[:, i], label=f"{i + 1} to {i + 2}")
    ax.set_xlabel("t [s]")
    ax.set_ylabel(label)
    ax.legend(loc="best", fontsize=8)
    written.append(_save(fig, f"{prefix}_distances.png"))
    return written


def plot_root_locus(locus, prefix):
    fig, ax = plt.subplots()
    for b in range(locus.branches.shape[1]):
        ax.plot(locus.branches[:, b].real, locus.branches[:, b].imag, ".-", ms=2, lw=0.7)
        ax.plot(locus.branches[0, b].real, locus.branches[0, b].imag, "kx")
        ax.plot(locus.branches[-1, b].real, locus.branches[-1, b].imag, "ko", mfc="none")
    ax.axvline(0.0, color="gray", lw=0.6)
    ax.set_xlabel("Re s")
    ax.set_ylabel("Im s")
    return [_save(fig, f"{prefix}_rootlocus.png")]


def plot_sweep(alphas, pred_err, track_err, prefix):
    fig, ax = plt.subplots()
    ax.loglog(alphas, pred_err, "o-", label="tail max ||r - yhat||")
    ax.loglog(alphas, track_err, "s-", label="tail max ||r - y||")
    ax.set_xlabel("gain")
    ax.set_ylabel("tail error")
    ax.legend(loc="best", fontsize=8)
    return [_save(fig, f"{prefix}_sweep.png")]
