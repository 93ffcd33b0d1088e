"""Report figures rendered next to the CSV series of each run.

Every figure is written with pinned metadata and a fixed style so repeat
runs of the same config produce byte-identical PNG files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_METADATA = {"Software": "cocstab"}
_FIGSIZE = (7.0, 4.5)
_DPI = 110


def _save(fig, path: Path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI, metadata=_METADATA)
    plt.close(fig)


def exponent_convergence(path: Path, trajectory, value: float, closed_form: float | None) -> None:
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ts = [t for t, _ in trajectory]
    vs = [v for _, v in trajectory]
    ax.semilogx(ts, vs, marker="o", label="estimate (1/n) log||A(q,n)||")
    ax.axhline(value, color="k", lw=0.8, ls=":", label=f"final estimate {value:.6g}")
    if closed_form is not None:
        ax.axhline(closed_form, color="tab:red", lw=0.8, ls="--", label=f"closed form {closed_form:.6g}")
    ax.set_xlabel("time horizon n")
    ax.set_ylabel("growth rate")
    ax.legend(fontsize=8)
    _save(fig, path)


def datko_field(path: Path, c_empirical, c_predicted) -> None:
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    if c_empirical:
        xs = np.arange(len(c_empirical))
        ax.plot(xs, c_empirical, "o", ms=4, label="empirical C(q)")
        if c_predicted:
            ax.plot(xs, c_predicted, "_", ms=10, color="tab:red", label="geometric-series bound")
        ax.set_yscale("log")
    ax.set_xlabel("sample index")
    ax.set_ylabel("C(q)")
    ax.legend(fontsize=8)
    _save(fig, path)


def integrand_decay(path: Path, block_logs, p: float) -> None:
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.plot(np.arange(1, len(block_logs) + 1), block_logs, marker=".", lw=0.8)
    ax.set_xlabel("unit-time block")
    ax.set_ylabel(f"log of block integral of ||v||^{p:g}")
    _save(fig, path)


def kac_convergence(path: Path, rows, inverse_measure: float) -> None:
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    for orbit_id, ratios in rows:
        ax.plot(np.arange(1, len(ratios) + 1), ratios, lw=0.6, alpha=0.6)
    ax.axhline(inverse_measure, color="k", ls="--", lw=1.0, label=f"1/measure = {inverse_measure:g}")
    ax.set_xlabel("return count n")
    ax.set_ylabel("tau_n / n")
    ax.legend(fontsize=8)
    _save(fig, path)


def induced_decay(path: Path, log_norms, log_k: float, log_gamma: float) -> None:
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ns = np.arange(1, len(log_norms) + 1)
    ax.plot(ns, log_norms, marker=".", lw=0.8, label="log||induced(q,n)||")
    ax.plot(ns, log_k + ns * log_gamma, ls="--", color="tab:red", label="log K + n log gamma")
    ax.set_xlabel("induced step n")
    ax.set_ylabel("log norm")
    ax.legend(fontsize=8)
    _save(fig, path)


def tempering_series(path: Path, log_envelope, log_tempered, eps: float) -> None:
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.plot(np.arange(len(log_envelope)), log_envelope, lw=0.8, label="log C(f^n q)")
    ax.plot(np.arange(len(log_tempered)), log_tempered, lw=0.8, label="log T(f^n q)")
    ns = np.arange(len(log_tempered))
    ax.plot(ns, log_tempered[0] + eps * ns, ls="--", color="tab:red", lw=0.8, label="log T(q) + eps n")
    ax.set_xlabel("orbit position n")
    ax.set_ylabel("log value")
    ax.legend(fontsize=8)
    _save(fig, path)


def growth_bounds(path: Path, upper_bounds: dict, lower_rates: list) -> None:
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    if upper_bounds:
        ns = sorted(upper_bounds)
        ax.plot(ns, [upper_bounds[n] for n in ns], marker="o", label="a_n / n (upper bounds)")
    for i, rate in enumerate(lower_rates):
        ax.axhline(rate, color="tab:red", lw=0.6, ls=":", label="periodic lower bound" if i == 0 else None)
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xlabel("n")
    ax.set_ylabel("growth rate")
    ax.legend(fontsize=8)
    _save(fig, path)
