"""Matplotlib renderings of run and sweep artifacts (file output only)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)
import numpy as np  # noqa: E402

from .dynamics import TimeSeries  # noqa: E402
from .scenario import RunResult, SweepRow  # noqa: E402

_US = 1e6  # seconds -> microseconds for axes


def overview_figure(result: RunResult, path: str | Path) -> str:
    series = result.series
    t = series.times * _US
    fig, axes = plt.subplots(2, 2, figsize=(9.5, 6.5), sharex=True)

    ax = axes[0, 0]
    ax.plot(t, series.channels["P_down"], lw=1.0, color="tab:blue")
    ax.axhline(0.5, color="gray", lw=0.6, ls=":")
    ax.set_ylabel(r"$P_\downarrow$")
    ax.set_ylim(-0.02, 1.02)

    ax = axes[0, 1]
    ax.plot(t, series.channels["mean_position"], lw=0.8, color="tab:orange", label=r"$\langle x\rangle$")
    kappa = result.config.params.kappa
    if kappa > 0:
        x0 = abs(series.channels["mean_position"][0])
        if x0 > 0:
            env = x0 * np.exp(-kappa * series.times / 4.0)
            ax.plot(t, env, "k--", lw=0.8, label=r"$e^{-\kappa t/4}$ envelope")
            ax.plot(t, -env, "k--", lw=0.8)
    ax.set_ylabel(r"$\langle x\rangle\ /\ x_0$")
    ax.legend(loc="upper right", fontsize=8)

    ax = axes[1, 0]
    ax.plot(t, series.channels["mean_energy"], lw=1.0, color="tab:green", label=r"$\langle H\rangle/\hbar\omega$")
    ax.plot(t, series.channels["mean_number"], lw=1.0, color="tab:red", label=r"$\langle n\rangle$")
    ax.set_xlabel(r"$t$ [$\mu$s]")
    ax.set_ylabel("motional energy / number")
    ax.legend(loc="best", fontsize=8)

    ax = axes[1, 1]
    ax.plot(t, series.channels["uncertainty_product"], lw=1.0, color="tab:purple",
            label=r"$\Delta x\,\Delta p\ /\ \hbar$")
    ax.plot(t, series.channels["purity"], lw=1.0, color="tab:brown", label=r"tr$\,\rho^2$")
    ax.axhline(0.5, color="gray", lw=0.6, ls=":")
    ax.set_xlabel(r"$t$ [$\mu$s]")
    ax.legend(loc="best", fontsize=8)

    fig.suptitle(result.config.name)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def comparison_figure(result: RunResult, path: str | Path) -> str:
    series = result.series
    reference = result.analytic_series
    if reference is None:
        raise ValueError("comparison figure needs an in-scope analytic series")
    t = series.times * _US
    names = list(reference.channels)
    fig, axes = plt.subplots(len(names), 2, figsize=(10, 2.6 * len(names)), sharex=True, squeeze=False)
    for row, name in enumerate(names):
        num = series.channels[name]
        ana = reference.channels[name]
        ax = axes[row, 0]
        ax.plot(t, num, lw=1.0, color="tab:blue", label="integrator")
        ax.plot(t, ana, lw=0.8, ls="--", color="tab:red", label="closed form")
        ax.set_ylabel(f"{name} [{series.units[name]}]")
        if row == 0:
            ax.legend(loc="best", fontsize=8)
        ax = axes[row, 1]
        dev = np.abs(num - ana)
        positive = np.clip(dev, 1e-18, None)
        ax.semilogy(t, positive, lw=0.8, color="tab:gray")
        ax.set_ylabel("|deviation|")
    axes[-1, 0].set_xlabel(r"$t$ [$\mu$s]")
    axes[-1, 1].set_xlabel(r"$t$ [$\mu$s]")
    fig.suptitle(f"{result.config.name}: integrator vs closed form")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def sweep_figure(rows: list[SweepRow], path: str | Path) -> str:
    ratio = np.array([row.kappa_over_crit for row in rows])
    count = np.array([row.crossing_count for row in rows])
    fitted = np.array([row.fitted_rate for row in rows])
    expected = np.array([row.expected_rate for row in rows])

    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7.5, 6.0), sharex=True)
    ax1.semilogx(ratio, count, "o-", ms=3, lw=0.8, color="tab:blue")
    ax1.axvline(1.0, color="k", lw=0.8, ls="--")
    ax1.set_ylabel("crossings of 1/2 in window")
    ax1.set_title("oscillatory-to-frozen transition")

    good = np.isfinite(fitted)
    ax2.semilogx(ratio[good], fitted[good], "o", ms=3, color="tab:orange", label="fitted envelope rate")
    ax2.semilogx(ratio, expected, "-", lw=0.8, color="k", label=r"$\kappa/4$")
    ax2.axvline(1.0, color="k", lw=0.8, ls="--")
    ax2.set_xlabel(r"$\kappa / \kappa_{\rm crit}$")
    ax2.set_ylabel("rate [1/s]")
    ax2.legend(loc="best", fontsize=8)

    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def series_figure(series: TimeSeries, channel: str, path: str | Path) -> str:
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    ax.plot(series.times * _US, series.channels[channel], lw=1.0)
    ax.set_xlabel(r"$t$ [$\mu$s]")
    ax.set_ylabel(f"{channel} [{series.units[channel]}]")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)
