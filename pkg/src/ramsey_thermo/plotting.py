"""Figure rendering for the report pipelines.

Figures are drawn with matplotlib (Agg backend) and written as standalone SVG
files next to the CSV tables. Rendering is byte-deterministic: the SVG id
hash salt is pinned and the creation-date metadata is suppressed, so re-runs
of the same configuration produce identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .hilbert import LN2

_RC = {
    "svg.hashsalt": "ramsey-thermo",
    "figure.figsize": (7.0, 5.0),
    "axes.grid": True,
    "grid.alpha": 0.3,
}

_SZ_LABEL = r"$\langle\sigma_z\rangle$"
_S_LABEL = r"$S/\ln(2)$"
_JW_LABEL = r"$J_W/\hbar\omega g$"
_JQ_LABEL = r"$J_Q/\hbar\omega g$"


def _save(fig, path: str) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def render_fig1(samples, g: float, path: str) -> None:
    """Two stacked panels: inversion and entropy on top, fluxes below."""
    if not samples:
        raise ValueError("no samples to plot")
    gt = np.array([s.t for s in samples]) * g
    with plt.rc_context(_RC):
        fig, (ax_top, ax_bot) = plt.subplots(2, 1, sharex=True)
        ax_top.plot(gt, [s.sigma_z for s in samples], "b-", label=_SZ_LABEL)
        ax_top.plot(gt, [s.entropy / LN2 for s in samples], "k-.", label=_S_LABEL)
        ax_top.set_ylabel(_SZ_LABEL + ", " + _S_LABEL)
        ax_top.legend(loc="best")
        ax_bot.plot(gt, [s.jw_norm for s in samples], "b--", label=_JW_LABEL)
        ax_bot.plot(gt, [s.jq_norm for s in samples], "r-", label=_JQ_LABEL)
        ax_bot.set_xlabel(r"$gt$")
        ax_bot.set_ylabel(r"$J/\hbar\omega g$")
        ax_bot.legend(loc="best")
        _save(fig, path)


def _populated(rows):
    return [r for r in rows if r.t_star is not None]


def render_fig2(rows, path: str) -> None:
    """Entropy and flux magnitudes against the coupling, log-x."""
    rows = _populated(rows)
    if not rows:
        raise ValueError("no populated sweep rows to plot")
    g = [r.g_over_kappa for r in rows]
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.plot(g, [r.entropy / LN2 for r in rows], "k-.", label=_S_LABEL)
        ax.plot(g, [abs(r.jq_norm) for r in rows], "r-", label=r"$|J_Q/\hbar\omega g|$")
        ax.plot(g, [abs(r.jw_norm) for r in rows], "b--", label=r"$|J_W/\hbar\omega g|$")
        ax.set_xscale("log")
        ax.set_xlabel(r"$g/\kappa$")
        ax.legend(loc="best")
        _save(fig, path)


def render_fig3(rows, path: str) -> None:
    """Photon throughput (log scale, left) and entropy (linear, right)."""
    rows = _populated(rows)
    if not rows:
        raise ValueError("no populated sweep rows to plot")
    g = [r.g_over_kappa for r in rows]
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.plot(g, [r.n_flux for r in rows], "-", color="purple", label=r"$\bar{n}_{flux}$")
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel(r"$g/\kappa$")
        ax.set_ylabel(r"$\bar{n}_{flux}$")
        ax_r = ax.twinx()
        ax_r.plot(g, [r.entropy / LN2 for r in rows], "k-.", label=_S_LABEL)
        ax_r.set_ylabel(_S_LABEL)
        ax_r.grid(False)
        handles, labels = ax.get_legend_handles_labels()
        h2, l2 = ax_r.get_legend_handles_labels()
        ax.legend(handles + h2, labels + l2, loc="center left")
        _save(fig, path)


def render_evolve(samples, path: str, fluxes: bool = True) -> None:
    """Time series of a custom evolution."""
    if not samples:
        raise ValueError("no samples to plot")
    t = [s.t for s in samples]
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.plot(t, [s.sigma_z for s in samples], "b-", label=_SZ_LABEL)
        ax.plot(t, [s.entropy / LN2 for s in samples], "k-.", label=_S_LABEL)
        if fluxes:
            ax.plot(t, [s.jw_norm for s in samples], "b--", label=_JW_LABEL)
            ax.plot(t, [s.jq_norm for s in samples], "r-", label=_JQ_LABEL)
        ax.set_xlabel(r"$\kappa t$")
        ax.legend(loc="best")
        _save(fig, path)
