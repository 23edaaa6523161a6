"""Figure rendering for the report paths (PNG files next to the CSV/JSON).

Everything here is presentation only; the data the figures draw is exactly
what the delimited outputs carry.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from reswalk.profiles import MacroProfile, tail_at_boundaries

__all__ = [
    "save_profile_plot",
    "save_ladder_plot",
    "save_interface_plot",
    "save_trend_plot",
]

_FIGSIZE = (7.0, 4.4)


def save_profile_plot(profiles: dict[str, MacroProfile], path, title=""):
    """Density (left) and tail mass (right) for a family of profiles."""
    fig, (ax_d, ax_f) = plt.subplots(1, 2, figsize=_FIGSIZE)
    for name, u in profiles.items():
        mids = u.cell_midpoints()
        ax_d.plot(mids, u.density, lw=1.2, label=name)
        ax_f.plot(u.cell_edges(), tail_at_boundaries(u), lw=1.2, label=name)
    ax_d.set_xlabel("r")
    ax_d.set_ylabel("density")
    ax_f.set_xlabel("r")
    ax_f.set_ylabel("tail mass F(r)")
    ax_f.legend(fontsize=7)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_ladder_plot(ladder, path):
    """Bracketing flows along the refinement ladder plus the gap decay."""
    fig, (ax_f, ax_g) = plt.subplots(1, 2, figsize=_FIGSIZE)
    cmap = plt.get_cmap("viridis")
    depth = ladder.depth
    for n in range(depth):
        c = cmap(n / max(depth - 1, 1))
        ax_f.plot(ladder.uppers[n].cell_edges(),
                  tail_at_boundaries(ladder.uppers[n]), color=c, lw=1.0)
        ax_f.plot(ladder.lowers[n].cell_edges(),
                  tail_at_boundaries(ladder.lowers[n]), color=c, lw=1.0, ls="--")
    ax_f.set_xlabel("r")
    ax_f.set_ylabel("F(r): upper (solid) / lower (dashed)")
    deltas = np.asarray(ladder.schedule)
    gaps = np.asarray(ladder.gaps)
    ax_g.loglog(deltas, gaps, "o-", label="gap")
    ax_g.loglog(deltas, 4.0 * ladder.j * deltas, "k:", label="4 j delta")
    ax_g.set_xlabel("delta")
    ax_g.set_ylabel("total-variation gap")
    ax_g.legend(fontsize=8)
    fig.suptitle(f"bracket ladder at t={ladder.time}, j={ladder.j}")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_interface_plot(xs, curves: dict[str, np.ndarray], path, title=""):
    """Interface overlays: x in [0,1] against scaled suffix masses."""
    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    for name, ys in curves.items():
        ax.plot(xs, ys, lw=1.1, label=name)
    ax.set_xlabel("r = eps * x")
    ax.set_ylabel("eps * F_eps")
    ax.legend(fontsize=7)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_trend_plot(ns, values, errors, path, ylabel="max interface deviation"):
    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    ax.errorbar(ns, values, yerr=errors, fmt="o-", capsize=3)
    ax.set_xscale("log")
    ax.set_xlabel("lattice size N")
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
