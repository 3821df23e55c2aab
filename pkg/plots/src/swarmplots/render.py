"""Deterministic figure rendering from a loaded bundle."""

from __future__ import annotations

from dataclasses import dataclass

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt   # noqa: E402
import numpy as np                # noqa: E402

from .bundle import Bundle, load_bundle   # noqa: E402

FIGURE_KINDS = ("trajectories", "error-vs-bound", "formation-potential")

_COLORS = plt.rcParams["axes.prop_cycle"].by_key()["color"]


@dataclass(frozen=True)
class PlotJob:
    bundle_path: str
    kind: str
    out_path: str

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; "
                             f"one of {FIGURE_KINDS}")


def _fig():
    return plt.subplots(figsize=(6.4, 4.8), dpi=120)


def _trajectories(bundle: Bundle, ax):
    pos = bundle.positions()
    for i in range(bundle.agent_count):
        color = _COLORS[i % len(_COLORS)]
        ax.plot(pos[:, i, 0], pos[:, i, 1], lw=0.8, color=color,
                label=f"agent {i}")
        ax.plot(pos[-1, i, 0], pos[-1, i, 1], "o", ms=6, color=color)
    mins = bundle.minimizer_path()
    ax.plot(mins[:, 0], mins[:, 1], "--", lw=1.0, color="black",
            label="minimizer path")
    ax.plot(mins[-1, 0], mins[-1, 1], "*", ms=14, color="black")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title("Agent trajectories (dots: final positions, star: minimizer)")
    ax.legend(fontsize=7, ncol=2)
    ax.set_aspect("equal", adjustable="datalim")


def _error_vs_bound(bundle: Bundle, ax):
    gaps = bundle.per_agent("gap")
    bound = bundle.per_agent("bound_analytic")
    ks = np.arange(gaps.shape[0])
    for i in range(bundle.agent_count):
        ax.plot(ks, gaps[:, i], lw=0.8, color=_COLORS[i % len(_COLORS)],
                label=f"agent {i}")
    finite = np.isfinite(bound)
    if finite.any():
        env = np.nanmax(np.where(finite, bound, -np.inf), axis=1)
        mask = np.isfinite(env)
        ax.plot(ks[mask], env[mask], lw=1.6, color="black",
                label="analytic bound")
    ax.set_yscale("log")
    ax.set_xlabel("round")
    ax.set_ylabel("optimality gap")
    ax.set_title("Per-agent minimization error vs analytic bound")
    ax.legend(fontsize=7, ncol=2)


def _formation_potential(bundle: Bundle, ax):
    phis = bundle.per_agent("phi_i")
    ks = np.arange(phis.shape[0])
    total = phis.sum(axis=1)
    for i in range(bundle.agent_count):
        ax.plot(ks, phis[:, i], lw=0.6, alpha=0.7,
                color=_COLORS[i % len(_COLORS)], label=f"agent {i}")
    ax.plot(ks, total, lw=1.4, color="black", label="total")
    k0 = bundle.metrics.get("burn_in_k0")
    if k0 is not None:
        ax.axvline(k0, color="gray", ls=":", lw=1.0, label="burn-in")
    ax.set_xlabel("round")
    ax.set_ylabel("formation potential")
    ax.set_title("Formation potential per agent and total")
    ax.legend(fontsize=7, ncol=2)


_RENDERERS = {
    "trajectories": _trajectories,
    "error-vs-bound": _error_vs_bound,
    "formation-potential": _formation_potential,
}


def render(job: PlotJob) -> str:
    """Render the figure for `job` and return the output path."""
    bundle = load_bundle(job.bundle_path)
    fig, ax = _fig()
    try:
        _RENDERERS[job.kind](bundle, ax)
        fig.savefig(job.out_path, bbox_inches="tight")
    finally:
        plt.close(fig)
    return job.out_path
