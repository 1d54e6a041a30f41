"""Figure rendering for CLI reports.

Each report figure is drawn from the same arrays that go into the
delimited output files and is written as a PNG next to them.  Metadata is
stripped so reruns produce identical bytes.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "save_mean_curve_figure",
    "save_probability_rainfall_figure",
    "save_rate_of_change_figure",
    "save_prior_density_figure",
    "save_simulation_figures",
]

_SAVE_KW = dict(dpi=150, metadata={"Software": None})


def _new_axes(xlabel: str, ylabel: str):
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    return fig, ax


def save_mean_curve_figure(path, years, summary, observed_years=None,
                           observed_means=None) -> None:
    """Fitted mean with its 95% ribbon, over annual-average bars if given."""
    fig, ax = _new_axes("year", "mean wet-day rainfall (mm)")
    if observed_years is not None:
        ax.bar(observed_years, observed_means, width=0.9, color="0.85",
               label="annual average")
    ax.fill_between(years, summary.lo, summary.hi, alpha=0.3, color="tab:red", lw=0)
    ax.plot(years, summary.mean, color="tab:red", label="posterior mean")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_probability_rainfall_figure(path, years, summaries: dict) -> None:
    """One line + ribbon per exceedance probability."""
    fig, ax = _new_axes("year", "rainfall (mm)")
    colors = ["tab:red", "tab:blue", "tab:green", "tab:orange", "tab:purple"]
    for (p, summary), color in zip(sorted(summaries.items()), colors):
        ax.fill_between(years, summary.lo, summary.hi, alpha=0.2, color=color, lw=0)
        ax.plot(years, summary.mean, color=color, label=f"{100 * p:g}% probability")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_rate_of_change_figure(path, years, summary) -> None:
    fig, ax = _new_axes("year", "d(mean rainfall)/dt (mm/year)")
    ax.fill_between(years, summary.lo, summary.hi, alpha=0.3, color="tab:blue", lw=0)
    ax.plot(years, summary.mean, color="tab:blue")
    ax.axhline(0.0, color="black", lw=0.8)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_prior_density_figure(path, alphas, densities, theta: float) -> None:
    fig, ax = _new_axes("shape", "prior density")
    ax.plot(alphas, densities, color="tab:red", label=f"theta = {theta:g}")
    ax.axvline(1.0, color="black", lw=0.8, ls=":")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_simulation_figures(outdir, rows) -> list:
    """One figure per metric: panels by sample size, lines by (fit, prior)."""
    metrics = [("coverage", "coverage of the 95% interval"),
               ("mean_abs_bias", "mean |shape bias|"),
               ("mean_abs_fit_error", "mean absolute fitting error"),
               ("mean_waic", "mean WAIC")]
    ns = sorted({r.n for r in rows})
    lines = sorted({(r.fit, r.prior) for r in rows})
    written = []
    for field, label in metrics:
        fig, axes = plt.subplots(1, len(ns), figsize=(4.5 * len(ns), 3.6),
                                 sharey=True, squeeze=False)
        for ax, n in zip(axes[0], ns):
            for fit, prior in lines:
                pts = sorted((r.alpha_true, getattr(r, field)) for r in rows
                             if r.n == n and r.fit == fit and r.prior == prior)
                if pts:
                    ax.plot([p[0] for p in pts], [p[1] for p in pts],
                            marker="o", label=f"{fit}, {prior}")
            ax.set_title(f"n = {n}")
            ax.set_xlabel("true shape")
        axes[0][0].set_ylabel(label)
        axes[0][-1].legend(frameon=False, fontsize=8)
        fig.tight_layout()
        path = f"{outdir}/fig_{field}.png"
        fig.savefig(path, **_SAVE_KW)
        plt.close(fig)
        written.append(path)
    return written
