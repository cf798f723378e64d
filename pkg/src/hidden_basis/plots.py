"""Figure rendering for experiment reports.

Figures are written next to the delimited output; styling is kept minimal
and deterministic (fixed size, no interactive backend).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
FIG_WIDTH = 5.2
FIG_SIZE = (FIG_WIDTH, FIG_WIDTH * _GOLDEN)

plt.rcParams.update(
    {
        "figure.figsize": FIG_SIZE,
        "font.size": 9,
        "axes.spines.top": False,
        "axes.spines.right": False,
        "savefig.dpi": 150,
        "savefig.bbox": "tight",
    }
)


def _new_axes():
    fig = plt.figure()
    return fig, fig.add_subplot(1, 1, 1)


def save_error_histogram(errors, path) -> str:
    """Histogram of per-repeat matching errors (log10 scale)."""
    fig, ax = _new_axes()
    vals = np.asarray([e for e in errors if np.isfinite(e) and e > 0], dtype=float)
    if vals.size:
        ax.hist(np.log10(vals), bins=min(30, max(5, vals.size // 2)), color="#3566a5")
    ax.set_xlabel("log10 max matching error")
    ax.set_ylabel("repeats")
    fig.savefig(path)
    plt.close(fig)
    return str(path)


def save_perturbation_sweep(epsilons, medians, p90s, path) -> str:
    """Log-log recovery error against perturbation size, with a slope-1 guide."""
    fig, ax = _new_axes()
    eps = np.asarray(epsilons, dtype=float)
    med = np.asarray(medians, dtype=float)
    ax.loglog(eps, med, "o-", color="#3566a5", label="median")
    ax.loglog(eps, np.asarray(p90s, dtype=float), "s--", color="#a53535", label="p90")
    if np.all(med > 0):
        guide = med[0] * (eps / eps[0])
        ax.loglog(eps, guide, ":", color="gray", label="slope 1")
    ax.set_xlabel("gradient perturbation")
    ax.set_ylabel("recovery error")
    ax.legend(frameon=False)
    fig.savefig(path)
    plt.close(fig)
    return str(path)


def save_order_scatter(powers, orders, path) -> str:
    """Measured convergence order per run against the contrast power."""
    fig, ax = _new_axes()
    pw = np.asarray(powers, dtype=float)
    od = np.asarray(orders, dtype=float)
    jitter = (np.arange(len(pw)) % 7 - 3) * 0.01
    ax.plot(pw + jitter, od, "o", color="#3566a5", alpha=0.6)
    for p in sorted(set(pw.tolist())):
        ax.hlines(p - 1.0, p - 0.2, p + 0.2, color="gray", linestyles=":")
    ax.set_xlabel("contrast power")
    ax.set_ylabel("measured order")
    fig.savefig(path)
    plt.close(fig)
    return str(path)


def save_fixed_point_spectrum(supports, residuals, path) -> str:
    """Fixed-point residuals by support size."""
    fig, ax = _new_axes()
    sizes = [len(s) for s in supports]
    res = np.asarray(residuals, dtype=float)
    ax.semilogy(sizes, np.maximum(res, 1e-18), "o", color="#3566a5", alpha=0.6)
    ax.set_xlabel("support size")
    ax.set_ylabel("iteration residual")
    fig.savefig(path)
    plt.close(fig)
    return str(path)
