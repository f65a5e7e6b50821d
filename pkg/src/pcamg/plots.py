"""Residual-history figures rendered next to the delimited bench output."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["save_convergence_figure"]

MAX_LEGEND_ENTRIES = 12


def save_convergence_figure(histories, path, title="Residual history"):
    """Semilog residual curves, one per run.

    histories: iterable of (label, residual_norm_array). Curves beyond the
    legend cap are drawn unlabeled to keep the figure readable.
    """
    histories = list(histories)
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    for k, (label, hist) in enumerate(histories):
        hist = np.asarray(hist, dtype=np.float64)
        # semilogy cannot show exact zeros; clip to a visible floor
        floor = np.max(hist, initial=0.0) * 1e-300 + 1e-300
        ax.semilogy(
            np.arange(hist.shape[0]),
            np.maximum(hist, floor),
            marker="o",
            markersize=2.5,
            linewidth=1.0,
            label=label if k < MAX_LEGEND_ENTRIES else None,
        )
    ax.set_xlabel("iteration")
    ax.set_ylabel("residual 2-norm")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    if histories:
        ax.legend(fontsize=8, loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
