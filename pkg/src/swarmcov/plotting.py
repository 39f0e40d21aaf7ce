"""Optional static SVG rendering of the emitted plot data."""

from __future__ import annotations

from pathlib import Path

import numpy as np


def _plt():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def heatmap_svg(path, grid, values, positions=None, title=""):
    plt = _plt()
    d = grid.domain
    fig, ax = plt.subplots(figsize=(4, 4 * d.height / d.width + 0.5))
    im = ax.imshow(np.asarray(values).T, origin="lower", extent=(d.x_min, d.x_max, d.y_min, d.y_max),
                   cmap="viridis", aspect="equal")
    if positions is not None:
        ax.plot(positions[:, 0], positions[:, 1], "w.", ms=2)
    fig.colorbar(im, ax=ax)
    ax.set_title(title)
    fig.savefig(Path(path), format="svg", bbox_inches="tight")
    plt.close(fig)


def curves_svg(path, curves, xlabel="", ylabel="", title=""):
    """``curves`` is a list of ``(x, y, label, style)``."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for x, y, label, style in curves:
        ax.plot(x, y, style, label=label, lw=1.2, ms=3)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend()
    fig.savefig(Path(path), format="svg", bbox_inches="tight")
    plt.close(fig)
