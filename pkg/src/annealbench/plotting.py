"""Matplotlib helpers shared by the report figures (file output only)."""
from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
    "lines.markersize": 4,
    "savefig.dpi": 150,
    "figure.dpi": 100,
    # fixed metadata keeps repeated renders byte-identical
    "svg.hashsalt": "annealbench",
}

GOLDEN = (math.sqrt(5) - 1.0) / 2.0


def figure(width: float = 5.0, height: float | None = None, ncols: int = 1):
    plt.rcParams.update(STYLE)
    if height is None:
        height = width * GOLDEN if ncols == 1 else width * GOLDEN / ncols * 1.3
    fig, axes = plt.subplots(1, ncols, figsize=(width, height), squeeze=False)
    return fig, axes[0]


def despine(ax) -> None:
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    ax.xaxis.set_ticks_position("bottom")
    ax.yaxis.set_ticks_position("left")


def save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path
