"""Figures for the ``scan`` report."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .risk import KIND_ORDER, RiskReport  # noqa: E402

KIND_COLORS = ("#4c72b0", "#55a868", "#c44e52", "#8172b2")


def plot_exposure(reports: Sequence[RiskReport], path: str | Path) -> Path:
    """Grouped bars per app: exported vs risky components, stacked by kind."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(max(6.0, 1.1 * len(reports) + 2), 4.5))
    xs = range(len(reports))
    width = 0.38
    bottoms_exp = [0] * len(reports)
    bottoms_risky = [0] * len(reports)
    for kind, color in zip(KIND_ORDER, KIND_COLORS):
        exported = [r.counts[kind].explicit + r.counts[kind].implicit for r in reports]
        risky = [r.counts[kind].risky for r in reports]
        ax.bar([x - width / 2 for x in xs], exported, width, bottom=bottoms_exp,
               color=color, label=kind.value)
        ax.bar([x + width / 2 for x in xs], risky, width, bottom=bottoms_risky,
               color=color, hatch="//", edgecolor="white")
        bottoms_exp = [a + b for a, b in zip(bottoms_exp, exported)]
        bottoms_risky = [a + b for a, b in zip(bottoms_risky, risky)]

    ax.set_xticks(list(xs))
    ax.set_xticklabels([r.package for r in reports], rotation=35, ha="right", fontsize=8)
    ax.set_ylabel("components")
    ax.set_title("Exported (solid) vs risky (hatched) components")
    ax.legend(fontsize=8, frameon=False)
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    fig.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
