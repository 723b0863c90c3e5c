"""Figure rendering for grid and power reports.

Renders the same data the CLI writes as CSV.  Matplotlib is imported
lazily with the Agg backend so the CLI stays headless-safe and fast when
no figure is requested.
"""

from __future__ import annotations

from collections import defaultdict
from typing import Sequence

from .montecarlo import PowerCurveRow

__all__ = ["save_grid_figure", "save_power_figure"]


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def save_grid_figure(
    rows: Sequence[tuple[int, int, float, float]],
    marginals: tuple[int, int],
    sided: str,
    path: str,
) -> None:
    """Render a 2x2 probability grid as a bubble chart and save it."""
    plt = _pyplot()
    n1, n2 = marginals
    s1 = [r[0] for r in rows]
    s2 = [r[1] for r in rows]
    probs = [r[2] for r in rows]
    pmax = max(probs) or 1.0
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    sc = ax.scatter(
        s1,
        s2,
        s=[2000.0 * p / pmax for p in probs],
        c=probs,
        cmap="viridis",
        edgecolors="none",
    )
    fig.colorbar(sc, ax=ax, label="P")
    label = "two-sided" if sided == "two" else "one-sided"
    ax.set_xlabel("successes in experiment 1 (s1)")
    ax.set_ylabel("successes in experiment 2 (s2)")
    ax.set_title(f"{label} m-test probabilities, marginals ({n1}, {n2})")
    ax.set_xticks(range(0, n1 + 1, max(1, n1 // 10)))
    ax.set_yticks(range(0, n2 + 1, max(1, n2 // 10)))
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_power_figure(rows: Sequence[PowerCurveRow], path: str) -> None:
    """Render ROC (left) and power (right) panels from power-curve rows."""
    plt = _pyplot()
    by_test: dict[str, list[PowerCurveRow]] = defaultdict(list)
    for row in rows:
        by_test[row.test].append(row)
    fig, (ax_roc, ax_power) = plt.subplots(1, 2, figsize=(9.0, 4.0))
    for test, pts in by_test.items():
        pts = sorted(pts, key=lambda r: r.alpha)
        ax_roc.plot([p.fpr for p in pts], [p.tpr for p in pts], marker=".", label=test)
        ax_power.plot([p.alpha for p in pts], [p.tpr for p in pts], marker=".", label=test)
    ax_roc.plot([0, 1], [0, 1], ls=":", lw=0.8, color="gray")
    ax_roc.set_xlabel("FPR")
    ax_roc.set_ylabel("TPR")
    ax_roc.set_title("ROC")
    ax_roc.legend()
    ax_power.set_xlabel("alpha")
    ax_power.set_ylabel("TPR")
    ax_power.set_title("power")
    ax_power.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
