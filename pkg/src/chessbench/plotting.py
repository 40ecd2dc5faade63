"""Bar chart of report rows, written to an image file."""

from __future__ import annotations

from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .scoring import EvalResult  # noqa: E402


def plot_report(results: Sequence[EvalResult], path, title: str = "Evaluation report") -> None:
    """Horizontal bars of mean score (percent) with standard-error whiskers."""
    labels = [f"{r.task_kind} | {r.split} | {r.metric}" for r in results]
    means = [100 * r.mean for r in results]
    errs = [100 * r.stderr for r in results]
    height = max(2.0, 0.35 * len(results) + 1.0)
    fig, ax = plt.subplots(figsize=(9, height))
    try:
        ys = range(len(results))
        ax.barh(list(ys), means, xerr=errs, color="#4c72b0", ecolor="#333333", capsize=3)
        ax.set_yticks(list(ys))
        ax.set_yticklabels(labels, fontsize=8)
        ax.invert_yaxis()
        ax.set_xlim(0, 105)
        ax.set_xlabel("score (%)")
        ax.set_title(title)
        for y, m in zip(ys, means):
            ax.text(min(m + 1, 100), y, f"{m:.1f}", va="center", fontsize=7)
        fig.tight_layout()
        fig.savefig(path, dpi=120)
    finally:
        plt.close(fig)
