"""Figure rendering for the report paths of the pipeline.

Plots are written next to the delimited outputs so a run directory is
self-describing: a loss curve beside the loss log, and a per-category
accuracy chart beside the evaluation report.
"""

from __future__ import annotations

from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .analogy import EvalReport

FIG_DPI = 150


def save_loss_curve(
    initial_loss: float, epoch_losses: Sequence[float], path: str
) -> None:
    """Line plot of total loss per epoch, including the pre-training value at epoch 0."""
    epochs = list(range(len(epoch_losses) + 1))
    losses = [initial_loss, *epoch_losses]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(epochs, losses, marker="o", markersize=3, linewidth=1.2)
    if all(x > 0 for x in losses):
        ax.set_yscale("log")
    ax.set_xlabel("epoch")
    ax.set_ylabel("total squared loss")
    ax.set_title("training loss")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=FIG_DPI)
    plt.close(fig)


def save_accuracy_chart(report: EvalReport, path: str) -> None:
    """Horizontal bars of per-category accuracy with the overall value last."""
    names = [c.name for c in report.categories] + ["overall"]
    values = [c.accuracy for c in report.categories] + [report.accuracy]
    fig, ax = plt.subplots(figsize=(6.0, 0.5 * len(names) + 1.5))
    y = range(len(names))
    bars = ax.barh(y, values, color=["#4878b0"] * (len(names) - 1) + ["#b04848"])
    ax.set_yticks(list(y))
    ax.set_yticklabels(names)
    ax.invert_yaxis()
    ax.set_xlim(0.0, 1.0)
    ax.set_xlabel("accuracy")
    ax.set_title("analogy accuracy by category")
    for bar, value in zip(bars, values):
        ax.text(
            min(value + 0.02, 0.98),
            bar.get_y() + bar.get_height() / 2,
            f"{value:.3f}",
            va="center",
            fontsize=8,
        )
    fig.tight_layout()
    fig.savefig(path, dpi=FIG_DPI)
    plt.close(fig)
