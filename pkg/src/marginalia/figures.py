"""Report figures, rendered to PNG files next to the delimited output."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def save_iou_histogram(ious: list[float], path, bins: int = 20) -> None:
    """Distribution of matched-pair IoU values."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(ious, bins=bins, range=(0.0, 1.0), color="#4878cf", edgecolor="black")
    ax.set_xlabel("IoU of matched pair")
    ax.set_ylabel("count")
    ax.set_title("Matched detection IoU")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_page_iou_chart(page_ids: list[str], values: list[float], path) -> None:
    """Per-page mean matched IoU as a horizontal bar chart."""
    height = max(2.0, 0.35 * len(page_ids) + 1.2)
    fig, ax = plt.subplots(figsize=(6, height))
    positions = range(len(page_ids))
    ax.barh(list(positions), values, color="#6acc65", edgecolor="black")
    ax.set_yticks(list(positions))
    ax.set_yticklabels(page_ids, fontsize=7)
    ax.invert_yaxis()
    ax.set_xlim(0.0, 1.0)
    ax.set_xlabel("mean matched IoU")
    ax.set_title("Per-page detection quality")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_cer_histogram(cers: list[float], path, bins: int = 20) -> None:
    """Distribution of per-word character error rates."""
    upper = max(1.0, max(cers) if cers else 1.0)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(cers, bins=bins, range=(0.0, upper), color="#d65f5f", edgecolor="black")
    ax.set_xlabel("character error rate")
    ax.set_ylabel("count")
    ax.set_title("Word recognition CER")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
