"""Report rendering: experiment tables and significance results as CSV plus
matplotlib figures written next to the delimited output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluation import METRIC_KEYS, ExperimentTable
from .stats import SignificanceReport

METRIC_TITLES = {
    "context_relevance": "Context Relevancy",
    "faithfulness": "Faithfulness",
    "answer_relevance": "Answer Relevance",
}


def write_table_csv(table: ExperimentTable, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(table.to_csv(), encoding="utf-8")
    return path


def render_metric_bars(table: ExperimentTable, path: str | Path) -> Path:
    """Grouped bars: one cluster per metric, one bar per configuration."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    labels = sorted(table.configs)
    x = np.arange(len(METRIC_KEYS))
    width = 0.8 / max(len(labels), 1)

    fig, (ax, ax_wc) = plt.subplots(
        1, 2, figsize=(9, 3.6), gridspec_kw={"width_ratios": [3, 1]})
    for i, label in enumerate(labels):
        cs = table.configs[label]
        means = [cs.mean(k) or 0.0 for k in METRIC_KEYS]
        ax.bar(x + i * width, means, width, label=label)
    ax.set_xticks(x + width * (len(labels) - 1) / 2)
    ax.set_xticklabels([METRIC_TITLES[k] for k in METRIC_KEYS], fontsize=8)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("mean score")
    ax.legend(fontsize=7)

    word_counts = [table.configs[label].average_word_count() or 0.0 for label in labels]
    ax_wc.bar(np.arange(len(labels)), word_counts, 0.6, color="tab:gray")
    ax_wc.set_xticks(np.arange(len(labels)))
    ax_wc.set_xticklabels(labels, rotation=30, ha="right", fontsize=7)
    ax_wc.set_ylabel("avg word count")

    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_significance_heatmap(report: SignificanceReport, path: str | Path) -> Path:
    """One p-value matrix per metric (lower triangle mirrored)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rendered = [ms for ms in report.metrics if ms.comparisons]
    n_metrics = len(rendered)
    fig, axes = plt.subplots(1, max(n_metrics, 1), figsize=(4 * max(n_metrics, 1), 3.6))
    if n_metrics <= 1:
        axes = [axes]
    for ax, ms in zip(axes, rendered):
        labels = sorted({label for c in ms.comparisons for label in c.pair})
        pos = {label: i for i, label in enumerate(labels)}
        matrix = np.ones((len(labels), len(labels)))
        for c in ms.comparisons:
            i, j = pos[c.pair[0]], pos[c.pair[1]]
            matrix[i, j] = matrix[j, i] = c.p_value
        im = ax.imshow(matrix, vmin=0.0, vmax=1.0, cmap="viridis_r")
        ax.set_xticks(range(len(labels)))
        ax.set_yticks(range(len(labels)))
        ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=7)
        ax.set_yticklabels(labels, fontsize=7)
        ax.set_title(METRIC_TITLES.get(ms.metric, ms.metric), fontsize=9)
        fig.colorbar(im, ax=ax, shrink=0.8, label="p")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_calibration_curve(rows: list[tuple[float, float, int]],
                             path: str | Path) -> Path:
    """Percentile sweep: mean chunk word count (left axis) and chunk count
    (right axis) against threshold percentile."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    percentiles = [r[0] for r in rows]
    mean_words = [r[1] for r in rows]
    counts = [r[2] for r in rows]

    fig, ax = plt.subplots(figsize=(6, 3.6))
    ax.plot(percentiles, mean_words, marker="o", color="tab:blue")
    ax.set_xlabel("threshold percentile")
    ax.set_ylabel("mean chunk word count", color="tab:blue")
    ax2 = ax.twinx()
    ax2.plot(percentiles, counts, marker="s", color="tab:orange")
    ax2.set_ylabel("total chunks", color="tab:orange")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
