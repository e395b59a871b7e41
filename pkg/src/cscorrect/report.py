"""Figure rendering for evaluation reports.

The evaluate subcommand writes a JSON report and a per-sentence TSV; this
module adds PNG figures next to them: a bar chart of the headline metrics
and a histogram of per-sentence edit distances against the target.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .evaluate import EvalTriple, MetricsReport, levenshtein_ops  # noqa: E402

_BAR_METRICS = (
    ("S-P", "s_p"), ("S-R", "s_r"), ("S-F", "s_f"),
    ("C-P", "c_p"), ("C-R", "c_r"), ("C-F", "c_f"),
    ("FPR", "fpr"),
)


def render_metric_bars(report: MetricsReport, path: Path) -> Path:
    labels = [label for label, _ in _BAR_METRICS]
    values = [getattr(report, attr) for _, attr in _BAR_METRICS]
    fig, ax = plt.subplots(figsize=(7, 4))
    colors = ["#4878a8"] * 6 + ["#b5534c"]
    ax.bar(labels, values, color=colors)
    ax.set_ylim(0, 1)
    ax.set_ylabel("value")
    ax.set_title("Correction metrics")
    for i, v in enumerate(values):
        ax.text(i, v + 0.02, f"{v:.3f}", ha="center", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_edit_histogram(triples: list[EvalTriple], path: Path) -> Path:
    edits = [levenshtein_ops(t.prediction, t.target) for t in triples]
    fig, ax = plt.subplots(figsize=(7, 4))
    upper = max(edits, default=0)
    ax.hist(edits, bins=range(0, upper + 2), color="#4878a8", edgecolor="white")
    ax.set_xlabel("edits to reach target")
    ax.set_ylabel("sentences")
    ax.set_title("Residual edit distance per sentence")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_figures(report: MetricsReport, triples, directory) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    return [
        render_metric_bars(report, directory / "metrics.png"),
        render_edit_histogram(list(triples), directory / "residual_edits.png"),
    ]
