"""Figure rendering for study reports.

Renders the two standard views of a study next to its delimited output:
box-plots of the relative errors and a bar-plot of the selected ranks.
Uses the Agg backend so it works headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

ERRORS_FIGURE = "errors_boxplot.png"
RANKS_FIGURE = "rank_histogram.png"


def render_study_figures(report, out_dir) -> list[Path]:
    """Write the error box-plots and rank bar-plot; returns written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    ok = [t for t in report.trials if t.ok]
    if ok:
        fig, ax = plt.subplots(figsize=(5.0, 3.5))
        data = [[t.e_a for t in ok], [t.e_L for t in ok], [t.e_D for t in ok]]
        ax.boxplot(data, tick_labels=[r"$e_a$", r"$e_L$", r"$e_D$"])
        ax.set_yscale("log")
        ax.set_ylabel("relative error")
        ax.set_title(f"m={report.config.m}, r={report.config.r_true}, "
                     f"p={report.config.p}, N={report.config.n}")
        fig.tight_layout()
        path = out_dir / ERRORS_FIGURE
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)

    if report.rank_histogram:
        fig, ax = plt.subplots(figsize=(5.0, 3.5))
        labels = list(report.rank_histogram)
        counts = [report.rank_histogram[k] for k in labels]
        colors = ["tab:green" if k == str(report.config.r_true) else "tab:blue"
                  for k in labels]
        ax.bar(range(len(labels)), counts, color=colors)
        ax.set_xticks(range(len(labels)), labels)
        ax.set_xlabel("selected rank")
        ax.set_ylabel("trials")
        ax.set_title(f"rank selection over {len(report.trials)} trials "
                     f"(true r={report.config.r_true})")
        fig.tight_layout()
        path = out_dir / RANKS_FIGURE
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)

    return written
