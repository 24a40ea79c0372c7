"""Run-report rendering: JSON, delimited per-iteration table, figures."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .pipeline import RunResult


def write_run_report(result: RunResult, out_dir: str | Path) -> dict[str, Path]:
    """Write report.json, iterations.csv, and figures/ under ``out_dir``.

    Output content is a pure function of the run result, so identical
    configs and seeds reproduce the files byte for byte.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}

    report_path = out / "report.json"
    with open(report_path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(result.to_json(), f, sort_keys=True, indent=2)
        f.write("\n")
    paths["report"] = report_path

    metric_names = sorted(result.reports[0].heldout_metrics)
    csv_path = out / "iterations.csv"
    with open(csv_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(
            ["iteration", "selected_size", "retrieval_accepts", "loss_accepts",
             "mean_ned_selected", "mean_ned_all", *metric_names]
        )
        for r in result.reports:
            writer.writerow(
                [
                    r.iteration,
                    r.selected_size,
                    r.retrieval_accept_count,
                    r.loss_accept_count,
                    "" if r.mean_ned_selected is None else f"{r.mean_ned_selected:.6f}",
                    "" if r.mean_ned_all is None else f"{r.mean_ned_all:.6f}",
                    *(f"{r.heldout_metrics[k]:.6f}" for k in metric_names),
                ]
            )
    paths["iterations"] = csv_path

    fig_dir = out / "figures"
    fig_dir.mkdir(exist_ok=True)
    iters = [r.iteration for r in result.reports]

    fig, ax = plt.subplots(figsize=(6, 4))
    for name in metric_names:
        ax.plot(iters, [r.heldout_metrics[name] for r in result.reports],
                marker="o", label=name)
    ax.set_xlabel("iteration")
    ax.set_ylabel("held-out metric")
    ax.set_xticks(iters)
    ax.legend(fontsize=8)
    fig.tight_layout()
    metrics_fig = fig_dir / "heldout_metrics.png"
    fig.savefig(metrics_fig, dpi=120)
    plt.close(fig)
    paths["metrics_figure"] = metrics_fig

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar([i - 0.2 for i in iters],
           [r.retrieval_accept_count for r in result.reports],
           width=0.4, label="retrieval accepts")
    ax.bar([i + 0.2 for i in iters],
           [r.loss_accept_count for r in result.reports],
           width=0.4, label="loss accepts")
    ax.plot(iters, [r.selected_size for r in result.reports],
            color="black", marker="s", label="selected size")
    ax.set_xlabel("iteration")
    ax.set_ylabel("examples")
    ax.set_xticks(iters)
    ax.legend(fontsize=8)
    fig.tight_layout()
    selection_fig = fig_dir / "selection_counts.png"
    fig.savefig(selection_fig, dpi=120)
    plt.close(fig)
    paths["selection_figure"] = selection_fig

    if any(r.mean_ned_selected is not None for r in result.reports):
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(iters, [r.mean_ned_all for r in result.reports],
                marker="o", label="all pseudo labels")
        ax.plot(iters, [r.mean_ned_selected for r in result.reports],
                marker="o", label="selected")
        ax.set_xlabel("iteration")
        ax.set_ylabel("mean NED to gold")
        ax.set_xticks(iters)
        ax.legend(fontsize=8)
        fig.tight_layout()
        ned_fig = fig_dir / "pseudo_label_quality.png"
        fig.savefig(ned_fig, dpi=120)
        plt.close(fig)
        paths["quality_figure"] = ned_fig

    return paths


def write_comparison_table(table: dict[str, dict], out_dir: str | Path) -> Path:
    """Write the ablation comparison as JSON plus a CSV of final metrics."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    json_path = out / "comparison.json"
    with open(json_path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(table, f, sort_keys=True, indent=2)
        f.write("\n")

    variants = list(table)
    metric_names = sorted(table[variants[0]]["heldout_metrics"])
    with open(out / "comparison.csv", "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["variant", *metric_names])
        for v in variants:
            writer.writerow(
                [v, *(f"{table[v]['heldout_metrics'][k]:.6f}" for k in metric_names)]
            )
    return json_path
