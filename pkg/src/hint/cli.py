"""Command-line entry point: ``hint run`` and friends."""

from __future__ import annotations

import json
from dataclasses import replace
from pathlib import Path

import click

from .corpus import TaskKind
from .objective import ObjectiveConfig
from .pipeline import (
    ABLATIONS,
    PipelineConfig,
    compare_baselines,
    load_run_data,
    run,
    sweep_k,
)
from .report import write_comparison_table, write_run_report
from .selection import SelectionConfig


def _build_config(config, **overrides) -> PipelineConfig:
    if config:
        cfg = PipelineConfig.from_json(config)
    else:
        if overrides.get("task") is None:
            raise click.UsageError("provide --config or at least --task/--labeled/...")
        cfg = PipelineConfig(task=TaskKind(overrides["task"]))

    sel = cfg.selection
    if overrides.get("top_k") is not None:
        sel = replace(sel, top_k_percent=overrides["top_k"])
    if overrides.get("ned_threshold") is not None:
        sel = replace(sel, t=overrides["ned_threshold"])

    obj = cfg.objective
    if overrides.get("mu") is not None:
        obj = replace(obj, mu=overrides["mu"])
    if overrides.get("clip") is not None:
        obj = replace(obj, log_zero_clip=overrides["clip"])

    direct = {
        "task": ("task", lambda v: TaskKind(v)),
        "labeled": ("labeled_path", str),
        "unlabeled": ("unlabeled_path", str),
        "heldout": ("heldout_path", str),
        "iterations": ("iterations", int),
        "transform_ratio": ("transform_ratio", float),
        "epochs": ("epochs", int),
        "lr": ("lr", float),
        "seed": ("seed", int),
        "model": ("model", str),
        "ablation": ("ablation", str),
    }
    changes: dict = {"selection": sel, "objective": obj}
    for opt, (field_name, conv) in direct.items():
        if overrides.get(opt) is not None:
            changes[field_name] = conv(overrides[opt])
    if overrides.get("select_best_iteration"):
        changes["select_best_iteration"] = True
    return replace(cfg, **changes)


_shared_options = [
    click.option("--config", type=click.Path(exists=True), default=None,
                 help="JSON config file mirroring PipelineConfig."),
    click.option("--task", type=click.Choice(["classification", "generation"]), default=None),
    click.option("--labeled", type=click.Path(exists=True), default=None),
    click.option("--unlabeled", type=click.Path(exists=True), default=None),
    click.option("--heldout", type=click.Path(exists=True), default=None),
    click.option("--iterations", type=int, default=None),
    click.option("--top-k", type=float, default=None, help="Loss-selection K percent."),
    click.option("--ned-threshold", type=float, default=None, help="NED threshold t."),
    click.option("--mu", type=float, default=None, help="Consistency weight."),
    click.option("--clip", type=float, default=None, help="Log-zero clip for RCE."),
    click.option("--transform-ratio", type=float, default=None),
    click.option("--epochs", type=int, default=None),
    click.option("--lr", type=float, default=None),
    click.option("--seed", type=int, default=None),
    click.option("--model", type=str, default=None,
                 help="builtin-classifier | builtin-translator | adapter:<exec>"),
    click.option("--ablation", type=click.Choice(ABLATIONS), default=None),
    click.option("--select-best-iteration", is_flag=True, default=False),
    click.option("--out", type=click.Path(), default="hint-out",
                 help="Output directory for reports and figures."),
]


def _with_shared_options(fn):
    for opt in reversed(_shared_options):
        fn = opt(fn)
    return fn


@click.group()
def main():
    """Self-training with hybrid pseudo-label selection and noise-tolerant training."""


@main.command("run")
@_with_shared_options
@click.option("--emit-selection-report", type=click.Path(), default=None,
              help="Write per-example selection decisions (JSONL) here.")
@click.option("--sweep-k", "do_sweep_k", is_flag=True, default=False,
              help="Run the documented K grid serially instead of a single run.")
def run_cmd(out, emit_selection_report, do_sweep_k, **overrides):
    """Run the full self-training pipeline."""
    cfg = _build_config(**overrides)
    out_dir = Path(out)
    if do_sweep_k:
        table = sweep_k(cfg)
        out_dir.mkdir(parents=True, exist_ok=True)
        sweep_path = out_dir / "sweep_k.json"
        with open(sweep_path, "w", encoding="utf-8", newline="\n") as f:
            json.dump({str(k): v for k, v in table.items()}, f, sort_keys=True, indent=2)
            f.write("\n")
        click.echo(f"wrote {sweep_path}")
        return
    result = run(cfg)
    paths = write_run_report(result, out_dir)
    if emit_selection_report:
        # Decisions of the final iteration's selection phase.
        result.selection_reports[-1].write_jsonl(emit_selection_report)
        click.echo(f"wrote {emit_selection_report}")
    final = result.reports[-1].heldout_metrics
    for name in sorted(final):
        click.echo(f"{name}: {final[name]:.4f}")
    click.echo(f"wrote {paths['report']}")


@main.command("compare")
@_with_shared_options
def compare_cmd(out, **overrides):
    """Run the ablation grid (full, random-selection, no-selection, ...)."""
    cfg = _build_config(**overrides)
    data = load_run_data(cfg)
    table = compare_baselines(cfg, data=data)
    path = write_comparison_table(table, out)
    for variant, row in table.items():
        metrics = " ".join(
            f"{k}={v:.4f}" for k, v in sorted(row["heldout_metrics"].items())
        )
        click.echo(f"{variant}: {metrics}")
    click.echo(f"wrote {path}")


if __name__ == "__main__":
    main()
