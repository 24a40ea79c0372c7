"""Orchestration of the full self-training loop.

Per iteration: pseudo-label the unlabeled pool with the current teacher,
score every pseudo example with the teacher's per-example loss, run
hybrid selection, train a freshly reinitialized student on labeled +
selected data with the noise-tolerant objective, then promote the
student to teacher. The last student is the final model.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

from . import metrics as m
from .adapter import ExternalAdapterModel
from .corpus import (
    AnyExample,
    ClassLabel,
    Dataset,
    Example,
    PseudoExample,
    Target,
    TaskKind,
    TokenSequence,
    UnlabeledExample,
    load_dataset,
)
from .errors import EmptyLabeledSet, TaskMismatch
from .models import (
    BagOfTokensClassifier,
    TokenTranslationModel,
    Vocabulary,
    item_target,
    target_vocabulary_from_dataset,
    vocabulary_from_dataset,
)
from .objective import ObjectiveConfig
from .retrieval import Bm25Index, build_index, levenshtein, ned
from .selection import SelectionConfig, SelectionReport, select
from .transforms import TokenKind, TransformSpec

ABLATIONS = (
    "full",
    "random-selection",
    "no-selection",
    "no-loss-based",
    "no-retrieval-based",
    "ce-instead-of-sce",
    "no-consistency",
)

K_GRID = (10.0, 15.0, 20.0, 25.0, 30.0, 35.0)


@dataclass(frozen=True)
class PipelineConfig:
    task: TaskKind
    labeled_path: str = ""
    unlabeled_path: str = ""
    heldout_path: str = ""
    iterations: int = 5
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    objective: ObjectiveConfig = field(default_factory=ObjectiveConfig)
    transform_ratio: float = 0.15
    model: str = "builtin-classifier"
    epochs: int = 10
    lr: float = 0.5
    seed: int = 0
    language: str = "python"
    positive_class: int = 1
    ablation: str = "full"
    select_best_iteration: bool = False
    adapter_timeout: float = 120.0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.ablation not in ABLATIONS:
            raise ValueError(f"unknown ablation {self.ablation!r}; choose from {ABLATIONS}")

    @classmethod
    def from_json(cls, path: str | Path) -> "PipelineConfig":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        raw = dict(raw)
        raw["task"] = TaskKind(raw["task"])
        if "selection" in raw:
            raw["selection"] = SelectionConfig(**raw["selection"])
        if "objective" in raw:
            raw["objective"] = ObjectiveConfig(**raw["objective"])
        return cls(**raw)

    def to_dict(self) -> dict:
        return {
            "task": self.task.value,
            "labeled_path": self.labeled_path,
            "unlabeled_path": self.unlabeled_path,
            "heldout_path": self.heldout_path,
            "iterations": self.iterations,
            "selection": {
                "t": self.selection.t,
                "top_k_percent": self.selection.top_k_percent,
                "per_class": self.selection.per_class,
            },
            "objective": {
                "mu": self.objective.mu,
                "log_zero_clip": self.objective.log_zero_clip,
                "use_reverse_term": self.objective.use_reverse_term,
            },
            "transform_ratio": self.transform_ratio,
            "model": self.model,
            "epochs": self.epochs,
            "lr": self.lr,
            "seed": self.seed,
            "language": self.language,
            "positive_class": self.positive_class,
            "ablation": self.ablation,
            "select_best_iteration": self.select_best_iteration,
        }


@dataclass(frozen=True)
class IterationReport:
    iteration: int
    selected_size: int
    retrieval_accept_count: int
    loss_accept_count: int
    heldout_metrics: dict
    mean_ned_selected: float | None
    mean_ned_all: float | None

    def to_json(self) -> dict:
        return {
            "iteration": self.iteration,
            "selected_size": self.selected_size,
            "retrieval_accept_count": self.retrieval_accept_count,
            "loss_accept_count": self.loss_accept_count,
            "heldout_metrics": dict(self.heldout_metrics),
            "mean_ned_selected": self.mean_ned_selected,
            "mean_ned_all": self.mean_ned_all,
        }


@dataclass
class RunResult:
    config: PipelineConfig
    reports: list[IterationReport]
    selection_reports: list[SelectionReport]
    final_model: object
    best_iteration: int

    def to_json(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "best_iteration": self.best_iteration,
            "iterations": [r.to_json() for r in self.reports],
        }


def _iter_seed(global_seed: int, iteration: int, label: str = "iter") -> int:
    digest = hashlib.blake2b(
        f"{global_seed}|{label}|{iteration}".encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big") % (2**31)


def _split_unlabeled(ds: Dataset) -> tuple[list[UnlabeledExample], dict[str, Target]]:
    """Separate simulation gold (if the file carries targets) from the pool."""
    pool: list[UnlabeledExample] = []
    gold: dict[str, Target] = {}
    for ex in ds.examples:
        if isinstance(ex, Example):
            pool.append(UnlabeledExample(ex.id, ex.code_text, ex.code_tokens))
            gold[ex.id] = ex.target
        elif isinstance(ex, UnlabeledExample):
            pool.append(ex)
        else:
            pool.append(ex.base)
    return pool, gold


def build_model(cfg: PipelineConfig, labeled: Dataset):
    """Instantiate the configured model with vocabularies from labeled data."""
    if cfg.model == "builtin-classifier":
        if cfg.task is not TaskKind.CLASSIFICATION:
            raise TaskMismatch("builtin-classifier requires a classification task")
        vocab = vocabulary_from_dataset(labeled)
        return BagOfTokensClassifier(vocab, labeled.num_classes, cfg.seed)
    if cfg.model == "builtin-translator":
        if cfg.task is not TaskKind.GENERATION:
            raise TaskMismatch("builtin-translator requires a generation task")
        vocab_in = vocabulary_from_dataset(labeled)
        vocab_out = target_vocabulary_from_dataset(labeled)
        return TokenTranslationModel(vocab_in, vocab_out, cfg.seed)
    if cfg.model.startswith("adapter:"):
        return ExternalAdapterModel(
            cfg.model.split(":", 1)[1],
            cfg.task,
            labeled.num_classes,
            timeout=cfg.adapter_timeout,
            seed=cfg.seed,
        )
    raise ValueError(f"unknown model spec {cfg.model!r}")


def base_transform_spec(cfg: PipelineConfig, labeled: Dataset) -> TransformSpec:
    all_tokens = sorted({t.text for ex in labeled.examples for t in ex.code_tokens})
    ident_tokens = sorted(
        {
            t.text
            for ex in labeled.examples
            for t in ex.code_tokens
            if t.kind == TokenKind.IDENTIFIER
        }
    )
    return TransformSpec(
        ratio=cfg.transform_ratio,
        seed=cfg.seed,
        replacement_vocab=tuple(all_tokens),
        identifier_vocab=tuple(ident_tokens),
    )


def predict_all(model, examples: Sequence[AnyExample]) -> dict[str, Target]:
    if isinstance(model, ExternalAdapterModel):
        return model.predict_batch(examples)
    return {ex.id: model.predict(ex.code_tokens)[0] for ex in examples}


def score_all(model, pseudo: Sequence[PseudoExample], obj_cfg: ObjectiveConfig) -> dict[str, float]:
    if isinstance(model, ExternalAdapterModel):
        return model.score_batch(pseudo)
    return {
        p.id: model.per_example_loss(
            p.base.code_tokens,
            p.pseudo_target,
            clip=obj_cfg.log_zero_clip,
            use_reverse_term=obj_cfg.use_reverse_term,
        )
        for p in pseudo
    }


def _effective_configs(cfg: PipelineConfig) -> tuple[SelectionConfig, ObjectiveConfig]:
    sel, obj = cfg.selection, cfg.objective
    if cfg.ablation == "no-selection":
        sel = replace(sel, top_k_percent=100.0)
    if cfg.ablation == "ce-instead-of-sce":
        obj = replace(obj, use_reverse_term=False)
    if cfg.ablation == "no-consistency":
        obj = replace(obj, mu=0.0)
    return sel, obj


def _select_phase(
    cfg: PipelineConfig,
    sel_cfg: SelectionConfig,
    pseudo: list[PseudoExample],
    labeled: Dataset,
    index: Bm25Index,
    iteration: int,
) -> tuple[list[PseudoExample], SelectionReport]:
    balance_seed = _iter_seed(cfg.seed, iteration, "balance")
    kwargs: dict = {}
    if cfg.ablation in ("no-selection", "no-retrieval-based"):
        kwargs["disable_retrieval"] = True
    if cfg.ablation == "no-loss-based":
        kwargs["disable_loss"] = True
    selected, report = select(
        pseudo, labeled, index, sel_cfg, balance_seed=balance_seed, **kwargs
    )
    if cfg.ablation == "random-selection":
        # Size-matched control: keep |S| but pick members uniformly.
        rng = random.Random(_iter_seed(cfg.seed, iteration, "random-sel"))
        selected = rng.sample(pseudo, len(selected))
    return selected, report


def _mean_ned_to_gold(
    pseudo: Sequence[PseudoExample], gold: dict[str, Target]
) -> float | None:
    values = []
    for p in pseudo:
        g = gold.get(p.id)
        if g is None:
            continue
        values.append(ned(p.pseudo_target, g))
    if not values:
        return None
    return sum(values) / len(values)


def evaluate(model, heldout: Dataset, cfg: PipelineConfig) -> m.EvalResult:
    """Held-out metrics: P/R/F1 + accuracy for classification; EM, LCS,
    token edit distance, BLEU-4, ROUGE-L for generation."""
    if len(heldout) == 0:
        raise TaskMismatch("held-out dataset is empty")
    if heldout.kind is not cfg.task:
        raise TaskMismatch("held-out task kind does not match the pipeline task")
    predictions = predict_all(model, heldout.examples)
    if cfg.task is TaskKind.CLASSIFICATION:
        preds = [predictions[ex.id].class_id for ex in heldout.examples]
        golds = [item_target(ex).class_id for ex in heldout.examples]
        precision, recall, f1 = m.classification_prf(preds, golds, cfg.positive_class)
        accuracy = sum(p == g for p, g in zip(preds, golds)) / len(preds)
        result = {
            "accuracy": accuracy,
            "precision": precision,
            "recall": recall,
            "f1": f1,
        }
    else:
        em = []
        lcs = []
        ed = []
        bleu = []
        rouge = []
        for ex in heldout.examples:
            pred = list(predictions[ex.id].tokens)
            gold = list(item_target(ex).tokens)
            em.append(m.exact_match(pred, gold))
            lcs.append(m.lcs_ratio(pred, gold))
            ed.append(levenshtein(pred, gold))
            bleu.append(m.bleu4(pred, gold))
            rouge.append(m.rouge_l(pred, gold))
        n = len(em)
        result = {
            "exact_match": sum(em) / n,
            "lcs_ratio": sum(lcs) / n,
            "edit_distance_tokens": sum(ed) / n,
            "bleu4": sum(bleu) / n,
            "rouge_l": sum(rouge) / n,
        }
    return m.EvalResult(metrics=result, n_examples=len(heldout))


def _primary_metric(task: TaskKind) -> str:
    return "accuracy" if task is TaskKind.CLASSIFICATION else "bleu4"


def load_run_data(cfg: PipelineConfig):
    labeled = load_dataset(cfg.labeled_path, cfg.task, cfg.language)
    unlabeled = load_dataset(cfg.unlabeled_path, cfg.task, cfg.language)
    heldout = load_dataset(cfg.heldout_path, cfg.task, cfg.language)
    return labeled, unlabeled, heldout


def run(
    cfg: PipelineConfig,
    data: tuple[Dataset, Dataset, Dataset] | None = None,
) -> RunResult:
    """Execute the full loop, returning the final model and per-iteration
    reports. Deterministic under cfg.seed."""
    labeled, unlabeled_ds, heldout = data if data is not None else load_run_data(cfg)
    if len(labeled) == 0:
        raise EmptyLabeledSet("pipeline requires a non-empty labeled dataset")
    pool, gold = _split_unlabeled(unlabeled_ds)
    sel_cfg, obj_cfg = _effective_configs(cfg)

    transform = base_transform_spec(cfg, labeled)
    index = build_index(labeled)
    labeled_items = list(labeled.examples)

    teacher = build_model(cfg, labeled)
    teacher = teacher.train(
        labeled_items, obj_cfg, transform, cfg.epochs, cfg.lr,
        _iter_seed(cfg.seed, 0, "teacher"),
    )

    reports: list[IterationReport] = []
    selection_reports: list[SelectionReport] = []
    models: list[object] = []
    for iteration in range(1, cfg.iterations + 1):
        pseudo_targets = predict_all(teacher, pool)
        pseudo = [
            PseudoExample(u, pseudo_targets[u.id], 0.0, iteration) for u in pool
        ]
        losses = score_all(teacher, pseudo, obj_cfg)
        pseudo = [
            PseudoExample(p.base, p.pseudo_target, losses[p.id], iteration)
            for p in pseudo
        ]

        selected, sel_report = _select_phase(
            cfg, sel_cfg, pseudo, labeled, index, iteration
        )
        selection_reports.append(sel_report)

        student = teacher.reinitialize(_iter_seed(cfg.seed, iteration, "reinit"))
        student = student.train(
            labeled_items + selected,
            obj_cfg,
            transform,
            cfg.epochs,
            cfg.lr,
            _iter_seed(cfg.seed, iteration, "student"),
        )

        heldout_metrics = evaluate(student, heldout, cfg)
        reports.append(
            IterationReport(
                iteration=iteration,
                selected_size=len(selected),
                retrieval_accept_count=sel_report.retrieval_accept_count,
                loss_accept_count=sel_report.loss_accept_count,
                heldout_metrics=heldout_metrics.metrics,
                mean_ned_selected=_mean_ned_to_gold(selected, gold),
                mean_ned_all=_mean_ned_to_gold(pseudo, gold),
            )
        )
        models.append(student)
        teacher = student

    key = _primary_metric(cfg.task)
    best = max(range(len(reports)), key=lambda i: reports[i].heldout_metrics[key])
    final_idx = best if cfg.select_best_iteration else len(models) - 1
    return RunResult(
        config=cfg,
        reports=reports,
        selection_reports=selection_reports,
        final_model=models[final_idx],
        best_iteration=best + 1,
    )


def compare_baselines(
    cfg: PipelineConfig,
    data: tuple[Dataset, Dataset, Dataset] | None = None,
    variants: Sequence[str] = ABLATIONS,
) -> dict[str, dict]:
    """Run the pipeline under each ablation with the same seed schedule.

    Returns a table: variant name -> final-iteration held-out metrics and
    per-iteration selected sizes.
    """
    if data is None:
        data = load_run_data(cfg)
    table: dict[str, dict] = {}
    for variant in variants:
        result = run(replace(cfg, ablation=variant), data=data)
        final = result.reports[-1]
        table[variant] = {
            "heldout_metrics": final.heldout_metrics,
            "selected_sizes": [r.selected_size for r in result.reports],
            "mean_ned_selected": final.mean_ned_selected,
            "mean_ned_all": final.mean_ned_all,
        }
    return table


def sweep_k(
    cfg: PipelineConfig,
    data: tuple[Dataset, Dataset, Dataset] | None = None,
    grid: Sequence[float] = K_GRID,
) -> dict[float, dict]:
    """Serially run the documented K grid, reporting final metrics per K."""
    if data is None:
        data = load_run_data(cfg)
    table: dict[float, dict] = {}
    for k in grid:
        variant = replace(cfg, selection=replace(cfg.selection, top_k_percent=k))
        result = run(variant, data=data)
        table[k] = {
            "heldout_metrics": result.reports[-1].heldout_metrics,
            "selected_sizes": [r.selected_size for r in result.reports],
        }
    return table
