"""Self-training for code tasks: hybrid pseudo-label selection plus
noise-tolerant training, iterated over teacher/student rounds."""

from .corpus import (
    ClassLabel,
    Dataset,
    Example,
    PseudoExample,
    TaskKind,
    TokenSequence,
    UnlabeledExample,
    downsample_balance,
    load_dataset,
    save_dataset,
)
from .objective import ObjectiveConfig
from .pipeline import PipelineConfig, compare_baselines, evaluate, run
from .retrieval import build_index, ned, query
from .selection import SelectionConfig, loss_threshold, select
from .transforms import (
    TransformKind,
    TransformSpec,
    apply_transform,
    pick_transform,
    tokenize,
)

__all__ = [
    "ClassLabel",
    "Dataset",
    "Example",
    "ObjectiveConfig",
    "PipelineConfig",
    "PseudoExample",
    "SelectionConfig",
    "TaskKind",
    "TokenSequence",
    "TransformKind",
    "TransformSpec",
    "UnlabeledExample",
    "apply_transform",
    "build_index",
    "compare_baselines",
    "downsample_balance",
    "evaluate",
    "load_dataset",
    "loss_threshold",
    "ned",
    "pick_transform",
    "query",
    "run",
    "save_dataset",
    "select",
    "tokenize",
]
