"""Dataset model, JSONL serialization, and class-balancing utilities.

File format: one JSON object per line, UTF-8, LF endings. The first line
is a meta record declaring the task:

    {"type": "meta", "task": "classification", "num_classes": 2}
    {"type": "meta", "task": "generation"}

Data lines:

    {"id": "a1", "code": "def f(): ...", "target": 1}
    {"id": "b2", "code": "...", "target": ["return", "x"]}
    {"id": "u3", "code": "..."}                       # unlabeled
    {"id": "p4", "code": "...", "target": 0, "pseudo": true,
     "teacher_loss": 0.41, "iteration": 2}            # pseudo-labeled
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import (
    DuplicateId,
    EmptyInput,
    IoFailure,
    MalformedRecord,
    TargetKindMismatch,
)
from .transforms import Token, tokenize


class TaskKind(Enum):
    CLASSIFICATION = "classification"
    GENERATION = "generation"


@dataclass(frozen=True)
class ClassLabel:
    class_id: int


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple[str, ...]

    def __post_init__(self):
        if not self.tokens:
            raise ValueError("token sequence target must be non-empty")


Target = ClassLabel | TokenSequence


@dataclass(frozen=True)
class Example:
    id: str
    code_text: str
    code_tokens: tuple[Token, ...]
    target: Target


@dataclass(frozen=True)
class UnlabeledExample:
    id: str
    code_text: str
    code_tokens: tuple[Token, ...]


@dataclass(frozen=True)
class PseudoExample:
    base: UnlabeledExample
    pseudo_target: Target
    teacher_loss: float
    iteration: int

    def __post_init__(self):
        if self.teacher_loss < 0:
            raise ValueError("teacher_loss must be nonnegative")
        if self.iteration < 1:
            raise ValueError("iteration must be >= 1")

    @property
    def id(self) -> str:
        return self.base.id

    @property
    def code_tokens(self) -> tuple[Token, ...]:
        return self.base.code_tokens


AnyExample = Example | UnlabeledExample | PseudoExample


@dataclass(frozen=True)
class Dataset:
    kind: TaskKind
    examples: tuple[AnyExample, ...]
    num_classes: int | None = None

    def __post_init__(self):
        seen: set[str] = set()
        for ex in self.examples:
            if ex.id in seen:
                raise DuplicateId(ex.id)
            seen.add(ex.id)
        if self.kind is TaskKind.CLASSIFICATION and self.num_classes is None:
            raise TargetKindMismatch("classification dataset needs num_classes")

    def __len__(self) -> int:
        return len(self.examples)

    def ids(self) -> set[str]:
        return {ex.id for ex in self.examples}


def _check_target(target, kind: TaskKind, num_classes: int | None):
    if kind is TaskKind.CLASSIFICATION:
        if not isinstance(target, ClassLabel):
            raise TargetKindMismatch(f"expected class label, got {target!r}")
        if num_classes is not None and not 0 <= target.class_id < num_classes:
            raise TargetKindMismatch(
                f"class id {target.class_id} outside [0, {num_classes})"
            )
    else:
        if not isinstance(target, TokenSequence):
            raise TargetKindMismatch(f"expected token sequence, got {target!r}")


def _parse_target(raw, kind: TaskKind, num_classes: int | None) -> Target:
    if kind is TaskKind.CLASSIFICATION:
        if not isinstance(raw, int) or isinstance(raw, bool):
            raise TargetKindMismatch(f"classification target must be int: {raw!r}")
        target: Target = ClassLabel(raw)
    else:
        if not isinstance(raw, list) or not all(isinstance(t, str) for t in raw):
            raise TargetKindMismatch(f"generation target must be a token list: {raw!r}")
        if not raw:
            raise TargetKindMismatch("generation target must be non-empty")
        target = TokenSequence(tuple(raw))
    _check_target(target, kind, num_classes)
    return target


def load_dataset(
    path: str | Path, kind: TaskKind, language: str = "python"
) -> Dataset:
    """Parse a JSONL dataset file, tokenizing every code field.

    Rejects duplicate ids and any record whose target does not match
    ``kind``. An empty file yields an empty dataset.
    """
    path = Path(path)
    num_classes: int | None = None
    examples: list[AnyExample] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise MalformedRecord(line_no, str(e)) from e
            if not isinstance(rec, dict):
                raise MalformedRecord(line_no, "record is not an object")
            if rec.get("type") == "meta":
                declared = rec.get("task")
                if declared != kind.value:
                    raise TargetKindMismatch(
                        f"file declares task {declared!r}, expected {kind.value!r}"
                    )
                if kind is TaskKind.CLASSIFICATION:
                    num_classes = rec.get("num_classes")
                    if not isinstance(num_classes, int) or num_classes < 1:
                        raise MalformedRecord(line_no, "meta lacks valid num_classes")
                continue
            if "id" not in rec or "code" not in rec:
                raise MalformedRecord(line_no, "missing 'id' or 'code'")
            ex_id = rec["id"]
            if not isinstance(ex_id, str):
                raise MalformedRecord(line_no, "'id' must be a string")
            if ex_id in seen:
                raise DuplicateId(ex_id)
            seen.add(ex_id)
            try:
                code_tokens = tuple(tokenize(rec["code"], language))
            except EmptyInput as e:
                raise MalformedRecord(line_no, "empty code text") from e
            if "target" not in rec or rec["target"] is None:
                examples.append(UnlabeledExample(ex_id, rec["code"], code_tokens))
                continue
            target = _parse_target(rec["target"], kind, num_classes)
            if rec.get("pseudo"):
                examples.append(
                    PseudoExample(
                        base=UnlabeledExample(ex_id, rec["code"], code_tokens),
                        pseudo_target=target,
                        teacher_loss=float(rec.get("teacher_loss", 0.0)),
                        iteration=int(rec.get("iteration", 1)),
                    )
                )
            else:
                examples.append(Example(ex_id, rec["code"], code_tokens, target))
    if kind is TaskKind.CLASSIFICATION and num_classes is None and examples:
        raise MalformedRecord(0, "classification file has no meta line")
    return Dataset(
        kind=kind,
        examples=tuple(examples),
        num_classes=num_classes if kind is TaskKind.CLASSIFICATION else None,
    )


def _target_to_json(target: Target):
    if isinstance(target, ClassLabel):
        return target.class_id
    return list(target.tokens)


def record_for(ex: AnyExample) -> dict:
    """JSON record for one example, matching the on-disk schema."""
    if isinstance(ex, Example):
        return {"id": ex.id, "code": ex.code_text, "target": _target_to_json(ex.target)}
    if isinstance(ex, UnlabeledExample):
        return {"id": ex.id, "code": ex.code_text}
    return {
        "id": ex.base.id,
        "code": ex.base.code_text,
        "target": _target_to_json(ex.pseudo_target),
        "pseudo": True,
        "teacher_loss": ex.teacher_loss,
        "iteration": ex.iteration,
    }


def save_dataset(ds: Dataset, path: str | Path) -> None:
    """Write a dataset back to JSONL; load_dataset(save_dataset(ds)) == ds."""
    path = Path(path)
    meta: dict = {"type": "meta", "task": ds.kind.value}
    if ds.kind is TaskKind.CLASSIFICATION:
        meta["num_classes"] = ds.num_classes
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(json.dumps(meta, sort_keys=True) + "\n")
            for ex in ds.examples:
                f.write(json.dumps(record_for(ex), sort_keys=True) + "\n")
    except OSError as e:
        raise IoFailure(f"cannot write dataset to {path}: {e}") from e


def downsample_balance(
    selected_per_class: dict[int, list[PseudoExample]], seed: int
) -> list[PseudoExample]:
    """Equalize per-class counts by random down-sampling without replacement.

    Every class present in the map contributes exactly m examples, where m
    is the minimum per-class count over the map's classes. Deterministic
    under ``seed``.
    """
    if not selected_per_class:
        raise EmptyInput("no classes to balance")
    m = min(len(v) for v in selected_per_class.values())
    rng = random.Random(seed)
    out: list[PseudoExample] = []
    for class_id in sorted(selected_per_class):
        group = selected_per_class[class_id]
        out.extend(rng.sample(group, m))
    return out
