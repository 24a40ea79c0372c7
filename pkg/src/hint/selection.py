"""Hybrid pseudo-labeled data selection.

For each pseudo-labeled example, retrieve the most similar labeled
example by BM-25 and compare codes and labels by normalized edit
distance: close code + close label accepts, close code + far label
rejects, anything else falls back to the teacher-loss top-K filter.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .corpus import (
    ClassLabel,
    Dataset,
    Example,
    PseudoExample,
    TaskKind,
    downsample_balance,
)
from .errors import EmptyInput, IndexMismatch
from .retrieval import Bm25Index, ned, query


@dataclass(frozen=True)
class SelectionConfig:
    t: float = 0.4
    top_k_percent: float = 25.0
    per_class: bool = False

    def __post_init__(self):
        if not 0.0 < self.t < 1.0:
            raise ValueError(f"t must lie in (0, 1), got {self.t}")
        if not 0.0 < self.top_k_percent <= 100.0:
            raise ValueError(
                f"top_k_percent must lie in (0, 100], got {self.top_k_percent}"
            )


class Verdict(Enum):
    ACCEPT = "Accept"
    REJECT = "Reject"


class Reason(Enum):
    RETRIEVAL_MATCH = "RetrievalMatch"
    RETRIEVAL_MISMATCH = "RetrievalMismatch"
    LOW_LOSS = "LowLoss"
    NOT_IN_TOP_K = "NotInTopK"
    NO_RETRIEVAL_SIGNAL_NOT_IN_TOP_K = "NoRetrievalSignal+NotInTopK"


@dataclass(frozen=True)
class SelectionDecision:
    example_id: str
    verdict: Verdict
    reason: Reason

    def to_json(self) -> dict:
        return {
            "example_id": self.example_id,
            "verdict": self.verdict.value,
            "reason": self.reason.value,
        }


@dataclass(frozen=True)
class SelectionReport:
    decisions: tuple[SelectionDecision, ...]
    selected_count: int
    retrieval_accept_count: int
    loss_accept_count: int
    mean_teacher_loss_selected: float

    def write_jsonl(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for d in self.decisions:
                f.write(json.dumps(d.to_json(), sort_keys=True) + "\n")


def loss_threshold(pseudo: list[PseudoExample], top_k_percent: float) -> float:
    """Loss value bounding the lowest-loss ceil(K% * n) examples.

    Ties at the boundary value are included, so the membership test is
    simply ``teacher_loss <= threshold``.
    """
    if not pseudo:
        raise EmptyInput("loss_threshold needs at least one pseudo example")
    losses = sorted(p.teacher_loss for p in pseudo)
    k = math.ceil(top_k_percent / 100.0 * len(losses))
    return losses[k - 1]


def _decide_group(
    group: list[PseudoExample],
    labeled_by_id: dict[str, Example],
    index: Bm25Index,
    cfg: SelectionConfig,
    disable_retrieval: bool = False,
    disable_loss: bool = False,
) -> dict[str, SelectionDecision]:
    threshold = loss_threshold(group, cfg.top_k_percent)
    decisions: dict[str, SelectionDecision] = {}
    for p in group:
        code_similar = False
        label_far = label_near = False
        if not disable_retrieval:
            hit = query(index, p.base.code_tokens, top_n=1)[0]
            neighbor = labeled_by_id[hit.example_id]
            ned_code = ned(
                [t.text for t in p.base.code_tokens],
                [t.text for t in neighbor.code_tokens],
            )
            ned_label = ned(p.pseudo_target, neighbor.target)
            code_similar = ned_code <= cfg.t
            label_near = ned_label <= cfg.t
            label_far = ned_label >= 1.0 - cfg.t
        if code_similar and label_near:
            d = SelectionDecision(p.id, Verdict.ACCEPT, Reason.RETRIEVAL_MATCH)
        elif code_similar and label_far:
            d = SelectionDecision(p.id, Verdict.REJECT, Reason.RETRIEVAL_MISMATCH)
        elif not disable_loss and p.teacher_loss <= threshold:
            d = SelectionDecision(p.id, Verdict.ACCEPT, Reason.LOW_LOSS)
        elif code_similar:
            d = SelectionDecision(p.id, Verdict.REJECT, Reason.NOT_IN_TOP_K)
        else:
            d = SelectionDecision(
                p.id, Verdict.REJECT, Reason.NO_RETRIEVAL_SIGNAL_NOT_IN_TOP_K
            )
        decisions[p.id] = d
    return decisions


def select(
    pseudo: list[PseudoExample],
    labeled: Dataset,
    index: Bm25Index,
    cfg: SelectionConfig,
    balance_seed: int = 0,
    disable_retrieval: bool = False,
    disable_loss: bool = False,
) -> tuple[list[PseudoExample], SelectionReport]:
    """Run hybrid selection, returning the kept examples and a full report.

    With ``per_class`` set (classification), the procedure runs within
    each pseudo-label class independently and the accepted examples are
    then balanced by random down-sampling. Decisions are reported in the
    input order of ``pseudo``.
    """
    if not pseudo or len(labeled) == 0:
        raise EmptyInput("select requires non-empty pseudo and labeled sets")
    labeled_by_id = {ex.id: ex for ex in labeled.examples}
    if not set(index.doc_ids) <= set(labeled_by_id):
        raise IndexMismatch("index document ids are not a subset of labeled ids")

    kwargs = dict(
        labeled_by_id=labeled_by_id,
        index=index,
        cfg=cfg,
        disable_retrieval=disable_retrieval,
        disable_loss=disable_loss,
    )
    per_class = cfg.per_class and labeled.kind is TaskKind.CLASSIFICATION
    if per_class:
        groups: dict[int, list[PseudoExample]] = {}
        for p in pseudo:
            assert isinstance(p.pseudo_target, ClassLabel)
            groups.setdefault(p.pseudo_target.class_id, []).append(p)
        decisions: dict[str, SelectionDecision] = {}
        for class_id in sorted(groups):
            decisions.update(_decide_group(groups[class_id], **kwargs))
    else:
        decisions = _decide_group(pseudo, **kwargs)

    ordered = tuple(decisions[p.id] for p in pseudo)
    accepted = [p for p in pseudo if decisions[p.id].verdict is Verdict.ACCEPT]
    if per_class and accepted:
        accepted_per_class: dict[int, list[PseudoExample]] = {}
        for p in accepted:
            accepted_per_class.setdefault(p.pseudo_target.class_id, []).append(p)
        selected = downsample_balance(accepted_per_class, balance_seed)
    else:
        selected = accepted

    retrieval_accepts = sum(
        1 for d in ordered if d.reason is Reason.RETRIEVAL_MATCH
    )
    loss_accepts = sum(1 for d in ordered if d.reason is Reason.LOW_LOSS)
    mean_loss = (
        sum(p.teacher_loss for p in selected) / len(selected) if selected else 0.0
    )
    report = SelectionReport(
        decisions=ordered,
        selected_count=len(selected),
        retrieval_accept_count=retrieval_accepts,
        loss_accept_count=loss_accepts,
        mean_teacher_loss_selected=mean_loss,
    )
    return selected, report
