"""Evaluation metrics: EM, LCS ratio, P/R/F1, BLEU-4, ROUGE-L.

All sequence metrics operate on token lists. Edit distance reuses the
Levenshtein kernel from the retrieval module (token-level unit).
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import EmptyGold, EmptyInput, LengthMismatch

DEFAULT_ROUGE_BETA = 1.2


@dataclass(frozen=True)
class EvalResult:
    metrics: dict
    n_examples: int

    def __post_init__(self):
        if self.n_examples < 1:
            raise EmptyInput("EvalResult needs at least one example")

    def to_json(self) -> dict:
        return {"metrics": dict(self.metrics), "n_examples": self.n_examples}

    def write_json(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(self.to_json(), f, sort_keys=True, indent=2)
            f.write("\n")


def exact_match(pred: Sequence[str], gold: Sequence[str]) -> int:
    return int(tuple(pred) == tuple(gold))


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def lcs_ratio(pred: Sequence[str], gold: Sequence[str]) -> float:
    if not gold:
        raise EmptyGold("LCS ratio needs a non-empty gold sequence")
    return lcs_length(pred, gold) / len(gold)


def classification_prf(
    preds: Sequence[int], golds: Sequence[int], positive_class: int
) -> tuple[float, float, float]:
    """Precision, recall, F1 for one positive class; 0 when undefined."""
    if len(preds) != len(golds):
        raise LengthMismatch(f"{len(preds)} preds vs {len(golds)} golds")
    tp = sum(1 for p, g in zip(preds, golds) if p == positive_class and g == positive_class)
    fp = sum(1 for p, g in zip(preds, golds) if p == positive_class and g != positive_class)
    fn = sum(1 for p, g in zip(preds, golds) if p != positive_class and g == positive_class)
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def _ngram_counts(seq: Sequence[str], n: int) -> Counter:
    return Counter(tuple(seq[i : i + n]) for i in range(len(seq) - n + 1))


def bleu4(pred: Sequence[str], gold: Sequence[str]) -> float:
    """Sentence BLEU up to 4-grams with add-one smoothed precisions.

    Brevity penalty exp(1 - |gold|/|pred|) applies when the prediction is
    shorter than the reference; an empty prediction scores 0.
    """
    pred, gold = list(pred), list(gold)
    if not pred:
        return 0.0
    log_prec_sum = 0.0
    for n in range(1, 5):
        pred_ngrams = _ngram_counts(pred, n)
        gold_ngrams = _ngram_counts(gold, n)
        overlap = sum(min(c, gold_ngrams[g]) for g, c in pred_ngrams.items())
        total = max(sum(pred_ngrams.values()), 0)
        # Add-one smoothing keeps zero-overlap orders from nulling the score.
        log_prec_sum += math.log((overlap + 1) / (total + 1))
    bp = 1.0 if len(pred) >= len(gold) else math.exp(1.0 - len(gold) / len(pred))
    return bp * math.exp(log_prec_sum / 4.0)


def rouge_l(
    pred: Sequence[str], gold: Sequence[str], beta: float = DEFAULT_ROUGE_BETA
) -> float:
    """LCS F-measure with recall weighted by beta."""
    if not pred or not gold:
        raise EmptyInput("ROUGE-L needs non-empty sequences")
    lcs = lcs_length(pred, gold)
    if lcs == 0:
        return 0.0
    p = lcs / len(pred)
    r = lcs / len(gold)
    return (1 + beta**2) * p * r / (r + beta**2 * p)
