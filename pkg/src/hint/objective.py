"""Noise-tolerant training objective.

Losses operate on probability vectors ("distributions"): cross entropy,
reverse cross entropy with a fixed clip for log 0, their sum (symmetric
cross entropy), a symmetric-KL consistency term between the predictions
on an input and its transformed variant, and the combined objective.
Generation targets take the per-token mean of each term.

Logit-space gradients for the built-in linear models live here too, so a
single module owns both the value and derivative of every term.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidDistribution, LengthMismatch, ShapeMismatch

PROB_FLOOR = 1e-12
DEFAULT_CLIP = -4.0


@dataclass(frozen=True)
class ObjectiveConfig:
    """Hyperparameters of the combined objective.

    ``use_reverse_term=False`` degrades SCE to plain CE (the ablation
    baseline); ``mu=0`` switches off consistency regularization.
    """

    mu: float = 0.5
    log_zero_clip: float = DEFAULT_CLIP
    use_reverse_term: bool = True

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("mu must be >= 0")
        if not (self.log_zero_clip < 0 and np.isfinite(self.log_zero_clip)):
            raise ValueError("log_zero_clip must be negative and finite")


def validate_distribution(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.ndim != 1 or q.size == 0:
        raise InvalidDistribution(f"expected a 1-D probability vector, got shape {q.shape}")
    if np.any(q < 0) or abs(q.sum() - 1.0) > 1e-9:
        raise InvalidDistribution(f"probabilities must be >= 0 and sum to 1: {q}")
    return q


def one_hot(class_id: int, n: int) -> np.ndarray:
    if not 0 <= class_id < n:
        raise InvalidDistribution(f"class id {class_id} outside [0, {n})")
    p = np.zeros(n)
    p[class_id] = 1.0
    return p


def _gold_index(p: np.ndarray) -> int:
    idx = int(np.argmax(p))
    if p[idx] != 1.0 or p.sum() != 1.0:
        raise InvalidDistribution("expected a one-hot label distribution")
    return idx


def ce_loss(p: np.ndarray, q: np.ndarray) -> float:
    """Cross entropy -sum_c p(c) ln q(c), with q floored at 1e-12."""
    p = validate_distribution(p)
    q = validate_distribution(q)
    if p.shape != q.shape:
        raise ShapeMismatch(f"{p.shape} vs {q.shape}")
    gold = _gold_index(p)
    return float(-np.log(max(q[gold], PROB_FLOOR)))


def rce_loss(p: np.ndarray, q: np.ndarray, clip: float = DEFAULT_CLIP) -> float:
    """Reverse cross entropy with log 0 replaced by ``clip``.

    The gold class contributes log 1 = 0 and every other class the same
    clip constant, which collapses to -clip * (1 - q(gold)).
    """
    p = validate_distribution(p)
    q = validate_distribution(q)
    if p.shape != q.shape:
        raise ShapeMismatch(f"{p.shape} vs {q.shape}")
    gold = _gold_index(p)
    return float(-clip * (1.0 - q[gold]))


def sce_loss(
    p: np.ndarray,
    q: np.ndarray,
    clip: float = DEFAULT_CLIP,
    use_reverse_term: bool = True,
) -> float:
    """Symmetric cross entropy: CE + RCE against a one-hot label."""
    loss = ce_loss(p, q)
    if use_reverse_term:
        loss += rce_loss(p, q, clip)
    return loss


def sce_loss_sequence(
    ps: list[np.ndarray],
    qs: list[np.ndarray],
    clip: float = DEFAULT_CLIP,
    use_reverse_term: bool = True,
) -> float:
    """Per-token mean SCE for generation targets."""
    if len(ps) != len(qs):
        raise LengthMismatch(f"{len(ps)} label positions vs {len(qs)} predictions")
    if not ps:
        raise LengthMismatch("empty sequence")
    return float(
        np.mean([sce_loss(p, q, clip, use_reverse_term) for p, q in zip(ps, qs)])
    )


def _kl(q1: np.ndarray, q2: np.ndarray) -> float:
    a = np.maximum(q1, PROB_FLOOR)
    b = np.maximum(q2, PROB_FLOOR)
    return float(np.sum(q1 * (np.log(a) - np.log(b))))


def consistency_loss(q1, q2) -> float:
    """Symmetric KL divergence; for sequences, the per-position mean."""
    if isinstance(q1, (list, tuple)) or isinstance(q2, (list, tuple)):
        if not (isinstance(q1, (list, tuple)) and isinstance(q2, (list, tuple))):
            raise ShapeMismatch("one side is a sequence, the other a single vector")
        if len(q1) != len(q2):
            raise ShapeMismatch(f"{len(q1)} vs {len(q2)} positions")
        return float(np.mean([consistency_loss(a, b) for a, b in zip(q1, q2)]))
    q1 = validate_distribution(q1)
    q2 = validate_distribution(q2)
    if q1.shape != q2.shape:
        raise ShapeMismatch(f"{q1.shape} vs {q2.shape}")
    return _kl(q1, q2) + _kl(q2, q1)


def total_objective(q_x, q_ct_x, target_onehot, cfg: ObjectiveConfig) -> float:
    """Combined loss: SCE on both views plus mu-weighted consistency.

    Single-distribution arguments give the classification form; lists of
    distributions (with ``target_onehot`` a matching list) the generation
    form.
    """
    if isinstance(target_onehot, (list, tuple)):
        sce1 = sce_loss_sequence(
            list(target_onehot), list(q_x), cfg.log_zero_clip, cfg.use_reverse_term
        )
        sce2 = sce_loss_sequence(
            list(target_onehot), list(q_ct_x), cfg.log_zero_clip, cfg.use_reverse_term
        )
    else:
        sce1 = sce_loss(target_onehot, q_x, cfg.log_zero_clip, cfg.use_reverse_term)
        sce2 = sce_loss(target_onehot, q_ct_x, cfg.log_zero_clip, cfg.use_reverse_term)
    return sce1 + sce2 + cfg.mu * consistency_loss(q_x, q_ct_x)


# --- logit-space gradients (shared by the built-in linear models) ---


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - np.max(logits)
    e = np.exp(z)
    return e / e.sum()


def sce_grad_logits(
    gold: int,
    q: np.ndarray,
    clip: float = DEFAULT_CLIP,
    use_reverse_term: bool = True,
) -> np.ndarray:
    """d(SCE)/d(logits) for softmax output q against one-hot class ``gold``.

    CE part: q - onehot. RCE part: clip * q_gold * (onehot - q), the
    constant per-sample gradient weight that makes the term noise-robust.
    """
    onehot = np.zeros_like(q)
    onehot[gold] = 1.0
    grad = q - onehot
    if use_reverse_term:
        grad = grad + clip * q[gold] * (onehot - q)
    return grad


def consistency_grad_logits(q1: np.ndarray, q2: np.ndarray):
    """Gradients of the symmetric KL w.r.t. both logit vectors."""
    a = np.maximum(q1, PROB_FLOOR)
    b = np.maximum(q2, PROB_FLOOR)
    # dL/dq1 then projected through the softmax Jacobian; same for q2.
    g1 = (np.log(a) - np.log(b)) + 1.0 - q2 / a
    g2 = (np.log(b) - np.log(a)) + 1.0 - q1 / b
    grad1 = q1 * (g1 - np.dot(g1, q1))
    grad2 = q2 * (g2 - np.dot(g2, q2))
    return grad1, grad2
