"""Built-in desk-scale models fulfilling the teacher/student contract.

Both models are linear with exact analytic gradients: a bag-of-tokens
softmax classifier and a per-position token translation table. They are
deliberately small so the full self-training loop runs in seconds; real
pre-trained models plug in through the external adapter instead.

The contract every model (built-in or adapter-backed) satisfies:

    predict(tokens)              -> (Target, distribution(s))
    per_example_loss(tokens, y)  -> float   # SCE, same scale as training
    train(items, obj_cfg, transform_spec, epochs, lr, seed) -> new model
    reinitialize(seed)           -> fresh model with the same shape
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .corpus import (
    AnyExample,
    ClassLabel,
    Dataset,
    Example,
    PseudoExample,
    Target,
    TokenSequence,
)
from .errors import LengthMismatch, NonFiniteLoss, TaskMismatch
from .objective import (
    ObjectiveConfig,
    consistency_grad_logits,
    consistency_loss,
    one_hot,
    sce_grad_logits,
    sce_loss,
    sce_loss_sequence,
    softmax,
)
from .transforms import (
    MASK_TOKEN,
    Token,
    TransformSpec,
    apply_transform,
    pick_transform,
)

UNK_TOKEN = "<unk>"


def item_id(ex: AnyExample) -> str:
    return ex.id


def item_tokens(ex: AnyExample) -> tuple[Token, ...]:
    return ex.code_tokens


def item_target(ex: AnyExample) -> Target:
    if isinstance(ex, Example):
        return ex.target
    if isinstance(ex, PseudoExample):
        return ex.pseudo_target
    raise TaskMismatch(f"example {ex.id} has no target")


@dataclass(frozen=True)
class Vocabulary:
    """Token -> index map with reserved <unk> and <mask> buckets."""

    index: dict

    @classmethod
    def build(cls, token_texts: Sequence[str]) -> "Vocabulary":
        index = {UNK_TOKEN: 0, MASK_TOKEN: 1}
        for text in sorted(set(token_texts)):
            if text not in index:
                index[text] = len(index)
        return cls(index=index)

    def __len__(self) -> int:
        return len(self.index)

    def lookup(self, text: str) -> int:
        return self.index.get(text, 0)

    def token_at(self, idx: int) -> str:
        # Index map is insertion-ordered; cache would be premature here.
        return list(self.index)[idx]


def vocabulary_from_dataset(ds: Dataset) -> Vocabulary:
    return Vocabulary.build(
        [t.text for ex in ds.examples for t in ex.code_tokens]
    )


def target_vocabulary_from_dataset(ds: Dataset) -> Vocabulary:
    texts = []
    for ex in ds.examples:
        target = item_target(ex)
        assert isinstance(target, TokenSequence)
        texts.extend(target.tokens)
    return Vocabulary.build(texts)


def _seed_from(*parts) -> int:
    digest = hashlib.blake2b(
        "|".join(str(p) for p in parts).encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big")


class Model(Protocol):
    def predict(self, tokens: Sequence[Token]): ...
    def per_example_loss(self, tokens: Sequence[Token], target: Target) -> float: ...
    def train(self, items, obj_cfg, transform_spec, epochs, lr, seed): ...
    def reinitialize(self, seed: int): ...


class BagOfTokensClassifier:
    """Linear softmax classifier over length-normalized token counts."""

    def __init__(self, vocab: Vocabulary, num_classes: int, seed: int = 0):
        self.vocab = vocab
        self.num_classes = num_classes
        rng = np.random.default_rng(_seed_from("init-clf", seed))
        self.weights = rng.normal(0.0, 0.01, size=(num_classes, len(vocab)))
        self.bias = np.zeros(num_classes)

    def reinitialize(self, seed: int) -> "BagOfTokensClassifier":
        return BagOfTokensClassifier(self.vocab, self.num_classes, seed)

    def featurize(self, tokens: Sequence[Token]) -> np.ndarray:
        x = np.zeros(len(self.vocab))
        for t in tokens:
            x[self.vocab.lookup(t.text)] += 1.0
        return x / max(len(tokens), 1)

    def predict_distribution(self, tokens: Sequence[Token]) -> np.ndarray:
        x = self.featurize(tokens)
        return softmax(self.weights @ x + self.bias)

    def predict(self, tokens: Sequence[Token]) -> tuple[ClassLabel, np.ndarray]:
        q = self.predict_distribution(tokens)
        # np.argmax already breaks ties toward the lowest class id.
        return ClassLabel(int(np.argmax(q))), q

    def per_example_loss(
        self,
        tokens: Sequence[Token],
        target: Target,
        clip: float = -4.0,
        use_reverse_term: bool = True,
    ) -> float:
        if not isinstance(target, ClassLabel):
            raise TaskMismatch("classifier expects class-label targets")
        q = self.predict_distribution(tokens)
        return sce_loss(one_hot(target.class_id, self.num_classes), q, clip, use_reverse_term)

    def train(
        self,
        items: Sequence[AnyExample],
        obj_cfg: ObjectiveConfig,
        transform_spec: TransformSpec,
        epochs: int,
        lr: float,
        seed: int,
        batch_size: int = 16,
    ) -> "BagOfTokensClassifier":
        """Mini-batch gradient descent on the combined objective."""
        model = self._copy()
        order_rng = np.random.default_rng(_seed_from("train-clf", seed))
        n = len(items)
        for epoch in range(epochs):
            order = order_rng.permutation(n)
            for start in range(0, n, batch_size):
                grad_w = np.zeros_like(model.weights)
                grad_b = np.zeros_like(model.bias)
                batch = order[start : start + batch_size]
                for idx in batch:
                    ex = items[idx]
                    target = item_target(ex)
                    gold = target.class_id
                    kind = pick_transform(epoch, ex.id, transform_spec.seed)
                    ct_tokens = apply_transform(
                        list(ex.code_tokens), transform_spec.with_kind(kind), epoch, ex.id
                    )
                    x1 = model.featurize(ex.code_tokens)
                    x2 = model.featurize(ct_tokens)
                    q1 = softmax(model.weights @ x1 + model.bias)
                    q2 = softmax(model.weights @ x2 + model.bias)
                    gz1 = sce_grad_logits(
                        gold, q1, obj_cfg.log_zero_clip, obj_cfg.use_reverse_term
                    )
                    gz2 = sce_grad_logits(
                        gold, q2, obj_cfg.log_zero_clip, obj_cfg.use_reverse_term
                    )
                    if obj_cfg.mu > 0:
                        c1, c2 = consistency_grad_logits(q1, q2)
                        gz1 = gz1 + obj_cfg.mu * c1
                        gz2 = gz2 + obj_cfg.mu * c2
                    grad_w += np.outer(gz1, x1) + np.outer(gz2, x2)
                    grad_b += gz1 + gz2
                if not (np.all(np.isfinite(grad_w)) and np.all(np.isfinite(grad_b))):
                    raise NonFiniteLoss(f"non-finite gradient at epoch {epoch}")
                model.weights -= lr * grad_w / len(batch)
                model.bias -= lr * grad_b / len(batch)
        return model

    def _copy(self) -> "BagOfTokensClassifier":
        clone = BagOfTokensClassifier(self.vocab, self.num_classes)
        clone.weights = self.weights.copy()
        clone.bias = self.bias.copy()
        return clone


class TokenTranslationModel:
    """Per-position token mapper: a logit table [vocab_in x vocab_out].

    Predicts an output sequence of the same length as the input; every
    position depends only on its own input token.
    """

    def __init__(self, vocab_in: Vocabulary, vocab_out: Vocabulary, seed: int = 0):
        self.vocab_in = vocab_in
        self.vocab_out = vocab_out
        rng = np.random.default_rng(_seed_from("init-trans", seed))
        self.table = rng.normal(0.0, 0.01, size=(len(vocab_in), len(vocab_out)))

    def reinitialize(self, seed: int) -> "TokenTranslationModel":
        return TokenTranslationModel(self.vocab_in, self.vocab_out, seed)

    def predict_distributions(self, tokens: Sequence[Token]) -> list[np.ndarray]:
        return [softmax(self.table[self.vocab_in.lookup(t.text)]) for t in tokens]

    def predict(self, tokens: Sequence[Token]) -> tuple[TokenSequence, list[np.ndarray]]:
        dists = self.predict_distributions(tokens)
        out = tuple(self.vocab_out.token_at(int(np.argmax(q))) for q in dists)
        return TokenSequence(out), dists

    def per_example_loss(
        self,
        tokens: Sequence[Token],
        target: Target,
        clip: float = -4.0,
        use_reverse_term: bool = True,
    ) -> float:
        if not isinstance(target, TokenSequence):
            raise TaskMismatch("translation model expects token-sequence targets")
        if len(target.tokens) != len(tokens):
            raise LengthMismatch(
                f"target has {len(target.tokens)} tokens, input {len(tokens)}"
            )
        qs = self.predict_distributions(tokens)
        ps = [
            one_hot(self.vocab_out.lookup(tok), len(self.vocab_out))
            for tok in target.tokens
        ]
        return sce_loss_sequence(ps, qs, clip, use_reverse_term)

    def train(
        self,
        items: Sequence[AnyExample],
        obj_cfg: ObjectiveConfig,
        transform_spec: TransformSpec,
        epochs: int,
        lr: float,
        seed: int,
        batch_size: int = 16,
    ) -> "TokenTranslationModel":
        model = self._copy()
        order_rng = np.random.default_rng(_seed_from("train-trans", seed))
        n = len(items)
        for epoch in range(epochs):
            order = order_rng.permutation(n)
            for start in range(0, n, batch_size):
                grad = np.zeros_like(model.table)
                batch = order[start : start + batch_size]
                for idx in batch:
                    ex = items[idx]
                    target = item_target(ex)
                    if len(target.tokens) != len(ex.code_tokens):
                        raise LengthMismatch(f"example {ex.id}: length mismatch")
                    kind = pick_transform(epoch, ex.id, transform_spec.seed)
                    ct_tokens = apply_transform(
                        list(ex.code_tokens), transform_spec.with_kind(kind), epoch, ex.id
                    )
                    L = len(ex.code_tokens)
                    for pos in range(L):
                        gold = model.vocab_out.lookup(target.tokens[pos])
                        i1 = model.vocab_in.lookup(ex.code_tokens[pos].text)
                        i2 = model.vocab_in.lookup(ct_tokens[pos].text)
                        q1 = softmax(model.table[i1])
                        q2 = softmax(model.table[i2])
                        gz1 = sce_grad_logits(
                            gold, q1, obj_cfg.log_zero_clip, obj_cfg.use_reverse_term
                        )
                        gz2 = sce_grad_logits(
                            gold, q2, obj_cfg.log_zero_clip, obj_cfg.use_reverse_term
                        )
                        if obj_cfg.mu > 0:
                            c1, c2 = consistency_grad_logits(q1, q2)
                            gz1 = gz1 + obj_cfg.mu * c1
                            gz2 = gz2 + obj_cfg.mu * c2
                        # Per-token mean: scale both SCE and consistency by 1/L.
                        grad[i1] += gz1 / L
                        grad[i2] += gz2 / L
                if not np.all(np.isfinite(grad)):
                    raise NonFiniteLoss(f"non-finite gradient at epoch {epoch}")
                model.table -= lr * grad / len(batch)
        return model

    def _copy(self) -> "TokenTranslationModel":
        clone = TokenTranslationModel(self.vocab_in, self.vocab_out)
        clone.table = self.table.copy()
        return clone
