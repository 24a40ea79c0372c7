"""BM-25 retrieval over the labeled corpus and normalized edit distance.

Both live here because selection gates on them together: the BM-25 top-1
neighbor provides the reference, NED decides whether the candidate and
its pseudo label are close enough to that reference.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .corpus import ClassLabel, Dataset, TokenSequence
from .errors import EmptyCorpus, EmptyFirstSequence, KindMismatch
from .transforms import Token

DEFAULT_K1 = 1.2
DEFAULT_B = 0.75


@dataclass(frozen=True)
class RetrievalHit:
    example_id: str
    score: float


@dataclass(frozen=True)
class Bm25Index:
    """Immutable inverted-index statistics over lowercased code tokens."""

    doc_ids: tuple[str, ...]
    doc_term_freqs: tuple[dict, ...]
    doc_lengths: tuple[int, ...]
    avg_doc_length: float
    doc_freq: dict
    n_docs: int
    k1: float
    b: float


def _doc_terms(tokens: Sequence[Token]) -> list[str]:
    return [t.text.lower() for t in tokens]


def build_index(
    labeled: Dataset, k1: float = DEFAULT_K1, b: float = DEFAULT_B
) -> Bm25Index:
    """Build BM-25 statistics over every example's lowercased code tokens."""
    if len(labeled) == 0:
        raise EmptyCorpus("cannot index an empty dataset")
    doc_ids = []
    doc_term_freqs = []
    doc_lengths = []
    doc_freq: Counter = Counter()
    for ex in labeled.examples:
        terms = _doc_terms(ex.code_tokens)
        doc_ids.append(ex.id)
        doc_term_freqs.append(dict(Counter(terms)))
        doc_lengths.append(len(terms))
        doc_freq.update(set(terms))
    return Bm25Index(
        doc_ids=tuple(doc_ids),
        doc_term_freqs=tuple(doc_term_freqs),
        doc_lengths=tuple(doc_lengths),
        avg_doc_length=sum(doc_lengths) / len(doc_lengths),
        doc_freq=dict(doc_freq),
        n_docs=len(doc_ids),
        k1=k1,
        b=b,
    )


def idf(index: Bm25Index, term: str) -> float:
    df = index.doc_freq.get(term, 0)
    return math.log(1.0 + (index.n_docs - df + 0.5) / (df + 0.5))


def score_doc(index: Bm25Index, doc_pos: int, query_terms: Sequence[str]) -> float:
    """BM-25 score of one document against the query's distinct terms."""
    tf = index.doc_term_freqs[doc_pos]
    dl = index.doc_lengths[doc_pos]
    norm = index.k1 * (1.0 - index.b + index.b * dl / index.avg_doc_length)
    score = 0.0
    for term in sorted(set(query_terms)):
        f = tf.get(term, 0)
        if f == 0:
            continue
        score += idf(index, term) * f * (index.k1 + 1.0) / (f + norm)
    return score


def query(index: Bm25Index, code_tokens: Sequence[Token], top_n: int) -> list[RetrievalHit]:
    """Rank all documents against the query, returning the top ``top_n``.

    Sorted by descending score, ties broken by ascending example id; an
    empty or zero-overlap query yields all-zero scores in id order.
    """
    if top_n < 1:
        raise ValueError("top_n must be >= 1")
    terms = _doc_terms(code_tokens)
    scored = [
        (score_doc(index, pos, terms), index.doc_ids[pos])
        for pos in range(index.n_docs)
    ]
    scored.sort(key=lambda pair: (-pair[0], pair[1]))
    return [RetrievalHit(doc_id, s) for s, doc_id in scored[:top_n]]


def levenshtein(a: Sequence, b: Sequence) -> int:
    """Token-level edit distance with unit insert/delete/substitute costs."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        cur = [i]
        for j, y in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y)))
        prev = cur
    return prev[-1]


NedOperand = ClassLabel | TokenSequence | Sequence[str]


def _as_seq(x) -> tuple[str, ...] | None:
    if isinstance(x, TokenSequence):
        return x.tokens
    if isinstance(x, ClassLabel):
        return None
    return tuple(x)


def ned(a: NedOperand, b: NedOperand) -> float:
    """Normalized edit distance.

    Sequences: Levenshtein distance divided by the FIRST argument's
    length (the value can exceed 1 when b is much longer). Class labels:
    the indicator 1{a != b}.
    """
    a_is_label = isinstance(a, ClassLabel)
    b_is_label = isinstance(b, ClassLabel)
    if a_is_label != b_is_label:
        raise KindMismatch(f"cannot compare {type(a).__name__} with {type(b).__name__}")
    if a_is_label:
        return float(a != b)
    sa, sb = _as_seq(a), _as_seq(b)
    if len(sa) == 0:
        raise EmptyFirstSequence("NED denominator requires a non-empty first sequence")
    return levenshtein(sa, sb) / len(sa)
