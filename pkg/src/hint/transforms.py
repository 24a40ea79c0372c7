"""Code tokenization and the four token-level code transformations.

The transformations create a second "view" of a code snippet for
consistency regularization: masking or replacing a fixed fraction of
tokens, optionally restricted to identifiers. All randomness is derived
from (seed, example_id, epoch) so results are independent of execution
order.
"""

from __future__ import annotations

import hashlib
import math
import random
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

from .errors import EmptyInput

MASK_TOKEN = "<mask>"

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")

_TOKEN_RE = re.compile(
    r"""
    (?P<string>"(?:\\.|[^"\\])*"|'(?:\\.|[^'\\])*')
    |(?P<number>\d+\.\d+|\d+)
    |(?P<word>[A-Za-z_][A-Za-z0-9_]*)
    |(?P<other>\S)
    """,
    re.VERBOSE,
)

# Minimal reserved-word lists; extensible via load_keywords().
KEYWORDS: dict[str, frozenset[str]] = {
    "python": frozenset(
        """False None True and as assert async await break class continue def
        del elif else except finally for from global if import in is lambda
        nonlocal not or pass raise return try while with yield""".split()
    ),
    "java": frozenset(
        """abstract assert boolean break byte case catch char class const
        continue default do double else enum extends final finally float for
        goto if implements import instanceof int interface long native new
        package private protected public return short static strictfp super
        switch synchronized this throw throws transient try void volatile
        while true false null""".split()
    ),
    "c": frozenset(
        """auto break case char const continue default do double else enum
        extern float for goto if inline int long register restrict return
        short signed sizeof static struct switch typedef union unsigned void
        volatile while""".split()
    ),
}


class TokenKind(Enum):
    IDENTIFIER = "identifier"
    KEYWORD = "keyword"
    LITERAL = "literal"
    PUNCTUATION = "punctuation"
    OTHER = "other"


@dataclass(frozen=True)
class Token:
    text: str
    kind: TokenKind

    def __post_init__(self):
        if not self.text:
            raise ValueError("token text must be non-empty")


class TransformKind(Enum):
    DYNAMIC_MASKING = "dynamic-masking"
    DYNAMIC_REPLACEMENT = "dynamic-replacement"
    DYNAMIC_MASKING_OF_IDENTIFIERS = "dynamic-masking-of-identifiers"
    DYNAMIC_REPLACEMENT_OF_IDENTIFIERS = "dynamic-replacement-of-identifiers"


@dataclass(frozen=True)
class TransformSpec:
    """One concrete transformation: which kind, how much, and the RNG root.

    ``replacement_vocab`` feeds the unrestricted replacement variant and
    ``identifier_vocab`` the identifier-restricted one; both are normally
    harvested from the labeled training set. When a vocabulary is empty the
    distinct token texts of the input sequence are used instead.
    """

    kind: TransformKind = TransformKind.DYNAMIC_MASKING
    ratio: float = 0.15
    seed: int = 0
    replacement_vocab: tuple[str, ...] = field(default=())
    identifier_vocab: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not 0.0 <= self.ratio <= 1.0:
            raise ValueError(f"ratio must lie in [0, 1], got {self.ratio}")

    def with_kind(self, kind: TransformKind) -> "TransformSpec":
        return replace(self, kind=kind)


def load_keywords(path: str | Path) -> frozenset[str]:
    """Read a plain-text keyword list, one keyword per line."""
    words = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line:
            words.append(line)
    return frozenset(words)


def register_keywords(language: str, keywords: frozenset[str]) -> None:
    KEYWORDS[language] = keywords


def classify_word(text: str, keywords: frozenset[str]) -> TokenKind:
    if text in keywords:
        return TokenKind.KEYWORD
    if _IDENT_RE.fullmatch(text):
        return TokenKind.IDENTIFIER
    return TokenKind.OTHER


def tokenize(code_text: str, language: str = "python") -> list[Token]:
    """Split source text into classified tokens.

    Identifiers follow ``[A-Za-z_][A-Za-z0-9_]*`` and are demoted to
    keywords when they appear in the language's reserved-word list.
    String and number literals become LITERAL; any other non-space
    character is a single PUNCTUATION token.
    """
    if not code_text.strip():
        raise EmptyInput("cannot tokenize empty code text")
    keywords = KEYWORDS.get(language, frozenset())
    tokens: list[Token] = []
    for m in _TOKEN_RE.finditer(code_text):
        text = m.group(0)
        if m.lastgroup in ("string", "number"):
            kind = TokenKind.LITERAL
        elif m.lastgroup == "word":
            kind = classify_word(text, keywords)
        else:
            kind = TokenKind.PUNCTUATION
        tokens.append(Token(text, kind))
    return tokens


def _derived_rng(seed: int, example_id: str, epoch: int) -> random.Random:
    # Stable across processes (unlike hash()) and across execution order.
    digest = hashlib.blake2b(
        f"{seed}|{example_id}|{epoch}".encode("utf-8"), digest_size=8
    ).digest()
    return random.Random(int.from_bytes(digest, "big"))


def pick_transform(epoch: int, example_id: str, seed: int) -> TransformKind:
    """Uniformly pick one of the four transformation kinds per (epoch, id)."""
    rng = _derived_rng(seed, f"pick:{example_id}", epoch)
    return rng.choice(list(TransformKind))


def apply_transform(
    tokens: list[Token],
    spec: TransformSpec,
    epoch: int,
    example_id: str,
) -> list[Token]:
    """Apply ``spec`` to a token sequence, preserving its length.

    Exactly round(ratio * |eligible|) positions are altered. Masking writes
    the reserved token, replacement draws uniformly from the configured
    vocabulary. Identifier-restricted kinds only touch IDENTIFIER tokens.
    """
    if not tokens:
        raise EmptyInput("cannot transform an empty token sequence")
    restricted = spec.kind in (
        TransformKind.DYNAMIC_MASKING_OF_IDENTIFIERS,
        TransformKind.DYNAMIC_REPLACEMENT_OF_IDENTIFIERS,
    )
    masking = spec.kind in (
        TransformKind.DYNAMIC_MASKING,
        TransformKind.DYNAMIC_MASKING_OF_IDENTIFIERS,
    )
    if restricted:
        eligible = [i for i, t in enumerate(tokens) if t.kind == TokenKind.IDENTIFIER]
    else:
        eligible = list(range(len(tokens)))
    k = int(math.floor(spec.ratio * len(eligible) + 0.5))
    if k == 0:
        return list(tokens)

    rng = _derived_rng(spec.seed, example_id, epoch)
    positions = rng.sample(eligible, k)
    if masking:
        vocab: tuple[str, ...] = ()
    else:
        vocab = spec.identifier_vocab if restricted else spec.replacement_vocab
        if not vocab:
            vocab = tuple(sorted({t.text for t in tokens}))

    out = list(tokens)
    for pos in positions:
        if masking:
            out[pos] = Token(MASK_TOKEN, TokenKind.OTHER)
        else:
            text = vocab[rng.randrange(len(vocab))]
            kind = (
                TokenKind.IDENTIFIER
                if _IDENT_RE.fullmatch(text)
                else TokenKind.OTHER
            )
            out[pos] = Token(text, kind)
    return out
