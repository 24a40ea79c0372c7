"""Shared fixtures: tiny in-memory datasets and tokenizer helpers."""

from __future__ import annotations

import pytest

from hint.corpus import ClassLabel, Dataset, Example, TaskKind, TokenSequence
from hint.transforms import tokenize


def example(ex_id: str, code: str, target=None) -> Example:
    return Example(ex_id, code, tuple(tokenize(code)), target)


@pytest.fixture
def tiny_classification() -> Dataset:
    rows = [
        ("a1", "def alpha(): return 1", 0),
        ("a2", "def alpha_two(): return 1 + 1", 0),
        ("a3", "def alpha_three(): return alpha()", 0),
        ("b1", "class Beta: pass", 1),
        ("b2", "class BetaTwo(Beta): pass", 1),
        ("b3", "class BetaThree: x = 2", 1),
    ]
    return Dataset(
        TaskKind.CLASSIFICATION,
        tuple(example(i, c, ClassLabel(t)) for i, c, t in rows),
        num_classes=2,
    )


@pytest.fixture
def tiny_generation() -> Dataset:
    rows = [
        ("g1", "x y z", ("X", "Y", "Z")),
        ("g2", "y z x", ("Y", "Z", "X")),
        ("g3", "z z y", ("Z", "Z", "Y")),
        ("g4", "x x y z", ("X", "X", "Y", "Z")),
    ]
    return Dataset(
        TaskKind.GENERATION,
        tuple(example(i, c, TokenSequence(t)) for i, c, t in rows),
    )
