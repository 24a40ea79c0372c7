"""External adapter protocol: conformance and failure modes."""

from __future__ import annotations

from pathlib import Path

import pytest

import hint.adapters.echo_adapter as echo
from hint.adapter import ExternalAdapterModel
from hint.corpus import ClassLabel, TaskKind, TokenSequence
from hint.errors import AdapterCrashed, AdapterTimeout, ProtocolViolation
from hint.objective import ObjectiveConfig
from hint.transforms import TransformSpec

ECHO = str(Path(echo.__file__))
FIXTURES = Path(__file__).parent / "fixtures"


def adapter(exec_path=ECHO, task=TaskKind.CLASSIFICATION, **kwargs):
    return ExternalAdapterModel(
        str(exec_path), task, num_classes=2 if task is TaskKind.CLASSIFICATION else None,
        **kwargs,
    )


class TestEchoAdapter:
    def test_train_round_trip(self, tiny_classification):
        model = adapter()
        trained = model.train(
            list(tiny_classification.examples),
            ObjectiveConfig(),
            TransformSpec(seed=0),
            epochs=1,
            lr=0.1,
            seed=0,
        )
        assert isinstance(trained, ExternalAdapterModel)

    def test_predict_classification(self, tiny_classification):
        targets = adapter().predict_batch(list(tiny_classification.examples))
        assert set(targets) == {ex.id for ex in tiny_classification.examples}
        assert all(t == ClassLabel(0) for t in targets.values())

    def test_predict_generation(self, tiny_generation):
        targets = adapter(task=TaskKind.GENERATION).predict_batch(
            list(tiny_generation.examples)
        )
        assert all(t == TokenSequence(("ok",)) for t in targets.values())

    def test_score(self, tiny_classification):
        losses = adapter().score_batch(list(tiny_classification.examples))
        assert all(v == 1.0 for v in losses.values())

    def test_reinitialize_carries_seed(self):
        fresh = adapter().reinitialize(42)
        assert fresh.seed == 42
        assert fresh.exec_path == ECHO

    def test_single_example_methods_unsupported(self, tiny_classification):
        model = adapter()
        ex = tiny_classification.examples[0]
        with pytest.raises(NotImplementedError):
            model.predict(ex.code_tokens)
        with pytest.raises(NotImplementedError):
            model.per_example_loss(ex.code_tokens, ex.target)


class TestFailureModes:
    def test_dropped_id_is_protocol_violation(self, tiny_classification):
        model = adapter(FIXTURES / "broken_adapter.py")
        with pytest.raises(ProtocolViolation, match="missing"):
            model.predict_batch(list(tiny_classification.examples))
        with pytest.raises(ProtocolViolation, match="missing"):
            model.score_batch(list(tiny_classification.examples))

    def test_nonzero_exit_is_adapter_crashed(self, tiny_classification):
        model = adapter(FIXTURES / "crashing_adapter.py")
        with pytest.raises(AdapterCrashed) as err:
            model.predict_batch(list(tiny_classification.examples))
        assert err.value.exit_code == 3
        assert "deliberate crash" in str(err.value)

    def test_garbage_output_is_protocol_violation(self, tiny_classification):
        model = adapter(FIXTURES / "garbage_adapter.py")
        with pytest.raises(ProtocolViolation, match="unparseable"):
            model.predict_batch(list(tiny_classification.examples))

    def test_timeout(self, tmp_path, tiny_classification):
        slow = tmp_path / "slow_adapter.py"
        slow.write_text("import time\ntime.sleep(10)\n")
        model = adapter(slow, timeout=0.5)
        with pytest.raises(AdapterTimeout):
            model.predict_batch(list(tiny_classification.examples))
