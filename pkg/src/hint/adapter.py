"""Subprocess protocol for plugging real models into the pipeline.

Invocation: ``<exec> <train|predict|score> <request.jsonl> <response.jsonl>``.
The request reuses the dataset record schema, preceded by one op_meta
line. Predict responses carry {"id", "target"}, score responses
{"id", "loss"}; response ids must be a bijection with the request ids.
Exit code 0 means success; anything else raises AdapterCrashed.
"""

from __future__ import annotations

import json
import subprocess
import sys
import tempfile
from pathlib import Path
from typing import Sequence

from .corpus import (
    AnyExample,
    ClassLabel,
    Target,
    TaskKind,
    TokenSequence,
    record_for,
)
from .errors import AdapterCrashed, AdapterTimeout, ProtocolViolation
from .models import item_target
from .transforms import Token


def _command(exec_path: str, *args: str) -> list[str]:
    # .py adapters run through the current interpreter so the bundled
    # fixtures work without executable bits.
    if exec_path.endswith(".py"):
        return [sys.executable, exec_path, *args]
    return [exec_path, *args]


class ExternalAdapterModel:
    """Model contract backed by a child-process adapter executable."""

    def __init__(
        self,
        exec_path: str,
        task: TaskKind,
        num_classes: int | None = None,
        timeout: float = 120.0,
        seed: int = 0,
    ):
        self.exec_path = exec_path
        self.task = task
        self.num_classes = num_classes
        self.timeout = timeout
        self.seed = seed

    def reinitialize(self, seed: int) -> "ExternalAdapterModel":
        # Adapter state lives in the child process / its checkpoints; the
        # reinit request is forwarded via op_meta on the next train call.
        return ExternalAdapterModel(
            self.exec_path, self.task, self.num_classes, self.timeout, seed
        )

    def _invoke(self, subcommand: str, op_meta: dict, records: list[dict]) -> list[dict]:
        with tempfile.TemporaryDirectory(prefix="hint-adapter-") as tmp:
            req = Path(tmp) / "request.jsonl"
            resp = Path(tmp) / "response.jsonl"
            with open(req, "w", encoding="utf-8", newline="\n") as f:
                f.write(json.dumps({"op_meta": op_meta}, sort_keys=True) + "\n")
                for rec in records:
                    f.write(json.dumps(rec, sort_keys=True) + "\n")
            try:
                proc = subprocess.run(
                    _command(self.exec_path, subcommand, str(req), str(resp)),
                    capture_output=True,
                    text=True,
                    timeout=self.timeout,
                )
            except subprocess.TimeoutExpired as e:
                raise AdapterTimeout(
                    f"adapter exceeded {self.timeout}s on {subcommand}"
                ) from e
            if proc.returncode != 0:
                raise AdapterCrashed(proc.returncode, proc.stderr)
            if not resp.exists():
                raise ProtocolViolation("adapter wrote no response file")
            out = []
            with open(resp, encoding="utf-8") as f:
                for line_no, line in enumerate(f, start=1):
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        out.append(json.loads(line))
                    except json.JSONDecodeError as e:
                        raise ProtocolViolation(
                            f"unparseable response line {line_no}"
                        ) from e
            return out

    def _check_bijection(self, request_ids: list[str], responses: list[dict]) -> dict:
        by_id = {}
        for rec in responses:
            rid = rec.get("id")
            if rid is None:
                raise ProtocolViolation("response record lacks an id")
            if rid in by_id:
                raise ProtocolViolation(f"duplicate response id {rid!r}")
            by_id[rid] = rec
        missing = set(request_ids) - set(by_id)
        extra = set(by_id) - set(request_ids)
        if missing or extra:
            raise ProtocolViolation(
                f"response ids mismatch: missing={sorted(missing)} extra={sorted(extra)}"
            )
        return by_id

    def _op_meta(self, op: str, **extra) -> dict:
        meta = {"op": op, "task": self.task.value, "seed": self.seed}
        if self.num_classes is not None:
            meta["num_classes"] = self.num_classes
        meta.update(extra)
        return meta

    def train(
        self,
        items: Sequence[AnyExample],
        obj_cfg,
        transform_spec,
        epochs: int,
        lr: float,
        seed: int,
    ) -> "ExternalAdapterModel":
        records = [record_for(ex) for ex in items]
        meta = self._op_meta(
            "train",
            epochs=epochs,
            lr=lr,
            train_seed=seed,
            reinit=True,
            mu=obj_cfg.mu,
            clip=obj_cfg.log_zero_clip,
            transform_ratio=transform_spec.ratio,
        )
        self._invoke("train", meta, records)
        return self

    def predict_batch(self, items: Sequence[AnyExample]) -> dict[str, Target]:
        records = [{"id": ex.id, "code": ex.code_text} for ex in items]
        responses = self._invoke("predict", self._op_meta("predict"), records)
        by_id = self._check_bijection([ex.id for ex in items], responses)
        targets: dict[str, Target] = {}
        for ex in items:
            raw = by_id[ex.id].get("target")
            if self.task is TaskKind.CLASSIFICATION:
                if not isinstance(raw, int) or isinstance(raw, bool):
                    raise ProtocolViolation(f"bad class target for {ex.id}: {raw!r}")
                targets[ex.id] = ClassLabel(raw)
            else:
                if not isinstance(raw, list) or not raw:
                    raise ProtocolViolation(f"bad sequence target for {ex.id}: {raw!r}")
                targets[ex.id] = TokenSequence(tuple(str(t) for t in raw))
        return targets

    def score_batch(self, items: Sequence[AnyExample]) -> dict[str, float]:
        records = [record_for(ex) for ex in items]
        responses = self._invoke("score", self._op_meta("score"), records)
        by_id = self._check_bijection([ex.id for ex in items], responses)
        losses: dict[str, float] = {}
        for ex in items:
            raw = by_id[ex.id].get("loss")
            if not isinstance(raw, (int, float)) or raw < 0:
                raise ProtocolViolation(f"bad loss for {ex.id}: {raw!r}")
            losses[ex.id] = float(raw)
        return losses

    # Single-example contract methods, implemented over the batch calls.

    def predict(self, tokens: Sequence[Token]):
        raise NotImplementedError(
            "adapter models are driven batch-wise; use predict_batch"
        )

    def per_example_loss(self, tokens: Sequence[Token], target: Target) -> float:
        raise NotImplementedError(
            "adapter models are driven batch-wise; use score_batch"
        )
