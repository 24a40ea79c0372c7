#!/usr/bin/env python3
"""Regenerate the bundled synthetic datasets under data/.

The datasets are fully determined by frozen generator seeds, so this
script always reproduces the committed files byte for byte.
"""

from __future__ import annotations

import sys
from pathlib import Path

from hint.corpus import save_dataset
from hint.synth import bundled_classification_task, bundled_generation_task


def main() -> int:
    root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data"
    for name, task in (
        ("classification", bundled_classification_task()),
        ("generation", bundled_generation_task()),
    ):
        out = root / name
        out.mkdir(parents=True, exist_ok=True)
        save_dataset(task.labeled, out / "labeled.jsonl")
        # Unlabeled records keep their gold targets; the pipeline strips
        # them on load and uses them only for selection-quality reporting.
        save_dataset(task.unlabeled, out / "unlabeled.jsonl")
        save_dataset(task.heldout, out / "heldout.jsonl")
        print(f"wrote {out}/{{labeled,unlabeled,heldout}}.jsonl")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
