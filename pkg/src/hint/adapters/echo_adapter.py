#!/usr/bin/env python3
"""Conformance fixture for the adapter protocol.

Predicts a constant target (class 0, or the single token "ok" for
generation) and scores every example with loss 1.0. Useful for
end-to-end pipeline tests without a real model.
"""

import json
import sys


def main(argv):
    if len(argv) != 4:
        print("usage: echo_adapter.py <train|predict|score> <req> <resp>", file=sys.stderr)
        return 2
    subcommand, req_path, resp_path = argv[1], argv[2], argv[3]

    with open(req_path, encoding="utf-8") as f:
        lines = [json.loads(line) for line in f if line.strip()]
    if not lines or "op_meta" not in lines[0]:
        print("request lacks op_meta line", file=sys.stderr)
        return 1
    meta = lines[0]["op_meta"]
    records = lines[1:]

    with open(resp_path, "w", encoding="utf-8", newline="\n") as f:
        if subcommand == "train":
            f.write(json.dumps({"ok": True, "n_examples": len(records)}) + "\n")
        elif subcommand == "predict":
            target = 0 if meta.get("task") == "classification" else ["ok"]
            for rec in records:
                f.write(json.dumps({"id": rec["id"], "target": target}) + "\n")
        elif subcommand == "score":
            for rec in records:
                f.write(json.dumps({"id": rec["id"], "loss": 1.0}) + "\n")
        else:
            print(f"unknown subcommand {subcommand!r}", file=sys.stderr)
            return 2
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
