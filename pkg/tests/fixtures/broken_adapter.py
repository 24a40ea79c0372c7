#!/usr/bin/env python3
"""Protocol-violating fixture: silently drops the first id on predict/score."""

import json
import sys


def main(argv):
    subcommand, req_path, resp_path = argv[1], argv[2], argv[3]
    with open(req_path, encoding="utf-8") as f:
        lines = [json.loads(line) for line in f if line.strip()]
    meta = lines[0]["op_meta"]
    records = lines[1:]
    with open(resp_path, "w", encoding="utf-8", newline="\n") as f:
        if subcommand == "train":
            f.write(json.dumps({"ok": True}) + "\n")
        elif subcommand == "predict":
            target = 0 if meta.get("task") == "classification" else ["ok"]
            for rec in records[1:]:  # drops the first record's id
                f.write(json.dumps({"id": rec["id"], "target": target}) + "\n")
        elif subcommand == "score":
            for rec in records[1:]:
                f.write(json.dumps({"id": rec["id"], "loss": 1.0}) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
