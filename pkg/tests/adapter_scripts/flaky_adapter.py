#!/usr/bin/env python3
"""Test adapter: fails the first attempt per id, succeeds after a retry.

Remembers attempted ids in STATE_DIR so the memory survives the process
restart a harness retry causes.

Usage: flaky_adapter.py STATE_DIR
"""
import json
import os
import sys


def main() -> int:
    state_dir = sys.argv[1]
    os.makedirs(state_dir, exist_ok=True)
    print(json.dumps({"protocol": "skillbench/1", "name": "flaky", "kind": "ner"}), flush=True)
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        req = json.loads(line)
        marker = os.path.join(state_dir, f"seen-{req['id']}")
        if not os.path.exists(marker):
            with open(marker, "w", encoding="utf-8") as f:
                f.write("1")
            print(json.dumps({"id": req["id"], "error": "transient blip"}), flush=True)
            continue
        print(json.dumps({"id": req["id"], "skills": ["recovered"]}), flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
