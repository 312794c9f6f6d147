#!/usr/bin/env python3
"""Misbehaving line-protocol evaluator for failure-path tests.

Mode comes from argv[1]:
  garbage   - reply with unparseable text for ids divisible by 3
  crash     - exit abruptly on the second request
  hang      - never reply to ids divisible by 2
  wrong-id  - reply with a mismatched id for ids divisible by 5
Other requests are answered with objective = sum of the parameter values.
"""
import json
import sys
import time

mode = sys.argv[1] if len(sys.argv) > 1 else "garbage"
seen = 0
for line in sys.stdin:
    if not line.strip():
        continue
    req = json.loads(line)
    rid = req["id"]
    seen += 1
    if mode == "garbage" and rid % 3 == 0:
        print("not json at all", flush=True)
        continue
    if mode == "crash" and seen == 2:
        sys.exit(13)
    if mode == "hang" and rid % 2 == 0:
        time.sleep(3600)
    if mode == "wrong-id" and rid % 5 == 0:
        print(json.dumps({"id": rid + 1000, "objective": 0.0}), flush=True)
        continue
    print(json.dumps({"id": rid, "objective": sum(req["params"].values())}), flush=True)
