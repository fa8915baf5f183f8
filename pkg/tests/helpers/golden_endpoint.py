#!/usr/bin/env python3
"""Replays a recorded request/response transcript.

argv[1] is a JSON file: a list of {"expect": request, "reply": response}
steps. Any incoming request that differs from the next expected one gets an
ok:false reply so the driving test fails loudly.
"""

import json
import sys


def main() -> None:
    with open(sys.argv[1], "r", encoding="utf-8") as fh:
        steps = json.load(fh)
    cursor = 0
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        req = json.loads(line)
        if cursor >= len(steps):
            reply = {"id": req.get("id", -1), "ok": False, "error": "transcript exhausted"}
        else:
            expect = steps[cursor]["expect"]
            if req == expect:
                reply = steps[cursor]["reply"]
            else:
                reply = {
                    "id": req.get("id", -1),
                    "ok": False,
                    "error": f"request {req} != expected {expect}",
                }
            cursor += 1
        sys.stdout.write(json.dumps(reply) + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
