"""The stdio serving loop: newline-delimited JSON request/response.

One object per line, UTF-8, ids echoed back; every failure becomes an
ok:false reply and the process never emits a malformed line.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .chem import make_validator
from .config import AdapterConfig, load_adapter_config
from .docking import make_scorer
from .embeddings import make_backend
from .prompts import PROMPT_IDS, prompt_text, verify_prompt_checksums


class Handler:
    def __init__(self, config: AdapterConfig):
        verify_prompt_checksums(config.prompt_dir)
        self.config = config
        self.backend = make_backend(config)
        self.validator = make_validator(config.chem)
        self.scorer = make_scorer(config)

    def handle(self, req: dict) -> dict:
        rid = req.get("id", -1)
        op = req.get("op")
        try:
            if op == "hello":
                return {
                    "id": rid,
                    "ok": True,
                    "name": self.backend.name,
                    "d": self.backend.d,
                    "l_max": self.config.l_max,
                }
            if op == "encode":
                text = req["text"]
                if not isinstance(text, str) or not text:
                    raise ValueError("encode requires a non-empty text")
                ids, rows = self.backend.encode(text)
                return {
                    "id": rid,
                    "ok": True,
                    "embedding": [[float(v) for v in row] for row in rows],
                    "token_ids": ids,
                }
            if op == "decode":
                prompt_id = req.get("prompt_id", "repair")
                if prompt_id not in PROMPT_IDS:
                    raise ValueError(f"unknown prompt_id {prompt_id!r}")
                rows = np.asarray(req["embedding"], dtype=np.float64)
                if rows.ndim != 2 or rows.shape[1] != self.backend.d:
                    raise ValueError(f"embedding must be (n, {self.backend.d}), got {rows.shape}")
                if not np.isfinite(rows).all():
                    raise ValueError("embedding contains non-finite values")
                text = self.backend.decode(rows, prompt_text(prompt_id, self.config.prompt_dir))
                if not text:
                    text = "C"  # never return an empty string
                return {"id": rid, "ok": True, "text": text}
            if op == "validate":
                text = req["text"]
                ok = isinstance(text, str) and 0 < len(text) <= self.config.l_max
                return {"id": rid, "ok": True, "valid": bool(ok and self.validator.valid(text))}
            if op == "score":
                text = req["text"]
                if not isinstance(text, str) or not text:
                    raise ValueError("score requires a non-empty text")
                return {"id": rid, "ok": True, "score": self.scorer.score(text)}
            raise ValueError(f"unknown op {op!r}")
        except Exception as exc:  # noqa: BLE001  every failure maps to ok:false
            return {"id": rid, "ok": False, "error": f"{type(exc).__name__}: {exc}"}

    def close(self) -> None:
        self.scorer.close()


def serve(config: AdapterConfig, stdin=None, stdout=None) -> None:
    """Answer requests until end-of-input."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    handler = Handler(config)
    try:
        for line in stdin:
            line = line.strip()
            if not line:
                continue
            try:
                req = json.loads(line)
            except json.JSONDecodeError:
                reply = {"id": -1, "ok": False, "error": "malformed request line"}
            else:
                reply = handler.handle(req if isinstance(req, dict) else {})
            stdout.write(json.dumps(reply, ensure_ascii=False) + "\n")
            stdout.flush()
    finally:
        handler.close()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=None, help="adapter config JSON")
    args = parser.parse_args(argv)
    config = load_adapter_config(args.config) if args.config else AdapterConfig()
    serve(config)
    return 0


if __name__ == "__main__":
    sys.exit(main())
