"""The black-box objective behind an interface, with a persistent score cache.

The synthetic landscape rewards character-bigram overlap with a hidden
target string (set Jaccard, the same quantity fingerprint Tanimoto measures)
and penalizes length mismatch:

    score(s) = -w_match * J(bigrams(s), bigrams(target)) + w_len * ||s| - |target||

Lower is better throughout. External oracles reuse the wire protocol's
score op. Every scored string is cached so the same text always returns the
identical value, even against stochastic external scorers.
"""

from __future__ import annotations

import json
import os
from typing import Optional

import numpy as np

from .protocol import EndpointClient, ProtocolError
from .textsim import bigram_jaccard
from .types import OracleEndpoint


class ScoreCache:
    """Append-only text->score map, one JSON object per line on disk."""

    def __init__(self, path: Optional[str] = None):
        self._path = path
        self._scores: dict[str, float] = {}
        self._fh = None
        if path is not None and os.path.exists(path):
            with open(path, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    rec = json.loads(line)
                    self._scores[rec["text"]] = float(rec["score"])

    def __contains__(self, text: str) -> bool:
        return text in self._scores

    def __len__(self) -> int:
        return len(self._scores)

    def get(self, text: str) -> Optional[float]:
        return self._scores.get(text)

    def put(self, text: str, score: float) -> None:
        if text in self._scores:
            return
        self._scores[text] = score
        if self._path is not None:
            if self._fh is None:
                self._fh = open(self._path, "a", encoding="utf-8")
            self._fh.write(json.dumps({"text": text, "score": score}, ensure_ascii=False) + "\n")
            self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


class ObjectiveOracle:
    """Scores strings, caching every answer; synthetic or external backend."""

    def __init__(
        self,
        endpoint: OracleEndpoint,
        cache: Optional[ScoreCache] = None,
        client: Optional[EndpointClient] = None,
    ):
        self.endpoint = endpoint
        self.cache = cache if cache is not None else ScoreCache(endpoint.cache_path)
        self.calls = 0  # backend evaluations, not cache hits
        self.client = client
        if endpoint.kind == "external" and self.client is None:
            self.client = EndpointClient(endpoint.command, timeout=endpoint.timeout)
            self.client.hello()

    def _evaluate(self, text: str) -> float:
        self.calls += 1
        if self.endpoint.kind == "synthetic":
            sim = bigram_jaccard(text, self.endpoint.target)
            penalty = abs(len(text) - len(self.endpoint.target))
            return -self.endpoint.w_match * sim + self.endpoint.w_len * penalty
        try:
            reply = self.client.request("score", text=text)
        except ProtocolError:
            # one retry, then surface
            reply = self.client.request("score", text=text)
        value = float(reply["score"])
        if not np.isfinite(value):
            raise ProtocolError(f"endpoint returned a non-finite score for {text!r}")
        return value

    def close(self) -> None:
        self.cache.close()
        if self.client is not None:
            self.client.close()


def score(oracle: ObjectiveOracle, text: str) -> float:
    """Score one string, from cache when possible."""
    if not text:
        raise ValueError("cannot score an empty string")
    cached = oracle.cache.get(text)
    if cached is not None:
        return cached
    value = oracle._evaluate(text)
    oracle.cache.put(text, value)
    return value


def batch_score(oracle: ObjectiveOracle, texts: list[str]) -> list[float]:
    """Scores aligned with `texts`; each distinct uncached text hits the backend once."""
    results: dict[str, float] = {}
    for text in texts:
        if text not in results:
            results[text] = score(oracle, text)
    return [results[t] for t in texts]
