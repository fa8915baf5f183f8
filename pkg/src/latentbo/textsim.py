"""Character-bigram Jaccard similarity between strings."""

from __future__ import annotations


def bigrams(text: str) -> frozenset[str]:
    return frozenset(text[i : i + 2] for i in range(len(text) - 1))


def jaccard(a: frozenset, b: frozenset) -> float:
    if not a and not b:
        return 1.0
    union = len(a | b)
    return len(a & b) / union


def bigram_jaccard(a: str, b: str) -> float:
    return jaccard(bigrams(a), bigrams(b))
