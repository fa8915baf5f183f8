"""Pooling of variable-length token embeddings into fixed 2d vectors.

The position-weighted pool maps an (n, d) sequence to a 2d vector

    out = (1/n) * sum_t concat(p_t * z_t, (l_max - p_t) * z_t) / l_max

with 1-indexed positions p_t in {1, ..., n}. The first and second halves
always sum to the plain token mean, which doubles as a numerical health
check. The mean pool (concat(mean, mean)) is kept as the position-free
baseline. All functions are pure and safe to call in parallel.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .types import (
    CandidateEmbedding,
    CapacityError,
    EmptySequenceError,
    LengthExceededError,
    TokenEmbeddingSeq,
)

PERMUTATION_ENUM_CAP = 8


@dataclass(frozen=True)
class AggregatedEmbedding:
    """A pooled 2d vector plus the source length it came from."""

    values: np.ndarray  # (2d,), float64
    n: int
    l_max: int

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 1 or vals.shape[0] % 2 != 0:
            raise ValueError(f"aggregated vector must be 1-d of even length, got {vals.shape}")
        if not np.isfinite(vals).all():
            raise ValueError("aggregated vector contains non-finite entries")
        if self.n > self.l_max:
            raise LengthExceededError(f"n={self.n} exceeds l_max={self.l_max}")
        vals.setflags(write=False)

    @property
    def first_half(self) -> np.ndarray:
        return self.values[: self.values.shape[0] // 2]

    @property
    def second_half(self) -> np.ndarray:
        return self.values[self.values.shape[0] // 2 :]


def _token_matrix(seq) -> np.ndarray:
    if isinstance(seq, (TokenEmbeddingSeq, CandidateEmbedding)):
        return seq.vectors
    return np.asarray(seq, dtype=np.float64)


def _check_shape(vectors: np.ndarray, l_max: int) -> int:
    if vectors.ndim != 2:
        raise ValueError(f"expected (n, d) token vectors, got shape {vectors.shape}")
    n = vectors.shape[0]
    if n == 0:
        raise EmptySequenceError("cannot aggregate an empty sequence")
    if n > l_max:
        raise LengthExceededError(f"sequence length {n} exceeds l_max={l_max}")
    return n


def aggregate(seq, l_max: int) -> AggregatedEmbedding:
    """Position-weighted pool of a token embedding sequence into 2d values."""
    vectors = _token_matrix(seq)
    n = _check_shape(vectors, l_max)
    positions = np.arange(1, n + 1, dtype=np.float64)
    scale = float(n) * float(l_max)
    first = positions @ vectors / scale
    second = (l_max - positions) @ vectors / scale
    return AggregatedEmbedding(np.concatenate([first, second]), n=n, l_max=l_max)


def aggregate_mean_baseline(seq, l_max: int) -> AggregatedEmbedding:
    """Position-free pool: concat(mean, mean). Used for the no-position ablation."""
    vectors = _token_matrix(seq)
    n = _check_shape(vectors, l_max)
    mean = vectors.sum(axis=0) / n
    return AggregatedEmbedding(np.concatenate([mean, mean]), n=n, l_max=l_max)


def permutation_expectation(vectors, l_max: int) -> AggregatedEmbedding:
    """Exact average of aggregate() over all n! orderings of the token multiset.

    Equals concat(mu*(n+1)/(2*l_max), mu*(l_max-(n+1)/2)/l_max) with mu the
    token mean: averaging over orderings sends every position weight to the
    same mean token, so the pool treats all positions alike.
    """
    mat = np.asarray(vectors, dtype=np.float64)
    n = _check_shape(mat, l_max)
    if n > PERMUTATION_ENUM_CAP:
        raise CapacityError(
            f"exact permutation enumeration capped at n={PERMUTATION_ENUM_CAP}, got n={n}"
        )
    total = np.zeros(2 * mat.shape[1], dtype=np.float64)
    count = 0
    for order in permutations(range(n)):
        total += aggregate(mat[list(order)], l_max).values
        count += 1
    return AggregatedEmbedding(total / count, n=n, l_max=l_max)


def permutation_expectation_closed_form(vectors, l_max: int) -> np.ndarray:
    """Closed form the enumeration must reproduce; kept separate for checks."""
    mat = np.asarray(vectors, dtype=np.float64)
    n = _check_shape(mat, l_max)
    mu = mat.mean(axis=0)
    first = mu * (n + 1) / (2.0 * l_max)
    second = mu * (l_max - (n + 1) / 2.0) / l_max
    return np.concatenate([first, second])
