"""Shared domain types and dataset bookkeeping.

Every other module consumes these. Values are immutable once constructed;
the campaign loop is the single writer of an ObservedDataset.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np


class LengthExceededError(ValueError):
    """Sequence longer than the configured token cap."""


class EmptySequenceError(ValueError):
    """Operation requires at least one token."""


class InsufficientDataError(ValueError):
    """Training requires more observations than were supplied."""


class NumericalFailureError(RuntimeError):
    """Linear-algebra failure that survived jitter escalation."""


class CapacityError(ValueError):
    """Exact enumeration requested beyond its feasible size."""


class InvalidConfigError(ValueError):
    """Configuration rejected; `field` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"config field '{field_name}': {message}")
        self.field = field_name


def _as_float_matrix(vectors) -> np.ndarray:
    arr = np.asarray(vectors, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-d array of token vectors, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class TokenEmbeddingSeq:
    """A variable-length sequence of d-dimensional latent vectors.

    `token_ids[t]` identifies the token at (1-indexed) position t+1 and
    `vectors[t]` is its embedding row.
    """

    token_ids: tuple[int, ...]
    vectors: np.ndarray  # (n, d), float64

    def __post_init__(self):
        vecs = _as_float_matrix(self.vectors)
        object.__setattr__(self, "vectors", vecs)
        object.__setattr__(self, "token_ids", tuple(int(t) for t in self.token_ids))
        if len(self.token_ids) == 0 or vecs.shape[0] == 0:
            raise EmptySequenceError("token embedding sequence must be non-empty")
        if len(self.token_ids) != vecs.shape[0]:
            raise ValueError(
                f"{len(self.token_ids)} token ids for {vecs.shape[0]} vector rows"
            )
        if any(t < 0 for t in self.token_ids):
            raise ValueError("token ids must be non-negative")
        if not np.isfinite(vecs).all():
            raise ValueError("embedding contains non-finite entries")
        vecs.setflags(write=False)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def d(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class CandidateEmbedding:
    """A perturbed latent point with provenance back to its source record."""

    vectors: np.ndarray  # (n, d), float64
    source_index: int
    noise_seed: int
    acquisition: Optional[float] = None
    predicted_mean: Optional[float] = None
    predicted_std: Optional[float] = None

    def __post_init__(self):
        vecs = _as_float_matrix(self.vectors)
        object.__setattr__(self, "vectors", vecs)
        if vecs.shape[0] == 0:
            raise EmptySequenceError("candidate embedding must be non-empty")
        if not np.isfinite(vecs).all():
            raise ValueError("candidate embedding contains non-finite entries")
        if self.source_index < 0:
            raise ValueError("source_index must be a valid dataset index")
        vecs.setflags(write=False)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    def with_scores(self, acquisition: float, mean: float, std: float) -> "CandidateEmbedding":
        return replace(
            self, acquisition=float(acquisition), predicted_mean=float(mean), predicted_std=float(std)
        )


@dataclass(frozen=True)
class ObservedRecord:
    """One (text, score) observation; lower score is better."""

    text: str
    score: float
    embedding: Optional[TokenEmbeddingSeq] = None

    def __post_init__(self):
        if not self.text:
            raise ValueError("record text must be non-empty")
        if not np.isfinite(self.score):
            raise ValueError("record score must be finite")
        object.__setattr__(self, "score", float(self.score))


class ObservedDataset:
    """Insertion-ordered (text, score) observations, deduplicated by exact text.

    Single-writer (the campaign loop), any number of readers.
    """

    def __init__(self, records: Sequence[ObservedRecord] = ()):
        self._records: list[ObservedRecord] = []
        self._index: dict[str, int] = {}
        for rec in records:
            inserted = self.insert(rec)
            if not inserted:
                raise ValueError(f"duplicate text in initial records: {rec.text!r}")

    def insert(self, rec: ObservedRecord) -> bool:
        """Append `rec` unless its text is already present. Returns True if appended."""
        if rec.text in self._index:
            return False
        self._index[rec.text] = len(self._records)
        self._records.append(rec)
        return True

    def set_embedding(self, index: int, embedding: TokenEmbeddingSeq) -> None:
        rec = self._records[index]
        self._records[index] = replace(rec, embedding=embedding)

    def __len__(self) -> int:
        return len(self._records)

    def __getitem__(self, i: int) -> ObservedRecord:
        return self._records[i]

    def __iter__(self):
        return iter(self._records)

    def __contains__(self, text: str) -> bool:
        return text in self._index

    @property
    def texts(self) -> list[str]:
        return [r.text for r in self._records]

    def copy(self) -> "ObservedDataset":
        ds = ObservedDataset()
        ds._records = list(self._records)
        ds._index = dict(self._index)
        return ds


def dataset_insert(ds: ObservedDataset, rec: ObservedRecord) -> tuple[ObservedDataset, bool]:
    """Insert `rec` into a copy of `ds`; no-op (flag False) when the text exists."""
    out = ds.copy()
    inserted = out.insert(rec)
    return out, inserted


def top_k(ds: ObservedDataset, k: int, exclude: set[str] = frozenset()) -> list[ObservedRecord]:
    """Up to k lowest-score records whose text is not excluded.

    Sorted ascending by score; ties broken by insertion order.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    eligible = [(rec.score, i, rec) for i, rec in enumerate(ds) if rec.text not in exclude]
    eligible.sort(key=lambda t: (t[0], t[1]))
    return [rec for _, _, rec in eligible[:k]]


@dataclass(frozen=True)
class PredictiveDistribution:
    """Surrogate posterior at one point, in score units."""

    mean: float
    std: float

    def __post_init__(self):
        if not (np.isfinite(self.mean) and np.isfinite(self.std)):
            raise ValueError("predictive mean/std must be finite")
        if self.std < 0:
            raise ValueError("predictive std must be >= 0")


@dataclass(frozen=True)
class CodecEndpoint:
    """Where encode/decode/validate requests go.

    kind="mock" runs the in-process character codec; kind="external" spawns
    `command` as a child process speaking the newline-delimited wire protocol.
    """

    kind: str  # "mock" | "external"
    d: int = 16
    l_max: int = 80
    alphabet: str = "ABCDEFGH"
    table_seed: int = 0
    command: tuple[str, ...] = ()
    timeout: float = 60.0

    def __post_init__(self):
        if self.kind not in ("mock", "external"):
            raise InvalidConfigError("codec.kind", f"unknown kind {self.kind!r}")
        if self.d < 1:
            raise InvalidConfigError("codec.d", "embedding dimension must be >= 1")
        if self.l_max < 1:
            raise InvalidConfigError("codec.l_max", "token cap must be >= 1")
        if self.kind == "mock" and len(set(self.alphabet)) != len(self.alphabet):
            raise InvalidConfigError("codec.alphabet", "alphabet characters must be distinct")
        if self.kind == "external" and not self.command:
            raise InvalidConfigError("codec.command", "external codec requires a command")


@dataclass(frozen=True)
class OracleEndpoint:
    """The black-box objective: deterministic synthetic landscape or external scorer."""

    kind: str  # "synthetic" | "external"
    target: str = "ABCDABCD"
    w_match: float = 10.0
    w_len: float = 0.01
    command: tuple[str, ...] = ()
    cache_path: Optional[str] = None
    timeout: float = 60.0

    def __post_init__(self):
        if self.kind not in ("synthetic", "external"):
            raise InvalidConfigError("oracle.kind", f"unknown kind {self.kind!r}")
        if self.kind == "synthetic" and not self.target:
            raise InvalidConfigError("oracle.target", "synthetic oracle needs a non-empty target")
        if not (np.isfinite(self.w_match) and np.isfinite(self.w_len)):
            raise InvalidConfigError("oracle.w_match", "oracle weights must be finite")
        if self.kind == "external" and not self.command:
            raise InvalidConfigError("oracle.command", "external oracle requires a command")


@dataclass(frozen=True)
class CampaignConfig:
    """All campaign knobs, mirrored field-for-field by the config file."""

    seed: int
    d: int
    budget: int
    codec: CodecEndpoint
    oracle: OracleEndpoint
    l_max: int = 80
    lambda_perturb: float = 0.4
    samples_per_record: Optional[int] = None  # None -> clamp(ceil(2000/N), 5, 200)
    n_cand: int = 5
    delta: float = 0.1
    mlp_dims: Optional[tuple[int, ...]] = None  # None -> (2d, 256, 256, 256, 20)
    mlp_lr: float = 0.001
    gp_lr: float = 0.1
    mlp_epochs: int = 100
    gp_epochs: int = 100
    gp_jitter: float = 1e-6
    max_iterations: Optional[int] = None  # None -> ceil(10*budget/n_cand)
    # Extension beyond the core loop: perturb only around the best
    # ceil(elite_fraction * N) records instead of all of them.
    elite_fraction: float = 1.0

    def __post_init__(self):
        if self.d < 1:
            raise InvalidConfigError("d", "embedding dimension must be >= 1")
        if self.l_max < 1:
            raise InvalidConfigError("l_max", "must be >= 1")
        if self.lambda_perturb < 0:
            raise InvalidConfigError("lambda_perturb", "must be >= 0")
        if self.n_cand < 1:
            raise InvalidConfigError("n_cand", "must be >= 1")
        if not (0.0 < self.delta < 1.0):
            raise InvalidConfigError("delta", "must lie strictly in (0, 1)")
        if self.budget < 1:
            raise InvalidConfigError("budget", "must be >= 1")
        if self.samples_per_record is not None and self.samples_per_record < 1:
            raise InvalidConfigError("samples_per_record", "must be >= 1 when given")
        if self.mlp_dims is not None:
            dims = tuple(int(w) for w in self.mlp_dims)
            object.__setattr__(self, "mlp_dims", dims)
            if len(dims) < 2:
                raise InvalidConfigError("mlp_dims", "needs at least input and output widths")
            if dims[0] != 2 * self.d:
                raise InvalidConfigError("mlp_dims", f"first entry must equal 2*d = {2 * self.d}")
            if any(w < 1 for w in dims):
                raise InvalidConfigError("mlp_dims", "layer widths must be positive")
        if self.mlp_lr <= 0 or self.gp_lr <= 0:
            raise InvalidConfigError("mlp_lr", "learning rates must be positive")
        if self.mlp_epochs < 1 or self.gp_epochs < 1:
            raise InvalidConfigError("mlp_epochs", "epoch counts must be >= 1")
        if self.gp_jitter <= 0:
            raise InvalidConfigError("gp_jitter", "must be positive")
        if not (0.0 < self.elite_fraction <= 1.0):
            raise InvalidConfigError("elite_fraction", "must lie in (0, 1]")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise InvalidConfigError("max_iterations", "must be >= 1 when given")

    @property
    def effective_mlp_dims(self) -> tuple[int, ...]:
        if self.mlp_dims is not None:
            return self.mlp_dims
        return (2 * self.d, 256, 256, 256, 20)

    @property
    def effective_max_iterations(self) -> int:
        if self.max_iterations is not None:
            return self.max_iterations
        return -(-10 * self.budget // self.n_cand)

    def samples_for(self, n_records: int) -> int:
        if self.samples_per_record is not None:
            return self.samples_per_record
        return min(200, max(5, -(-2000 // max(1, n_records))))
