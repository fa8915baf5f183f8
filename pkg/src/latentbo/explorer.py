"""Latent-space exploration: multiplicative perturbations and LCB selection.

Each source embedding is perturbed element-wise by eps ~ N(1, lam) with lam
read as a variance, the surrogate scores the whole explore set in one batch,
and the n_cand lowest lower-confidence-bound points are kept. Every
candidate gets its own derived seed so parallel evaluation order can never
change results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gp import SurrogateModel, gp_predict_batch
from .types import CandidateEmbedding, ObservedDataset, TokenEmbeddingSeq

_SEED_BOUND = 2**63


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


@dataclass(frozen=True)
class ExploreSet:
    """All perturbed candidates of one round: M per source record."""

    candidates: tuple[CandidateEmbedding, ...]
    seed: int
    samples_per_record: int

    def __len__(self) -> int:
        return len(self.candidates)


def perturb(z, lambda_perturb: float, rng) -> CandidateEmbedding:
    """Multiplicative Gaussian perturbation of one embedding sequence.

    `rng` may be an integer seed (recorded verbatim as the candidate's
    noise_seed) or a Generator, in which case a fresh child seed is drawn
    from it first so the candidate stays reproducible in isolation.
    """
    if lambda_perturb < 0:
        raise ValueError("lambda_perturb must be >= 0")
    if isinstance(z, TokenEmbeddingSeq) or isinstance(z, CandidateEmbedding):
        vectors = z.vectors
        source_index = getattr(z, "source_index", 0)
    else:
        vectors = np.asarray(z, dtype=np.float64)
        source_index = 0

    if isinstance(rng, (int, np.integer)):
        seed = int(rng)
    else:
        seed = int(_as_generator(rng).integers(_SEED_BOUND))
    noise_rng = np.random.default_rng(np.random.SeedSequence(seed))
    eps = noise_rng.normal(1.0, math.sqrt(lambda_perturb), size=vectors.shape)
    return CandidateEmbedding(vectors=vectors * eps, source_index=source_index, noise_seed=seed)


def build_explore_set(
    ds: ObservedDataset,
    m: int,
    lambda_perturb: float,
    rng,
    source_indices: list[int] | None = None,
) -> ExploreSet:
    """Exactly m perturbations per source record, provenance recorded.

    `source_indices` optionally restricts the sources (elite-subset extension);
    default is every record in insertion order.
    """
    if m < 1:
        raise ValueError("need at least one perturbation per record")
    if len(ds) == 0:
        raise ValueError("cannot explore around an empty dataset")
    gen = _as_generator(rng)
    root_seed = int(gen.integers(_SEED_BOUND))
    seeder = np.random.default_rng(np.random.SeedSequence(root_seed))

    indices = list(range(len(ds))) if source_indices is None else list(source_indices)
    candidates = []
    for i in indices:
        rec = ds[i]
        if rec.embedding is None:
            raise ValueError(f"record {i} has no embedding")
        for _ in range(m):
            cand_seed = int(seeder.integers(_SEED_BOUND))
            cand = perturb(rec.embedding, lambda_perturb, cand_seed)
            candidates.append(
                CandidateEmbedding(
                    vectors=cand.vectors, source_index=i, noise_seed=cand.noise_seed
                )
            )
    return ExploreSet(candidates=tuple(candidates), seed=root_seed, samples_per_record=m)


def kappa(t: int, delta: float) -> float:
    """Exploration coefficient sqrt(2 ln(t^2 pi^2 / (6 delta))); grows with t."""
    if t < 1:
        raise ValueError("t must be >= 1")
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie strictly in (0, 1)")
    return math.sqrt(2.0 * math.log(t * t * math.pi**2 / (6.0 * delta)))


def lcb(pred, kappa_value: float) -> float:
    """Lower confidence bound mean - kappa * std (minimized for selection)."""
    if kappa_value < 0:
        raise ValueError("kappa must be >= 0")
    return float(pred.mean - kappa_value * pred.std)


def select_candidates(
    explore: ExploreSet,
    model: SurrogateModel,
    n_cand: int,
    t: int,
    delta: float,
) -> list[CandidateEmbedding]:
    """The n_cand candidates with lowest LCB, ties broken by explore-set order.

    Returned candidates carry their acquisition value and predictive moments.
    """
    if model is None:
        raise ValueError("surrogate model is not trained")
    if n_cand < 1:
        raise ValueError("n_cand must be >= 1")
    if len(explore.candidates) == 0:
        return []
    means, stds = gp_predict_batch(model, explore.candidates)
    kap = kappa(t, delta)
    acq = means - kap * stds
    order = np.lexsort((np.arange(len(acq)), acq))[: min(n_cand, len(acq))]
    return [
        explore.candidates[i].with_scores(acq[i], means[i], stds[i]) for i in order
    ]


def select_random(explore: ExploreSet, n_cand: int, rng) -> list[CandidateEmbedding]:
    """Uniform sample without replacement; the no-guide ablation's selection rule."""
    if n_cand < 1:
        raise ValueError("n_cand must be >= 1")
    gen = _as_generator(rng)
    size = min(n_cand, len(explore.candidates))
    chosen = gen.choice(len(explore.candidates), size=size, replace=False)
    return [explore.candidates[int(i)] for i in chosen]
