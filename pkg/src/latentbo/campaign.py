"""The optimization loop: train surrogate, explore, decode, score, augment.

One iteration re-encodes any records without embeddings, retrains the
surrogate from scratch on the full observed dataset, perturbs every record,
selects candidates by LCB (or at random / with mean pooling under the
ablation flags), decodes them through the repair contract, filters
invalid and duplicate strings, scores the survivors, and folds them back
into the dataset. A failed iteration leaves the incoming state untouched.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .codec import CodecHandle, decode_repair, encode, validate
from .explorer import build_explore_set, kappa, select_candidates, select_random
from .gp import SurrogateModel, train_gp_stage
from .mlp import feature_forward, train_feature_stage
from .oracle import ObjectiveOracle, batch_score
from .textsim import bigram_jaccard
from .types import CampaignConfig, ObservedDataset, ObservedRecord

ABLATIONS = (None, "no-guide", "no-position")


class IterationFailure(RuntimeError):
    """An iteration aborted; the campaign state is unchanged."""


@dataclass(frozen=True)
class IterationLog:
    iteration: int
    explore_size: int
    t: int
    kappa: float
    candidates: tuple[dict, ...]  # text/status/score/acquisition/mean/std/source_index
    added: int
    best_so_far: Optional[float]
    wall_ms: float
    mlp_loss: tuple[float, float]  # first, last
    gp_nll: tuple[float, float]


@dataclass
class CampaignState:
    """Loop state; treat as immutable and replace wholesale each iteration."""

    config: CampaignConfig
    dataset: ObservedDataset
    initial_texts: frozenset[str]
    s_out: tuple[tuple[str, float], ...] = ()
    iteration: int = 0
    ablation: Optional[str] = None
    logs: tuple[IterationLog, ...] = ()

    @property
    def best_so_far(self) -> Optional[float]:
        if not self.s_out:
            return None
        return min(s for _, s in self.s_out)


def _iteration_seed(cfg: CampaignConfig, iteration: int, stream: int) -> int:
    seq = np.random.SeedSequence(entropy=cfg.seed, spawn_key=(iteration, stream))
    return int(seq.generate_state(2, np.uint64)[0])


def fit_surrogate(
    ds: ObservedDataset, cfg: CampaignConfig, pooling: str = "position", seed: int | None = None
) -> tuple[SurrogateModel, list[float], list[float]]:
    """Both training stages back to back; the net is frozen before the GP fit."""
    from .aggregation import aggregate, aggregate_mean_baseline

    aggregator = aggregate_mean_baseline if pooling == "mean" else aggregate
    net, _head, losses, _scaler = train_feature_stage(ds, cfg, aggregator=aggregator, seed=seed)
    pooled = np.stack([aggregator(rec.embedding, cfg.l_max).values for rec in ds])
    feats = feature_forward(net, pooled)
    y = np.array([rec.score for rec in ds])
    gp_state, nll_curve = train_gp_stage(feats, y, cfg)
    model = SurrogateModel(net=net, gp=gp_state, l_max=cfg.l_max, pooling=pooling)
    return model, losses, nll_curve


def run_iteration(
    state: CampaignState,
    codec: CodecHandle,
    oracle: ObjectiveOracle,
    log_sink: Optional[Callable[[dict], None]] = None,
) -> CampaignState:
    """Execute one loop pass and return the successor state.

    Any surrogate-training or endpoint failure raises IterationFailure and
    leaves `state` exactly as it was.
    """
    cfg = state.config
    if len(state.dataset) < 2:
        raise IterationFailure(f"need at least 2 observed records, have {len(state.dataset)}")
    started = time.perf_counter()
    i = state.iteration
    pooling = "mean" if state.ablation == "no-position" else "position"

    try:
        ds = state.dataset.copy()
        for idx, rec in enumerate(ds):
            if rec.embedding is None:
                ds.set_embedding(idx, encode(codec, rec.text))

        model, losses, nll_curve = fit_surrogate(
            ds, cfg, pooling=pooling, seed=_iteration_seed(cfg, i, 0)
        )

        sources = None
        if cfg.elite_fraction < 1.0:
            keep = max(1, math.ceil(len(ds) * cfg.elite_fraction))
            by_score = sorted(range(len(ds)), key=lambda j: (ds[j].score, j))
            sources = sorted(by_score[:keep])
        explore = build_explore_set(
            ds,
            cfg.samples_for(len(ds) if sources is None else len(sources)),
            cfg.lambda_perturb,
            np.random.default_rng(
                np.random.SeedSequence(entropy=cfg.seed, spawn_key=(i, 1))
            ),
            source_indices=sources,
        )

        t = len(ds) + 1
        kap = kappa(t, cfg.delta)
        if state.ablation == "no-guide":
            chosen = select_random(
                explore,
                cfg.n_cand,
                np.random.default_rng(np.random.SeedSequence(entropy=cfg.seed, spawn_key=(i, 2))),
            )
        else:
            chosen = select_candidates(explore, model, cfg.n_cand, t, cfg.delta)

        candidate_rows: list[dict] = []
        fresh_texts: list[str] = []
        seen_batch: set[str] = set()
        existing = set(ds.texts) | {text for text, _ in state.s_out}
        for cand in chosen:
            text = decode_repair(codec, cand, prompt_id="repair")
            row = {
                "text": text,
                "source_index": cand.source_index,
                "acquisition": cand.acquisition,
                "mean": cand.predicted_mean,
                "std": cand.predicted_std,
                "score": None,
            }
            if not validate(codec, text):
                row["status"] = "invalid"
            elif text in existing or text in seen_batch:
                row["status"] = "duplicate"
            else:
                row["status"] = "added"
                seen_batch.add(text)
                fresh_texts.append(text)
            candidate_rows.append(row)

        scores = batch_score(oracle, fresh_texts)
    except IterationFailure:
        raise
    except Exception as exc:
        raise IterationFailure(f"iteration {i} aborted: {exc}") from exc

    by_text = dict(zip(fresh_texts, scores))
    for row in candidate_rows:
        if row["status"] == "added":
            row["score"] = by_text[row["text"]]

    new_ds = ds
    new_out = list(state.s_out)
    for text in fresh_texts:
        new_ds.insert(ObservedRecord(text=text, score=by_text[text]))
        new_out.append((text, by_text[text]))

    wall_ms = (time.perf_counter() - started) * 1000.0
    best = min((s for _, s in new_out), default=None)
    log = IterationLog(
        iteration=i,
        explore_size=len(explore),
        t=t,
        kappa=kap,
        candidates=tuple(candidate_rows),
        added=len(fresh_texts),
        best_so_far=best,
        wall_ms=wall_ms,
        mlp_loss=(losses[0], losses[-1]),
        gp_nll=(nll_curve[0], nll_curve[-1]),
    )
    if log_sink is not None:
        _emit_log_records(log, log_sink)
    return replace(
        state,
        dataset=new_ds,
        s_out=tuple(new_out),
        iteration=i + 1,
        logs=state.logs + (log,),
    )


def _emit_log_records(log: IterationLog, sink: Callable[[dict], None]) -> None:
    sink(
        {
            "iter": log.iteration,
            "phase": "train",
            "mlp_loss_first": log.mlp_loss[0],
            "mlp_loss_last": log.mlp_loss[1],
            "gp_nll_first": log.gp_nll[0],
            "gp_nll_last": log.gp_nll[1],
        }
    )
    sink(
        {
            "iter": log.iteration,
            "phase": "explore",
            "size": log.explore_size,
            "t": log.t,
            "kappa": log.kappa,
        }
    )
    for row in log.candidates:
        sink({"iter": log.iteration, "phase": "candidate", **row})
    sink(
        {
            "iter": log.iteration,
            "phase": "update",
            "added": log.added,
            "best_so_far": log.best_so_far,
            "wall_ms": log.wall_ms,
        }
    )


def run_campaign(
    config: CampaignConfig,
    initial_dataset: ObservedDataset,
    ablation: Optional[str] = None,
    codec: Optional[CodecHandle] = None,
    oracle: Optional[ObjectiveOracle] = None,
    log_sink: Optional[Callable[[dict], None]] = None,
    stop_requested: Optional[Callable[[], bool]] = None,
    state: Optional[CampaignState] = None,
) -> tuple[CampaignState, str]:
    """Iterate until the budget is met or the iteration safeguard trips.

    Returns (final state, status) with status one of "complete", "partial",
    "stopped". Pass `state` to continue a checkpointed campaign.
    """
    if ablation not in ABLATIONS:
        raise ValueError(f"unknown ablation {ablation!r}, expected one of {ABLATIONS}")
    if len(initial_dataset) == 0:
        raise ValueError("initial dataset must be non-empty")

    own_codec = codec is None
    if codec is None:
        codec = CodecHandle(config.codec)
    own_oracle = oracle is None
    if oracle is None:
        oracle = ObjectiveOracle(config.oracle)

    if state is None:
        state = CampaignState(
            config=config,
            dataset=initial_dataset.copy(),
            initial_texts=frozenset(initial_dataset.texts),
            ablation=ablation,
        )

    try:
        while len(state.s_out) < config.budget:
            if state.iteration >= config.effective_max_iterations:
                return state, "partial"
            if stop_requested is not None and stop_requested():
                return state, "stopped"
            state = run_iteration(state, codec, oracle, log_sink=log_sink)
        return state, "complete"
    finally:
        if own_codec:
            codec.close()
        if own_oracle:
            oracle.close()


def similarity_report(
    state_or_out, window: int = 10, initial: Optional[ObservedDataset] = None
) -> list[tuple[float, float]]:
    """Per-window bigram-overlap of newly generated strings against the start set.

    For each consecutive window of the output set, reports the mean over all
    (generated, initial) pairs and the mean of each generated string's best
    match. Trailing partial windows are included.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    if isinstance(state_or_out, CampaignState):
        generated = [text for text, _ in state_or_out.s_out]
        initial_texts = sorted(state_or_out.initial_texts)
    else:
        generated = list(state_or_out)
        if initial is None:
            raise ValueError("initial dataset required when passing raw strings")
        initial_texts = initial.texts if isinstance(initial, ObservedDataset) else list(initial)

    report = []
    for start in range(0, len(generated), window):
        chunk = generated[start : start + window]
        sims = [[bigram_jaccard(g, ini) for ini in initial_texts] for g in chunk]
        mean_sim = float(np.mean([s for row in sims for s in row])) if initial_texts else 0.0
        max_sim = float(np.mean([max(row) for row in sims])) if initial_texts else 0.0
        report.append((mean_sim, max_sim))
    return report


def summary_rows(state: CampaignState) -> list[tuple[int, str, float]]:
    """(rank, text, score) rows over the output set, best first."""
    ordered = sorted(enumerate(state.s_out), key=lambda p: (p[1][1], p[0]))
    return [(rank + 1, text, score) for rank, (_, (text, score)) in enumerate(ordered)]


def top_k_means(scores: list[float], ks: tuple[int, ...] = (1, 5, 10, 20)) -> dict[int, float]:
    """Mean of the k best (lowest) scores for each k, over however many exist."""
    ordered = sorted(scores)
    out = {}
    for k in ks:
        head = ordered[: min(k, len(ordered))]
        if head:
            out[k] = float(np.mean(head))
    return out
