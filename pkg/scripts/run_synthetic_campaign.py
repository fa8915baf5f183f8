#!/usr/bin/env python3
"""Paired guided-vs-ablation campaigns on the synthetic objective.

Runs the full loop and one ablation arm from identical initial datasets
across several seeds, then reports per-seed best scores, medians, and the
one-sided signed-rank p-value. This is the desk-scale targeted-generation
comparison; `latentbo report <full_dir> <ablation_dir>` reproduces the
statistics from the written campaign directories.

Usage:
    python3 scripts/run_synthetic_campaign.py --seeds 10 --iterations 20 \
        --out /tmp/campaigns --ablation no-guide
"""

import argparse
import json
import os
import statistics
import sys
import time

from latentbo.campaign import run_campaign
from latentbo.codec import CodecHandle, encode
from latentbo.config import config_hash, random_strings, save_checkpoint
from latentbo.oracle import ObjectiveOracle, score
from latentbo.stats import wilcoxon_one_sided
from latentbo.types import (
    CampaignConfig,
    CodecEndpoint,
    ObservedDataset,
    ObservedRecord,
    OracleEndpoint,
)

ALPHABET = "ABCDEFGHIJKLMNOP"
TARGET = "ABCDEFGHIJ"


def build_config(seed: int, iterations: int, n_cand: int, d: int) -> CampaignConfig:
    return CampaignConfig(
        seed=seed,
        d=d,
        budget=iterations * n_cand,
        codec=CodecEndpoint(kind="mock", d=d, l_max=40, alphabet=ALPHABET, table_seed=7),
        oracle=OracleEndpoint(kind="synthetic", target=TARGET),
        l_max=40,
        lambda_perturb=0.4,
        n_cand=n_cand,
        samples_per_record=10,
        mlp_dims=(2 * d, 64, 64, 20),
        max_iterations=iterations,
    )


def initial_dataset(cfg: CampaignConfig, codec: CodecHandle, oracle: ObjectiveOracle, count: int):
    ds = ObservedDataset()
    for text in random_strings(ALPHABET, count, 6, 12, cfg.seed):
        ds.insert(
            ObservedRecord(text=text, score=score(oracle, text), embedding=encode(codec, text))
        )
    return ds


def run_arm(cfg: CampaignConfig, ablation, out_dir=None):
    codec = CodecHandle(cfg.codec)
    oracle = ObjectiveOracle(cfg.oracle)
    ds = initial_dataset(cfg, codec, oracle, 20)
    state, status = run_campaign(cfg, ds, ablation=ablation, codec=codec, oracle=oracle)
    best = state.best_so_far if state.s_out else float("inf")
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        raw = {"seed": cfg.seed, "ablation": ablation}
        save_checkpoint(
            os.path.join(out_dir, "checkpoint.json"), state, status, config_hash(raw), raw
        )
    return best, len(state.s_out), oracle.calls


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--iterations", type=int, default=20)
    parser.add_argument("--n-cand", type=int, default=5)
    parser.add_argument("--d", type=int, default=8)
    parser.add_argument("--ablation", default="no-guide", choices=["no-guide", "no-position"])
    parser.add_argument("--out", default=None)
    args = parser.parse_args()

    full_bests, ablation_bests = [], []
    started = time.time()
    for seed in range(args.seeds):
        cfg = build_config(seed, args.iterations, args.n_cand, args.d)
        out_full = os.path.join(args.out, "full", f"seed-{seed}") if args.out else None
        out_abl = os.path.join(args.out, args.ablation, f"seed-{seed}") if args.out else None
        best_full, n_full, calls_full = run_arm(cfg, None, out_full)
        best_abl, n_abl, calls_abl = run_arm(cfg, args.ablation, out_abl)
        full_bests.append(best_full)
        ablation_bests.append(best_abl)
        print(
            f"seed {seed}: full best {best_full:.4f} ({n_full} mols, {calls_full} calls) | "
            f"{args.ablation} best {best_abl:.4f} ({n_abl} mols, {calls_abl} calls)",
            flush=True,
        )

    med_full = statistics.median(full_bests)
    med_abl = statistics.median(ablation_bests)
    p = wilcoxon_one_sided(full_bests, ablation_bests) if args.seeds >= 5 else float("nan")
    wins = sum(f < a for f, a in zip(full_bests, ablation_bests))
    print(f"\nmedian full {med_full:.4f} vs {args.ablation} {med_abl:.4f} "
          f"({wins}/{args.seeds} wins), one-sided p = {p:.5f}")
    print(f"wall time {time.time() - started:.1f}s")
    return 0 if (med_full < med_abl and p < 0.05) else 1


if __name__ == "__main__":
    sys.exit(main())
