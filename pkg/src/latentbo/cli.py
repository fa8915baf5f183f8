"""Command-line front end: run, resume, report, selftest.

Exit codes: 0 when the campaign met its budget (or the report/selftest
succeeded), 2 for a partial campaign, 1 for any error. All files land
inside the chosen output directory. LATENTBO_OUT supplies the output
directory when --out is absent.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import signal
import sys

from .campaign import run_campaign, similarity_report, summary_rows, top_k_means
from .codec import CodecHandle
from .config import (
    config_hash,
    load_checkpoint,
    load_config,
    materialize_initial,
    parse_config,
    save_checkpoint,
    state_from_checkpoint,
)
from .oracle import ObjectiveOracle, ScoreCache
from .selftest import run_selftest
from .stats import wilcoxon_one_sided
from .types import InvalidConfigError

OUT_ENV_VAR = "LATENTBO_OUT"


def _resolve_out(args) -> str:
    out = args.out or os.environ.get(OUT_ENV_VAR)
    if not out:
        raise InvalidConfigError("--out", f"no output directory (flag or {OUT_ENV_VAR})")
    os.makedirs(out, exist_ok=True)
    return out


def _apply_overrides(raw: dict, args) -> dict:
    raw = dict(raw)
    if getattr(args, "seed", None) is not None:
        raw["seed"] = args.seed
    if getattr(args, "budget", None) is not None:
        raw["budget"] = args.budget
    return raw


def _build_backends(cfg, out_dir: str):
    codec = CodecHandle(cfg.codec)
    cache_path = cfg.oracle.cache_path
    if cache_path is not None and not os.path.isabs(cache_path):
        cache_path = os.path.join(out_dir, cache_path)
    oracle = ObjectiveOracle(cfg.oracle, cache=ScoreCache(cache_path))
    return codec, oracle


def _write_summary(path: str, state) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["rank", "text", "score"])
        for rank, text, score in summary_rows(state):
            writer.writerow([rank, text, repr(score)])


def _campaign_driver(args, resume: bool) -> int:
    out_dir = _resolve_out(args)
    cfg, init, raw = load_config(args.config)
    raw = _apply_overrides(raw, args)
    cfg, init = parse_config(raw)
    cfg_hash = config_hash(raw)

    state = None
    ablation = getattr(args, "ablation", None)
    checkpoint_path = os.path.join(out_dir, "checkpoint.json")
    if resume:
        payload = load_checkpoint(checkpoint_path)
        if payload["config_hash"] != cfg_hash:
            raise InvalidConfigError(
                "--config", "config hash does not match the checkpointed campaign"
            )
        state = state_from_checkpoint(payload, cfg)
        ablation = payload.get("ablation")

    codec, oracle = _build_backends(cfg, out_dir)
    stop = {"requested": False}

    def _on_signal(signum, frame):
        stop["requested"] = True

    old_int = signal.signal(signal.SIGINT, _on_signal)
    old_term = signal.signal(signal.SIGTERM, _on_signal)

    log_path = os.path.join(out_dir, "logs.jsonl")
    log_fh = open(log_path, "a" if resume else "w", encoding="utf-8")

    def sink(record: dict) -> None:
        log_fh.write(json.dumps(record, ensure_ascii=False) + "\n")
        if not args.quiet and record.get("phase") == "update":
            print(
                f"iter {record['iter']}: +{record['added']} molecules, "
                f"best {record['best_so_far']}",
                file=sys.stderr,
            )

    try:
        if state is None:
            initial = materialize_initial(cfg, init, codec, oracle)
        else:
            initial = state.dataset  # placeholder; run_campaign uses `state`
        final, status = run_campaign(
            cfg,
            initial,
            ablation=ablation,
            codec=codec,
            oracle=oracle,
            log_sink=sink,
            stop_requested=lambda: stop["requested"],
            state=state,
        )
    finally:
        log_fh.close()
        codec.close()
        oracle.close()
        signal.signal(signal.SIGINT, old_int)
        signal.signal(signal.SIGTERM, old_term)

    save_checkpoint(checkpoint_path, final, status, cfg_hash, raw)
    _write_summary(os.path.join(out_dir, "summary.csv"), final)
    if not args.quiet:
        print(f"status: {status}, generated {len(final.s_out)} of {cfg.budget}", file=sys.stderr)
    return 0 if status == "complete" else 2


def _load_campaign_dir(path: str) -> dict:
    checkpoint = os.path.join(path, "checkpoint.json")
    if not os.path.exists(checkpoint):
        raise FileNotFoundError(f"no checkpoint.json under {path}")
    return load_checkpoint(checkpoint)


def _best_scores_per_seed(path: str) -> list[float]:
    """Best score per campaign under `path` (seed-* subdirs, else the dir itself)."""
    subdirs = sorted(
        d for d in os.listdir(path) if d.startswith("seed-") and os.path.isdir(os.path.join(path, d))
    ) if os.path.isdir(path) else []
    dirs = [os.path.join(path, d) for d in subdirs] or [path]
    bests = []
    for d in dirs:
        payload = _load_campaign_dir(d)
        scores = [rec["score"] for rec in payload["generated"]]
        if not scores:
            raise ValueError(f"campaign under {d} produced no molecules")
        bests.append(min(scores))
    return bests


def cmd_report(args) -> int:
    single = os.path.exists(os.path.join(args.dir, "checkpoint.json"))
    if single:
        payload = _load_campaign_dir(args.dir)
        scores = [rec["score"] for rec in payload["generated"]]
        if not scores:
            print("no generated molecules; nothing to report")
            return 1
        means = top_k_means(scores)
        for k in (1, 5, 10, 20):
            if k in means:
                print(f"top-{k} mean score: {means[k]:.6f}")
        initial = [rec["text"] for rec in payload["initial"]]
        generated = [rec["text"] for rec in payload["generated"]]
        print("window,mean_similarity,max_similarity")
        for w, (mean_sim, max_sim) in enumerate(
            similarity_report(generated, window=args.window, initial=initial)
        ):
            print(f"{w},{mean_sim:.6f},{max_sim:.6f}")
    else:
        bests = _best_scores_per_seed(args.dir)
        print(f"best-per-seed: {['%.4f' % b for b in bests]}")

    if args.against is not None:
        a = _best_scores_per_seed(args.dir)
        b = _best_scores_per_seed(args.against)
        if len(a) != len(b):
            print(f"cannot pair {len(a)} seeds against {len(b)}", file=sys.stderr)
            return 1
        try:
            p = wilcoxon_one_sided(a, b)
            print(f"wilcoxon one-sided p (first below second): {p:.6g}")
        except ValueError as exc:
            print(f"wilcoxon: undefined ({exc})")
    return 0


def cmd_selftest(args) -> int:
    results = run_selftest(table_path=args.table)
    failed = 0
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        failed += 0 if ok else 1
    return 0 if failed == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="latentbo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a campaign from a config file")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--seed", type=int, default=None, help="override the config seed")
    run_p.add_argument("--out", default=None)
    run_p.add_argument("--ablation", choices=["no-guide", "no-position"], default=None)
    run_p.add_argument("--budget", type=int, default=None, help="override the generation budget")
    run_p.add_argument("--quiet", action="store_true")

    res_p = sub.add_parser("resume", help="continue a checkpointed campaign")
    res_p.add_argument("--config", required=True)
    res_p.add_argument("--out", default=None)
    res_p.add_argument("--quiet", action="store_true")

    rep_p = sub.add_parser("report", help="summarize a campaign directory")
    rep_p.add_argument("dir")
    rep_p.add_argument("against", nargs="?", default=None)
    rep_p.add_argument("--window", type=int, default=10)

    st_p = sub.add_parser("selftest", help="run the embedded invariant suite")
    st_p.add_argument("--table", default=None, help="mock-codec table fixture (JSON)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _campaign_driver(args, resume=False)
        if args.command == "resume":
            return _campaign_driver(args, resume=True)
        if args.command == "report":
            return cmd_report(args)
        if args.command == "selftest":
            return cmd_selftest(args)
        raise AssertionError(f"unhandled command {args.command}")
    except (InvalidConfigError, FileNotFoundError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
