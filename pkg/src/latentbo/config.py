"""Config file parsing, config hashing, checkpoints, and initial datasets.

The config file is one JSON object mirroring CampaignConfig field-for-field
plus an `init` block saying where the starting observations come from.
Unknown keys anywhere are rejected so hyperparameter typos cannot pass
silently.
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np

from .campaign import CampaignState
from .codec import CodecHandle
from .oracle import ObjectiveOracle, score
from .types import (
    CampaignConfig,
    CodecEndpoint,
    InvalidConfigError,
    ObservedDataset,
    ObservedRecord,
    OracleEndpoint,
)

_CODEC_KEYS = {"kind", "d", "l_max", "alphabet", "table_seed", "command", "timeout"}
_ORACLE_KEYS = {"kind", "target", "w_match", "w_len", "command", "cache_path", "timeout"}
_INIT_KEYS = {"kind", "count", "min_len", "max_len", "path"}
_TOP_KEYS = {
    "seed",
    "d",
    "budget",
    "l_max",
    "lambda_perturb",
    "samples_per_record",
    "n_cand",
    "delta",
    "mlp_dims",
    "mlp_lr",
    "gp_lr",
    "mlp_epochs",
    "gp_epochs",
    "gp_jitter",
    "max_iterations",
    "elite_fraction",
    "codec",
    "oracle",
    "init",
}

CHECKPOINT_FORMAT = 1


def _reject_unknown(block: dict, allowed: set[str], where: str) -> None:
    for key in block:
        if key not in allowed:
            raise InvalidConfigError(f"{where}{key}", "unknown key")


def parse_config(raw: dict) -> tuple[CampaignConfig, dict]:
    """Build a validated CampaignConfig and init spec from a parsed JSON object."""
    if not isinstance(raw, dict):
        raise InvalidConfigError("<root>", "config must be a JSON object")
    _reject_unknown(raw, _TOP_KEYS, "")
    for required in ("seed", "d", "budget", "codec", "oracle"):
        if required not in raw:
            raise InvalidConfigError(required, "missing required field")

    codec_block = dict(raw["codec"])
    _reject_unknown(codec_block, _CODEC_KEYS, "codec.")
    if "command" in codec_block:
        codec_block["command"] = tuple(codec_block["command"])
    codec = CodecEndpoint(**codec_block)

    oracle_block = dict(raw["oracle"])
    _reject_unknown(oracle_block, _ORACLE_KEYS, "oracle.")
    if "command" in oracle_block:
        oracle_block["command"] = tuple(oracle_block["command"])
    oracle = OracleEndpoint(**oracle_block)

    init = dict(raw.get("init", {"kind": "random", "count": 20, "min_len": 4, "max_len": 14}))
    _reject_unknown(init, _INIT_KEYS, "init.")
    if init.get("kind") not in ("random", "file"):
        raise InvalidConfigError("init.kind", f"unknown kind {init.get('kind')!r}")
    if init["kind"] == "file" and "path" not in init:
        raise InvalidConfigError("init.path", "file init requires a path")

    kwargs = {k: v for k, v in raw.items() if k not in ("codec", "oracle", "init")}
    if "mlp_dims" in kwargs and kwargs["mlp_dims"] is not None:
        kwargs["mlp_dims"] = tuple(kwargs["mlp_dims"])
    cfg = CampaignConfig(codec=codec, oracle=oracle, **kwargs)
    return cfg, init


def load_config(path: str) -> tuple[CampaignConfig, dict, dict]:
    """Parse a config file; returns (config, init spec, raw dict for hashing)."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidConfigError("<json>", f"line {exc.lineno}: {exc.msg}") from exc
    cfg, init = parse_config(raw)
    return cfg, init, raw


def config_hash(raw: dict) -> str:
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def random_strings(alphabet: str, count: int, min_len: int, max_len: int, seed: int) -> list[str]:
    """Distinct random strings over `alphabet`, lengths uniform on [min_len, max_len]."""
    if min_len < 1 or max_len < min_len:
        raise InvalidConfigError("init.min_len", "need 1 <= min_len <= max_len")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(11,)))
    out: list[str] = []
    seen: set[str] = set()
    attempts = 0
    while len(out) < count:
        attempts += 1
        if attempts > 1000 * count:
            raise InvalidConfigError("init.count", "alphabet too small for this many distinct strings")
        n = int(rng.integers(min_len, max_len + 1))
        text = "".join(alphabet[int(i)] for i in rng.integers(0, len(alphabet), size=n))
        if text not in seen:
            seen.add(text)
            out.append(text)
    return out


def materialize_initial(
    cfg: CampaignConfig, init: dict, codec: CodecHandle, oracle: ObjectiveOracle
) -> ObservedDataset:
    """Build the starting observations named by the init spec, scoring as needed."""
    ds = ObservedDataset()
    if init["kind"] == "random":
        if codec.mock is None:
            raise InvalidConfigError(
                "init.kind", "random init needs the mock codec; use a file for external codecs"
            )
        texts = random_strings(
            codec.mock.alphabet,
            int(init.get("count", 20)),
            int(init.get("min_len", 4)),
            int(init.get("max_len", 14)),
            cfg.seed,
        )
        for text in texts:
            ds.insert(ObservedRecord(text=text, score=score(oracle, text)))
        return ds

    with open(init["path"], "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            text = rec["text"]
            value = rec.get("score")
            if value is None:
                value = score(oracle, text)
            ds.insert(ObservedRecord(text=text, score=float(value)))
    if len(ds) == 0:
        raise InvalidConfigError("init.path", "initial dataset file is empty")
    return ds


def save_checkpoint(path: str, state: CampaignState, status: str, cfg_hash: str, raw_config: dict) -> None:
    generated = {text for text, _ in state.s_out}
    initial = [
        {"text": rec.text, "score": rec.score}
        for rec in state.dataset
        if rec.text not in generated
    ]
    payload = {
        "format": CHECKPOINT_FORMAT,
        "config_hash": cfg_hash,
        "config": raw_config,
        "ablation": state.ablation,
        "status": status,
        "iteration": state.iteration,
        "rng": {"entropy": state.config.seed, "next_iteration": state.iteration},
        "initial": initial,
        "generated": [{"text": t, "score": s} for t, s in state.s_out],
    }
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False)
        fh.write("\n")
    os.replace(tmp, path)


def load_checkpoint(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"unsupported checkpoint format {payload.get('format')!r}")
    return payload


def state_from_checkpoint(payload: dict, cfg: CampaignConfig) -> CampaignState:
    ds = ObservedDataset()
    for rec in payload["initial"]:
        ds.insert(ObservedRecord(text=rec["text"], score=rec["score"]))
    initial_texts = frozenset(ds.texts)
    for rec in payload["generated"]:
        ds.insert(ObservedRecord(text=rec["text"], score=rec["score"]))
    return CampaignState(
        config=cfg,
        dataset=ds,
        initial_texts=initial_texts,
        s_out=tuple((r["text"], r["score"]) for r in payload["generated"]),
        iteration=int(payload["iteration"]),
        ablation=payload.get("ablation"),
    )
