"""Full-pipeline check: the optimizer drives this adapter over the wire.

Requires the latentbo package (the optimizer side); skipped when absent so
the adapter suite stays self-contained.
"""

import json
import os
import sys

import pytest

latentbo = pytest.importorskip("latentbo")

from latentbo.cli import main as latentbo_main  # noqa: E402


def test_campaign_against_adapter_endpoint(tmp_path):
    adapter_cfg = tmp_path / "adapter.json"
    adapter_cfg.write_text(
        json.dumps({"model": "hash:12", "l_max": 30, "scorer": "fallback", "chem": "basic"})
    )
    init = tmp_path / "init.jsonl"
    init.write_text(
        "".join(
            json.dumps({"text": t}) + "\n"
            for t in ("CCO", "CCC", "CCN", "CCCC", "CC(C)C", "C1CC1")
        )
    )
    command = [sys.executable, "-m", "llm_chem_adapter", "--config", str(adapter_cfg)]
    campaign = {
        "seed": 3,
        "d": 12,
        "budget": 3,
        "l_max": 30,
        "lambda_perturb": 0.4,
        "samples_per_record": 10,
        "n_cand": 5,
        "mlp_dims": [24, 32, 10],
        "mlp_epochs": 15,
        "gp_epochs": 10,
        "max_iterations": 6,
        "codec": {"kind": "external", "d": 12, "l_max": 30, "command": command},
        "oracle": {"kind": "external", "command": command},
        "init": {"kind": "file", "path": str(init)},
    }
    campaign_cfg = tmp_path / "campaign.json"
    campaign_cfg.write_text(json.dumps(campaign))
    out = str(tmp_path / "out")

    code = latentbo_main(["run", "--config", str(campaign_cfg), "--out", out, "--quiet"])
    assert code in (0, 2)

    summary = open(os.path.join(out, "summary.csv")).read().splitlines()
    assert summary[0] == "rank,text,score"
    if code == 0:
        assert len(summary) >= 4  # header + budget rows
    payload = json.load(open(os.path.join(out, "checkpoint.json")))
    for rec in payload["generated"]:
        assert rec["text"] and rec["text"] not in ("CCO", "CCC", "CCN")
