import json
import os

import numpy as np
import pytest

from latentbo.cli import main
from latentbo.campaign import run_campaign
from latentbo.codec import CodecHandle
from latentbo.config import (
    config_hash,
    load_config,
    materialize_initial,
    save_checkpoint,
)
from latentbo.oracle import ObjectiveOracle


def config_dict(**overrides):
    cfg = {
        "seed": 1,
        "d": 6,
        "budget": 5,
        "l_max": 16,
        "lambda_perturb": 0.4,
        "samples_per_record": 8,
        "n_cand": 3,
        "mlp_dims": [12, 16, 8],
        "mlp_epochs": 10,
        "gp_epochs": 8,
        "codec": {"kind": "mock", "d": 6, "l_max": 16, "alphabet": "ABCDEF", "table_seed": 0},
        "oracle": {"kind": "synthetic", "target": "ABCD"},
        "init": {"kind": "random", "count": 6, "min_len": 3, "max_len": 8},
    }
    cfg.update(overrides)
    return cfg


def write_config(tmp_path, name="config.json", **overrides):
    path = tmp_path / name
    path.write_text(json.dumps(config_dict(**overrides)))
    return str(path)


class TestRun:
    def test_happy_path_exit_zero_and_summary(self, tmp_path, capsys):
        cfg_path = write_config(tmp_path)
        out = str(tmp_path / "out")
        code = main(["run", "--config", cfg_path, "--out", out, "--quiet"])
        assert code == 0
        lines = open(os.path.join(out, "summary.csv")).read().splitlines()
        assert lines[0] == "rank,text,score"
        assert len(lines) >= 6  # header + budget rows
        assert os.path.exists(os.path.join(out, "checkpoint.json"))
        assert os.path.exists(os.path.join(out, "logs.jsonl"))

    def test_invalid_field_named_in_error(self, tmp_path, capsys):
        cfg_path = write_config(tmp_path, lambda_perturb=-1.0)
        code = main(["run", "--config", cfg_path, "--out", str(tmp_path / "o"), "--quiet"])
        assert code == 1
        assert "lambda_perturb" in capsys.readouterr().err

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg_path = write_config(tmp_path, lambda_pertrub=0.4)  # typo on purpose
        code = main(["run", "--config", cfg_path, "--out", str(tmp_path / "o"), "--quiet"])
        assert code == 1
        assert "lambda_pertrub" in capsys.readouterr().err

    def test_seed_determinism_byte_identical_summaries(self, tmp_path):
        cfg_path = write_config(tmp_path)
        out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
        assert main(["run", "--config", cfg_path, "--seed", "1", "--out", out1, "--quiet"]) == 0
        assert main(["run", "--config", cfg_path, "--seed", "1", "--out", out2, "--quiet"]) == 0
        a = open(os.path.join(out1, "summary.csv"), "rb").read()
        b = open(os.path.join(out2, "summary.csv"), "rb").read()
        assert a == b

    def test_partial_exit_two(self, tmp_path):
        cfg_path = write_config(tmp_path, lambda_perturb=0.0, samples_per_record=1,
                                max_iterations=2, budget=50)
        code = main(["run", "--config", cfg_path, "--out", str(tmp_path / "o"), "--quiet"])
        assert code == 2

    def test_out_env_var_honored(self, tmp_path, monkeypatch):
        cfg_path = write_config(tmp_path)
        out = str(tmp_path / "envout")
        monkeypatch.setenv("LATENTBO_OUT", out)
        assert main(["run", "--config", cfg_path, "--quiet"]) == 0
        assert os.path.exists(os.path.join(out, "summary.csv"))

    def test_ablation_flag_runs(self, tmp_path):
        cfg_path = write_config(tmp_path, budget=2, max_iterations=2)
        code = main(
            ["run", "--config", cfg_path, "--out", str(tmp_path / "o"),
             "--ablation", "no-guide", "--quiet"]
        )
        assert code in (0, 2)


class TestResume:
    def _interrupted_campaign(self, tmp_path):
        cfg_path = write_config(tmp_path, budget=4)
        cfg, init, raw = load_config(cfg_path)
        out = str(tmp_path / "out")
        os.makedirs(out)
        codec = CodecHandle(cfg.codec)
        oracle = ObjectiveOracle(cfg.oracle)
        initial = materialize_initial(cfg, init, codec, oracle)
        stop_after = {"n": 0}

        def stop():
            stop_after["n"] += 1
            return stop_after["n"] > 1

        state, status = run_campaign(
            cfg, initial, codec=codec, oracle=oracle, stop_requested=stop
        )
        assert status == "stopped"
        save_checkpoint(
            os.path.join(out, "checkpoint.json"), state, status, config_hash(raw), raw
        )
        open(os.path.join(out, "logs.jsonl"), "w").close()
        return cfg_path, out

    def test_resume_continues_to_completion(self, tmp_path):
        cfg_path, out = self._interrupted_campaign(tmp_path)
        code = main(["resume", "--config", cfg_path, "--out", out, "--quiet"])
        assert code == 0
        payload = json.load(open(os.path.join(out, "checkpoint.json")))
        assert payload["status"] == "complete"
        assert len(payload["generated"]) >= 4

    def test_resume_rejects_config_mismatch(self, tmp_path, capsys):
        cfg_path, out = self._interrupted_campaign(tmp_path)
        other = write_config(tmp_path, name="other.json", seed=999)
        code = main(["resume", "--config", other, "--out", out, "--quiet"])
        assert code == 1
        assert "hash" in capsys.readouterr().err


class TestReport:
    def _campaign_dir(self, tmp_path, name="camp", seed=1):
        cfg_path = write_config(tmp_path, name=f"{name}.json", seed=seed)
        out = str(tmp_path / name)
        assert main(["run", "--config", cfg_path, "--out", out, "--quiet"]) == 0
        return out

    def test_topk_ordering_and_similarity_table(self, tmp_path, capsys):
        out = self._campaign_dir(tmp_path)
        assert main(["report", out]) == 0
        text = capsys.readouterr().out
        tops = {}
        for line in text.splitlines():
            if line.startswith("top-"):
                k = int(line.split()[0].split("-")[1])
                tops[k] = float(line.rsplit(":", 1)[1])
        assert 1 in tops and 5 in tops
        assert tops[1] <= tops[5]
        assert "window,mean_similarity,max_similarity" in text

    def test_hand_built_checkpoint_top1_is_minimum(self, tmp_path, capsys):
        out = str(tmp_path / "hand")
        os.makedirs(out)
        payload = {
            "format": 1,
            "config_hash": "x",
            "config": {},
            "ablation": None,
            "status": "complete",
            "iteration": 1,
            "rng": {"entropy": 0, "next_iteration": 1},
            "initial": [{"text": "AAAA", "score": -1.0}],
            "generated": [
                {"text": "AB", "score": -2.5},
                {"text": "BC", "score": -7.25},
                {"text": "CD", "score": -4.0},
            ],
        }
        with open(os.path.join(out, "checkpoint.json"), "w") as fh:
            json.dump(payload, fh)
        assert main(["report", out]) == 0
        text = capsys.readouterr().out
        top1 = [l for l in text.splitlines() if l.startswith("top-1")][0]
        assert float(top1.rsplit(":", 1)[1]) == pytest.approx(-7.25)

    def test_identical_dirs_report_undefined_wilcoxon(self, tmp_path, capsys):
        out = self._campaign_dir(tmp_path)
        assert main(["report", out, out]) == 0
        assert "undefined" in capsys.readouterr().out

    def test_two_seed_groups_get_p_value(self, tmp_path, capsys):
        for group, seeds in (("g1", range(5)), ("g2", range(5, 10))):
            os.makedirs(tmp_path / group)
            for i, seed in enumerate(seeds):
                cfg_path = write_config(tmp_path, name=f"{group}-{i}.json", seed=seed, budget=3)
                out = str(tmp_path / group / f"seed-{i}")
                assert main(["run", "--config", cfg_path, "--out", out, "--quiet"]) == 0
        assert main(["report", str(tmp_path / "g1"), str(tmp_path / "g2")]) == 0
        text = capsys.readouterr().out
        assert "wilcoxon" in text

    def test_missing_dir_errors(self, tmp_path, capsys):
        assert main(["report", str(tmp_path / "nope")]) == 1


class TestSelftest:
    def test_fresh_build_passes_within_budget(self, capsys):
        import time

        started = time.perf_counter()
        assert main(["selftest"]) == 0
        assert time.perf_counter() - started <= 60.0
        out = capsys.readouterr().out
        assert "FAIL" not in out
        assert out.count("PASS") == 5

    def test_corrupted_table_fails_round_trip(self, tmp_path, capsys):
        table = np.random.default_rng(0).standard_normal((4, 6))
        table[2] = table[0]  # two equal rows: decoding ambiguous
        fixture = tmp_path / "table.json"
        fixture.write_text(
            json.dumps({"alphabet": "ABCD", "table": table.tolist(), "l_max": 12})
        )
        assert main(["selftest", "--table", str(fixture)]) == 1
        out = capsys.readouterr().out
        assert "FAIL mock-codec-round-trip" in out
