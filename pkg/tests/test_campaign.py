import json

import numpy as np
import pytest

from latentbo.campaign import (
    CampaignState,
    IterationFailure,
    run_campaign,
    run_iteration,
    similarity_report,
    summary_rows,
    top_k_means,
)
from latentbo.codec import CodecHandle, encode
from latentbo.oracle import ObjectiveOracle, score
from latentbo.types import (
    CampaignConfig,
    CodecEndpoint,
    ObservedDataset,
    ObservedRecord,
    OracleEndpoint,
)

ALPHABET = "ABCDEF"


def small_config(**overrides) -> CampaignConfig:
    base = dict(
        seed=11,
        d=6,
        budget=10,
        codec=CodecEndpoint(kind="mock", d=6, l_max=16, alphabet=ALPHABET, table_seed=0),
        oracle=OracleEndpoint(kind="synthetic", target="ABCD"),
        l_max=16,
        lambda_perturb=0.4,
        samples_per_record=8,
        n_cand=3,
        mlp_dims=(12, 16, 8),
        mlp_epochs=15,
        gp_epochs=10,
    )
    base.update(overrides)
    return CampaignConfig(**base)


def seeded_dataset(codec: CodecHandle, oracle: ObjectiveOracle, texts) -> ObservedDataset:
    ds = ObservedDataset()
    for text in texts:
        ds.insert(
            ObservedRecord(text=text, score=score(oracle, text), embedding=encode(codec, text))
        )
    return ds


@pytest.fixture
def backends():
    cfg = small_config()
    codec = CodecHandle(cfg.codec)
    oracle = ObjectiveOracle(cfg.oracle)
    return cfg, codec, oracle


def fresh_state(cfg, codec, oracle, texts=("ABCA", "FADE", "BEAD", "CAFE")):
    ds = seeded_dataset(codec, oracle, texts)
    return CampaignState(
        config=cfg, dataset=ds, initial_texts=frozenset(ds.texts), ablation=None
    )


class TestRunIteration:
    def test_identity_perturbation_yields_only_duplicates(self, backends):
        cfg, codec, oracle = backends
        cfg = small_config(lambda_perturb=0.0, samples_per_record=1)
        state = fresh_state(cfg, codec, oracle)
        new_state = run_iteration(state, codec, oracle)
        assert len(new_state.dataset) == len(state.dataset)
        assert new_state.s_out == ()
        log = new_state.logs[-1]
        assert log.added == 0
        assert all(row["status"] == "duplicate" for row in log.candidates)

    def test_bookkeeping_grows_by_added_count(self, backends):
        cfg, codec, oracle = backends
        state = fresh_state(cfg, codec, oracle)
        new_state = run_iteration(state, codec, oracle)
        added = new_state.logs[-1].added
        assert len(new_state.dataset) == len(state.dataset) + added
        assert len(new_state.s_out) == added
        for text, value in new_state.s_out:
            assert text not in state.initial_texts
            assert value == score(oracle, text)

    def test_every_added_text_validates_and_is_new(self, backends):
        cfg, codec, oracle = backends
        state = fresh_state(cfg, codec, oracle)
        from latentbo.codec import validate

        for _ in range(3):
            state = run_iteration(state, codec, oracle)
        texts = [t for t, _ in state.s_out]
        assert len(set(texts)) == len(texts)
        assert not (set(texts) & state.initial_texts)
        assert all(validate(codec, t) for t in texts)

    def test_oracle_calls_bounded_by_n_cand(self, backends):
        cfg, codec, oracle = backends
        state = fresh_state(cfg, codec, oracle)
        before = oracle.calls
        state = run_iteration(state, codec, oracle)
        assert oracle.calls - before <= cfg.n_cand

    def test_too_small_dataset_rejected(self, backends):
        cfg, codec, oracle = backends
        ds = seeded_dataset(codec, oracle, ["FADE"])
        state = CampaignState(
            config=cfg, dataset=ds, initial_texts=frozenset(ds.texts)
        )
        with pytest.raises(IterationFailure):
            run_iteration(state, codec, oracle)

    def test_failed_iteration_leaves_state_byte_identical(self, backends):
        cfg, codec, oracle = backends
        state = fresh_state(cfg, codec, oracle)

        def broken_evaluate(text):
            raise RuntimeError("backend down")

        def snapshot(s: CampaignState) -> bytes:
            payload = {
                "texts": s.dataset.texts,
                "scores": [r.score for r in s.dataset],
                "s_out": list(s.s_out),
                "iteration": s.iteration,
            }
            return json.dumps(payload, sort_keys=True).encode()

        before = snapshot(state)
        oracle._evaluate = broken_evaluate
        with pytest.raises(IterationFailure, match="backend down"):
            run_iteration(state, codec, oracle)
        assert snapshot(state) == before


class TestDeterminism:
    def test_fixed_seed_bit_identical_logs(self):
        cfg = small_config(budget=6)

        def one_run():
            codec = CodecHandle(cfg.codec)
            oracle = ObjectiveOracle(cfg.oracle)
            records = []
            ds = seeded_dataset(codec, oracle, ["FADE", "BEAD", "CAFE", "DEAF"])
            final, status = run_campaign(
                cfg, ds, codec=codec, oracle=oracle, log_sink=records.append
            )
            stripped = [
                {k: v for k, v in rec.items() if k != "wall_ms"} for rec in records
            ]
            return stripped, [(t, s) for t, s in final.s_out], status

        logs1, out1, status1 = one_run()
        logs2, out2, status2 = one_run()
        assert logs1 == logs2
        assert out1 == out2
        assert status1 == status2


class TestRunCampaign:
    def test_budget_one_terminates_complete(self, backends):
        cfg, codec, oracle = backends
        cfg = small_config(budget=1)
        ds = seeded_dataset(codec, oracle, ["FADE", "BEAD", "CAFE"])
        final, status = run_campaign(cfg, ds, codec=codec, oracle=oracle)
        assert status == "complete"
        assert len(final.s_out) >= 1

    def test_unreachable_budget_reports_partial(self, backends):
        cfg, codec, oracle = backends
        # zero perturbation can never produce a new string
        cfg = small_config(budget=5, lambda_perturb=0.0, samples_per_record=1, max_iterations=3)
        ds = seeded_dataset(codec, oracle, ["FADE", "BEAD"])
        final, status = run_campaign(cfg, ds, codec=codec, oracle=oracle)
        assert status == "partial"
        assert len(final.s_out) == 0

    def test_best_so_far_non_increasing(self, backends):
        cfg, codec, oracle = backends
        cfg = small_config(budget=12)
        ds = seeded_dataset(codec, oracle, ["FADE", "BEAD", "CAFE", "DEAF"])
        final, _ = run_campaign(cfg, ds, codec=codec, oracle=oracle)
        bests = [log.best_so_far for log in final.logs if log.best_so_far is not None]
        assert all(b <= a + 1e-12 for a, b in zip(bests, bests[1:]))

    def test_empty_initial_rejected(self, backends):
        cfg, codec, oracle = backends
        with pytest.raises(ValueError):
            run_campaign(cfg, ObservedDataset(), codec=codec, oracle=oracle)

    def test_ablation_flags_accepted(self, backends):
        cfg, codec, oracle = backends
        cfg = small_config(budget=2, max_iterations=2)
        for ablation in ("no-guide", "no-position"):
            ds = seeded_dataset(codec, oracle, ["FADE", "BEAD", "CAFE"])
            final, _ = run_campaign(
                cfg, ds, ablation=ablation, codec=codec, oracle=oracle
            )
            assert final.ablation == ablation

    def test_stop_flag_checkpoints_between_iterations(self, backends):
        cfg, codec, oracle = backends
        cfg = small_config(budget=50)
        ds = seeded_dataset(codec, oracle, ["FADE", "BEAD", "CAFE"])
        calls = {"n": 0}

        def stop():
            calls["n"] += 1
            return calls["n"] > 2

        final, status = run_campaign(
            cfg, ds, codec=codec, oracle=oracle, stop_requested=stop
        )
        assert status == "stopped"
        assert final.iteration == 2


class TestSimilarityReport:
    def test_identical_window_max_is_one(self):
        report = similarity_report(["ABCD"], window=10, initial=["ABCD", "ZZZZ"])
        assert report[0][1] == pytest.approx(1.0)

    def test_disjoint_bigrams_all_zero(self):
        report = similarity_report(["XYXY"], window=10, initial=["ABCD"])
        assert report == [(0.0, 0.0)]

    def test_hand_enumerated_three_by_two(self):
        # six pairwise Jaccards worked out by hand
        report = similarity_report(
            ["ABC", "BCD", "XYZ"], window=10, initial=["ABCD", "ZZZZ"]
        )
        mean_sim, max_sim = report[0]
        assert mean_sim == pytest.approx(2 / 9)
        assert max_sim == pytest.approx(4 / 9)

    def test_windowing_splits_output(self):
        report = similarity_report(["ABC"] * 25, window=10, initial=["ABC"])
        assert len(report) == 3  # 10 + 10 + 5


class TestSummaries:
    def test_summary_rows_sorted_by_score(self):
        cfg = small_config()
        state = CampaignState(
            config=cfg,
            dataset=ObservedDataset(),
            initial_texts=frozenset(),
            s_out=(("AA", -1.0), ("BB", -5.0), ("CC", -3.0)),
        )
        rows = summary_rows(state)
        assert [(r[0], r[1]) for r in rows] == [(1, "BB"), (2, "CC"), (3, "AA")]

    def test_top_k_means_ordering(self):
        scores = [-1.0, -5.0, -3.0, -2.0, -4.0] * 4
        means = top_k_means(scores)
        assert means[1] <= means[5] <= means[10] <= means[20]
