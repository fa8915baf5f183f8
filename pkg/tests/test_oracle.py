import itertools
import os
import sys

import pytest

from latentbo.oracle import ObjectiveOracle, ScoreCache, batch_score, score
from latentbo.textsim import bigram_jaccard, bigrams
from latentbo.types import OracleEndpoint

HELPERS = os.path.join(os.path.dirname(__file__), "helpers")


def synthetic(target="ABAB", **kw):
    return ObjectiveOracle(OracleEndpoint(kind="synthetic", target=target, **kw))


class TestSyntheticScore:
    def test_target_scores_minus_ten(self):
        assert score(synthetic("ABAB"), "ABAB") == pytest.approx(-10.0)

    def test_disjoint_bigrams_same_length(self):
        # CDDC shares no bigram with ABAB and has equal length
        assert score(synthetic("ABAB"), "CDDC") == pytest.approx(0.0)

    def test_hand_enumerated_example(self):
        # B(AB) = {AB}; B(ABAB) = {AB, BA}; J = 1/2; length penalty 0.01*2
        assert score(synthetic("ABAB"), "AB") == pytest.approx(-4.98)

    def test_empty_text_rejected(self):
        with pytest.raises(ValueError):
            score(synthetic(), "")

    def test_unique_minimum_by_brute_force(self):
        # every string of length <= 4 over {A,B,C}; only the target reaches -10
        oracle = synthetic("ABC")
        best = score(oracle, "ABC")
        assert best == pytest.approx(-10.0)
        for n in range(1, 5):
            for chars in itertools.product("ABC", repeat=n):
                text = "".join(chars)
                if text != "ABC":
                    assert score(oracle, text) > best

    def test_determinism_bit_identical(self):
        oracle = synthetic("ABAB")
        first = score(oracle, "AABB")
        second = score(oracle, "AABB")
        assert first == second


class TestBigrams:
    def test_sets(self):
        assert bigrams("ABAB") == frozenset({"AB", "BA"})
        assert bigrams("A") == frozenset()

    def test_jaccard_of_identical_singletons(self):
        assert bigram_jaccard("A", "B") == 1.0  # both empty bigram sets


class TestScoreCache:
    def test_persistence_round_trip(self, tmp_path):
        path = str(tmp_path / "cache.jsonl")
        cache = ScoreCache(path)
        cache.put("AB", -4.98)
        cache.put("odd\ttext\nwith controls", 1.25)
        cache.close()
        reloaded = ScoreCache(path)
        assert reloaded.get("AB") == -4.98
        assert reloaded.get("odd\ttext\nwith controls") == 1.25
        assert len(reloaded) == 2

    def test_cache_prevents_backend_calls(self, tmp_path):
        path = str(tmp_path / "cache.jsonl")
        first = ObjectiveOracle(
            OracleEndpoint(kind="synthetic", target="ABAB", cache_path=path)
        )
        value = score(first, "AABB")
        assert first.calls == 1
        first.close()
        second = ObjectiveOracle(
            OracleEndpoint(kind="synthetic", target="ABAB", cache_path=path)
        )
        assert score(second, "AABB") == value
        assert second.calls == 0
        second.close()


class TestBatchScore:
    def test_all_cached_makes_zero_calls(self):
        oracle = synthetic("ABAB")
        batch_score(oracle, ["AB", "BA"])
        calls = oracle.calls
        batch_score(oracle, ["AB", "BA"])
        assert oracle.calls == calls

    def test_duplicate_in_one_batch_scored_once(self):
        oracle = synthetic("ABAB")
        values = batch_score(oracle, ["AB", "AB"])
        assert oracle.calls == 1
        assert values[0] == values[1]

    def test_call_count_equals_distinct_uncached(self):
        oracle = synthetic("ABAB")
        score(oracle, "AB")  # pre-cache one
        values = batch_score(oracle, ["AB", "BA", "BA", "AABB", "AB"])
        assert oracle.calls == 1 + 2  # AB earlier, then BA and AABB
        assert len(values) == 5

    def test_order_matches_input(self):
        oracle = synthetic("ABAB")
        texts = ["BA", "AB", "ABAB"]
        values = batch_score(oracle, texts)
        assert values == [score(oracle, t) for t in texts]


class TestExternalOracle:
    def test_score_via_wire_protocol(self):
        endpoint = OracleEndpoint(
            kind="external",
            command=(sys.executable, os.path.join(HELPERS, "mock_endpoint.py")),
            timeout=10.0,
        )
        oracle = ObjectiveOracle(endpoint)
        try:
            # endpoint's hidden target is ABCD
            assert score(oracle, "ABCD") == pytest.approx(-10.0)
            assert score(oracle, "ABCD") == pytest.approx(-10.0)
            assert oracle.calls == 1
        finally:
            oracle.close()
