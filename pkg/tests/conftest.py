import numpy as np
import pytest

from latentbo.types import (
    CampaignConfig,
    CodecEndpoint,
    ObservedDataset,
    ObservedRecord,
    OracleEndpoint,
    TokenEmbeddingSeq,
)


def make_config(**overrides) -> CampaignConfig:
    base = dict(
        seed=1,
        d=4,
        budget=10,
        codec=CodecEndpoint(kind="mock", d=4, l_max=16, alphabet="ABCDEF", table_seed=0),
        oracle=OracleEndpoint(kind="synthetic", target="ABCD"),
        l_max=16,
        mlp_dims=(8, 16, 8),
        mlp_epochs=40,
        gp_epochs=30,
    )
    base.update(overrides)
    return CampaignConfig(**base)


def seq_from(vectors, token_ids=None) -> TokenEmbeddingSeq:
    vectors = np.asarray(vectors, dtype=np.float64)
    if token_ids is None:
        token_ids = tuple(range(vectors.shape[0]))
    return TokenEmbeddingSeq(token_ids=tuple(token_ids), vectors=vectors)


def dataset_of(pairs, d=3, rng=None) -> ObservedDataset:
    """(text, score) pairs with random embeddings, one row per character."""
    rng = rng or np.random.default_rng(0)
    ds = ObservedDataset()
    for text, score in pairs:
        emb = seq_from(rng.standard_normal((len(text), d)))
        ds.insert(ObservedRecord(text=text, score=score, embedding=emb))
    return ds


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
