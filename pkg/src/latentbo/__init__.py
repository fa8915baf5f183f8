"""Latent-space Bayesian optimization over string embeddings.

Encode strings into variable-length latent embeddings, explore that space
with multiplicative perturbations scored by a position-aware deep-kernel GP
surrogate under an LCB acquisition schedule, and decode candidates back to
strings through a pluggable repair endpoint.
"""

from .aggregation import AggregatedEmbedding, aggregate, aggregate_mean_baseline, permutation_expectation
from .campaign import (
    CampaignState,
    IterationFailure,
    IterationLog,
    run_campaign,
    run_iteration,
    similarity_report,
)
from .codec import CodecHandle, MockCodec, decode_repair, encode, validate
from .explorer import ExploreSet, build_explore_set, kappa, lcb, perturb, select_candidates, select_random
from .gp import GPState, SurrogateModel, gp_predict, gp_predict_batch, train_gp_stage
from .kernels import KernelParams, kernel_eval
from .mlp import FeatureNet, RegressionHead, feature_forward, train_feature_stage
from .oracle import ObjectiveOracle, ScoreCache, batch_score, score
from .protocol import EndpointClient, ProtocolError
from .stats import wilcoxon_one_sided
from .types import (
    CampaignConfig,
    CandidateEmbedding,
    CodecEndpoint,
    ObservedDataset,
    ObservedRecord,
    OracleEndpoint,
    PredictiveDistribution,
    TokenEmbeddingSeq,
    dataset_insert,
    top_k,
)

__version__ = "0.1.0"
