"""Gaussian-process regression over frozen MLP features.

Stage two of surrogate training: standardize targets, then fit kernel
hyperparameters (and observation noise) by gradient descent on the negative
log marginal likelihood, recomputing the Cholesky factor each step. The
fitted state keeps the factor so posteriors are one back-solve per batch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.spatial.distance import pdist

from .aggregation import aggregate, aggregate_mean_baseline
from .kernels import (
    RAW_PARAM_NAMES,
    KernelParams,
    kernel_matrix,
    kernel_matrix_gradients,
    sigmoid,
)
from .mlp import Adam, FeatureNet, feature_forward
from .standardize import Standardizer
from .types import NumericalFailureError, PredictiveDistribution

MAX_JITTER = 1e-2
LOG_2PI = np.log(2.0 * np.pi)


def chol_with_jitter(k: np.ndarray, noise: float, jitter0: float) -> tuple[np.ndarray, float]:
    """Lower Cholesky of k + (noise + jitter) I, escalating jitter x10 as needed."""
    jitter = jitter0
    while jitter <= MAX_JITTER * (1.0 + 1e-12):
        try:
            l = cholesky(k + (noise + jitter) * np.eye(k.shape[0]), lower=True)
            return l, jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
        except ValueError:
            break
    raise NumericalFailureError(
        f"Cholesky factorization failed for every jitter from {jitter0:g} (smallest failing) "
        f"up to {MAX_JITTER:g}"
    )


def gp_nll(params: KernelParams, x: np.ndarray, y: np.ndarray, jitter0: float) -> float:
    """Negative log marginal likelihood of y under the kernel GP prior."""
    k = kernel_matrix(params, x)
    l, _ = chol_with_jitter(k, params.noise, jitter0)
    alpha = cho_solve((l, True), y)
    return float(0.5 * y @ alpha + np.log(np.diag(l)).sum() + 0.5 * len(y) * LOG_2PI)


def gp_nll_gradients(
    params: KernelParams, x: np.ndarray, y: np.ndarray, jitter0: float
) -> tuple[float, np.ndarray]:
    """NLL and its gradient w.r.t. the raw (unconstrained) parameters.

    dNLL/dp = 0.5 tr((K^-1 - alpha alpha^T) dK/dp) with alpha = K^-1 y.
    """
    n = x.shape[0]
    k = kernel_matrix(params, x)
    l, _ = chol_with_jitter(k, params.noise, jitter0)
    alpha = cho_solve((l, True), y)
    nll = float(0.5 * y @ alpha + np.log(np.diag(l)).sum() + 0.5 * n * LOG_2PI)

    k_inv = cho_solve((l, True), np.eye(n))
    inner = k_inv - np.outer(alpha, alpha)
    dk = kernel_matrix_gradients(params, x)
    grad = np.empty(len(RAW_PARAM_NAMES))
    for i, name in enumerate(RAW_PARAM_NAMES):
        if name == "raw_noise":
            grad[i] = 0.5 * np.trace(inner) * sigmoid(params.raw_noise)
        else:
            grad[i] = 0.5 * float(np.sum(inner * dk[name]))
    return nll, grad


@dataclass
class GPState:
    """Fitted GP: kernel parameters, training features, factorization, target transform."""

    params: KernelParams
    x_train: np.ndarray  # (N, d')
    y_std: np.ndarray  # (N,), standardized targets
    scaler: Standardizer
    chol: np.ndarray  # lower-triangular L of K + (noise + jitter) I
    alpha: np.ndarray  # (K + (noise + jitter) I)^-1 y_std
    jitter: float

    def __post_init__(self):
        if np.any(np.diag(self.chol) <= 0):
            raise NumericalFailureError("Cholesky factor has a non-positive diagonal")


def build_gp_state(
    params: KernelParams, x: np.ndarray, y: np.ndarray, jitter0: float
) -> GPState:
    """Assemble the posterior bookkeeping for fixed hyperparameters."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    scaler = Standardizer.fit(y)
    y_std = scaler.transform(y)
    k = kernel_matrix(params, x)
    l, jitter = chol_with_jitter(k, params.noise, jitter0)
    alpha = cho_solve((l, True), y_std)
    return GPState(
        params=params, x_train=x, y_std=y_std, scaler=scaler, chol=l, alpha=alpha, jitter=jitter
    )


def initial_kernel_params(x: np.ndarray) -> KernelParams:
    """Deterministic starting point; length scales from the median pairwise distance."""
    if x.shape[0] > 1:
        med = float(np.median(pdist(x)))
    else:
        med = 1.0
    ls = max(med, 1e-3)
    return KernelParams.from_constrained(ls1=ls, var1=1.0, ls2=ls, var2=1.0, w1=0.5, w2=0.5, noise=0.05)


def train_gp_stage(x: np.ndarray, y: np.ndarray, cfg) -> tuple[GPState, list[float]]:
    """Optimize kernel hyperparameters by Adam on the NLL of standardized targets.

    Returns the fitted state and the NLL curve (per-epoch pre-update values,
    then the NLL of the returned parameters; the best iterate is kept, so the
    final entry never exceeds the first).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError(f"need an (N, d') feature matrix with N >= 1, got {x.shape}")
    if x.shape[0] != y.shape[0]:
        raise ValueError("feature/target row counts differ")

    scaler = Standardizer.fit(y)
    y_std = scaler.transform(y)

    params = initial_kernel_params(x)
    raw = params.raw_vector()
    opt = Adam(lr=cfg.gp_lr)
    curve: list[float] = []
    best_nll = np.inf
    best_raw = raw.copy()
    for _ in range(cfg.gp_epochs):
        params = params.with_raw_vector(raw)
        nll, grad = gp_nll_gradients(params, x, y_std, cfg.gp_jitter)
        curve.append(nll)
        if nll < best_nll:
            best_nll = nll
            best_raw = raw.copy()
        opt.step([raw], [grad])

    final_nll = gp_nll(params.with_raw_vector(raw), x, y_std, cfg.gp_jitter)
    if final_nll < best_nll:
        best_nll = final_nll
        best_raw = raw.copy()
    curve.append(best_nll)

    state = build_gp_state(params.with_raw_vector(best_raw), x, y, cfg.gp_jitter)
    return state, curve


def posterior(state: GPState, feats: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and std (score units, observation noise included) for a feature batch."""
    feats = np.atleast_2d(np.asarray(feats, dtype=np.float64))
    k_star = kernel_matrix(state.params, state.x_train, feats)  # (N, B)
    mean_std = k_star.T @ state.alpha
    v = solve_triangular(state.chol, k_star, lower=True)
    prior_var = state.params.w1 * state.params.var1 + state.params.w2 * state.params.var2
    var = prior_var + state.params.noise - np.einsum("ij,ij->j", v, v)
    var = np.maximum(var, 0.0)
    mean = state.scaler.inverse(mean_std)
    std = state.scaler.inverse_scale(np.sqrt(var))
    return mean, std


@dataclass
class SurrogateModel:
    """Frozen feature net plus fitted GP; immutable once built, reads are pure."""

    net: FeatureNet
    gp: GPState
    l_max: int
    pooling: str = "position"  # "position" | "mean"

    def __post_init__(self):
        if self.pooling not in ("position", "mean"):
            raise ValueError(f"unknown pooling {self.pooling!r}")
        if self.net.out_dim != self.gp.x_train.shape[1]:
            raise ValueError("feature net output dim does not match GP training features")

    def _pool(self, seq) -> np.ndarray:
        if self.pooling == "mean":
            return aggregate_mean_baseline(seq, self.l_max).values
        return aggregate(seq, self.l_max).values


def gp_predict(model: SurrogateModel, cand) -> PredictiveDistribution:
    """Predictive distribution for one embedding sequence or candidate."""
    if model is None:
        raise ValueError("surrogate model is not trained")
    feats = feature_forward(model.net, model._pool(cand))
    mean, std = posterior(model.gp, feats)
    return PredictiveDistribution(mean=float(mean[0]), std=float(std[0]))


def gp_predict_batch(model: SurrogateModel, cands) -> tuple[np.ndarray, np.ndarray]:
    """Means and stds for many candidates through one factorized solve."""
    if model is None:
        raise ValueError("surrogate model is not trained")
    pooled = np.stack([model._pool(c) for c in cands])
    feats = feature_forward(model.net, pooled)
    return posterior(model.gp, feats)
