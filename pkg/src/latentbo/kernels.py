"""Composite Matern kernel with softplus-constrained hyperparameters.

k(a, b) = w1 * k_m15(r) + w2 * k_m25(r),  r = ||a - b||_2

    k_m15(r) = s1 * (1 + sqrt(3) r / l1) * exp(-sqrt(3) r / l1)
    k_m25(r) = s2 * (1 + sqrt(5) r / l2 + 5 r^2 / (3 l2^2)) * exp(-sqrt(5) r / l2)

Every constrained quantity (length scales, output variances, mixture
weights, observation noise) is stored as an unconstrained real and mapped
through softplus, so the marginal-likelihood optimization is unconstrained.
Analytic derivatives w.r.t. the raw parameters back the NLL gradients.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial.distance import cdist

SQRT3 = np.sqrt(3.0)
SQRT5 = np.sqrt(5.0)

RAW_PARAM_NAMES = (
    "raw_ls1",
    "raw_var1",
    "raw_ls2",
    "raw_var2",
    "raw_w1",
    "raw_w2",
    "raw_noise",
)


def softplus(x):
    x = np.asarray(x, dtype=np.float64)
    return np.logaddexp(0.0, x)


def softplus_inv(y):
    y = np.asarray(y, dtype=np.float64)
    if np.any(y <= 0):
        raise ValueError("softplus inverse requires positive input")
    # log(exp(y) - 1), stable for large y
    return y + np.log1p(-np.exp(-y))


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass(frozen=True)
class KernelParams:
    """Unconstrained parameterization of the composite kernel plus noise."""

    raw_ls1: float
    raw_var1: float
    raw_ls2: float
    raw_var2: float
    raw_w1: float
    raw_w2: float
    raw_noise: float

    @classmethod
    def from_constrained(
        cls,
        ls1: float = 1.0,
        var1: float = 1.0,
        ls2: float = 1.0,
        var2: float = 1.0,
        w1: float = 0.5,
        w2: float = 0.5,
        noise: float = 0.05,
    ) -> "KernelParams":
        return cls(
            raw_ls1=float(softplus_inv(ls1)),
            raw_var1=float(softplus_inv(var1)),
            raw_ls2=float(softplus_inv(ls2)),
            raw_var2=float(softplus_inv(var2)),
            raw_w1=float(softplus_inv(w1)),
            raw_w2=float(softplus_inv(w2)),
            raw_noise=float(softplus_inv(noise)),
        )

    # Constrained views
    @property
    def ls1(self) -> float:
        return float(softplus(self.raw_ls1))

    @property
    def var1(self) -> float:
        return float(softplus(self.raw_var1))

    @property
    def ls2(self) -> float:
        return float(softplus(self.raw_ls2))

    @property
    def var2(self) -> float:
        return float(softplus(self.raw_var2))

    @property
    def w1(self) -> float:
        return float(softplus(self.raw_w1))

    @property
    def w2(self) -> float:
        return float(softplus(self.raw_w2))

    @property
    def noise(self) -> float:
        return float(softplus(self.raw_noise))

    def raw_vector(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in RAW_PARAM_NAMES])

    def with_raw_vector(self, vec: np.ndarray) -> "KernelParams":
        return replace(self, **{name: float(v) for name, v in zip(RAW_PARAM_NAMES, vec)})


def matern15(r, ls: float, var: float):
    a = SQRT3 * np.asarray(r, dtype=np.float64) / ls
    return var * (1.0 + a) * np.exp(-a)


def matern25(r, ls: float, var: float):
    r = np.asarray(r, dtype=np.float64)
    a = SQRT5 * r / ls
    return var * (1.0 + a + 5.0 * r * r / (3.0 * ls * ls)) * np.exp(-a)


def kernel_eval(params: KernelParams, a, b) -> float:
    """Composite kernel value for two feature vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"feature dims differ: {a.shape} vs {b.shape}")
    r = float(np.linalg.norm(a - b))
    return float(
        params.w1 * matern15(r, params.ls1, params.var1)
        + params.w2 * matern25(r, params.ls2, params.var2)
    )


def kernel_matrix(params: KernelParams, xa: np.ndarray, xb: np.ndarray | None = None) -> np.ndarray:
    """Composite kernel over all row pairs; (len(xa), len(xb)) matrix."""
    xb = xa if xb is None else xb
    r = cdist(xa, xb)
    return params.w1 * matern15(r, params.ls1, params.var1) + params.w2 * matern25(
        r, params.ls2, params.var2
    )


def kernel_matrix_gradients(params: KernelParams, x: np.ndarray) -> dict[str, np.ndarray]:
    """dK/draw for each raw parameter except the noise (handled by the caller).

    Chain rule through softplus: d(constrained)/d(raw) = sigmoid(raw).
    """
    r = cdist(x, x)
    ls1, var1, ls2, var2 = params.ls1, params.var1, params.ls2, params.var2
    w1, w2 = params.w1, params.w2

    k1 = matern15(r, ls1, var1)
    k2 = matern25(r, ls2, var2)
    # d k_m15 / d ls = var * (3 r^2 / ls^3) * exp(-sqrt3 r / ls)
    dk1_dls = var1 * (3.0 * r * r / ls1**3) * np.exp(-SQRT3 * r / ls1)
    # d k_m25 / d ls = var * (5 r^2 / (3 ls^3)) * (1 + sqrt5 r / ls) * exp(-sqrt5 r / ls)
    dk2_dls = (
        var2 * (5.0 * r * r / (3.0 * ls2**3)) * (1.0 + SQRT5 * r / ls2) * np.exp(-SQRT5 * r / ls2)
    )

    return {
        "raw_ls1": w1 * dk1_dls * sigmoid(params.raw_ls1),
        "raw_var1": w1 * (k1 / var1) * sigmoid(params.raw_var1),
        "raw_ls2": w2 * dk2_dls * sigmoid(params.raw_ls2),
        "raw_var2": w2 * (k2 / var2) * sigmoid(params.raw_var2),
        "raw_w1": k1 * sigmoid(params.raw_w1),
        "raw_w2": k2 * sigmoid(params.raw_w2),
    }
