"""Embedded invariant suite: fast end-user checks of the numerical core."""

from __future__ import annotations

import json

import numpy as np

from .aggregation import (
    aggregate,
    permutation_expectation,
    permutation_expectation_closed_form,
)
from .codec import MockCodec
from .explorer import kappa
from .gp import build_gp_state, posterior
from .kernels import KernelParams, kernel_matrix
from .standardize import Standardizer


def _check_halves_identity() -> tuple[bool, str]:
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 33))
        d = int(rng.integers(1, 17))
        l_max = int(rng.integers(n, n + 40))
        z = rng.standard_normal((n, d))
        agg = aggregate(z, l_max)
        err = np.abs(agg.first_half + agg.second_half - z.mean(axis=0)).max()
        worst = max(worst, float(err))
    return worst <= 1e-12, f"max |first+second-mean| = {worst:.3e}"


def _check_permutation_closed_form() -> tuple[bool, str]:
    rng = np.random.default_rng(7)
    worst = 0.0
    for n in range(1, 6):
        z = rng.standard_normal((n, 3))
        got = permutation_expectation(z, l_max=12).values
        want = permutation_expectation_closed_form(z, l_max=12)
        worst = max(worst, float(np.abs(got - want).max()))
    return worst <= 1e-12, f"max closed-form gap = {worst:.3e}"


def _check_kappa_values() -> tuple[bool, str]:
    k1 = kappa(1, 0.1)
    k101 = kappa(101, 0.1)
    ok = abs(k1 - 2.3672) <= 1e-3 and abs(k101 - 4.9052) <= 1e-3
    return ok, f"kappa(1,0.1)={k1:.5f}, kappa(101,0.1)={k101:.5f}"


def _check_gp_oracle_equivalence() -> tuple[bool, str]:
    rng = np.random.default_rng(11)
    x = rng.standard_normal((10, 3))
    y = rng.standard_normal(10)
    params = KernelParams.from_constrained(ls1=1.2, var1=0.8, ls2=0.9, var2=1.1, noise=0.05)
    state = build_gp_state(params, x, y, jitter0=1e-10)
    xq = rng.standard_normal((5, 3))
    k_star = kernel_matrix(params, x, xq)
    k_full = kernel_matrix(params, x) + (params.noise + state.jitter) * np.eye(10)
    scaler = Standardizer.fit(y)
    alpha = np.linalg.solve(k_full, scaler.transform(y))
    mean_dense = scaler.inverse(k_star.T @ alpha)
    prior = params.w1 * params.var1 + params.w2 * params.var2 + params.noise
    var_dense = prior - np.einsum("ij,ij->j", k_star, np.linalg.solve(k_full, k_star))
    std_dense = scaler.inverse_scale(np.sqrt(np.maximum(var_dense, 0.0)))

    mean_chol, std_chol = posterior(state, xq)
    gap = max(
        float(np.abs(mean_chol - mean_dense).max()), float(np.abs(std_chol - std_dense).max())
    )
    return gap <= 1e-8, f"max |cholesky - dense| = {gap:.3e}"


def _check_mock_round_trip(table_path: str | None) -> tuple[bool, str]:
    if table_path is not None:
        with open(table_path, "r", encoding="utf-8") as fh:
            spec = json.load(fh)
        try:
            codec = MockCodec.from_table(
                spec["alphabet"], np.asarray(spec["table"], dtype=np.float64), spec["l_max"]
            )
        except ValueError as exc:
            return False, f"table rejected: {exc}"
    else:
        codec = MockCodec(alphabet="ABCDEFGHIJKLMNOP", d=16, l_max=40, seed=3)
    rng = np.random.default_rng(5)
    for _ in range(300):
        n = int(rng.integers(1, codec.l_max + 1))
        text = "".join(codec.alphabet[int(i)] for i in rng.integers(0, len(codec.alphabet), n))
        if codec.decode(codec.encode(text).vectors) != text:
            return False, f"round trip failed for {text!r}"
    return True, "300 sampled strings round-tripped"


def run_selftest(table_path: str | None = None) -> list[tuple[str, bool, str]]:
    """Run every embedded invariant; returns (name, passed, detail) triples."""
    return [
        ("aggregation-halves-identity", *_check_halves_identity()),
        ("aggregation-permutation-closed-form", *_check_permutation_closed_form()),
        ("kappa-schedule-values", *_check_kappa_values()),
        ("gp-cholesky-vs-dense", *_check_gp_oracle_equivalence()),
        ("mock-codec-round-trip", *_check_mock_round_trip(table_path)),
    ]
