import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from conftest import random_ranks, ranks_from_r
from deplab.errors import ArgumentError, DegenerateSampleError, TiesNotSupported
from deplab.local_stats import (local_bkr, local_copula_eval, local_score_statistic,
                                local_spearman, m_hat)
from deplab.sample import PairedSample, compute_ranks


def brute_local_grid(r):
    n = len(r)
    r = np.asarray(r)
    g = np.empty((n, n))
    for j in range(1, n + 1):
        for k in range(1, n + 1):
            g[j - 1, k - 1] = np.sum((r[:-1] <= j) & (r[1:] <= k)) / (n - 1)
    return g


def test_local_copula_examples():
    rk = ranks_from_r([1, 3, 2])
    assert local_copula_eval(rk, 1, 1, 1) == 1.0
    assert local_copula_eval(rk, 1, 1 / 3, 1) == 0.5
    assert local_copula_eval(rk, 0, 1, 1) == 0.0


def test_local_spearman_identity_closed_form():
    rk = ranks_from_r(np.arange(1, 101))
    assert_allclose(local_spearman(rk).value, 12 / 99 * (333300 / 1e4 - 99 / 4), rtol=1e-14)
    big = local_spearman(ranks_from_r(np.arange(1, 10001))).value
    assert abs(big - 1) < 0.02


def test_local_bkr_n3_by_hand():
    # r = (1, 3, 2): pairs (1, 3), (3, 2); grid values C_L(j/3, k/3) * 2
    #   j\k  1  2  3
    #   1    0  0  1
    #   2    0  0  1
    #   3    0  1  2
    counts = np.array([[0, 0, 1], [0, 0, 1], [0, 1, 2]]) / 2
    jk = np.outer([1, 2, 3], [1, 2, 3]) / 9
    expect = np.sum((counts - jk) ** 2) / 9
    assert_allclose(local_bkr(ranks_from_r([1, 3, 2])).value, expect, rtol=1e-14)
    assert_allclose(brute_local_grid([1, 3, 2]), counts)


def test_local_bkr_matches_brute_force(rng):
    for n in (4, 11, 30):
        rk = random_ranks(rng, n)
        g = brute_local_grid(rk.r)
        jk = np.outer(np.arange(1, n + 1), np.arange(1, n + 1)) / n ** 2
        assert_allclose(local_bkr(rk).value, np.sum((g - jk) ** 2) / n ** 2, rtol=1e-12)


def test_m_hat_examples(rng):
    n = 50
    assert_allclose(m_hat(ranks_from_r(np.arange(1, n + 1))).value, 1 - 6 * (n - 1) / n ** 3)
    for n in (100, 1000):
        for _ in range(10):
            rk = random_ranks(rng, n)
            assert abs(m_hat(rk).value - local_spearman(rk).value) <= 10 / n


def test_score_statistic_identity_close_to_local_spearman(rng):
    for n in (50, 500):
        rk = random_ranks(rng, n)
        assert abs(local_score_statistic(rk).value - local_spearman(rk).value) <= 10 / n


def test_score_statistic_normal_functional():
    rk = ranks_from_r(np.arange(1, 10001))
    v = local_score_statistic(rk, "normal").value
    assert 0.97 < v < 1.0


def test_score_statistic_custom_and_errors(rng):
    rk = random_ranks(rng, 40)
    cube = local_score_statistic(rk, lambda t: t ** 3)
    assert cube.name == "score-local"
    with pytest.raises(ArgumentError):
        local_score_statistic(rk, "cauchy")
    with pytest.raises(ArgumentError), np.errstate(divide="ignore"):
        local_score_statistic(rk, lambda t: np.log(1 - t))
    with pytest.raises(DegenerateSampleError):
        local_score_statistic(rk, lambda t: 0 * t)


def test_local_requires_no_y_ties():
    rk = compute_ranks(PairedSample([1, 2, 3, 4], [1, 1, 2, 3]))
    for f in (local_spearman, local_bkr, m_hat, local_score_statistic):
        with pytest.raises(TiesNotSupported):
            f(rk)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 32 - 1), st.integers(min_value=3, max_value=60))
def test_monotone_invariance(seed, n):
    gen = np.random.default_rng(seed)
    x = gen.normal(size=n)
    y = gen.normal(size=n)
    a = compute_ranks(PairedSample(x, y))
    b = compute_ranks(PairedSample(x ** 3 + x, np.exp(y)))
    for f in (local_spearman, m_hat, local_bkr):
        assert f(a).value == f(b).value
    assert local_score_statistic(a, "normal").value == local_score_statistic(b, "normal").value


@pytest.mark.slow
def test_null_means():
    gen = np.random.default_rng(21)
    vals = np.array([[local_spearman(rk).value, m_hat(rk).value,
                      local_score_statistic(rk, "normal").value]
                     for rk in (random_ranks(gen, 1000) for _ in range(2000))])
    assert np.all(np.abs(vals.mean(axis=0)) < 0.02)


def _kernel(s, u):
    return np.minimum.outer(s, u) - np.outer(s, u)


def local_field_covariances(m=40):
    """Covariances of the limiting local process on an m x m midpoint grid.

    ``R`` is the adjacent-pair process of iid uniforms (its lag-0 and lag-1
    covariances), ``lam`` the covariance of its projection onto single
    observations, ``a1 E(a2) + a2 E(a1)``. With ranks the projection is
    removed, so the limit has covariance ``R - lam``.
    """
    t = (np.arange(m) + 0.5) / m
    a1, a2 = (g.ravel() for g in np.meshgrid(t, t, indexing="ij"))
    o = np.outer
    R = (np.minimum.outer(a1, a1) * np.minimum.outer(a2, a2)
         + o(a1, a2) * np.minimum.outer(a2, a1) + o(a2, a1) * np.minimum.outer(a1, a2)
         - 3 * o(a1 * a2, a1 * a2))
    lam = (o(a1, a1) * _kernel(a2, a2) + o(a1, a2) * _kernel(a2, a1)
           + o(a2, a1) * _kernel(a1, a2) + o(a2, a2) * _kernel(a1, a1))
    return R, lam, _kernel(a1, a1) * _kernel(a2, a2)


def gaussian_field_mean(cov, m, reps=4000, seed=0):
    w, V = np.linalg.eigh(cov)
    L = V * np.sqrt(np.clip(w, 0, None))
    field = L @ np.random.default_rng(seed).normal(size=(L.shape[1], reps))
    return float(np.mean(np.sum(field ** 2, axis=0)) / m ** 2)


def test_local_field_covariance_identity():
    R, lam, kk = local_field_covariances(12)
    # removing the projection leaves exactly the covariance of the global process
    assert_allclose(R - lam, kk, atol=1e-14)
    m = 12
    # the display "Cov(T*) + Cov(Lambda*)" integrates to 1/36 + 7/45 instead
    assert_allclose(np.trace(kk + lam) / m ** 2, 1 / 36 + 7 / 45, rtol=0.05)


@pytest.mark.slow
def test_local_bkr_null_mean_against_field_oracle():
    m = 40
    R, lam, _ = local_field_covariances(m)
    oracle = gaussian_field_mean(R - lam, m)
    assert_allclose(oracle, 1 / 36, rtol=0.05)
    gen = np.random.default_rng(22)
    vals = [500 * local_bkr(random_ranks(gen, 500)).value for _ in range(1000)]
    assert_allclose(np.mean(vals), oracle, rtol=0.2)
    assert np.mean(vals) < 0.5 * (1 / 36 + 7 / 45)


def test_local_bkr_detects_functional_dependence():
    gen = np.random.default_rng(23)
    null = [local_bkr(random_ranks(gen, 300)).value for _ in range(300)]
    x = gen.random(300)
    obs = local_bkr(compute_ranks(PairedSample(x, np.sin(3 * x)))).value
    assert obs > np.quantile(null, 0.99)
