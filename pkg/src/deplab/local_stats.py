"""Statistics of adjacent pairs ``(r_i, r_{i+1})`` of the Chatterjee sequence."""

import math

import numpy as np
from scipy.special import ndtri

from ._kernels import local_sweep
from .errors import ArgumentError, DegenerateSampleError
from .global_stats import StatValue


def _check(ranks, what):
    ranks.require_no_y_ties(what)
    if ranks.n < 3:
        raise ArgumentError(f"{what} needs n >= 3")


def local_copula_eval(ranks, u, v1, v2):
    """``(1/(n-1)) sum_{i <= [nu]} 1(r_i/n <= v1, r_{i+1}/n <= v2)``.

    The sum index stops at ``n - 1`` since the last point has no successor.
    """
    _check(ranks, "local_copula_eval")
    n = ranks.n
    r = ranks.r
    m = min(n - 1, int(math.floor(n * min(max(u, 0.0), 1.0) + 1e-9)))
    if m <= 0:
        return 0.0
    # compare integers: r/n <= v  <=>  r <= floor(n v)
    k1 = math.floor(n * v1 + 1e-9)
    k2 = math.floor(n * v2 + 1e-9)
    hits = (r[:m] <= k1) & (r[1:m + 1] <= k2)
    return int(np.count_nonzero(hits)) / (n - 1)


def local_spearman(ranks):
    """``(12/(n-1)) sum_{i<n} (r_i r_{i+1} / n^2 - 1/4)``."""
    _check(ranks, "local_spearman")
    n = ranks.n
    r = ranks.r.astype(float)
    s = float(np.dot(r[:-1], r[1:]))
    value = 12.0 / (n - 1) * (s / n ** 2 - (n - 1) / 4.0)
    return StatValue("spearman-local", value, 0.5, n, "O(n)")


def identity_score(t):
    return np.asarray(t, float)


def normal_scores(t):
    return ndtri(np.asarray(t, float))


SCORE_FUNCTIONS = {
    # name: (function, grid denominator offset)
    "identity": (identity_score, 0),
    "normal": (normal_scores, 1),
}


def local_score_statistic(ranks, a="identity", offset=None, name=None):
    """Adjacent-pair correlation of scores ``a(r_i / (n + offset))``.

    ``a`` is a strictly increasing function or the name of a built-in
    (``"identity"``, ``"normal"``). The grid is ``k/n`` by default and
    ``k/(n+1)`` for normal scores, where ``a(1)`` would be infinite.
    """
    _check(ranks, "local_score_statistic")
    if isinstance(a, str):
        try:
            fn, default_offset = SCORE_FUNCTIONS[a]
        except KeyError:
            raise ArgumentError(f"unknown score function {a!r}") from None
        name = name or ("normal-scores-local" if a == "normal" else f"score-local:{a}")
    else:
        fn, default_offset = a, 0
        name = name or "score-local"
    if offset is None:
        offset = default_offset
    n = ranks.n
    grid = np.asarray(fn(np.arange(1, n + 1) / (n + offset)), float)
    if not np.isfinite(grid).all():
        raise ArgumentError("score function is not finite on the grid; use offset=1")
    mean = grid.mean()
    var = float(np.mean((grid - mean) ** 2))
    if var <= 0.0:
        raise DegenerateSampleError("score function has zero variance on the grid")
    s = grid[ranks.r - 1]
    value = (float(np.dot(s[:-1], s[1:])) / (n - 1) - mean * mean) / var
    return StatValue(name, value, 0.5, n, "O(n)")


def local_bkr(ranks):
    """Grid discrepancy of the adjacent-pair copula against ``v1 v2``.

    ``(1/n^2) sum_{j,k} (C_L(j/n, k/n) - (j/n)(k/n))^2``, O(n^2).
    """
    _check(ranks, "local_bkr")
    n = ranks.n
    total = local_sweep(np.ascontiguousarray(ranks.r))
    value = total / ((n - 1.0) ** 2 * float(n) ** 6)
    return StatValue("bkr-local", value, 1.0, n, "O(n^2)")


def m_hat(ranks):
    """``1 - (6/n) sum_{i<n} (r_{i+1} - r_i)^2 / n^2``."""
    _check(ranks, "m_hat")
    n = ranks.n
    d = np.diff(ranks.r)
    value = 1.0 - 6.0 * float(np.dot(d, d)) / float(n) ** 3
    return StatValue("m-hat", value, 0.5, n, "O(n)")
