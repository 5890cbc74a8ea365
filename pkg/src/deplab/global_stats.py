"""Global rank statistics: Chatterjee, Spearman, Blum-Kiefer-Rosenblatt, Kolmogorov."""

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import copula_sweep
from .errors import DegenerateSampleError
from .sample import EmpiricalCopula, RankData

COMPLEXITY = ("O(n)", "O(n log n)", "O(n^2)")


@dataclass(frozen=True)
class StatValue:
    """A computed statistic.

    ``scale_exponent`` is the power of n by which ``value`` must be
    multiplied to obtain a non-degenerate limit under independence (0.5 for
    root-n statistics, 1.0 for squared-norm statistics, 0 when the value is
    already scaled). ``complexity`` is the cost given ranked data.
    """

    name: str
    value: float
    scale_exponent: float
    n: int
    complexity: str

    def __post_init__(self):
        if self.complexity not in COMPLEXITY:
            raise ValueError(f"unknown complexity label {self.complexity!r}")

    def __float__(self):
        return float(self.value)

    def scaled(self):
        return self.value * self.n ** self.scale_exponent


def _as_ranks(obj):
    return obj.ranks if isinstance(obj, EmpiricalCopula) else obj


def chatterjee_cn(ranks):
    """Chatterjee's coefficient.

    Without Y ties this is ``1 - 3 sum|r_{i+1} - r_i| / (n^2 - 1)``; with ties
    the general form ``1 - n sum|r_{i+1} - r_i| / (2 sum l_i (n - l_i))``
    with ``l_i = #{j : Y_j >= Y_(i)}`` is used.
    """
    ranks = _as_ranks(ranks)
    n = ranks.n
    r = ranks.r
    jumps = int(np.abs(np.diff(r)).sum())
    if not ranks.had_y_ties:
        value = 1.0 - 3.0 * jumps / (n * n - 1.0)
    else:
        # l = n - (#{Y_j < y}) = n - (min-rank - 1)
        s_sorted = np.sort(ranks.S)
        less = np.searchsorted(s_sorted, r, side="left")
        l = n - less
        denom = 2.0 * float(np.sum(l * (n - l)))
        if denom == 0.0:
            raise DegenerateSampleError("Y is constant")
        value = 1.0 - n * jumps / denom
    return StatValue("chatterjee", value, 0.5, n, "O(n)")


def spearman_ts(ranks):
    """Pearson correlation of the rank pairs ``(R_i, S_i)``."""
    ranks = _as_ranks(ranks)
    R = ranks.R - ranks.R.mean()
    S = ranks.S - ranks.S.mean()
    denom = math.sqrt(float(R @ R) * float(S @ S))
    if denom == 0.0:
        raise DegenerateSampleError("constant ranks")
    return StatValue("spearman", float(R @ S) / denom, 0.5, ranks.n, "O(n)")


def spearman_rank_display(ranks):
    """``(12/n) sum_i (i r_i / n^2 - 1/4)``: the rank form, exact up to O(1/n)."""
    ranks = _as_ranks(ranks)
    n = ranks.n
    i = np.arange(1, n + 1)
    return 12.0 / n * float(np.sum(i * ranks.r / n ** 2 - 0.25))


def _sweep(c):
    if not isinstance(c, EmpiricalCopula):
        c = EmpiricalCopula(c)
    ranks = c.ranks
    n = ranks.n
    y_marg = np.searchsorted(np.sort(ranks.S), np.arange(n + 1), side="right")
    return n, copula_sweep(np.ascontiguousarray(ranks.r), y_marg.astype(np.int64))


def bkr_statistic(c):
    """Plug-in Blum-Kiefer-Rosenblatt statistic on the ``(j/n, k/n)`` grid.

    ``(1/n^2) sum_{j,k} (C(j/n, k/n) - C1(j/n) C2(k/n))^2`` with the margins
    taken from the empirical copula itself.
    """
    n, (sum_sq, _) = _sweep(c)
    return StatValue("bkr", sum_sq / float(n) ** 6, 1.0, n, "O(n^2)")


def kolmogorov_tk(c):
    """Max over the grid of ``|C(j/n, k/n) - C1(j/n) C2(k/n)|``."""
    n, (_, max_abs) = _sweep(c)
    return StatValue("kolmogorov", max_abs / float(n) ** 2, 0.5, n, "O(n^2)")


def kolmogorov_rank_display(ranks):
    """``max_{j,k} |(1/n) sum_{i<=j} 1(r_i <= k) - jk/n^2|`` evaluated literally."""
    ranks = _as_ranks(ranks)
    n = ranks.n
    k = np.arange(1, n + 1)
    hits = (ranks.r[:, None] <= k[None, :]).cumsum(axis=0) / n
    j = np.arange(1, n + 1)[:, None]
    return float(np.abs(hits - j * k[None, :] / n ** 2).max())


def bkr_pairwise(ranks):
    """Same quantity as :func:`bkr_statistic` from an O(n^2) pairwise sum.

    Independent route used to cross-check the grid sweep (no ties):
    ``sum_{j,k} C^2`` counts grid cells dominating both points of each pair.
    """
    ranks = _as_ranks(ranks)
    n = ranks.n
    R = ranks.R.astype(float)
    S = ranks.S.astype(float)
    mR = np.maximum.outer(R, R)
    mS = np.maximum.outer(S, S)
    cc = float(((n + 1 - mR) * (n + 1 - mS)).sum()) / n ** 2
    tail = lambda x: (n * (n + 1) - x * (x - 1)) / 2.0  # sum_{j=x}^n j
    cross = float((tail(R) * tail(S)).sum()) / n ** 3
    sq = (n * (n + 1) * (2 * n + 1) / 6.0) ** 2 / n ** 4
    return (cc - 2.0 * cross + sq) / n ** 2
