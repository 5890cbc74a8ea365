"""O(n) basis-coefficient statistics and the ordered selective scan.

Coefficients are projections of the empirical copula process onto products
of one-dimensional scores. Under independence they are asymptotically
Gaussian and, within a basis batch, asymptotically independent, which is
what the scan relies on.
"""

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import norm

from .errors import ArgumentError
from .global_stats import StatValue
from .sample import tent


@dataclass(frozen=True)
class FourierCoefficient:
    i: int
    j: int
    value: float
    null_variance: float

    def standardized(self):
        return self.value / math.sqrt(self.null_variance)


@dataclass(frozen=True)
class RademacherCoefficient:
    N: int
    p1: int
    p2: int
    value: float
    null_variance: float

    def standardized(self):
        return self.value / math.sqrt(self.null_variance)


def fourier_null_variance(i, j):
    return 1.0 / (math.pi ** 4 * i * i * j * j)


def _cos_table(ranks_col, i, n):
    return np.cos(math.pi * i * ranks_col / n)


def fourier_coefficient(ranks, i, j):
    """Coefficient of the empirical copula process on ``2 sin(pi i u) sin(pi j v)``.

    ``(2/sqrt(n)) sum_k cos(pi i R_k/n) cos(pi j S_k/n) / (pi^2 i j)``, whose
    null variance is ``1 / (pi^4 i^2 j^2)``.
    """
    if i < 1 or j < 1:
        raise ArgumentError("Fourier indices must be >= 1")
    ranks.require_no_y_ties("fourier_coefficient")
    n = ranks.n
    s = float(np.dot(_cos_table(ranks.R, i, n), _cos_table(ranks.S, j, n)))
    value = 2.0 * s / (math.sqrt(n) * math.pi ** 2 * i * j)
    return FourierCoefficient(i, j, value, fourier_null_variance(i, j))


def fourier_matrix(ranks, M):
    """All coefficients ``1 <= i, j <= M`` as an ``M x M`` array, O(M n + M^2 n)."""
    ranks.require_no_y_ties("fourier coefficients")
    n = ranks.n
    idx = np.arange(1, M + 1)
    cu = np.cos(math.pi * np.outer(idx, ranks.R) / n)
    cv = np.cos(math.pi * np.outer(idx, ranks.S) / n)
    return 2.0 * (cu @ cv.T) / (math.sqrt(n) * math.pi ** 2 * np.outer(idx, idx))


def truncated_bkr(ranks, M):
    """``sum_{i,j <= M} T_ij^2``, the O(n) approximation of ``n T_BKR``."""
    if M < 1:
        raise ArgumentError("M must be >= 1")
    T = fourier_matrix(ranks, M)
    return StatValue("truncated-bkr", float(np.sum(T * T)), 0.0, ranks.n, "O(n)")


def rademacher_lambda(u, N, p):
    """``2^-N (tent(2^N u - p) - 1/4)``; equal to ``-2^-N / 4`` off the cell."""
    d = 2.0 ** -N
    return d * (tent(np.asarray(u, float) / d - p) - 0.25)


def rademacher_null_variance(N):
    # Var(lambda_p(U)) = D^3/12 - D^4/16 with D = 2^-N, squared for the product
    d = 2.0 ** -N
    v = d ** 3 / 12.0 - d ** 4 / 16.0
    return v * v


def _centered_lambda(N, p, n):
    lam = rademacher_lambda(np.arange(1, n + 1) / n, N, p)
    return lam - lam.mean()


def rademacher_coefficient(ranks, N, p1, p2):
    """Coefficient on the product of scale-``N`` Haar-type functions.

    ``n^{-1/2} sum_i lambda_p1(R_i/n) lambda_p2(S_i/n)`` where each
    ``lambda_p`` is centered over the grid ``{k/n}``.
    """
    if N < 0:
        raise ArgumentError("scale N must be >= 0")
    top = 2 ** N
    if not (0 <= p1 < top and 0 <= p2 < top):
        raise ArgumentError(f"p1, p2 must lie in 0..{top - 1}")
    ranks.require_no_y_ties("rademacher_coefficient")
    n = ranks.n
    a = _centered_lambda(N, p1, n)
    b = a if p2 == p1 else _centered_lambda(N, p2, n)
    value = float(np.dot(a[ranks.R - 1], b[ranks.S - 1])) / math.sqrt(n)
    return RademacherCoefficient(N, p1, p2, value, rademacher_null_variance(N))


# --- selective scan ----------------------------------------------------------

POLICIES = ("geometric", "bonferroni")


def allocate_alpha(alpha, k, policy):
    """Per-coefficient levels in scan order; they sum to ``alpha``."""
    if policy == "bonferroni":
        return [alpha / k] * k
    if policy == "geometric":
        if k == 1:
            return [alpha]
        out = [alpha / 2 ** (m + 1) for m in range(k - 1)]
        return out + [alpha / 2 ** (k - 1)]
    raise ArgumentError(f"unknown allocation policy {policy!r}; choose from {POLICIES}")


@dataclass(frozen=True)
class ScanEntry:
    basis: str
    index: tuple
    value: float
    std_value: float
    p_value: float
    alpha_alloc: float
    rejected: bool


@dataclass(frozen=True)
class ScanReport:
    entries: tuple
    policy: str
    alpha: float

    @property
    def any_rejected(self):
        return any(e.rejected for e in self.entries)

    def smallest_p(self):
        return min(self.entries, key=lambda e: e.p_value)

    def to_json(self):
        rows = []
        for e in self.entries:
            d = asdict(e)
            d["index"] = list(e.index)
            rows.append(d)
        return json.dumps(rows)


def fourier_order(M):
    """(i, j) pairs by total order i+j, then i."""
    return sorted(((i, j) for i in range(1, M + 1) for j in range(1, M + 1)),
                  key=lambda ij: (ij[0] + ij[1], ij[0]))


def rademacher_order(N_max):
    return [(N, p1, p2) for N in range(N_max + 1)
            for p1 in range(2 ** N) for p2 in range(2 ** N)]


def selective_scan(ranks, basis="fourier", budget=3, alpha=0.05, allocation="geometric"):
    """Test basis coefficients in order of increasing wiggliness.

    ``budget`` is the maximal order M for the Fourier basis and the maximal
    scale ``N_max`` for the Rademacher basis. Each coefficient gets a
    two-sided Gaussian p-value from its exact null variance and is rejected
    when that p-value is at most its allocated level.
    """
    if not 0.0 < alpha < 1.0:
        raise ArgumentError("alpha must lie in (0, 1)")
    if allocation not in POLICIES:
        raise ArgumentError(f"unknown allocation policy {allocation!r}; choose from {POLICIES}")
    if basis == "fourier":
        T = fourier_matrix(ranks, budget)
        coefs = [(ij, T[ij[0] - 1, ij[1] - 1], fourier_null_variance(*ij))
                 for ij in fourier_order(budget)]
    elif basis == "rademacher":
        coefs = []
        for N, p1, p2 in rademacher_order(budget):
            c = rademacher_coefficient(ranks, N, p1, p2)
            coefs.append(((N, p1, p2), c.value, c.null_variance))
    else:
        raise ArgumentError(f"unknown basis {basis!r}")
    alloc = allocate_alpha(alpha, len(coefs), allocation)
    entries = []
    for (idx, value, var), a in zip(coefs, alloc):
        z = value / math.sqrt(var)
        p = float(2.0 * norm.sf(abs(z)))
        entries.append(ScanEntry(basis, tuple(int(x) for x in idx), float(value),
                                 float(z), p, a, p <= a))
    return ScanReport(tuple(entries), allocation, alpha)
