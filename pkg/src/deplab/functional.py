"""Measures of functional dependence.

Population values ``C`` and ``M`` by quadrature (used as oracles for the
sample statistics), the isotonic plug-in ``C_H``, the discrete maximal
correlation ``M_L`` of a contingency table, and the combined measure ``D``.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import isotonic_regression

from . import quadrature
from .errors import ArgumentError, DegenerateSampleError, NumericError, ParseError
from .global_stats import StatValue, bkr_statistic, chatterjee_cn

MIN_QUAD_ORDER = 64
_REL_TOL = 1e-6
_ABS_TOL = 1e-12


def _density_fn(family, theta):
    pdf = getattr(family, "pdf", None)
    if pdf is None:
        return lambda u, v: family.density(u, v, theta)
    return lambda u, v: pdf(u, v, theta)


def _check_order(order):
    if order < MIN_QUAD_ORDER or order % quadrature.NODES_PER_PANEL:
        raise ArgumentError(f"quad_order must be >= {MIN_QUAD_ORDER} and a multiple of "
                            f"{quadrature.NODES_PER_PANEL}")


def _refined(fn, order):
    coarse = fn(order)
    fine = fn(2 * order)
    if not (np.isfinite(coarse) and np.isfinite(fine)):
        raise NumericError("quadrature produced a non-finite value")
    if abs(fine - coarse) > _REL_TOL * abs(fine) + _ABS_TOL:
        raise NumericError(f"quadrature did not converge: {coarse!r} vs {fine!r} "
                           f"at orders {order} and {2 * order}")
    return float(fine)


def _c_at(h, order):
    x, w, _ = quadrature.rule(order)
    dens = h(x[:, None], x[None, :])
    f_u = dens @ w                       # marginal density of U at the nodes
    g = w @ dens                         # marginal density of V at the nodes
    # H[i, m] = int_0^{t_m} h(u_i, s) ds ; G[m] = int_0^{t_m} g
    H = quadrature.cumulative(lambda s: h(x[:, None], s[None, :]), order)
    G = H.T @ w
    surv = 1.0 - H / f_u[:, None]        # P(Y >= t_m | U = u_i)
    inner = (w * f_u) @ (surv * surv) - (1.0 - G) ** 2
    num = float(inner @ (w * g))
    den = float((G * (1.0 - G)) @ (w * g))
    if den <= 0.0:
        raise NumericError("Y is degenerate under this density")
    return num / den


def population_c(family, theta, quad_order=256):
    """``int Var(E[1(Y >= t)|X]) dG(t) / int Var(1(Y >= t)) dG(t)`` by quadrature.

    Evaluated at ``quad_order`` and twice that; a relative change above 1e-6
    raises :class:`NumericError`.
    """
    _check_order(quad_order)
    h = _density_fn(family, theta)
    return _refined(lambda o: _c_at(h, o), quad_order)


def _m_at(h, order):
    x, w, _ = quadrature.rule(order)
    dens = h(x[:, None], x[None, :])
    f_u = dens @ w
    g = w @ dens
    G = quadrature.cumulative(lambda s: w @ h(x[:, None], s[None, :]), order)
    cond = (dens @ (w * G)) / f_u        # E[G(Y) | U = u_i]
    mean = float((w * g) @ G)
    var_g = float((w * g) @ (G * G)) - mean ** 2
    var_cond = float((w * f_u) @ (cond * cond)) - mean ** 2
    if var_g <= 0.0:
        raise NumericError("Y is degenerate under this density")
    return var_cond / var_g


def population_m(family, theta, quad_order=256):
    """``Var(E[G(Y)|X]) / Var(G(Y))`` by quadrature, with the same refinement check."""
    _check_order(quad_order)
    h = _density_fn(family, theta)
    return _refined(lambda o: _m_at(h, o), quad_order)


# --- isotonic plug-in ---------------------------------------------------------

def _monotone_fit(xs, ys, increasing):
    order = np.argsort(xs, kind="stable")
    x_sorted = xs[order]
    y_sorted = ys[order]
    # tied x must share a fitted value: pool them before fitting
    starts = np.flatnonzero(np.r_[True, x_sorted[1:] != x_sorted[:-1]])
    counts = np.diff(np.r_[starts, x_sorted.size])
    means = np.add.reduceat(y_sorted, starts) / counts
    fit = isotonic_regression(means, weights=counts.astype(float), increasing=increasing).x
    return np.repeat(fit, counts)


def isotonic_ch(sample):
    """Share of ``Var(Y)`` explained by the best monotone function of ``X``.

    Both orientations are fitted and the larger ratio is returned.
    """
    xs = np.asarray(sample.xs, float)
    ys = np.asarray(sample.ys, float)
    n = xs.size
    if n < 3:
        raise ArgumentError("isotonic_ch needs n >= 3")
    var_y = float(np.var(ys))
    if var_y <= 0.0:
        raise DegenerateSampleError("Y is constant")
    best = 0.0
    for increasing in (True, False):
        fit = _monotone_fit(xs, ys, increasing)
        best = max(best, float(np.var(fit)) / var_y)
    return StatValue("isotonic-ch", min(best, 1.0), 1.0, n, "O(n log n)")


# --- discrete maximal correlation -------------------------------------------

@dataclass(frozen=True, eq=False)
class ContingencyTable:
    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 2 or c.shape[0] < 2 or c.shape[1] < 2:
            raise ArgumentError("contingency table must be at least 2 x 2")
        if not np.issubdtype(c.dtype, np.integer):
            if not np.all(np.isfinite(c)) or np.any(c != np.round(c)):
                raise ArgumentError("counts must be integers")
            c = c.astype(np.int64)
        if np.any(c < 0):
            raise ArgumentError("counts must be non-negative")
        if np.any(c.sum(axis=1) == 0) or np.any(c.sum(axis=0) == 0):
            raise ArgumentError("table has an all-zero row or column")
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "counts", c)

    @property
    def shape(self):
        return self.counts.shape

    def transpose(self):
        return ContingencyTable(self.counts.T)

    def transition(self):
        """``P[a, b] = sum_j p_aj q_jb`` with ``p = P(Y|X)`` and ``q = P(X|Y)``."""
        c = self.counts.astype(float)
        p = c / c.sum(axis=1, keepdims=True)
        q = (c / c.sum(axis=0, keepdims=True)).T
        return p @ q

    @classmethod
    def from_csv(cls, path, delimiter=","):
        rows = []
        with open(path, newline="") as fh:
            for lineno, row in enumerate(csv.reader(fh, delimiter=delimiter), start=1):
                if not row or all(not f.strip() for f in row):
                    continue
                try:
                    rows.append([int(f) for f in row])
                except ValueError:
                    raise ParseError(f"non-integer count in {row!r}", line=lineno) from None
        if not rows:
            raise ParseError("empty table", line=0)
        if len({len(r) for r in rows}) != 1:
            raise ParseError("rows have different lengths", line=len(rows))
        return cls(np.array(rows, dtype=np.int64))


MAX_POWER_ITERATIONS = 10 ** 4
EIG_TOL = 1e-10


def discrete_ml(table):
    """Largest non-trivial eigenvalue of the transition matrix ``sum_j p_aj q_jb``.

    That matrix is similar to the symmetric ``B B^T`` with
    ``B = D_r^{-1/2} P D_c^{-1/2}``; its trivial eigenvector
    ``sqrt(pi_r)`` is deflated and the remaining top eigenvalue (the squared
    maximal canonical correlation) is found by power iteration.
    """
    if not isinstance(table, ContingencyTable):
        table = ContingencyTable(table)
    c = table.counts.astype(float)
    P = c / c.sum()
    pr = P.sum(axis=1)
    pc = P.sum(axis=0)
    B = P / np.sqrt(pr)[:, None] / np.sqrt(pc)[None, :]
    S = B @ B.T
    e = np.sqrt(pr)
    S = S - np.outer(e, e)
    # deterministic start vector, orthogonal to the deflated direction
    x = np.cos(np.arange(1, S.shape[0] + 1, dtype=float))
    x -= e * (e @ x)
    nx = np.linalg.norm(x)
    if nx == 0.0:
        x = np.ones_like(e) - e * e.sum()
        nx = np.linalg.norm(x)
    x /= nx
    # all eigenvalues of S lie in [0, 1]; no shift is needed for dominance
    lam = 0.0
    for _ in range(MAX_POWER_ITERATIONS):
        y = S @ x
        ny = np.linalg.norm(y)
        if ny <= EIG_TOL:
            return 0.0
        lam = float(x @ y)
        resid = np.linalg.norm(y - lam * x)
        x = y / ny
        if resid <= EIG_TOL:
            return float(min(max(lam, 0.0), 1.0))
    raise NumericError(f"power iteration did not converge in {MAX_POWER_ITERATIONS} steps")


# --- combined measure ---------------------------------------------------------

BRANCHES = ("independence-branch", "fd-branch")
SWITCH = 0.5


@dataclass(frozen=True)
class CombinedMeasure:
    t_i: float
    t_fd: float
    d: float
    branch: str


def combined_d(t_i, t_fd):
    """``D = T_I`` when ``T_FD <= 1/2`` (boundary included), else ``D = T_FD``.

    ``T_I`` is used unnormalised: it only needs values in ``[0, 1)`` that
    vanish exactly under independence.
    """
    ti = float(t_i)
    tfd = float(t_fd)
    if tfd <= SWITCH:
        return CombinedMeasure(ti, tfd, ti, "independence-branch")
    return CombinedMeasure(ti, tfd, tfd, "fd-branch")
