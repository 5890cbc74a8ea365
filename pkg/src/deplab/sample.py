"""Paired samples, ranks, the empirical copula and bilinear rank statistics."""

import csv
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import rng as _rng
from .errors import (
    DomainError,
    NumericError,
    ParseError,
    SampleTooSmallError,
    TieBreakSeedRequired,
    TiesNotSupported,
)


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class PairedSample:
    """Raw paired observations ``(x_i, y_i)``.

    Values are validated on construction: equal lengths, ``n >= 2`` and
    every value finite.
    """

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = _frozen(self.xs, float)
        ys = _frozen(self.ys, float)
        if xs.ndim != 1 or ys.ndim != 1 or xs.shape != ys.shape:
            raise ValueError("xs and ys must be 1-d arrays of equal length")
        if xs.size < 2:
            raise SampleTooSmallError(f"need at least 2 observations, got {xs.size}")
        if not (np.isfinite(xs).all() and np.isfinite(ys).all()):
            raise DomainError("sample contains non-finite values")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def n(self):
        return self.xs.size

    @cached_property
    def has_x_ties(self):
        return np.unique(self.xs).size < self.n

    @cached_property
    def has_y_ties(self):
        return np.unique(self.ys).size < self.n


def ingest_csv(path, header=False, delimiter=","):
    """Read a two-column numeric CSV file into a :class:`PairedSample`.

    Parameters
    ----------
    path : str or path-like
    header : bool
        Skip the first line.
    delimiter : str
        Field separator. Only ``.`` is accepted as the decimal point.

    Raises
    ------
    ParseError
        A row does not hold exactly two numbers (reported with its line number).
    DomainError
        A value is NaN or infinite. Rows are never silently dropped.
    SampleTooSmallError
        Fewer than two data rows.
    """
    xs, ys = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        for lineno, row in enumerate(reader, start=1):
            if header and lineno == 1:
                continue
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise ParseError(f"expected 2 columns, found {len(row)}", line=lineno)
            try:
                x, y = (float(c.strip()) for c in row)
            except ValueError:
                raise ParseError(f"non-numeric value in {row!r}", line=lineno) from None
            if not (math.isfinite(x) and math.isfinite(y)):
                raise DomainError(f"line {lineno}: non-finite value")
            xs.append(x)
            ys.append(y)
    if len(xs) < 2:
        raise SampleTooSmallError(f"need at least 2 rows, got {len(xs)}")
    return PairedSample(np.asarray(xs), np.asarray(ys))


@dataclass(frozen=True, eq=False)
class RankData:
    """Ranks of a sample.

    Attributes
    ----------
    R, S : ndarray of int
        Global ranks of ``x_i`` and ``y_i`` (1-based, in input order).
        ``R`` is always a permutation (X ties are broken at random).
        ``S`` uses the max-rank convention ``#{j : y_j <= y_i}``.
    r : ndarray of int
        Chatterjee sequence: ``r[i]`` is the Y-rank of the pair holding the
        (i+1)-th smallest X.
    """

    R: np.ndarray
    S: np.ndarray
    r: np.ndarray
    had_x_ties: bool = False
    had_y_ties: bool = False
    tie_break_seed: int | None = None

    @property
    def n(self):
        return self.R.size

    @property
    def global_ranks(self):
        return np.column_stack([self.R, self.S])

    @property
    def chatterjee_seq(self):
        return self.r

    def require_no_y_ties(self, what="this statistic"):
        if self.had_y_ties:
            raise TiesNotSupported(f"{what} requires a sample without ties in Y")

    def require_no_ties(self, what="this statistic"):
        if self.had_x_ties or self.had_y_ties:
            raise TiesNotSupported(f"{what} requires a sample without ties")

    @classmethod
    def from_chatterjee_seq(cls, r):
        """Tie-free rank data with X already sorted, i.e. ``R = 1..n``, ``S = r``."""
        r = _frozen(r, np.int64)
        n = r.size
        if n < 2 or not np.array_equal(np.sort(r), np.arange(1, n + 1)):
            raise ValueError("r must be a permutation of 1..n with n >= 2")
        return cls(R=_frozen(np.arange(1, n + 1), np.int64), S=r, r=r)


def compute_ranks(sample, tie_break_seed=None):
    """Rank a :class:`PairedSample`.

    X ties are broken uniformly at random from ``tie_break_seed``; a seed is
    mandatory when X has ties so the result is replayable. Y ties keep the
    max-rank convention and are flagged.
    """
    xs, ys = sample.xs, sample.ys
    n = xs.size
    x_ties = bool(sample.has_x_ties)
    if x_ties:
        if tie_break_seed is None:
            raise TieBreakSeedRequired(
                "X contains ties; pass tie_break_seed to break them reproducibly")
        keys = _rng.stream(tie_break_seed, _rng.TIE_BREAK).random(n)
        order = np.lexsort((keys, xs))
    else:
        order = np.argsort(xs, kind="stable")
    R = np.empty(n, dtype=np.int64)
    R[order] = np.arange(1, n + 1)
    S = np.searchsorted(np.sort(ys), ys, side="right").astype(np.int64)
    return RankData(
        R=_frozen(R, np.int64),
        S=_frozen(S, np.int64),
        r=_frozen(S[order], np.int64),
        had_x_ties=x_ties,
        had_y_ties=bool(sample.has_y_ties),
        tie_break_seed=tie_break_seed if x_ties else None,
    )


def ranks_of_uniforms(u, v):
    """Fast path for simulated continuous data (no validation)."""
    ou = np.argsort(u)
    S = np.empty(v.size, dtype=np.int64)
    S[np.argsort(v)] = np.arange(1, v.size + 1)
    R = np.empty(u.size, dtype=np.int64)
    R[ou] = np.arange(1, u.size + 1)
    return RankData(R=R, S=S, r=S[ou])


@dataclass(frozen=True, eq=False)
class EmpiricalCopula:
    """Empirical copula of a ranked sample.

    ``grid[j, k] = #{i : R_i <= j, S_i <= k}`` for ``0 <= j, k <= n`` is
    built on first use (O(n^2) memory); point evaluations without the grid
    cost O(n).
    """

    ranks: RankData

    @property
    def n(self):
        return self.ranks.n

    @cached_property
    def grid(self):
        n = self.n
        counts = np.zeros((n + 1, n + 1), dtype=np.int64)
        np.add.at(counts, (self.ranks.R, self.ranks.S), 1)
        g = counts.cumsum(axis=0).cumsum(axis=1)
        g.flags.writeable = False
        return g

    def count(self, j, k):
        """``n * C(j/n, k/n)`` for integer grid indices."""
        if "grid" in self.__dict__:
            return int(self.grid[j, k])
        return int(np.count_nonzero((self.ranks.R <= j) & (self.ranks.S <= k)))


def _grid_index(t, n):
    t = min(max(float(t), 0.0), 1.0)
    # k/n passed as a float may land a hair below k
    return min(n, int(math.floor(n * t + 1e-9)))


def copula_eval(c, u, v):
    """Right-continuous step value of the empirical copula at ``(u, v)``."""
    n = c.n
    return c.count(_grid_index(u, n), _grid_index(v, n)) / n


# --- primitives for bilinear statistics -------------------------------------

@dataclass(frozen=True)
class Primitive:
    """A score function ``f`` together with ``F(u) = int_0^u f``.

    ``antiderivative`` may be ``None``; it is then computed by quadrature.
    """

    f: object
    antiderivative: object = None
    label: str = ""

    def __call__(self, u):
        return self.f(u)


def sine(i, scale=1.0):
    """``scale * sin(pi i u)`` with its closed-form antiderivative."""
    w = math.pi * i
    return Primitive(
        lambda u: scale * np.sin(w * np.asarray(u, float)),
        lambda u: scale * (1.0 - np.cos(w * np.asarray(u, float))) / w,
        label=f"sin({i})",
    )


def tent(t):
    """``min(t, 1 - t)`` on ``[0, 1]`` and 0 elsewhere."""
    t = np.asarray(t, float)
    return np.where((t >= 0.0) & (t <= 1.0), np.minimum(t, 1.0 - t), 0.0)


def haar(N, p):
    """``sgn(2^N u - p - 1/2)`` on the cell ``[p 2^-N, (p+1) 2^-N]``, 0 elsewhere."""
    scale = 2.0 ** N

    def f(u):
        t = scale * np.asarray(u, float) - p
        return np.where((t >= 0.0) & (t <= 1.0), np.sign(t - 0.5), 0.0)

    def F(u):
        return -tent(scale * np.asarray(u, float) - p) / scale

    return Primitive(f, F, label=f"haar({N},{p})")


_SIMPSON_PANELS = 1024


def antiderivative_on(a, x, panels=_SIMPSON_PANELS):
    """Evaluate ``int_0^x a`` at each point of ``x``.

    Uses the registered closed form when ``a`` is a :class:`Primitive` that
    has one, composite Simpson on ``panels`` panels otherwise.
    """
    x = np.asarray(x, float)
    if isinstance(a, Primitive) and a.antiderivative is not None:
        return np.asarray(a.antiderivative(x), float)
    f = a.f if isinstance(a, Primitive) else a
    t = np.linspace(0.0, 1.0, 2 * panels + 1)
    w = np.ones_like(t)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w /= 3.0 * (2 * panels)
    out = np.empty_like(x)
    chunk = max(1, 2 ** 21 // t.size)
    for lo in range(0, x.size, chunk):
        xc = x[lo:lo + chunk]
        vals = np.asarray(f(np.outer(xc, t)), float)
        out[lo:lo + chunk] = (vals @ w) * xc
    if not np.isfinite(out).all():
        raise NumericError("quadrature of the score function produced non-finite values")
    return out


def centered_grid_antiderivative(a, n):
    """``A(k/n) - mean_k A(k/n)`` for ``k = 1..n``."""
    A = antiderivative_on(a, np.arange(1, n + 1) / n)
    return A - A.mean()


def rank_bilinear_statistic(a, b, ranks):
    """``n^{-1/2} sum_k Abar(R_k/n) Bbar(S_k/n)`` with ``A = int_0^u a``.

    Centering is over the grid ``{k/n}``. Under independence this is the
    projection of the empirical copula process onto ``a(u) b(v)``.
    """
    ranks.require_no_ties("rank_bilinear_statistic")
    n = ranks.n
    A = centered_grid_antiderivative(a, n)
    B = centered_grid_antiderivative(b, n)
    return float(np.dot(A[ranks.R - 1], B[ranks.S - 1]) / math.sqrt(n))
