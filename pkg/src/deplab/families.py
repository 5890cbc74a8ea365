"""Parametric alternatives on the unit square and the optimal score test.

Every family is a density ``h(u, v, theta)`` on ``[0, 1]^2`` equal to the
uniform density at ``theta = 0``. Its score at zero, Fisher information and
score class (``lambda1-perp``: conditional means of the score vanish;
``lambda1``: the score is additive ``a(u) + b(v)``; ``mixed``) are checked
by quadrature when the family is built.
"""

import json
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from . import quadrature
from . import rng as _rng
from .errors import ArgumentError, EnvelopeError
from .sample import PairedSample

SCORE_CLASSES = ("lambda1-perp", "lambda1", "mixed")
_CLASS_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class AlternativeFamily:
    id: str
    density: Callable
    score: Callable
    fisher_info: float
    score_class: str
    theta_range: tuple
    envelope: float
    independent_for_all_theta: bool = False
    description: str = ""
    params: dict = field(default_factory=dict)

    def check_theta(self, theta):
        lo, hi = self.theta_range
        if not lo - 1e-12 <= theta <= hi + 1e-12:
            raise ArgumentError(f"theta={theta} outside {self.theta_range} for {self.id!r}")

    def pdf(self, u, v, theta):
        return self.density(np.asarray(u, float), np.asarray(v, float), float(theta))


def _grid(order=256):
    x, w, _ = quadrature.rule(order)
    return x, w


def score_moments(score, order=256):
    """Mean, second moment and conditional means of ``score`` under uniform (U, V)."""
    x, w = _grid(order)
    L = score(x[:, None], x[None, :])
    cond_u = L @ w
    cond_v = w @ L
    mean = float(w @ cond_u)
    second = float(w @ (L * L) @ w)
    return mean, second, cond_u, cond_v, L


def classify_score(score, order=256):
    """Score class from its conditional means, plus the Fisher information."""
    mean, second, cu, cv, L = score_moments(score, order)
    scale = math.sqrt(max(second, 1e-300))
    if abs(mean) > _CLASS_TOL * max(1.0, scale):
        raise ArgumentError(f"score has non-zero mean {mean:.3g}")
    if second <= 0.0:
        raise ArgumentError("score has zero Fisher information")
    tol = _CLASS_TOL * max(1.0, scale)
    if np.abs(cu).max() <= tol and np.abs(cv).max() <= tol:
        return "lambda1-perp", second
    resid = L - cu[:, None] - cv[None, :] + mean
    if np.abs(resid).max() <= tol:
        return "lambda1", second
    return "mixed", second


def _build(id, density, score, score_class, theta_range, envelope, **kw):
    found, info = classify_score(score)
    if found != score_class:
        raise ArgumentError(f"family {id!r}: declared score class {score_class!r} "
                            f"but quadrature finds {found!r}")
    return AlternativeFamily(id=id, density=density, score=score, fisher_info=info,
                             score_class=score_class, theta_range=tuple(theta_range),
                             envelope=float(envelope), **kw)


def make_fgm():
    """Farlie-Gumbel-Morgenstern: ``1 + theta (1-2u)(1-2v)``, score in the Spearman direction."""
    def density(u, v, theta):
        return 1.0 + theta * (1.0 - 2.0 * u) * (1.0 - 2.0 * v)

    def score(u, v):
        return (1.0 - 2.0 * u) * (1.0 - 2.0 * v)

    return _build("fgm", density, score, "lambda1-perp", (-1.0, 1.0), 2.0,
                  description="1 + theta(1-2u)(1-2v)")


def make_coscos():
    """``1 + theta cos(2 pi u) cos(2 pi v)``; orthogonal to the Spearman direction."""
    def score(u, v):
        return np.cos(2.0 * np.pi * u) * np.cos(2.0 * np.pi * v)

    def density(u, v, theta):
        return 1.0 + theta * score(u, v)

    return _build("coscos", density, score, "lambda1-perp", (-1.0, 1.0), 2.0,
                  description="1 + theta cos(2 pi u) cos(2 pi v)")


def default_a(u):
    return np.cos(np.pi * np.asarray(u, float))


def default_b(v):
    return np.cos(np.pi * np.asarray(v, float))


def default_g(u, v):
    return np.cos(2.0 * np.pi * u) * np.cos(2.0 * np.pi * v)


def _check_marginal(fn, name):
    x, w = _grid(512)
    vals = np.asarray(fn(x), float)
    m = float(vals @ w)
    if abs(m) > 1e-8:
        raise ArgumentError(f"{name} must have mean zero on [0,1], got {m:.3g}")
    fine = np.asarray(fn(np.linspace(0.0, 1.0, 4097)), float)
    sup = float(max(np.abs(vals).max(), np.abs(fine).max()))
    if sup > 1.0 + 1e-12:
        raise ArgumentError(f"sup |{name}| must be <= 1, got {sup:.3g}")
    return sup


def make_tilted_independent(a=default_a, b=default_b, theta_range=(-0.5, 0.5)):
    """Exponential tilt of the margins: ``exp(theta (a(u) + b(v))) / Z(theta)``.

    ``U`` and ``V`` stay independent for every ``theta`` while the score is
    ``a(u) + b(v)``.
    """
    sa = _check_marginal(a, "a")
    sb = _check_marginal(b, "b")
    x, w = _grid(512)
    av = np.asarray(a(x), float)
    bv = np.asarray(b(x), float)

    @lru_cache(maxsize=256)
    def Z(theta):
        return float(np.exp(theta * av) @ w) * float(np.exp(theta * bv) @ w)

    def density(u, v, theta):
        return np.exp(theta * (a(u) + b(v))) / Z(theta)

    def score(u, v):
        return a(u) + b(v)

    tmax = max(abs(t) for t in theta_range)
    # Z(theta) >= 1 by Jensen since a, b have mean zero
    envelope = math.exp(tmax * (sa + sb)) * 1.001
    fam = _build("tilted", density, score, "lambda1", theta_range, envelope,
                 independent_for_all_theta=True,
                 description="exp(theta(a(u)+b(v)))/Z(theta)",
                 params={"Z": Z})
    return fam


def make_additive_score_dependent(a=default_a, b=default_b, g=default_g,
                                  theta_range=(-0.3, 0.3)):
    """``(1 + theta a(u))(1 + theta b(v)) + theta^2 g(u, v)``, normalised.

    The score at zero is ``a(u) + b(v)`` but the copula is dependent for
    every ``theta != 0`` through the ``theta^2 g`` term.
    """
    sa = _check_marginal(a, "a")
    sb = _check_marginal(b, "b")
    x, w = _grid(256)
    G = np.asarray(g(x[:, None], x[None, :]), float)
    if max(np.abs(G @ w).max(), np.abs(w @ G).max()) > 1e-8:
        raise ArgumentError("g must have zero conditional means in both arguments")
    fine = np.linspace(0.0, 1.0, 513)
    sg = float(np.abs(g(fine[:, None], fine[None, :])).max())
    A = np.asarray(a(x), float)
    B = np.asarray(b(x), float)

    @lru_cache(maxsize=256)
    def norm_const(theta):
        raw = (1.0 + theta * A)[:, None] * (1.0 + theta * B)[None, :] + theta ** 2 * G
        if raw.min() < 0.0:
            raise ArgumentError(f"density is negative at theta={theta}")
        return float(w @ raw @ w)

    def density(u, v, theta):
        raw = (1.0 + theta * a(u)) * (1.0 + theta * b(v)) + theta ** 2 * g(u, v)
        return raw / norm_const(theta)

    def score(u, v):
        return a(u) + b(v)

    for t in theta_range:
        norm_const(t)
    tmax = max(abs(t) for t in theta_range)
    bound = (1.0 + tmax * sa) * (1.0 + tmax * sb) + tmax ** 2 * sg
    envelope = bound / min(norm_const(t) for t in (theta_range[0], 0.0, theta_range[1])) * 1.02
    return _build("additive-dep", density, score, "lambda1", theta_range, envelope,
                  description="(1+theta a)(1+theta b) + theta^2 g",
                  params={"norm": norm_const})


def family_from_json(source):
    """Custom family from ``{"id", "thetas": [...], "densities": [m x m grids]}``.

    Grids hold density values at ``(i/(m-1), j/(m-1))``; the density is
    bilinear in ``(u, v)``, linear in ``theta`` between grid thetas, and
    renormalised to integrate to one. The score is the central difference of
    the log-density at ``theta = 0``.
    """
    if not isinstance(source, dict):
        with open(source) as fh:
            source = json.load(fh)
    thetas = np.asarray(source["thetas"], float)
    grids = np.asarray(source["densities"], float)
    if grids.ndim != 3 or grids.shape[0] != thetas.size or grids.shape[1] != grids.shape[2]:
        raise ArgumentError("densities must be a list of m x m grids, one per theta")
    if np.any(np.diff(thetas) <= 0) or not np.any(np.isclose(thetas, 0.0)):
        raise ArgumentError("thetas must be increasing and contain 0")
    if grids.min() < 0:
        raise ArgumentError("density values must be non-negative")
    m = grids.shape[1]
    # trapezoid rule integrates the bilinear interpolant exactly
    tw = np.full(m, 1.0 / (m - 1))
    tw[[0, -1]] /= 2.0
    grids = grids / np.einsum("tij,i,j->t", grids, tw, tw)[:, None, None]
    z = int(np.argmin(np.abs(thetas)))
    if not np.allclose(grids[z], 1.0):
        raise ArgumentError("density at theta = 0 must be uniform")
    if z == 0 or z == thetas.size - 1:
        raise ArgumentError("need thetas on both sides of 0 to form the score")

    def bilinear(grid, u, v):
        fu = np.clip(u, 0.0, 1.0) * (m - 1)
        fv = np.clip(v, 0.0, 1.0) * (m - 1)
        i = np.minimum(np.floor(fu).astype(int), m - 2)
        j = np.minimum(np.floor(fv).astype(int), m - 2)
        du, dv = fu - i, fv - j
        return ((1 - du) * (1 - dv) * grid[i, j] + du * (1 - dv) * grid[i + 1, j]
                + (1 - du) * dv * grid[i, j + 1] + du * dv * grid[i + 1, j + 1])

    def density(u, v, theta):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        k = int(np.clip(np.searchsorted(thetas, theta) - 1, 0, thetas.size - 2))
        lam = (theta - thetas[k]) / (thetas[k + 1] - thetas[k])
        return (1 - lam) * bilinear(grids[k], u, v) + lam * bilinear(grids[k + 1], u, v)

    lo, hi = thetas[z - 1], thetas[z + 1]

    def score(u, v):
        return (np.log(np.maximum(density(u, v, hi), 1e-300))
                - np.log(np.maximum(density(u, v, lo), 1e-300))) / (hi - lo)

    found, info = classify_score(score)
    return AlternativeFamily(id=source.get("id", "custom"), density=density, score=score,
                             fisher_info=info, score_class=found,
                             theta_range=(float(thetas[0]), float(thetas[-1])),
                             envelope=float(grids.max()) * 1.000001,
                             description="bilinear grid family")


_BUILTINS = {
    "fgm": make_fgm,
    "coscos": make_coscos,
    "tilted": make_tilted_independent,
    "additive-dep": make_additive_score_dependent,
}
FAMILY_IDS = tuple(_BUILTINS)


@lru_cache(maxsize=None)
def get_family(family_id):
    try:
        return _BUILTINS[family_id]()
    except KeyError:
        raise ArgumentError(f"unknown family {family_id!r}; choose from {FAMILY_IDS}") from None


def resolve_family(family):
    return get_family(family) if isinstance(family, str) else family


MAX_CONSECUTIVE_REJECTIONS = 10 ** 6


def sample_family(family, theta, n, seed, stream=()):
    """Draw ``n`` pairs from ``family`` at ``theta`` by rejection from the uniform square.

    The draw is a deterministic function of ``(seed, *stream)``.
    """
    family = resolve_family(family)
    family.check_theta(theta)
    gen = _rng.stream(seed, *stream)
    env = family.envelope
    us, vs = [], []
    need = n
    streak = 0
    while need > 0:
        m = max(64, int(math.ceil(1.2 * need * env)) + 16)
        cand = gen.random((3, m))
        h = family.pdf(cand[0], cand[1], theta)
        if np.any(h > env):
            raise EnvelopeError(f"density exceeds envelope {env} for family {family.id!r}")
        acc = cand[2] * env <= h
        idx = np.flatnonzero(acc)
        if idx.size == 0:
            streak += m
            if streak > MAX_CONSECUTIVE_REJECTIONS:
                raise EnvelopeError(f"more than {MAX_CONSECUTIVE_REJECTIONS} consecutive "
                                    f"rejections for family {family.id!r}")
            continue
        streak = m - 1 - idx[-1]
        idx = idx[:need]
        us.append(cand[0, idx])
        vs.append(cand[1, idx])
        need -= idx.size
    return PairedSample(np.concatenate(us), np.concatenate(vs))


@dataclass(frozen=True)
class LocalTheta:
    theta: float
    clamped: bool


def local_theta(t, n, theta_range=None):
    """``t / sqrt(n)``, clamped to ``theta_range`` (with a warning) if given."""
    theta = t / math.sqrt(n)
    if theta_range is not None:
        lo, hi = theta_range
        if theta < lo or theta > hi:
            clipped = min(max(theta, lo), hi)
            warnings.warn(f"theta={theta:.4g} clamped to {clipped:.4g}", stacklevel=2)
            return LocalTheta(clipped, True)
    return LocalTheta(theta, False)


def optimal_statistic(family, sample):
    """``L_n = sum_i score(U_i, V_i) / (tau_0 sqrt(n))``.

    Built-in families live on the unit square, so the probability integral
    transform is the identity.
    """
    family = resolve_family(family)
    s = family.score(sample.xs, sample.ys)
    return float(np.sum(s)) / (math.sqrt(family.fisher_info) * math.sqrt(sample.n))


def efficient_score(family, order=256):
    """Score minus its conditional means given ``U`` and given ``V``."""
    family = resolve_family(family)
    x, w = _grid(order)
    score = family.score

    def ell_star(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        cu = score(u[..., None], x) @ w
        cv = score(x, v[..., None]) @ w
        return score(u, v) - cu - cv

    return ell_star


def make_block_diagonal(m):
    """``(1 - theta) + theta m 1(floor(m u) == floor(m v))``, theta in [0, 1].

    At ``theta = 1`` ``V`` is uniform on the block of ``U``; population
    ``C = 1 - 1/m`` and ``M = 1 - 1/m^2`` there, approaching functional
    dependence as ``m`` grows. Block edges fall on quadrature panel edges
    when ``m`` divides 16.
    """
    m = int(m)
    if m < 1:
        raise ArgumentError("m must be >= 1")

    def score(u, v):
        same = np.floor(m * np.asarray(u, float)) == np.floor(m * np.asarray(v, float))
        return m * same - 1.0

    def density(u, v, theta):
        return 1.0 + theta * score(u, v)

    return _build(f"block:{m}", density, score, "lambda1-perp", (0.0, 1.0), float(m),
                  description="block-diagonal mixture", params={"m": m})
