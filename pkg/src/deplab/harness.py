"""Monte Carlo null calibration, p-values, power experiments and Pitman efficiency.

Replicate ``b`` of any experiment draws from its own stream
``(seed, domain, ..., b)``; workers only decide who computes which
replicate, so outputs are identical for every thread count.
"""

import json
import math
import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from . import rng as _rng
from .errors import ArgumentError, UnsupportedStatisticError
from .families import local_theta, optimal_statistic, resolve_family, sample_family
from .registry import TWO_SIDED, get_statistic
from .sample import PairedSample, RankData, compute_ranks, ranks_of_uniforms

MIN_REPS = 100
Z975 = 1.959963984540054


def _map_reps(fn, reps, threads=1):
    """``[fn(b) for b in range(reps)]``, spread over ``threads`` workers."""
    threads = max(1, int(threads or 1))
    if threads == 1 or reps < 2:
        return [fn(b) for b in range(reps)]
    blocks = np.array_split(np.arange(reps), min(reps, 4 * threads))

    def run(block):
        return [fn(int(b)) for b in block]

    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(run, blocks))
    return [v for part in parts for v in part]


def null_draw(n, seed, b):
    """Uniform pairs for null replicate ``b``."""
    uv = _rng.stream(seed, _rng.NULL, n, b).random((2, n))
    return uv[0], uv[1]


def _evaluate(stats, u, v):
    ranks = ranks_of_uniforms(u, v)
    sample = PairedSample(u, v) if any(s.needs_sample for s in stats) else None
    return [float(s(ranks, sample)) for s in stats]


# --- calibration ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class NullCalibration:
    statistic: str
    n: int
    reps: int
    seed: int
    values: np.ndarray
    sidedness: str = "upper"

    def quantile(self, q):
        if not 0.0 <= q <= 1.0:
            raise ArgumentError("quantile level must lie in [0, 1]")
        return float(np.quantile(self.values, q))

    def upper_p(self, observed):
        count = self.values.size - np.searchsorted(self.values, observed, side="left")
        return (1.0 + count) / (self.reps + 1.0)

    def lower_p(self, observed):
        count = np.searchsorted(self.values, observed, side="right")
        return (1.0 + count) / (self.reps + 1.0)

    def p_value(self, observed):
        """Add-one Monte Carlo p-value; equal-tailed for two-sided statistics."""
        if self.sidedness == TWO_SIDED:
            return float(min(1.0, 2.0 * min(self.upper_p(observed), self.lower_p(observed))))
        return float(self.upper_p(observed))

    def header(self):
        return {"statistic": self.statistic, "n": self.n, "reps": self.reps,
                "seed": self.seed, "version": __version__}


def cache_dir():
    env = os.environ.get("DEP_LAB_CACHE_DIR")
    return Path(env) if env else Path.home() / ".cache" / "deplab"


def _cache_path(stat_id, n, reps, seed):
    safe = "".join(c if c.isalnum() or c in "-_" else "_" for c in stat_id)
    return cache_dir() / f"{safe}_n{n}_r{reps}_s{seed}.json"


def _load_cached(stat, n, reps, seed):
    path = _cache_path(stat.id, n, reps, seed)
    try:
        with open(path) as fh:
            blob = json.load(fh)
    except (OSError, ValueError):
        return None
    expect = {"statistic": stat.id, "n": n, "reps": reps, "seed": seed, "version": __version__}
    if blob.get("header") != expect or len(blob.get("values", ())) != reps:
        return None
    return NullCalibration(stat.id, n, reps, seed, np.asarray(blob["values"], float),
                           stat.sidedness)


def _store(cal):
    path = _cache_path(cal.statistic, cal.n, cal.reps, cal.seed)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        with open(tmp, "w") as fh:
            json.dump({"header": cal.header(), "values": cal.values.tolist()}, fh)
        os.replace(tmp, path)
    except OSError:
        pass  # the cache is an optimisation only


def null_tables(stat_ids, n, reps, seed, threads=1, cache=True):
    """Calibrate several statistics on one shared set of null samples."""
    if reps < MIN_REPS:
        raise ArgumentError(f"reps must be >= {MIN_REPS} for meaningful quantiles")
    if n < 3:
        raise ArgumentError("n must be >= 3")
    if seed is None:
        raise ArgumentError("a seed is required")
    stats = [get_statistic(s) for s in stat_ids]
    out = {}
    todo = []
    for s in stats:
        hit = _load_cached(s, n, reps, seed) if cache else None
        if hit is not None:
            out[s.id] = hit
        else:
            todo.append(s)
    if todo:
        rows = np.array(_map_reps(lambda b: _evaluate(todo, *null_draw(n, seed, b)),
                                  reps, threads))
        for k, s in enumerate(todo):
            cal = NullCalibration(s.id, n, reps, seed, np.sort(rows[:, k]), s.sidedness)
            out[s.id] = cal
            if cache:
                _store(cal)
    return {get_statistic(s).id: out[get_statistic(s).id] for s in stat_ids}


def null_calibrate(stat_id, n, reps, seed, threads=1, cache=True):
    """Sorted Monte Carlo null sample of ``stat_id`` at sample size ``n``."""
    (cal,) = null_tables([stat_id], n, reps, seed, threads, cache).values()
    return cal


# --- p-values -------------------------------------------------------------------

METHODS = ("montecarlo", "permutation")


@dataclass(frozen=True)
class TestResult:
    stat: str
    value: float
    p: float
    method: str
    reps: int
    seed: int


def _permuted(ranks, perm):
    S = ranks.S[perm]
    r = np.empty_like(S)
    r[ranks.R - 1] = S
    return RankData(R=ranks.R, S=S, r=r, had_x_ties=ranks.had_x_ties,
                    had_y_ties=ranks.had_y_ties, tie_break_seed=ranks.tie_break_seed)


def p_value(stat_id, sample, method="montecarlo", reps=1000, seed=None,
            tie_break_seed=None, calibration=None, threads=1):
    """Test independence with ``stat_id`` on ``sample``.

    ``montecarlo`` compares against a null calibration of uniform samples
    (valid only without ties); ``permutation`` re-pairs Y against X.
    X ties are broken with ``tie_break_seed`` (default: ``seed``).
    """
    stat = get_statistic(stat_id)
    if method not in METHODS:
        raise ArgumentError(f"unknown method {method!r}; choose from {METHODS}")
    if seed is None:
        raise ArgumentError("a seed is required")
    has_ties = sample.has_x_ties or sample.has_y_ties
    if method == "montecarlo" and has_ties:
        raise ArgumentError("the sample has ties, so the uniform null does not apply; "
                            "use method='permutation'")
    tb = tie_break_seed if tie_break_seed is not None else seed
    ranks = compute_ranks(sample, tie_break_seed=tb if sample.has_x_ties else None)
    observed = float(stat(ranks, sample))
    if method == "montecarlo":
        cal = calibration or null_calibrate(stat.id, sample.n, reps, seed, threads)
        if cal.statistic != stat.id or cal.n != sample.n:
            raise ArgumentError("calibration does not match the statistic or sample size")
        return TestResult(stat.id, observed, cal.p_value(observed), method, cal.reps, seed)
    if reps < 1:
        raise ArgumentError("reps must be >= 1")
    n = sample.n

    def one(b):
        perm = _rng.stream(seed, _rng.PERMUTATION, b).permutation(n)
        shuffled = PairedSample(sample.xs, sample.ys[perm]) if stat.needs_sample else None
        return float(stat(_permuted(ranks, perm), shuffled))

    null = np.sort(np.array(_map_reps(one, reps, threads)))
    cal = NullCalibration(stat.id, n, reps, seed, null, stat.sidedness)
    return TestResult(stat.id, observed, cal.p_value(observed), method, reps, seed)


# --- power ----------------------------------------------------------------------

@dataclass(frozen=True)
class PowerResult:
    family: str
    t: float
    n: int
    statistic: str
    alpha: float
    reps: int
    rejection_rate: float
    ci_halfwidth: float
    theta: float = float("nan")
    clamped: bool = False


def binomial_halfwidth(p, reps):
    return Z975 * math.sqrt(p * (1.0 - p) / reps)


def _t_key(family_id, t):
    return zlib.crc32(f"{family_id}|{float(t)!r}".encode())


def power_experiment(family, ts, ns, stats, alpha=0.05, reps=1000, seed=None,
                     calib_reps=5000, threads=1, calibrations=None, cache=True):
    """Rejection rates at ``theta_n = t / sqrt(n)`` for each ``(t, n, statistic)``.

    Each statistic rejects when its Monte Carlo p-value against a null
    calibration of ``calib_reps`` replicates is at most ``alpha``.
    ``calibrations`` may supply ready tables keyed by ``(stat_id, n)``.
    """
    if seed is None:
        raise ArgumentError("a seed is required")
    if not 0.0 < alpha < 1.0:
        raise ArgumentError("alpha must lie in (0, 1)")
    if reps < 1:
        raise ArgumentError("reps must be >= 1")
    fam = resolve_family(family)
    resolved = [get_statistic(s) for s in stats]
    calibrations = dict(calibrations or {})
    results = []
    for n in ns:
        missing = [s.id for s in resolved if (s.id, n) not in calibrations]
        if missing:
            for sid, cal in null_tables(missing, n, calib_reps, seed, threads, cache).items():
                calibrations[(sid, n)] = cal
        cals = [calibrations[(s.id, n)] for s in resolved]
        for t in ts:
            lt = local_theta(t, n, fam.theta_range)
            key = _t_key(fam.id, t)

            def one(b, theta=lt.theta, key=key, n=n):
                smp = sample_family(fam, theta, n, seed, (_rng.ALTERNATIVE, key, n, b))
                vals = _evaluate(resolved, smp.xs, smp.ys)
                return [c.p_value(v) <= alpha for c, v in zip(cals, vals)]

            hits = np.array(_map_reps(one, reps, threads), dtype=bool).reshape(reps, -1)
            for k, s in enumerate(resolved):
                rate = float(hits[:, k].mean())
                results.append(PowerResult(fam.id, float(t), int(n), s.id, alpha, reps, rate,
                                           binomial_halfwidth(rate, reps), lt.theta, lt.clamped))
    return results


def pitman_efficiency(stat_id, family, n, reps, seed, threads=1):
    """Squared null correlation between ``stat_id`` and the optimal statistic ``L_n``."""
    stat = get_statistic(stat_id)
    if not stat.gaussian_limit:
        raise UnsupportedStatisticError(
            f"{stat.id} has no root-n Gaussian limit; Pitman efficiency is undefined")
    if reps < MIN_REPS:
        raise ArgumentError(f"reps must be >= {MIN_REPS}")
    fam = resolve_family(family)

    def one(b):
        u, v = null_draw(n, seed, b)
        (val,) = _evaluate([stat], u, v)
        return val, optimal_statistic(fam, PairedSample(u, v))

    pairs = np.array(_map_reps(one, reps, threads))
    rho = np.corrcoef(pairs[:, 0], pairs[:, 1])[0, 1]
    return float(rho * rho)
