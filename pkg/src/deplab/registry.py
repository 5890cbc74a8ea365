"""Statistic identifiers used by the harness and the command line.

Plain ids name a statistic directly (``"bkr"``); parametrised ids carry
their arguments after a colon (``"truncated-bkr:10"``, ``"fourier:2,2"``,
``"rademacher:0,0,0"``, ``"d-combined:bkr,chatterjee"``).
"""

from dataclasses import dataclass
from typing import Callable

from . import basis, global_stats, local_stats
from .errors import ArgumentError, UnsupportedStatisticError
from .functional import combined_d, isotonic_ch
from .global_stats import StatValue

TWO_SIDED = "two-sided"
UPPER = "upper"


@dataclass(frozen=True)
class Statistic:
    """A resolved statistic.

    ``compute(ranks, sample)`` returns a :class:`StatValue`; ``sample`` is
    only consulted when ``needs_sample`` is set.
    """

    id: str
    compute: Callable
    sidedness: str
    y_ties_ok: bool = False
    needs_sample: bool = False
    gaussian_limit: bool = False

    def __call__(self, ranks, sample=None):
        if self.needs_sample and sample is None:
            raise ArgumentError(f"{self.id} needs the raw sample, not only ranks")
        return self.compute(ranks, sample)


def _wrap(fn):
    return lambda ranks, sample: fn(ranks)


_SIMPLE = {
    "chatterjee": Statistic("chatterjee", _wrap(global_stats.chatterjee_cn), TWO_SIDED,
                            y_ties_ok=True, gaussian_limit=True),
    "spearman": Statistic("spearman", _wrap(global_stats.spearman_ts), TWO_SIDED,
                          y_ties_ok=True, gaussian_limit=True),
    "bkr": Statistic("bkr", _wrap(global_stats.bkr_statistic), UPPER, y_ties_ok=True),
    "kolmogorov": Statistic("kolmogorov", _wrap(global_stats.kolmogorov_tk), UPPER,
                            y_ties_ok=True),
    "spearman-local": Statistic("spearman-local", _wrap(local_stats.local_spearman),
                                TWO_SIDED, gaussian_limit=True),
    "normal-scores-local": Statistic(
        "normal-scores-local", _wrap(lambda r: local_stats.local_score_statistic(r, "normal")),
        TWO_SIDED, gaussian_limit=True),
    "m-hat": Statistic("m-hat", _wrap(local_stats.m_hat), TWO_SIDED, gaussian_limit=True),
    "bkr-local": Statistic("bkr-local", _wrap(local_stats.local_bkr), UPPER),
    "isotonic-ch": Statistic("isotonic-ch", lambda r, s: isotonic_ch(s), UPPER,
                             y_ties_ok=True, needs_sample=True),
}

PARAMETRISED = ("truncated-bkr:M", "fourier:i,j", "rademacher:N,p1,p2", "d-combined:ti,tfd")
STATISTIC_IDS = tuple(_SIMPLE) + ("truncated-bkr", "d-combined") + PARAMETRISED


def _ints(arg, count, sid):
    try:
        vals = [int(x) for x in arg.split(",")]
    except ValueError:
        vals = []
    if len(vals) != count:
        raise UnsupportedStatisticError(f"{sid!r}: expected {count} integer parameter(s)")
    return vals


def _fourier(i, j):
    def compute(ranks, sample):
        c = basis.fourier_coefficient(ranks, i, j)
        return StatValue(f"fourier:{i},{j}", c.value, 0.0, ranks.n, "O(n)")
    return compute


def _rademacher(N, p1, p2):
    def compute(ranks, sample):
        c = basis.rademacher_coefficient(ranks, N, p1, p2)
        return StatValue(f"rademacher:{N},{p1},{p2}", c.value, 0.0, ranks.n, "O(n)")
    return compute


def _truncated(M):
    return lambda ranks, sample: basis.truncated_bkr(ranks, M)


def d_combined(ranks, sample=None, t_i="bkr", t_fd="chatterjee"):
    """Combined measure from two registered statistics; returns a ``CombinedMeasure``."""
    a = get_statistic(t_i)(ranks, sample)
    b = get_statistic(t_fd)(ranks, sample)
    return combined_d(a, b)


def _combined(ti, tfd):
    def compute(ranks, sample):
        m = d_combined(ranks, sample, ti, tfd)
        return StatValue("d-combined", m.d, 0.0, ranks.n, "O(n^2)")
    return compute


def get_statistic(stat_id):
    """Resolve a statistic id, raising :class:`UnsupportedStatisticError` if unknown."""
    if isinstance(stat_id, Statistic):
        return stat_id
    sid = str(stat_id).strip()
    if sid in _SIMPLE:
        return _SIMPLE[sid]
    name, _, arg = sid.partition(":")
    try:
        if name == "truncated-bkr":
            (M,) = _ints(arg, 1, sid) if arg else (10,)
            if M < 1:
                raise ArgumentError("truncated-bkr needs M >= 1")
            return Statistic(f"truncated-bkr:{M}", _truncated(M), UPPER)
        if name == "fourier":
            i, j = _ints(arg, 2, sid)
            if i < 1 or j < 1:
                raise ArgumentError("Fourier indices must be >= 1")
            return Statistic(f"fourier:{i},{j}", _fourier(i, j), TWO_SIDED, gaussian_limit=True)
        if name == "rademacher":
            N, p1, p2 = _ints(arg, 3, sid)
            if N < 0 or not (0 <= p1 < 2 ** N and 0 <= p2 < 2 ** N):
                raise ArgumentError(f"rademacher index out of range in {sid!r}")
            return Statistic(f"rademacher:{N},{p1},{p2}", _rademacher(N, p1, p2), TWO_SIDED,
                             gaussian_limit=True)
        if name == "d-combined":
            ti, tfd = (arg.split(",") + [""])[:2] if arg else ("bkr", "chatterjee")
            a, b = get_statistic(ti), get_statistic(tfd)
            return Statistic(f"d-combined:{a.id},{b.id}", _combined(a.id, b.id), UPPER,
                             y_ties_ok=a.y_ties_ok and b.y_ties_ok,
                             needs_sample=a.needs_sample or b.needs_sample)
    except UnsupportedStatisticError:
        raise
    except ArgumentError as exc:
        raise UnsupportedStatisticError(str(exc)) from None
    raise UnsupportedStatisticError(
        f"unknown statistic {sid!r}; valid ids: {', '.join(STATISTIC_IDS)}")
