"""Command-line interface: ``deplab {compute,test,calibrate,power,scan,discrete}``.

Exit codes: 0 success, 1 input/output failure, 2 usage or argument error,
3 numeric failure. Every output embeds the resolved configuration.
"""

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import __version__
from .basis import POLICIES, selective_scan
from .errors import (ArgumentError, DegenerateSampleError, DeplabError, EnvelopeError,
                     NumericError, ParseError)
from .families import FAMILY_IDS, family_from_json, get_family
from .functional import ContingencyTable, discrete_ml
from .harness import METHODS, null_calibrate, p_value, power_experiment
from .registry import STATISTIC_IDS, d_combined, get_statistic
from .sample import compute_ranks, ingest_csv

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


def split_stats(text):
    """Split ``"a,fourier:1,1,b"`` into ids; bare integers attach to the previous id."""
    out = []
    for tok in (t.strip() for t in text.split(",")):
        if not tok:
            continue
        if out and ":" in out[-1] and tok.lstrip("-").isdigit():
            out[-1] += "," + tok
        else:
            out.append(tok)
    if not out:
        raise ArgumentError("no statistics given")
    return out


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ArgumentError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text):
    vals = _floats(text)
    if any(v != int(v) for v in vals):
        raise ArgumentError(f"expected integers, got {text!r}")
    return [int(v) for v in vals]


def _config(args):
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    cfg["version"] = __version__
    return cfg


def _emit(args, text):
    if args.output:
        tmp = args.output + ".tmp"
        with open(tmp, "w") as fh:
            fh.write(text)
        os.replace(tmp, args.output)
    else:
        sys.stdout.write(text)


def _dump(obj):
    return json.dumps(obj, indent=2) + "\n"


def _read_sample(args):
    return ingest_csv(args.input, header=args.header, delimiter=args.delimiter)


def cmd_compute(args):
    sample = _read_sample(args)
    ranks = compute_ranks(sample, tie_break_seed=args.seed if sample.has_x_ties else None)
    ids = split_stats(args.stats)
    stats = []
    for sid in ids:
        if sid == "d-combined":
            m = d_combined(ranks, sample, args.ti, args.tfd)
            stats.append({"name": "d-combined", "value": m.d, "scale_exponent": 0.0,
                          "branch": m.branch, "t_i": {"name": args.ti, "value": m.t_i},
                          "t_fd": {"name": args.tfd, "value": m.t_fd}})
            continue
        sv = get_statistic(sid)(ranks, sample)
        stats.append({"name": sv.name if ":" not in sid else get_statistic(sid).id,
                      "value": sv.value, "scale_exponent": sv.scale_exponent})
    out = {"n": sample.n, "ties": {"x": sample.has_x_ties, "y": sample.has_y_ties},
           "stats": stats, "seed": args.seed, "config": _config(args)}
    _emit(args, _dump(out))


def cmd_test(args):
    sample = _read_sample(args)
    res = p_value(args.stat, sample, method=args.method, reps=args.reps, seed=args.seed,
                  threads=args.threads)
    out = {"stat": res.stat, "value": res.value, "p": res.p, "method": res.method,
           "reps": res.reps, "seed": res.seed, "config": _config(args)}
    _emit(args, _dump(out))


def cmd_calibrate(args):
    cal = null_calibrate(args.stat, args.n, args.reps, args.seed, threads=args.threads,
                         cache=not args.no_cache)
    levels = [0.01, 0.05, 0.1, 0.5, 0.9, 0.95, 0.99]
    out = {"header": cal.header(), "sidedness": cal.sidedness,
           "mean": float(cal.values.mean()), "var": float(cal.values.var(ddof=1)),
           "quantiles": {str(q): cal.quantile(q) for q in levels},
           "config": _config(args)}
    if args.values:
        out["values"] = cal.values.tolist()
    _emit(args, _dump(out))


def _resolve_family(text):
    if text in FAMILY_IDS:
        return get_family(text)
    if text.endswith(".json"):
        return family_from_json(text)
    raise ArgumentError(f"unknown family {text!r}; choose from {FAMILY_IDS} or a JSON file")


def cmd_power(args):
    fam = _resolve_family(args.family)
    results = power_experiment(fam, _floats(args.t), _ints(args.n), split_stats(args.stats),
                               alpha=args.alpha, reps=args.reps, seed=args.seed,
                               calib_reps=args.calib_reps, threads=args.threads)
    cfg = _config(args)
    if args.format == "csv":
        buf = io.StringIO()
        buf.write("# config: " + json.dumps(cfg) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["family", "t", "n", "stat", "alpha", "reps", "rejection_rate", "ci"])
        for r in results:
            w.writerow([r.family, r.t, r.n, r.statistic, r.alpha, r.reps,
                        repr(r.rejection_rate), repr(r.ci_halfwidth)])
        _emit(args, buf.getvalue())
    else:
        nested = {}
        for r in results:
            nested.setdefault(r.family, {}).setdefault(r.statistic, []).append(
                {"t": r.t, "n": r.n, "theta": r.theta, "clamped": r.clamped, "alpha": r.alpha,
                 "reps": r.reps, "rejection_rate": r.rejection_rate, "ci": r.ci_halfwidth})
        _emit(args, _dump({"config": cfg, "results": nested}))


def cmd_scan(args):
    sample = _read_sample(args)
    ranks = compute_ranks(sample, tie_break_seed=args.seed if sample.has_x_ties else None)
    rep = selective_scan(ranks, basis=args.basis, budget=args.budget, alpha=args.alpha,
                         allocation=args.allocation)
    out = {"entries": json.loads(rep.to_json()), "policy": rep.policy, "alpha": rep.alpha,
           "any_rejected": rep.any_rejected, "config": _config(args)}
    _emit(args, _dump(out))


def cmd_discrete(args):
    table = ContingencyTable.from_csv(args.input, delimiter=args.delimiter)
    _emit(args, _dump({"m_l": discrete_ml(table), "shape": list(table.shape),
                       "config": _config(args)}))


def build_parser():
    p = argparse.ArgumentParser(prog="deplab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"deplab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def data_args(sp):
        sp.add_argument("--input", required=True, help="two-column CSV file")
        sp.add_argument("--header", action="store_true", help="skip one header line")
        sp.add_argument("--delimiter", default=",")

    def common(sp, seed_required):
        sp.add_argument("--seed", type=int, required=seed_required,
                        help="master seed" + ("" if seed_required else
                                              " (needed to break ties in X)"))
        sp.add_argument("--output", help="write here instead of stdout")

    sp = sub.add_parser("compute", help="compute statistics on a data file")
    data_args(sp)
    sp.add_argument("--stats", default="chatterjee,spearman",
                    help="comma-separated ids: " + ", ".join(STATISTIC_IDS))
    sp.add_argument("--ti", default="bkr", help="independence component of d-combined")
    sp.add_argument("--tfd", default="chatterjee", help="functional component of d-combined")
    common(sp, False)
    sp.set_defaults(func=cmd_compute)

    sp = sub.add_parser("test", help="p-value for independence")
    data_args(sp)
    sp.add_argument("--stat", default="chatterjee")
    sp.add_argument("--method", choices=METHODS, default="montecarlo")
    sp.add_argument("--reps", type=int, default=999)
    sp.add_argument("--threads", type=int, default=1)
    common(sp, True)
    sp.set_defaults(func=cmd_test)

    sp = sub.add_parser("calibrate", help="Monte Carlo null distribution")
    sp.add_argument("--stat", required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--reps", type=int, default=5000)
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--values", action="store_true", help="include the sorted null sample")
    sp.add_argument("--no-cache", action="store_true")
    common(sp, True)
    sp.set_defaults(func=cmd_calibrate)

    sp = sub.add_parser("power", help="rejection rates under local alternatives")
    sp.add_argument("--family", required=True, help=f"{', '.join(FAMILY_IDS)} or a JSON file")
    sp.add_argument("--t", required=True, help="comma-separated local parameters")
    sp.add_argument("--n", required=True, help="comma-separated sample sizes")
    sp.add_argument("--stats", required=True)
    sp.add_argument("--alpha", type=float, default=0.05)
    sp.add_argument("--reps", type=int, default=1000)
    sp.add_argument("--calib-reps", type=int, default=5000)
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    common(sp, True)
    sp.set_defaults(func=cmd_power)

    sp = sub.add_parser("scan", help="ordered basis-coefficient scan")
    data_args(sp)
    sp.add_argument("--basis", choices=("fourier", "rademacher"), default="fourier")
    sp.add_argument("--budget", type=int, default=3, help="max order M or max scale N")
    sp.add_argument("--alpha", type=float, default=0.05)
    sp.add_argument("--allocation", choices=POLICIES, default="geometric")
    common(sp, False)
    sp.set_defaults(func=cmd_scan)

    sp = sub.add_parser("discrete", help="maximal correlation of a contingency table")
    sp.add_argument("--input", required=True, help="CSV matrix of counts")
    sp.add_argument("--delimiter", default=",")
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_discrete)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (OSError, ParseError) as exc:
        print(f"deplab: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ArgumentError as exc:
        print(f"deplab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericError, DegenerateSampleError, EnvelopeError, FloatingPointError) as exc:
        print(f"deplab: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DeplabError as exc:
        print(f"deplab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
