"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 input parse error, 3 numerical or
estimation failure.  Every command except ``simulate`` writes JSON.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from contextlib import nullcontext

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .baseline import pdelta_for_pair, pdelta_spectrum
from .data import Sample
from .estimator import EstimatorConfig, _bandwidth as resolve_bandwidth, estimate
from .exceptions import MixcompError
from .kernels import KernelSpec, analytic_L
from .operator import GramFactor, spectrum_from_factors
from .simulate import generate, get_design, run_montecarlo
from .threshold import closed_form_threshold, solve_threshold, stats_from_grams

logger = logging.getLogger("mixcomp")

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_NUMERIC = 0, 1, 2, 3
MAX_N = 5000
SIGMA_TRUNCATE = 50


class UsageError(Exception):
    pass


class ParseError(Exception):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.line = line
        self.column = column


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _unit_interval(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"delta must lie in (0, 1), got {v}")
    return v


def _bandwidth(text: str):
    if text == "silverman":
        return text
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("bandwidth must be 'silverman' or a positive number") from None
    if not v > 0:
        raise argparse.ArgumentTypeError("fixed bandwidth must be positive")
    return v


def read_csv(path: str, header: bool = False) -> np.ndarray:
    """Read a numeric CSV (comma separated, decimal point) into an ``(N, p)`` array."""
    rows = []
    width = None
    try:
        fh = sys.stdin if path == "-" else open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot open {path}: {exc.strerror}") from None
    with fh if fh is not sys.stdin else nullcontext(fh):
        try:
            reader = csv.reader(fh)
            for lineno, row in enumerate(reader, start=1):
                if header and lineno == 1:
                    continue
                if not row or all(not f.strip() for f in row):
                    continue
                if width is None:
                    width = len(row)
                elif len(row) != width:
                    raise ParseError(f"expected {width} fields, found {len(row)}", line=lineno)
                vals = []
                for col, field in enumerate(row, start=1):
                    try:
                        v = float(field.strip())
                    except ValueError:
                        raise ParseError(f"not a number: {field!r}", line=lineno, column=col) from None
                    if not np.isfinite(v):
                        raise ParseError(f"non-finite value: {field!r}", line=lineno, column=col)
                    vals.append(v)
                rows.append(vals)
        except UnicodeDecodeError as exc:
            raise ParseError(f"not valid UTF-8: {exc.reason}") from None
    if not rows:
        raise ParseError("no data rows")
    return np.asarray(rows, dtype=float)


def parse_groups(text: str | None, ncols: int) -> tuple[list[list[int]], list[str]]:
    """Parse ``"0-3;4-7"`` / ``"0,2;1:d"`` into column groups and kinds.

    Groups are separated by ``;``, members by ``,``, ranges are inclusive and a
    ``:d`` (``:c``) suffix marks a discrete (continuous) component.
    """
    if text is None:
        return [[j] for j in range(ncols)], ["continuous"] * ncols
    groups, kinds = [], []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            raise UsageError(f"empty group in {text!r}")
        kind = "continuous"
        if ":" in part:
            part, tag = part.rsplit(":", 1)
            tag = tag.strip().lower()
            if tag not in ("c", "d", "continuous", "discrete"):
                raise UsageError(f"unknown kind tag {tag!r}; use :c or :d")
            kind = "discrete" if tag.startswith("d") else "continuous"
        cols = []
        for item in part.split(","):
            item = item.strip()
            try:
                if "-" in item:
                    a, b = (int(s) for s in item.split("-", 1))
                    if b < a:
                        raise UsageError(f"descending range {item!r}")
                    cols.extend(range(a, b + 1))
                else:
                    cols.append(int(item))
            except ValueError:
                raise UsageError(f"bad column spec {item!r}") from None
        groups.append(cols)
        kinds.append(kind)
    used = [c for g in groups for c in g]
    if len(set(used)) != len(used):
        raise UsageError("column groups overlap")
    bad = [c for c in used if c < 0 or c >= ncols]
    if bad:
        raise UsageError(f"column(s) {bad} do not exist (file has {ncols} columns)")
    if len(groups) < 2:
        raise UsageError("need at least two groups")
    return groups, kinds


def _config(args) -> EstimatorConfig:
    return EstimatorConfig(
        delta=args.delta,
        kernel_family=args.kernel,
        bandwidth=args.bandwidth,
        strategy=getattr(args, "strategy", "pairs"),
        threshold_form=getattr(args, "threshold_form", "solved"),
        max_partitions=getattr(args, "max_partitions", 256),
        undropped_variance=getattr(args, "undropped_variance", False),
    )


def _check_size(n: int):
    if n > MAX_N:
        raise MixcompError(f"size error: N={n} exceeds the dense-decomposition limit of {MAX_N}")


def _floats(a, limit=None) -> list[float]:
    a = np.asarray(a, dtype=float)
    if limit is not None:
        a = a[:limit]
    return [float(x) for x in a]


def _load_sample(args) -> Sample:
    if getattr(args, "input", None):
        X = read_csv(args.input, header=args.header)
        groups, kinds = parse_groups(args.groups, X.shape[1])
        return Sample.from_array(X, groups, kinds)
    if getattr(args, "design", None) is None:
        raise UsageError("give an input CSV or --design")
    return generate(get_design(args.design), args.n, args.seed)


def cmd_estimate(args) -> dict:
    sample = _load_sample(args)
    _check_size(sample.n)
    cfg = _config(args)
    est = estimate(sample, cfg)
    limit = None if args.full_spectrum else SIGMA_TRUNCATE
    return {
        "m_hat": est.m_hat,
        "strategy": est.strategy,
        "n": sample.n,
        "per_unit": [
            {
                "indices": [list(p.indices[0]), list(p.indices[1])],
                "m_hat": p.m_hat,
                "tau": p.tau,
                "h": [p.h_left, p.h_right],
                "L_hat": p.stats.L_hat,
                "sigma2_hat": p.stats.sigma2_hat,
                "sigmas": _floats(p.spectrum.sigmas, limit),
                "tail_norms": _floats(p.spectrum.tail_norms, limit),
            }
            for p in est.per_unit
        ],
        "config": cfg.to_dict(),
        "warnings": est.warnings,
    }


def cmd_montecarlo(args) -> dict:
    cfg = _config(args)
    table = run_montecarlo(get_design(args.design), args.n, args.reps, cfg, args.seed, n_jobs=args.jobs)
    return table.to_dict()


def _pair_indices(text: str, k: int) -> tuple[int, int]:
    try:
        i, j = (int(s) for s in text.split(","))
    except ValueError:
        raise UsageError(f"--pair expects 'i,j', got {text!r}") from None
    if i == j or not (0 <= i < k and 0 <= j < k):
        raise UsageError(f"--pair {text!r} invalid for {k} components")
    return i, j


def cmd_singvals(args) -> dict:
    sample = _load_sample(args)
    _check_size(sample.n)
    i, j = _pair_indices(args.pair, sample.k)
    cfg = _config(args)
    comps = (sample.components[i], sample.components[j])
    if args.h is not None:
        hs = (args.h, args.h)
    else:
        hs = tuple(resolve_bandwidth(c, cfg, sample.n) for c in comps)
    f1, f2 = (GramFactor(c, KernelSpec(cfg.kernel_family, h, c.dim)) for c, h in zip(comps, hs))
    spec = spectrum_from_factors(f1, f2)
    stats = stats_from_grams(f1.gram, f2.gram, cfg.delta)
    tau_cf = None
    if cfg.delta < 0.5:
        tau_cf = closed_form_threshold(analytic_L(f1.spec, f2.spec), stats.mean_sq_dist, stats.n, cfg.delta)
    limit = None if args.full_spectrum else SIGMA_TRUNCATE
    return {
        "n": sample.n,
        "indices": [i, j],
        "h": list(hs),
        "delta": cfg.delta,
        "L_hat": stats.L_hat,
        "sigma2_hat": stats.sigma2_hat,
        "sigmas": _floats(spec.sigmas, limit),
        "tail_norms": _floats(spec.tail_norms, limit),
        "tau_solved": solve_threshold(stats, undropped=args.undropped_variance),
        "tau_closed_form": tau_cf,
    }


def cmd_pdelta(args) -> dict:
    sample = _load_sample(args)
    i, j = _pair_indices(args.pair, sample.k)
    P, p1, p2 = pdelta_for_pair(sample.pair(i, j), args.m0)
    spec = pdelta_spectrum(P)
    return {
        "n": sample.n,
        "indices": [i, j],
        "m0": args.m0,
        "edges": [_floats(p1.edges), _floats(p2.edges)],
        "matrix": [_floats(row) for row in P],
        "sigmas": _floats(spec.sigmas),
        "tail_norms": _floats(spec.tail_norms),
    }


def cmd_simulate(args) -> None:
    sample = generate(get_design(args.design), args.n, args.seed)
    X = sample.to_array()
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    with out if out is not sys.stdout else nullcontext(out):
        w = csv.writer(out, lineterminator="\n")
        if args.header:
            names = [f"x{k}" for k in range(X.shape[1])]
            w.writerow(names + (["label"] if args.labels else []))
        for r, row in enumerate(X):
            vals = [repr(float(v)) for v in row]
            if args.labels:
                vals.append(str(int(sample.labels[r])))
            w.writerow(vals)


def _add_estimator_flags(p, full=True):
    p.add_argument("--delta", type=_unit_interval, default=0.05, help="threshold level (default 0.05)")
    p.add_argument("--kernel", choices=["gaussian", "uniform"], default="gaussian")
    p.add_argument("--bandwidth", type=_bandwidth, default="silverman",
                   help="'silverman' (default) or a fixed positive bandwidth")
    p.add_argument("--undropped-variance", action="store_true",
                   help="keep the lower-order variance correction in the solved threshold")
    if full:
        p.add_argument("--strategy", choices=["pairs", "bipartitions"], default="pairs")
        p.add_argument("--threshold-form", choices=["solved", "closed_form"], default="solved")
        p.add_argument("--max-partitions", type=_positive_int, default=256)


def _add_source_flags(p, require_input=False):
    p.add_argument("input", nargs=None if require_input else "?", help="CSV file ('-' for stdin)")
    p.add_argument("--header", action="store_true", help="first CSV line is a header")
    p.add_argument("--groups", help="column groups, e.g. '0;1' or '0-3;4-7:d'")
    if not require_input:
        p.add_argument("--design", help="builtin design 1-5 instead of a CSV")
        p.add_argument("--n", type=_positive_int, default=500)
        p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mixcomp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"mixcomp {__version__}")
    parser.add_argument("--threads", type=_positive_int, default=None,
                        help="cap on BLAS/LAPACK threads (fallback: MIXCOMP_THREADS)")
    parser.add_argument("--out", help="write output to this file instead of stdout")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("estimate", help="estimate the number of components from a CSV")
    _add_source_flags(p, require_input=True)
    _add_estimator_flags(p)
    p.add_argument("--full-spectrum", action="store_true", help="do not truncate sigmas to 50")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("montecarlo", help="selection frequencies over seeded replicates")
    p.add_argument("--design", required=True, help="builtin design 1-5")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--reps", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, default=0, help="base seed; replicate r uses seed + r")
    p.add_argument("--jobs", type=int, default=1, help="parallel replicates (joblib)")
    _add_estimator_flags(p)
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("singvals", help="singular values, tail norms and both thresholds")
    _add_source_flags(p)
    _add_estimator_flags(p, full=False)
    p.add_argument("--h", type=float, default=None, help="bandwidth override for both components")
    p.add_argument("--pair", default="0,1", help="component pair 'i,j' (default 0,1)")
    p.add_argument("--full-spectrum", action="store_true")
    p.set_defaults(func=cmd_singvals)

    p = sub.add_parser("pdelta", help="cell-probability matrix on equiprobable cells")
    _add_source_flags(p)
    p.add_argument("--m0", type=_positive_int, default=4)
    p.add_argument("--pair", default="0,1")
    p.set_defaults(func=cmd_pdelta)

    p = sub.add_parser("simulate", help="write a sample from a builtin design as CSV")
    p.add_argument("--design", required=True)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--header", action="store_true")
    p.add_argument("--labels", action="store_true", help="append the latent label column")
    p.set_defaults(func=cmd_simulate)
    return parser


def _threads(args) -> int | None:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("MIXCOMP_THREADS")
    if env:
        try:
            return max(int(env), 1)
        except ValueError:
            logger.warning("ignoring non-integer MIXCOMP_THREADS=%r", env)
    return None


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    threads = _threads(args)
    try:
        with threadpool_limits(limits=threads) if threads else nullcontext():
            result = args.func(args)
    except UsageError as exc:
        parser.exit(EXIT_USAGE, f"mixcomp: error: {exc}\n")
    except ParseError as exc:
        parser.exit(EXIT_PARSE, f"mixcomp: parse error: {exc}\n")
    except MixcompError as exc:
        parser.exit(EXIT_NUMERIC, f"mixcomp: {type(exc).__name__}: {exc}\n")
    if result is None:
        return EXIT_OK
    text = json.dumps(result, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
