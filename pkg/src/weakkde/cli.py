"""Command-line front end.

Subcommands: ``simulate`` (Monte Carlo risk tables), ``bandwidth``,
``curvature`` and ``density`` (grid of f and f'' for plotting).  Data goes
to stdout or ``--out``; diagnostics go to stderr.  Exit codes: 0 success,
2 usage/config error, 3 data error, 4 numeric degeneracy.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from contextlib import contextmanager
from dataclasses import replace
from fractions import Fraction

import numpy as np

from .bandwidth import (
    RAW_DATA_PILOT_ALPHA,
    amise_bandwidth,
    gcpi_bandwidth,
    lscv_bandwidth,
    pilot_bandwidth,
    silverman_bandwidth,
)
from .config import load_config
from .curvature import DEFAULT_TAU, estimate_curvature, validate_pilot_rate
from .densities import parse_density
from .errors import ConfigError, WeakKDEError
from .estimator import EvaluationGrid, count_modes, kde_eval_grid
from .io import format_real, ingest_csv, write_rows
from .kernels import get_kernel
from .risk import ResultRow, monte_carlo_mise, multivariate_normal_experiment

log = logging.getLogger("weakkde")


def _fraction(text: str) -> float:
    try:
        return float(Fraction(text)) if "/" in text else float(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


@contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def cmd_simulate(args) -> int:
    config, experiment = load_config(args.config)
    if args.seed is not None:
        config = replace(config, master_seed=args.seed)
    if experiment == "multivariate":
        rows = multivariate_normal_experiment(
            sizes=config.sizes,
            reps=config.reps,
            master_seed=config.master_seed,
            kernel=config.kernels[0],
            workers=args.threads,
        )
    else:
        rows = monte_carlo_mise(config, workers=args.threads)
    with _output(args.out) as fh:
        write_rows(fh, ResultRow.CSV_HEADER, [r.csv_fields() for r in rows])
    failed = sum(r.failures for r in rows)
    if failed:
        log.warning("%d replication(s) failed and were excluded", failed)
    return 0


def _print_pairs(pairs) -> None:
    for key, value in pairs:
        if isinstance(value, float):
            value = format_real(value)
        print(f"{key}={value}")


def cmd_bandwidth(args) -> int:
    kernel = get_kernel(args.kernel)
    sample = ingest_csv(args.input, args.column)
    method = args.method
    diagnostics: dict[str, float] = {}
    if method == "amise_oracle":
        if args.curvature is None:
            raise ConfigError("amise_oracle needs --curvature")
        h = amise_bandwidth(kernel.roughness, kernel.mu2, args.curvature, sample.n)
    elif method == "gcpi":
        alpha = RAW_DATA_PILOT_ALPHA if args.pilot_alpha is None else args.pilot_alpha
        res = gcpi_bandwidth(
            sample, kernel, b=args.pilot_b, alpha=alpha, tau=args.tau, workers=args.threads
        )
        h, diagnostics = res.h, res.diagnostics
    elif method == "silverman":
        h = silverman_bandwidth(sample)
    else:
        grid = None
        if args.h_grid is not None:
            g = EvaluationGrid.parse(args.h_grid)
            grid = np.geomspace(g.lo, g.hi, g.count)
        res = lscv_bandwidth(sample, kernel, grid)
        h, diagnostics = res.h, res.diagnostics
    x = sample.points
    span = np.linspace(x.min() - 3 * h, x.max() + 3 * h, 2001)
    pairs = [("selector", method), ("kernel", kernel.name), ("n", sample.n), ("h", h)]
    pairs += sorted(diagnostics.items())
    pairs.append(("modes", count_modes(kde_eval_grid(sample, kernel, h, span))))
    _print_pairs(pairs)
    return 0


def cmd_curvature(args) -> int:
    sample = ingest_csv(args.input, args.column)
    if args.pilot_b is not None:
        b = args.pilot_b
    else:
        alpha = RAW_DATA_PILOT_ALPHA if args.pilot_alpha is None else args.pilot_alpha
        if not validate_pilot_rate(alpha):
            log.warning("pilot exponent %g is outside (0, 2/9)", alpha)
        b = pilot_bandwidth(sample, alpha, scaled=True)
    est = estimate_curvature(sample, b, args.tau, workers=args.threads)
    _print_pairs(
        [
            ("raw", est.raw),
            ("truncated", est.truncated),
            ("b", est.pilot_bandwidth),
            ("truncation_hit", str(est.truncation_hit).lower()),
        ]
    )
    return 0


def cmd_density(args) -> int:
    model = parse_density(args.model)
    grid = EvaluationGrid.parse(args.grid)
    xs = grid.points
    f = model.pdf(xs)
    f2 = model.second_ae_or_nan(xs)
    with _output(args.out) as fh:
        write_rows(
            fh,
            ("x", "f", "f_second_ae"),
            ([format_real(a), format_real(b), format_real(c)] for a, b, c in zip(xs, f, f2)),
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="weakkde", description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=None, help="override the master seed")
    p.add_argument("--threads", type=int, default=1, help="worker count (output is unaffected)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a Monte Carlo experiment from a config file")
    s.add_argument("config", nargs="?", help="config file")
    s.add_argument("--config", dest="config_opt")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bandwidth", help="select a bandwidth for one CSV column")
    b.add_argument("--input", required=True)
    b.add_argument("--column", required=True)
    b.add_argument("--method", choices=("amise_oracle", "gcpi", "silverman", "lscv"), default="gcpi")
    b.add_argument("--kernel", default="epanechnikov")
    b.add_argument("--curvature", type=_fraction)
    pilot = b.add_mutually_exclusive_group()
    pilot.add_argument("--pilot-alpha", type=_fraction)
    pilot.add_argument("--pilot-b", type=float)
    b.add_argument("--tau", type=float, default=DEFAULT_TAU)
    b.add_argument("--h-grid", help="lo,hi,count (log-spaced)")
    b.set_defaults(func=cmd_bandwidth)

    c = sub.add_parser("curvature", help="estimate R(f'') from one CSV column")
    c.add_argument("--input", required=True)
    c.add_argument("--column", required=True)
    pilot = c.add_mutually_exclusive_group()
    pilot.add_argument("--pilot-alpha", type=_fraction)
    pilot.add_argument("--pilot-b", type=float)
    c.add_argument("--tau", type=float, default=DEFAULT_TAU)
    c.set_defaults(func=cmd_curvature)

    d = sub.add_parser("density", help="emit x, f, f'' on a grid")
    d.add_argument("--model", required=True, help="e.g. kinked:eps=0.5")
    d.add_argument("--grid", default="-6,6,1201", help="lo,hi,count")
    d.add_argument("--out", default=None)
    d.set_defaults(func=cmd_density)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    if args.command == "simulate":
        args.config = args.config or args.config_opt
        if not args.config:
            parser.error("simulate needs a config file")
    if args.threads < 1:
        parser.error("--threads must be at least 1")
    try:
        return args.func(args)
    except WeakKDEError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
