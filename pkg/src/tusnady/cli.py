"""Command-line front end.

    tusnady verify  --m-max 1000
    tusnady sweep   --m-max 10 --format json
    tusnady figure  1 --m 50
    tusnady chernoff --dist rademacher --x 0.5 0.9
    tusnady psi     --m 4 --y 0 1.5

Exit codes: 0 everything certified to hold, 1 a certified violation,
2 something undecidable at --max-precision, 3 usage error.
"""

from __future__ import annotations

import argparse
import csv
import functools
import io
import json
import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import mpmath
from mpmath import mpf
from mpmath.libmp import to_str

from . import conjecture
from .conjecture import Status
from .errors import TusnadyError
from .numerics import DEFAULT_PREC, MAX_PREC, rational_to_mpf, to_fraction
from .rate import alpha, couple_to_gauss, log_rho, parse_distribution, rho

EXIT_HOLDS, EXIT_VIOLATION, EXIT_UNDECIDABLE, EXIT_USAGE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class RunConfig:
    precision: int = DEFAULT_PREC
    max_precision: int = MAX_PREC
    m: Optional[int] = None
    m_max: Optional[int] = None
    k: Optional[int] = None
    format: str = "csv"
    output: Optional[str] = None
    jobs: int = 1
    grid_step: Optional[Fraction] = None
    delta_lower: Fraction = conjecture.DELTA_LOWER
    delta_upper: Fraction = conjecture.DELTA_UPPER

    def __post_init__(self):
        if self.precision < 64:
            raise UsageError("--precision must be at least 64 bits")
        if self.precision > self.max_precision:
            raise UsageError("--precision must not exceed --max-precision")
        if self.jobs < 1:
            raise UsageError("--jobs must be at least 1")


# -- serialization -------------------------------------------------------------

class Table:
    """Rows with a fixed column list plus a summary mapping, written as CSV or JSON."""

    def __init__(self, columns, prec: int):
        self.columns = list(columns)
        self.prec = prec
        # ceil(P log10 2) significant digits round-trip a P-bit value
        self.digits = math.ceil(prec * math.log10(2))
        self.rows: list[list[str]] = []
        self.summary: dict[str, str] = {}

    def fmt(self, v) -> str:
        if v is None:
            return ""
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, int):
            return str(v)
        if isinstance(v, float):
            v = mpf(v)
        elif isinstance(v, Fraction):
            v = rational_to_mpf(v, self.prec + 8)
        if isinstance(v, mpf):
            return to_str(v._mpf_, self.digits)
        return str(v)

    def add(self, *values):
        self.rows.append([self.fmt(v) for v in values])

    def summarize(self, **values):
        self.summary.update({k: self.fmt(v) for k, v in values.items()})

    def render(self, kind: str) -> str:
        if kind == "json":
            doc = {"records": [dict(zip(self.columns, r)) for r in self.rows],
                   "summary": self.summary}
            return json.dumps(doc, indent=1) + "\n"
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        writer.writerows(self.rows)
        if self.summary:
            buf.write("# summary: " + ",".join(f"{k}={v}" for k, v in self.summary.items()) + "\n")
        return buf.getvalue()


def _emit(table: Table, config: RunConfig) -> None:
    text = table.render(config.format)
    if config.output:
        with open(config.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _need_even(value, flag):
    if value is None:
        raise UsageError(f"{flag} is required")
    if value < 2 or value % 2:
        raise UsageError(f"{flag} must be a positive even integer, got {value}")
    return value


# -- commands -------------------------------------------------------------------

def cmd_verify(config: RunConfig) -> int:
    m_max = _need_even(config.m_max, "--m-max")
    worker = functools.partial(conjecture.certify_m, prec_start=config.precision,
                               prec_max=config.max_precision,
                               lower=config.delta_lower, upper=config.delta_upper)
    ms = range(2, m_max + 1, 2)
    if config.k is not None:
        ms = [m for m in ms if m // 2 < config.k <= m]
    per_m = conjecture.map_over_m(worker, ms, config.jobs)

    table = Table(["m", "k", "weak", "sharp", "delta", "delta_lower_margin",
                   "delta_upper_margin", "weak_lower_margin", "weak_upper_margin",
                   "precision", "note"], config.precision)
    counts = {s: 0 for s in Status}
    best = None
    for m, certs in zip(ms, per_m):
        for k, c in enumerate(certs, start=m // 2 + 1):
            if config.k is not None and k != config.k:
                continue
            worst = (Status.FAILS if Status.FAILS in (c.weak.status, c.sharp.status)
                     else Status.UNDECIDABLE if Status.UNDECIDABLE in (c.weak.status, c.sharp.status)
                     else Status.HOLDS)
            counts[worst] += 1
            d = c.record.delta if c.record else None
            if d is not None and (best is None or d > best[0]):
                best = (d, m, k)
            table.add(m, k, c.weak.status.value, c.sharp.status.value, d,
                      c.sharp.lower_margin, c.sharp.upper_margin,
                      c.weak.lower_margin, c.weak.upper_margin,
                      max(c.weak.precision, c.sharp.precision), c.error or None)
    code = (EXIT_VIOLATION if counts[Status.FAILS] else
            EXIT_UNDECIDABLE if counts[Status.UNDECIDABLE] else EXIT_HOLDS)
    table.summarize(checks=sum(counts.values()), holds=counts[Status.HOLDS],
                    fails=counts[Status.FAILS], undecidable=counts[Status.UNDECIDABLE],
                    delta_max=best[0] if best else None,
                    argmax_m=best[1] if best else None, argmax_k=best[2] if best else None,
                    exit_code=code)
    _emit(table, config)
    print(f"verify: {table.summary['checks']} checks, {table.summary['holds']} hold, "
          f"{table.summary['fails']} fail, {table.summary['undecidable']} undecidable",
          file=sys.stderr)
    return code


def cmd_sweep(config: RunConfig) -> int:
    m_max = _need_even(config.m_max, "--m-max")
    report = conjecture.sweep(m_max, config.precision, config.jobs,
                              config.delta_lower, config.delta_upper)
    table = Table(["m", "k", "p_log2", "y", "b", "delta", "band"], config.precision)
    for r in report.records:
        exact = r.p.log2_exact()
        if exact is None:
            with mpmath.workprec(config.precision + 16):
                log2p = mpmath.log(r.p.numerator, 2) - r.p.exponent
        table.add(r.m, r.k, exact if exact is not None else log2p, r.y, r.b, r.delta,
                  conjecture.band_label(r.m))
    table.summarize(records=len(report.records), delta_min=report.delta_min,
                    delta_max=report.delta_max, argmax_m=report.argmax[0],
                    argmax_k=report.argmax[1], violations=len(report.violations))
    _emit(table, config)
    return EXIT_VIOLATION if report.violations else EXIT_HOLDS


def cmd_figure(config: RunConfig, which: int) -> int:
    if which == 1:
        m = _need_even(config.m, "--m")
        step = config.grid_step if config.grid_step is not None else Fraction(1, 1000)
        table = Table(["series", "m", "k", "eta", "xi", "eta_end"], config.precision)
        for row in conjecture.figure1_data(m, config.precision, step):
            table.add(row["series"], row["m"], row["k"], row["eta"], row["xi"], row["eta_end"])
        table.summarize(m=m)
    else:
        m_max = _need_even(config.m_max, "--m-max")
        table = Table(["m", "k", "eta", "delta", "band"], config.precision)
        for row in conjecture.figure2_data(m_max, config.precision, config.jobs):
            table.add(row["m"], row["k"], row["eta"], row["delta"], row["band"])
        table.summarize(m_max=m_max, curves=m_max // 2)
    _emit(table, config)
    return EXIT_HOLDS


def cmd_chernoff(config: RunConfig, dist: str, xs: list[str]) -> int:
    spec = parse_distribution(dist)
    prec = config.precision
    table = Table(["x", "alpha", "rho", "log_rho", "y_coupled"], prec)
    for text in xs:
        x = _parse_real(text, "--x")
        try:
            table.add(x, alpha(spec, x, prec), rho(spec, x, prec), log_rho(spec, x, prec),
                      couple_to_gauss(spec, x, prec))
        except TusnadyError as exc:
            raise UsageError(f"--x {text}: {exc}") from exc
    table.summarize(dist=spec.name)
    _emit(table, config)
    return EXIT_HOLDS


def cmd_psi(config: RunConfig, ys: Optional[list[str]]) -> int:
    m = config.m
    if m is None or m < 1:
        raise UsageError("--m must be a positive integer")
    prec = config.precision
    if ys:
        values = [_parse_real(t, "--y") for t in ys]
    else:
        step = config.grid_step if config.grid_step is not None else Fraction(1, 8)
        values = sorted(conjecture.tusnady_grid(m, prec, step), key=to_fraction)
    table = Table(["y", "psi", "classical_margin", "sharp_margin", "saturated"], prec)
    worst = None
    for y in values:
        s = conjecture.psi_m(m, y, prec, config.max_precision)
        _, saturated = conjecture.sharp_target(m, y, prec)
        classical = conjecture.tusnady_margin(m, y, prec)
        sharp = conjecture.sharp_margin(m, y, prec)
        table.add(y, s, classical, sharp, saturated)
        worst = classical if worst is None else min(worst, classical)
        if saturated:
            print(f"psi: y={table.fmt(y)} saturates the sharpened target at +-m",
                  file=sys.stderr)
    table.summarize(m=m, points=len(values), min_classical_margin=worst)
    _emit(table, config)
    return EXIT_HOLDS


def _parse_real(text: str, flag: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"{flag}: not a number: {text!r}") from None


def _fraction_arg(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


# -- entry point ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--precision", type=int, default=DEFAULT_PREC, help="working precision in bits")
    common.add_argument("--max-precision", type=int, default=MAX_PREC,
                        help="precision cap for certified comparisons")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--output", help="write here instead of standard output")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for per-m work")

    parser = _Parser(prog="tusnady", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("verify", parents=[common], help="certify the weak and sharp inequalities")
    p.add_argument("--m-max", type=int, required=True)
    p.add_argument("--k", type=int, help="only this k")
    p.add_argument("--delta-lower", type=_fraction_arg, default=conjecture.DELTA_LOWER,
                   help="lower bound for Delta (default 0)")
    p.add_argument("--delta-upper", type=_fraction_arg, default=conjecture.DELTA_UPPER,
                   help="upper bound for Delta (default 1.036)")

    p = sub.add_parser("sweep", parents=[common], help="tabulate Delta for all even m <= m-max")
    p.add_argument("--m-max", type=int, required=True)
    p.add_argument("--delta-lower", type=_fraction_arg, default=conjecture.DELTA_LOWER)
    p.add_argument("--delta-upper", type=_fraction_arg, default=conjecture.DELTA_UPPER)

    p = sub.add_parser("figure", parents=[common], help="data behind the two figures")
    p.add_argument("which", type=int, choices=(1, 2))
    p.add_argument("--m", type=int)
    p.add_argument("--m-max", type=int)
    p.add_argument("--grid-step", type=_fraction_arg, help="spacing of the limit-curve grid")

    p = sub.add_parser("chernoff", parents=[common], help="alpha, rho and the Gaussian coupling")
    p.add_argument("--dist", required=True,
                   help="rademacher, normal, bernoulli:P or poisson:LAMBDA")
    p.add_argument("--x", nargs="+", required=True)

    p = sub.add_parser("psi", parents=[common], help="quantile transform and Tusnady margins")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--y", nargs="+", help="points (default: the breakpoint-adjacent grid)")
    p.add_argument("--grid-step", type=_fraction_arg, help="spacing of the default grid")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = RunConfig(
            precision=args.precision, max_precision=args.max_precision,
            m=getattr(args, "m", None), m_max=getattr(args, "m_max", None),
            k=getattr(args, "k", None), format=args.format, output=args.output,
            jobs=args.jobs, grid_step=getattr(args, "grid_step", None),
            delta_lower=getattr(args, "delta_lower", conjecture.DELTA_LOWER),
            delta_upper=getattr(args, "delta_upper", conjecture.DELTA_UPPER))
        if config.grid_step is not None and config.grid_step <= 0:
            raise UsageError("--grid-step must be positive")
        if args.command == "verify":
            return cmd_verify(config)
        if args.command == "sweep":
            return cmd_sweep(config)
        if args.command == "figure":
            return cmd_figure(config, args.which)
        if args.command == "chernoff":
            try:
                return cmd_chernoff(config, args.dist, args.x)
            except TusnadyError as exc:
                raise UsageError(str(exc)) from exc
        return cmd_psi(config, args.y)
    except UsageError as exc:
        print(f"tusnady {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
