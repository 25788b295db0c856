"""Command-line front end: ``run``, ``sweep``, ``order`` and ``dump-tableau``."""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .basis import space_for_method
from .errors import FFCFEError, StepError
from .integrator import StepControl, grid_steps, integrate
from .metrics import (
    Experiment,
    error_series,
    benchmark_experiment,
    run_experiment,
    series_csv,
    sweep_csv,
    write_atomic,
)
from .problems import PRESETS, make_problem
from .tableau import build_tableau, dump_tableau

EXIT_OK, EXIT_FATAL, EXIT_CELL_FAILED = 0, 1, 2

METHOD_HELP = (
    "cfe2..cfe4, tfcfe2..tfcfe4, tf2cfe4, tf3cfe:P,K or custom:ATOM,... "
    "(atoms like 1, t, t^2, cos, sin2, t*cos)"
)


class UsageError(Exception):
    pass


def _number(text):
    """Float that also accepts fractions such as ``1/5``."""
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        try:
            return float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def parse_ladder(text):
    """``START:halve:COUNT`` -> ``[START * 2**-i for i < COUNT]``."""
    parts = text.split(":")
    if len(parts) != 3 or parts[1] != "halve":
        raise argparse.ArgumentTypeError(f"ladder must look like 1/5:halve:6, got {text!r}")
    start = _number(parts[0])
    try:
        count = int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"ladder count must be an integer, got {parts[2]!r}") from None
    if not start > 0 or count < 1:
        raise argparse.ArgumentTypeError("ladder needs a positive start and a count >= 1")
    return [start * 0.5**i for i in range(count)]


def _param(text):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"parameters are key=value, got {text!r}")
    key, value = text.split("=", 1)
    try:
        parsed = int(value) if value.strip().lstrip("-").isdigit() else _number(value)
    except argparse.ArgumentTypeError:
        raise argparse.ArgumentTypeError(f"parameter {key} needs a numeric value") from None
    return key.strip(), parsed


def _fmt(x):
    return repr(float(x))


@dataclass
class RunSpec:
    problem: str
    method: str
    h: float
    tmax: float
    t0: float = 0.0
    params: dict = field(default_factory=dict)
    omega: float | None = None
    s: int | None = None
    tol: float = 1e-15
    max_iter: int = 200
    out: str | None = None

    def to_argv(self):
        argv = ["run", "--problem=" + self.problem, "--method=" + self.method, "--h=" + _fmt(self.h),
                "--t0=" + _fmt(self.t0), "--tmax=" + _fmt(self.tmax), "--tol=" + _fmt(self.tol),
                "--max-iter=" + str(self.max_iter)]
        argv += _common_argv(self)
        return argv


@dataclass
class SweepSpec:
    problem: str
    methods: list
    hs: list
    tmax: float
    t0: float = 0.0
    params: dict = field(default_factory=dict)
    omega: float | None = None
    s: int | None = None
    tol: float = 1e-15
    max_iter: int = 200
    reference: str = "auto"
    workers: int = 1
    timing: bool = False
    out: str | None = None
    command: str = "sweep"

    def to_argv(self):
        argv = [self.command, "--problem=" + self.problem, "--method=" + ",".join(self.methods),
                "--h=" + ",".join(_fmt(h) for h in self.hs), "--t0=" + _fmt(self.t0), "--tmax=" + _fmt(self.tmax),
                "--tol=" + _fmt(self.tol), "--max-iter=" + str(self.max_iter), "--reference=" + self.reference,
                "--workers=" + str(self.workers)]
        if self.timing:
            argv.append("--timing")
        argv += _common_argv(self)
        return argv

    def experiment(self):
        return Experiment(self.problem, list(self.methods), list(self.hs), self.tmax, self.t0, dict(self.params),
                          self.omega, self.s, self.tol, self.max_iter, self.reference)


OrderSpec = SweepSpec


@dataclass
class DumpSpec:
    method: str
    s: int | None = None
    omega: float = 0.0
    h: float = 1.0
    format: str = "json"
    out: str | None = None

    def to_argv(self):
        argv = ["dump-tableau", "--method=" + self.method, "--omega=" + _fmt(self.omega), "--h=" + _fmt(self.h),
                "--format=" + self.format]
        if self.s is not None:
            argv += ["--s=" + str(self.s)]
        if self.out is not None:
            argv += ["--out=" + self.out]
        return argv


def _common_argv(spec):
    argv = []
    for key, value in spec.params.items():
        argv.append(f"--param={key}={value!r}" if isinstance(value, float) else f"--param={key}={value}")
    if spec.omega is not None:
        argv += ["--omega=" + _fmt(spec.omega)]
    if spec.s is not None:
        argv += ["--s=" + str(spec.s)]
    if spec.out is not None:
        argv += ["--out=" + spec.out]
    return argv


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_problem_flags(p, ladder):
    p.add_argument("--problem", required=True, help=f"preset: {', '.join(PRESETS)}")
    p.add_argument("--param", action="append", type=_param, default=[], metavar="KEY=VALUE",
                   help="override a preset parameter, e.g. eps=0.001 or d=64 (repeatable)")
    if ladder:
        p.add_argument("--method", help=f"comma-separated methods: {METHOD_HELP}")
        g = p.add_mutually_exclusive_group()
        g.add_argument("--h", help="comma-separated step sizes (fractions allowed)")
        g.add_argument("--h-ladder", type=parse_ladder, help="START:halve:COUNT, e.g. 1/5:halve:6")
    else:
        p.add_argument("--method", required=True, help=METHOD_HELP)
        p.add_argument("--h", type=_number, required=True, help="step size (fractions allowed)")
    p.add_argument("--t0", type=_number, default=0.0, help="initial time (default 0)")
    p.add_argument("--tmax", type=_number, help="final time; the grid stops at the last node <= tmax")
    p.add_argument("--omega", type=_number, help="fitting frequency (default: the preset's suggested value)")
    p.add_argument("--s", type=int, help="Gauss-Legendre points per step (default r+1)")
    p.add_argument("--tol", type=_number, default=1e-15, help="fixed-point tolerance (default 1e-15)")
    p.add_argument("--max-iter", type=int, default=200, help="fixed-point iteration cap (default 200)")
    p.add_argument("--out", help="CSV output path (written atomically)")


def build_parser():
    parser = _Parser(prog="ffcfe", description="Energy-preserving functionally fitted finite element integrators.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="integrate one problem with one method; CSV columns n,t,EH,ME,EC")
    _add_problem_flags(p, ladder=False)

    for name, text in (("sweep", "run a (method x h) sweep; CSV columns method,h,GE,GEH,ECmax,..."),
                       ("order", "sweep and print the fitted convergence slope per method")):
        p = sub.add_parser(name, help=text)
        _add_problem_flags(p, ladder=True)
        p.add_argument("--reference", choices=("auto", "exact", "self", "none"), default="auto",
                       help="exact solution, fine-step self reference, or none (auto picks exact when available)")
        p.add_argument("--workers", type=int, default=1, help="threads for independent cells (default 1)")
        p.add_argument("--timing", action="store_true",
                       help="record wall-clock seconds (otherwise 0, keeping the CSV byte-reproducible)")

    p = sub.add_parser("dump-tableau", help="print the discrete coefficients of a method")
    p.add_argument("--method", required=True, help=METHOD_HELP)
    p.add_argument("--s", type=int, help="Gauss-Legendre points (default r+1)")
    p.add_argument("--omega", type=_number, default=0.0, help="fitting frequency (default 0)")
    p.add_argument("--h", type=_number, default=1.0, help="step size the frequency is scaled by (default 1)")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--out", help="write to this path instead of standard output")
    return parser


def _split_list(text, conv, what):
    items = [t for t in (text or "").split(",") if t.strip()]
    if not items:
        raise UsageError(f"empty {what} list")
    return [conv(t) for t in items]


def _check_common(ns):
    if ns.s is not None and ns.s < 1:
        raise UsageError("--s must be at least 1")
    if not ns.tol > 0:
        raise UsageError("--tol must be positive")
    if ns.max_iter < 1:
        raise UsageError("--max-iter must be at least 1")
    if ns.omega is not None and (not math.isfinite(ns.omega) or ns.omega < 0):
        raise UsageError("--omega must be a finite nonnegative number")
    if ns.problem not in PRESETS:
        raise UsageError(f"unknown problem {ns.problem!r}; choose from {', '.join(PRESETS)}")
    params = dict(ns.param)
    unknown = set(params) - set(PRESETS[ns.problem][1])
    if unknown:
        raise UsageError(f"{ns.problem} has no parameter(s) {', '.join(sorted(unknown))}; "
                         f"known: {', '.join(PRESETS[ns.problem][1])}")
    return params


def _check_methods(methods):
    for m in methods:
        try:
            space_for_method(m)
        except ValueError as exc:
            raise UsageError(str(exc)) from None


def parse_args(argv):
    """Parse and validate; returns a RunSpec, SweepSpec or DumpSpec."""
    ns = build_parser().parse_args(argv)
    if ns.command == "dump-tableau":
        _check_methods([ns.method])
        if ns.s is not None and ns.s < 1:
            raise UsageError("--s must be at least 1")
        if not ns.h > 0:
            raise UsageError(f"--h must be positive, got {ns.h!r}")
        return DumpSpec(ns.method, ns.s, ns.omega, ns.h, ns.format, ns.out)

    params = _check_common(ns)
    if ns.command == "run":
        if not ns.h > 0:
            raise UsageError(f"--h must be positive, got {ns.h!r}")
        if ns.tmax is None:
            raise UsageError("--tmax is required")
        if not ns.tmax > ns.t0:
            raise UsageError(f"--tmax ({ns.tmax}) must exceed --t0 ({ns.t0})")
        _check_methods([ns.method])
        return RunSpec(ns.problem, ns.method, ns.h, ns.tmax, ns.t0, params, ns.omega, ns.s, ns.tol,
                       ns.max_iter, ns.out)

    preset = None
    if ns.method is None or (ns.h is None and ns.h_ladder is None) or ns.tmax is None:
        try:
            preset = benchmark_experiment(ns.problem)
        except ValueError:
            raise UsageError(f"{ns.problem} has no default sweep; give --method, --h/--h-ladder and --tmax") from None
    methods = _split_list(ns.method, str.strip, "method") if ns.method else list(preset.methods)
    _check_methods(methods)
    if ns.h_ladder is not None:
        hs = ns.h_ladder
    elif ns.h is not None:
        hs = _split_list(ns.h, _number, "step size")
    else:
        hs = list(preset.hs)
    if any(not h > 0 for h in hs):
        raise UsageError("step sizes must be positive")
    tmax = ns.tmax if ns.tmax is not None else preset.tmax
    if not tmax > ns.t0:
        raise UsageError(f"--tmax ({tmax}) must exceed --t0 ({ns.t0})")
    if preset is not None:
        params = {**preset.params, **params}
        omega = ns.omega if ns.omega is not None else preset.omega
        s = ns.s if ns.s is not None else preset.s
    else:
        omega, s = ns.omega, ns.s
    if ns.workers < 1:
        raise UsageError("--workers must be at least 1")
    return SweepSpec(ns.problem, methods, hs, tmax, ns.t0, params, omega, s, ns.tol, ns.max_iter,
                     ns.reference, ns.workers, ns.timing, ns.out, ns.command)


def _emit(text, out):
    if out is None:
        return
    try:
        write_atomic(out, text)
    except OSError as exc:
        raise OSError(f"cannot write {out}: {exc.strerror or exc}") from exc


def _g(x):
    return "nan" if x is None or not math.isfinite(x) else f"{x:.3e}"


def _run(spec: RunSpec):
    system = make_problem(spec.problem, **spec.params)
    omega = system.suggested_omega if spec.omega is None else spec.omega
    tab = build_tableau(space_for_method(spec.method), omega, spec.h, spec.s)
    T = spec.t0 + grid_steps(spec.t0, spec.tmax, spec.h) * spec.h
    try:
        tr = integrate(tab, system, None, spec.t0, T, spec.h, StepControl(spec.tol, spec.max_iter))
    except StepError as exc:
        print(f"{spec.method} h={spec.h:g}: FAILED {type(exc).__name__}: {exc}")
        return EXIT_CELL_FAILED
    series = error_series(tr, system)
    _emit(series_csv(series), spec.out)
    print(f"{spec.problem} {spec.method} h={spec.h:g} omega={omega:g} steps={tr.n_steps} "
          f"GE={_g(series.GE)} GEH={_g(series.GEH)} ECmax={_g(series.EC_max)} f_evals={tr.f_evals}")
    return EXIT_OK


def _sweep(spec: SweepSpec):
    reports = run_experiment(spec.experiment(), workers=spec.workers)
    _emit(sweep_csv(reports, timing=spec.timing), spec.out)
    failed = 0
    for rep in reports:
        bad = [row for row in rep.rows if row.failed]
        failed += len(bad)
        for row in bad:
            print(f"{rep.method} h={row.h:g}: FAILED {row.error}", file=sys.stderr)
        slope = _g(rep.slope) if math.isnan(rep.slope) else f"{rep.slope:.3f}"
        if spec.command == "order":
            window = "" if not rep.fit_window else f" over h in [{rep.fit_window[0]:g}, {rep.fit_window[1]:g}]"
            print(f"{rep.method}: slope {slope}{window}")
        else:
            ge = [row.GE for row in rep.rows if not row.failed]
            geh = [row.GEH for row in rep.rows if not row.failed]
            print(f"{rep.method}: cells={len(rep.rows)} failed={len(bad)} "
                  f"GE[min]={_g(min(ge) if ge else math.nan)} GEH[max]={_g(max(geh) if geh else math.nan)} "
                  f"slope={slope}")
    return EXIT_CELL_FAILED if failed else EXIT_OK


def _dump(spec: DumpSpec):
    tab = build_tableau(space_for_method(spec.method), spec.omega, spec.h, spec.s)
    text = dump_tableau(tab, spec.format)
    if spec.out is None:
        print(text)
    else:
        _emit(text if text.endswith("\n") else text + "\n", spec.out)
        print(f"{tab.label}: r={tab.r} s={tab.s} written to {spec.out}")
    return EXIT_OK


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        spec = parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_FATAL
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            if isinstance(spec, DumpSpec):
                return _dump(spec)
            if isinstance(spec, RunSpec):
                return _run(spec)
            return _sweep(spec)
    except (FFCFEError, ValueError, OSError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
