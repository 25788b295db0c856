"""Error functionals, convergence-order fits and step-size sweeps."""

from __future__ import annotations

import io
import math
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .basis import space_for_method
from .errors import FFCFEError
from .integrator import StepControl, grid_steps, integrate
from .problems import make_problem
from .tableau import build_tableau

ROUNDOFF_FLOOR = 1e-11
SWEEP_HEADER = ("method", "h", "GE", "GEH", "ECmax", "f_evals", "iterations", "wall_seconds")
SERIES_HEADER = ("n", "t", "EH", "ME", "EC")


@dataclass
class ErrorSeries:
    times: np.ndarray
    EH: np.ndarray
    ME: np.ndarray | None = None
    EC: dict = field(default_factory=dict)

    @property
    def GE(self):
        return float(np.max(self.ME)) if self.ME is not None else math.nan

    @property
    def GEH(self):
        return float(np.max(self.EH))

    @property
    def EC_max(self):
        if not self.EC:
            return math.nan
        return max(float(np.max(v)) for v in self.EC.values())


def error_series(traj, system=None, reference_states=None):
    """Collect ``EH``, ``ME`` and invariant errors of a trajectory.

    ``reference_states`` (same grid as the trajectory) overrides the
    system's analytic reference, which is how self-referenced problems are
    scored.
    """
    ME = traj.ME
    if reference_states is not None:
        ref = np.asarray(reference_states)
        if ref.shape != traj.states.shape:
            raise ValueError("reference states must match the trajectory grid")
        ME = np.max(np.abs(traj.states - ref), axis=-1)
    return ErrorSeries(traj.times, traj.EH, ME, dict(traj.extra))


@dataclass
class SweepRow:
    h: float
    GE: float = math.nan
    GEH: float = math.nan
    EC_max: float = math.nan
    f_evals: int = 0
    iterations: int = 0
    wall_seconds: float = 0.0
    error: str | None = None

    @property
    def failed(self):
        return self.error is not None


@dataclass
class SweepReport:
    method: str
    rows: list = field(default_factory=list)
    slope: float = math.nan
    fit_window: tuple = ()

    @property
    def hs(self):
        return np.array([row.h for row in self.rows])

    @property
    def GE(self):
        return np.array([row.GE for row in self.rows])


def observed_order(report, GE=None, floor=ROUNDOFF_FLOOR, min_points=3):
    """Least-squares slope of ``log2 GE`` against ``log2 h``.

    Accepts a :class:`SweepReport` or two arrays ``(h, GE)``. Points with
    ``GE < floor`` (roundoff dominated) or failed cells are dropped; the
    report, if given, records the fit window.
    """
    if isinstance(report, SweepReport):
        hs, ge = report.hs, report.GE
    else:
        hs, ge = np.asarray(report, dtype=float), np.asarray(GE, dtype=float)
    keep = np.isfinite(ge) & (ge >= floor) & (hs > 0)
    if keep.sum() < min_points:
        raise ValueError(f"only {int(keep.sum())} usable points above the floor {floor:g}; need {min_points}")
    x, y = np.log2(hs[keep]), np.log2(ge[keep])
    slope = float(np.polyfit(x, y, 1)[0])
    if isinstance(report, SweepReport):
        report.slope = slope
        report.fit_window = (float(hs[keep].min()), float(hs[keep].max()))
    return slope


def h_ladder(h0, count, factor=0.5):
    """``h0 * factor**i`` for ``i = 0..count-1``."""
    if count < 1 or not h0 > 0:
        raise ValueError("ladder needs a positive start and at least one rung")
    return [h0 * factor**i for i in range(count)]


@dataclass
class Experiment:
    """Everything needed to run a (method x step size) sweep."""

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
    reference: str = "auto"  # auto | exact | self | none
    ref_method: str = "cfe4"
    ref_factor: int = 100
    floor: float = ROUNDOFF_FLOOR
    name: str = ""


def _omega_for(exp, system):
    return system.suggested_omega if exp.omega is None else exp.omega


def _self_reference(exp, system, h, omega, ctrl):
    href = h / exp.ref_factor
    tab = build_tableau(space_for_method(exp.ref_method), omega, href, exp.s)
    n = grid_steps(exp.t0, exp.tmax, h)
    tr = integrate(tab, system, None, exp.t0, exp.t0 + n * h, href, ctrl)
    return tr.states[:: exp.ref_factor]


def _run_cell(exp, system, method, h, ctrl, refs):
    omega = _omega_for(exp, system)
    row = SweepRow(h=h)
    start = time.perf_counter()
    try:
        tab = build_tableau(space_for_method(method), omega, h, exp.s)
        n = grid_steps(exp.t0, exp.tmax, h)
        tr = integrate(tab, system, None, exp.t0, exp.t0 + n * h, h, ctrl)
        series = error_series(tr, system, refs.get(h))
    except (FFCFEError, ValueError, ArithmeticError) as exc:
        row.error = f"{type(exc).__name__}: {exc}"
        row.wall_seconds = time.perf_counter() - start
        return row
    row.wall_seconds = time.perf_counter() - start
    row.GE, row.GEH, row.EC_max = series.GE, series.GEH, series.EC_max
    row.f_evals = int(tr.f_evals)
    row.iterations = int(tr.iterations.sum())
    return row


def run_experiment(exp: Experiment, workers=1):
    """Run every (method, h) cell and fit convergence slopes.

    Failed cells are kept with their error message; reports come back in
    the order of ``exp.methods`` and rows in the order of ``exp.hs``.
    """
    if not exp.methods:
        return []
    system = make_problem(exp.problem, **exp.params)
    ctrl = StepControl(tol=exp.tol, max_iter=exp.max_iter)
    mode = exp.reference
    if mode == "auto":
        mode = "exact" if system.reference is not None else "self"
    if mode == "exact" and system.reference is None:
        raise ValueError(f"{exp.problem} has no analytic reference solution")
    refs = {}
    if mode == "self":
        omega = _omega_for(exp, system)
        for h in exp.hs:
            refs[h] = _self_reference(exp, system, h, omega, ctrl)
    elif mode == "none":
        system = _without_reference(system)

    cells = [(m, h) for m in exp.methods for h in exp.hs]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda c: _run_cell(exp, system, c[0], c[1], ctrl, refs), cells))
    else:
        rows = [_run_cell(exp, system, m, h, ctrl, refs) for m, h in cells]

    reports = []
    for i, method in enumerate(exp.methods):
        rep = SweepReport(method, rows[i * len(exp.hs):(i + 1) * len(exp.hs)])
        try:
            observed_order(rep, floor=exp.floor)
        except ValueError:
            pass
        reports.append(rep)
    return reports


def _without_reference(system):
    from dataclasses import replace

    return replace(system, reference=None)


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def sweep_csv(reports, timing=True):
    """Sweep table as CSV text; ``timing=False`` zeroes the wall-clock column."""
    buf = io.StringIO()
    buf.write(",".join(SWEEP_HEADER) + "\n")
    for rep in reports:
        for row in rep.rows:
            wall = row.wall_seconds if timing else 0.0
            fields = [rep.method, _fmt(row.h), _fmt(row.GE), _fmt(row.GEH), _fmt(row.EC_max),
                      _fmt(row.f_evals), _fmt(row.iterations), _fmt(wall)]
            buf.write(",".join(fields) + "\n")
    return buf.getvalue()


def series_csv(series: ErrorSeries):
    buf = io.StringIO()
    buf.write(",".join(SERIES_HEADER) + "\n")
    ec = next(iter(series.EC.values()), None)
    for n, t in enumerate(series.times):
        me = series.ME[n] if series.ME is not None else math.nan
        e = ec[n] if ec is not None else math.nan
        buf.write(",".join([str(n), _fmt(t), _fmt(series.EH[n]), _fmt(me), _fmt(e)]) + "\n")
    return buf.getvalue()


def write_atomic(path, text):
    """Write via a temporary file in the target directory and rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def benchmark_experiment(name):
    """Desk-scale versions of the four benchmark studies."""
    if name == "kepler":
        return Experiment("kepler", ["cfe2", "tfcfe2", "cfe3", "tfcfe3", "cfe4", "tfcfe4", "tf2cfe4"],
                          h_ladder(1.0, 5), tmax=20 * np.pi, params={"eps": 0.001}, omega=1.0, name=name)
    if name == "duffing":
        return Experiment("duffing", ["cfe2", "tfcfe2", "cfe3", "tfcfe3"], h_ladder(0.2, 6), tmax=10.0,
                          omega=5.0, s=8, name=name)
    if name == "fpu":
        return Experiment("fpu", ["cfe2", "cfe3", "tfcfe2", "tfcfe3"], [1 / 50], tmax=10.0, omega=50.0,
                          s=8, reference="self", name=name)
    if name == "nls":
        return Experiment("nls", ["cfe2", "tfcfe2"], [0.2], tmax=10.0, params={"d": 64}, omega=2.0, s=8, name=name)
    raise ValueError(f"no experiment preset {name!r}")
