"""Fixed-point solution of the discrete scheme and the trajectory driver."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BlowUpError, ConvergenceError, DivergenceError, StepError
from .tableau import DiscreteTableau

_EPS = np.finfo(float).eps
# stagnation is accepted as convergence only below this many ulps of the stage size
_ROUNDOFF_ULPS = 64


@dataclass(frozen=True)
class StepControl:
    tol: float = 1e-15
    max_iter: int = 200
    divergence_factor: float = 1e6

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not self.divergence_factor > 1:
            raise ValueError("divergence_factor must exceed 1")


@dataclass
class StepOutcome:
    y1: np.ndarray
    stages: np.ndarray
    iterations: int
    f_evals: int
    residual: float


def step(tab: DiscreteTableau, system, y0, h, ctrl: StepControl = StepControl()):
    """Advance one step by Picard iteration on the stage values.

    Stages ``Y_i`` approximate ``u((i-1)/r)``; ``Y_1 = y0`` is fixed. Each
    sweep evaluates ``f`` at the ``s`` quadrature points of the stage
    interpolant and updates ``Y_i = y0 + h sum_k b_k A(d_i, c_k) F_k``.
    The loop stops when the max-norm stage increment is ``<= ctrl.tol``, or
    when it stops decreasing at roundoff level.
    """
    y0 = np.asarray(y0, dtype=float)
    r, s = tab.r, tab.s
    L = tab.Lmat.T  # (s, r+1)
    hA = h * tab.weighted_A  # (r, s)
    Y = np.empty((r + 1,) + y0.shape)
    Y[:] = y0
    Ynew = Y.copy()
    first = prev = None
    for it in range(1, ctrl.max_iter + 1):
        Z = np.tensordot(L, Y, axes=1)
        F = system.f(Z)
        if not np.all(np.isfinite(F)):
            raise BlowUpError("non-finite right-hand side", iterations=it)
        np.add(y0, np.tensordot(hA, F, axes=1), out=Ynew[1:])
        res = float(np.max(np.abs(Ynew - Y))) if y0.size else 0.0
        Y, Ynew = Ynew, Y
        if not np.isfinite(res):
            raise BlowUpError("non-finite stage values", residual=res, iterations=it)
        if res <= ctrl.tol:
            break
        if first is None:
            first = res
        elif res > ctrl.divergence_factor * first:
            raise DivergenceError(
                f"fixed-point iteration diverges (residual {res:.3g} from {first:.3g}); reduce h",
                residual=res,
                iterations=it,
            )
        elif res >= prev and res <= _ROUNDOFF_ULPS * _EPS * max(1.0, float(np.max(np.abs(Y)))):
            break
        prev = res
    else:
        raise ConvergenceError(
            f"no convergence in {ctrl.max_iter} iterations (residual {res:.3g}); reduce h",
            residual=res,
            iterations=ctrl.max_iter,
        )
    return StepOutcome(Y[-1].copy(), Y, it, it * s, res)


def adjoint_step(tab: DiscreteTableau, system, y1, h, ctrl: StepControl = StepControl()):
    """Step backwards by ``h`` from ``y1`` with the same tableau.

    The fitting spaces are invariant under reflection, so the tableau for
    ``-h`` coincides with the one for ``h``.
    """
    return step(tab, system, y1, -h, ctrl).y1


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    EH: np.ndarray
    extra: dict = field(default_factory=dict)
    ME: np.ndarray | None = None
    iterations: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    f_evals: int = 0
    s: int = 0
    method: str = ""
    h: float = 0.0

    @property
    def n_steps(self):
        return self.times.size - 1


def grid_steps(t0, T, h):
    """Number of whole steps of size ``h`` that fit in ``[t0, T]``.

    When ``(T - t0)/h`` is not an integer the grid stops at the last node
    before ``T``.
    """
    ratio = (T - t0) / h
    N = int(round(ratio))
    if abs(ratio - N) > 1e-9 * max(1.0, ratio):
        N = int(np.floor(ratio))
    return N


def integrate(tableau, system, y0=None, t0=0.0, T=1.0, h=0.1, ctrl: StepControl = StepControl(), record_states=True):
    """Integrate on the uniform grid ``t0 + n h``, ``n = 0..N`` (see :func:`grid_steps`).

    ``tableau`` is a :class:`DiscreteTableau` or a callable ``h -> tableau``;
    it is built once and reused for every step. Hamiltonian errors are
    recorded at every node, and so are the solution errors when the system
    has a reference solution.
    """
    if not h > 0:
        raise ValueError("step size must be positive")
    if T < t0:
        raise ValueError("final time precedes initial time")
    y0 = np.asarray(system.y0 if y0 is None else y0, dtype=float)
    N = grid_steps(t0, T, h)
    tab = tableau if isinstance(tableau, DiscreteTableau) else tableau(h)
    if not tab.space.is_polynomial and not np.isclose(abs(tab.h), h, rtol=1e-12):
        raise ValueError(f"tableau was built for h={tab.h}, integrating with h={h}")

    times = t0 + h * np.arange(N + 1)
    nrec = N + 1 if record_states else 1
    states = np.empty((nrec,) + y0.shape)
    states[0] = y0
    H0 = float(system.H(y0))
    EH = np.zeros(N + 1)
    extra = {name: np.zeros(N + 1) for name in system.extra_invariants}
    extra0 = {name: float(fn(y0)) for name, fn in system.extra_invariants.items()}
    ME = None
    if system.reference is not None:
        ME = np.zeros(N + 1)
        ME[0] = float(np.max(np.abs(y0 - system.reference(times[0]))))
    iters = np.zeros(N, dtype=int)
    f_evals = 0
    y = y0
    for n in range(N):
        try:
            out = step(tab, system, y, h, ctrl)
        except StepError as exc:
            exc.step_index = n
            raise
        y = out.y1
        iters[n] = out.iterations
        f_evals += out.f_evals
        if record_states:
            states[n + 1] = y
        EH[n + 1] = abs(float(system.H(y)) - H0)
        for name, fn in system.extra_invariants.items():
            extra[name][n + 1] = abs(float(fn(y)) - extra0[name])
        if ME is not None:
            ME[n + 1] = float(np.max(np.abs(y - system.reference(times[n + 1]))))
    if not record_states:
        states = np.stack([y0, y])
    return Trajectory(
        times=times,
        states=states,
        EH=EH,
        extra=extra,
        ME=ME,
        iterations=iters,
        f_evals=f_evals,
        s=tab.s,
        method=tab.label,
        h=h,
    )
