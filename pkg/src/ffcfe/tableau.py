"""Coefficients of the discrete continuous-stage scheme.

Given a fitting space, this module produces the orthonormal basis of
``Y_h``, the projection kernel ``P(tau, sigma)``, the coefficient function
``A(tau, sigma) = int_0^tau P(alpha, sigma) d alpha``, the generalized
Lagrange interpolants of ``X_h`` and finally the :class:`DiscreteTableau`
consumed by the integrator.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
import scipy.linalg
from scipy.special import eval_legendre

from .basis import EvaluationBasis, FittingSpace, evaluation_basis, make_cfe_space
from .errors import DegenerateSpaceError, NodeDegeneracyError

NU_MIN = 1e-4
GRAM_COND_MAX = 1e13
COND_WARN = 1e12
BUILD_POINTS = 64


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        weights = np.array(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape or nodes.size == 0:
            raise ValueError("nodes and weights must be 1-D arrays of equal length")
        if np.any(np.diff(nodes) <= 0) or nodes[0] <= 0 or nodes[-1] >= 1:
            raise ValueError("nodes must be strictly increasing inside (0, 1)")
        if np.any(weights <= 0):
            raise ValueError("weights must be positive")
        nodes.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def s(self):
        return self.nodes.size

    def is_symmetric(self, tol=1e-14):
        c, b = self.nodes, self.weights
        return bool(np.all(np.abs(c[::-1] - (1.0 - c)) <= tol) and np.all(np.abs(b[::-1] - b) <= tol))

    def integrate(self, values, axis=0):
        """Apply the rule to samples taken at the nodes along ``axis``."""
        return np.tensordot(self.weights, values, axes=([0], [axis]))


@lru_cache(maxsize=None)
def gauss_legendre(s):
    """``s``-point Gauss-Legendre rule on [0, 1], symmetrised to roundoff."""
    if isinstance(s, bool) or int(s) != s or not 1 <= s <= 64:
        raise ValueError(f"number of Gauss points must lie in [1, 64], got {s!r}")
    x, w = np.polynomial.legendre.leggauss(int(s))
    # enforce exact mirror symmetry of the mapped rule
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    c = 0.5 * (1.0 + x)
    c = 0.5 * (c + (1.0 - c[::-1]))
    b = 0.5 * w
    b = b / b.sum()
    return QuadratureRule(c, b)


def build_quadrature():
    return gauss_legendre(BUILD_POINTS)


def _samples(fn, quad):
    V = fn(quad.nodes)
    M = V.T @ (quad.weights[:, None] * V)
    return 0.5 * (M + M.T), V


def _equilibrated_cond(M):
    d = np.sqrt(np.diag(M))
    if np.any(d == 0) or not np.all(np.isfinite(M)):
        return np.inf
    return float(np.linalg.cond(M / np.outer(d, d), 1))


def _check_degenerate(space, cond):
    if not cond < GRAM_COND_MAX:
        raise DegenerateSpaceError(
            f"{space.label or space.family} is numerically degenerate at nu={space.nu:g} "
            f"(Gram condition {cond:.3g})",
            nu=space.nu,
            cond=cond,
        )


def gram_matrix(space: FittingSpace, quad: QuadratureRule | None = None):
    """Inner-product matrix ``M_ij = <atom_i, atom_j>`` under ``quad``.

    Degeneracy is judged on the evaluation basis of the same span, so a
    small but legitimate ``nu`` is not rejected merely because the raw
    atoms are nearly parallel.
    """
    quad = quad or build_quadrature()
    M, _ = _samples(space.eval_Y, quad)
    Me, _ = _samples(evaluation_basis(space).Y, quad)
    _check_degenerate(space, _equilibrated_cond(Me))
    return M


@dataclass(frozen=True)
class OrthonormalBasis:
    """Orthonormal basis of ``Y_h``.

    ``coeff[i, j]`` is the weight of atom ``j`` in ``phi_i``; evaluation goes
    through the cancellation-free :class:`~ffcfe.basis.EvaluationBasis` with
    weights ``eval_coeff``.
    """

    space: FittingSpace
    coeff: np.ndarray
    gram_cond: float
    evaluator: EvaluationBasis = field(repr=False)
    eval_coeff: np.ndarray = field(repr=False)

    @property
    def r(self):
        return self.eval_coeff.shape[0]

    def values(self, tau):
        return self.evaluator.Y(tau) @ self.eval_coeff.T

    def antiderivatives(self, tau):
        return self.evaluator.X(tau)[..., 1:] @ self.eval_coeff.T


def orthonormalize(space: FittingSpace, quad: QuadratureRule | None = None):
    """Modified Gram-Schmidt with one reorthogonalisation pass."""
    quad = quad or build_quadrature()
    ev = evaluation_basis(space)
    M, V = _samples(ev.Y, quad)
    cond = _equilibrated_cond(M)
    _check_degenerate(space, cond)
    W = np.sqrt(quad.weights)[:, None] * V
    scale = np.linalg.norm(W, axis=0)
    W = W / scale
    r = W.shape[1]
    Q = np.zeros_like(W)
    T = np.zeros((r, r))
    for i in range(r):
        v = W[:, i].copy()
        t = np.zeros(r)
        t[i] = 1.0
        for _ in range(2):
            for j in range(i):
                proj = Q[:, j] @ v
                v -= proj * Q[:, j]
                t -= proj * T[:, j]
        nrm = np.linalg.norm(v)
        Q[:, i] = v / nrm
        T[:, i] = t / nrm
    eval_coeff = (T / scale[:, None]).T
    coeff = eval_coeff @ ev.to_atoms
    for arr in (eval_coeff, coeff):
        arr.flags.writeable = False
    return OrthonormalBasis(space, coeff, cond, ev, eval_coeff)


def kernel_P(basis: OrthonormalBasis, tau, sigma):
    """Reproducing kernel ``sum_i phi_i(tau) phi_i(sigma)`` (broadcasting)."""
    return np.sum(basis.values(tau) * basis.values(sigma), axis=-1)


def coefficient_A(basis: OrthonormalBasis, tau, sigma):
    """``A(tau, sigma) = sum_i (int_0^tau phi_i) phi_i(sigma)`` (broadcasting)."""
    return np.sum(basis.antiderivatives(tau) * basis.values(sigma), axis=-1)


def shifted_legendre(i, tau):
    """Orthonormal shifted Legendre polynomial of degree ``i`` on [0, 1]."""
    return np.sqrt(2 * i + 1) * eval_legendre(i, 2.0 * np.asarray(tau, dtype=float) - 1.0)


def limit_kernel(r, tau, sigma):
    """Kernel of the polynomial space ``P_{r-1}``, the ``nu -> 0`` limit."""
    if r < 1:
        raise ValueError("r must be positive")
    return sum(shifted_legendre(i, tau) * shifted_legendre(i, sigma) for i in range(r))


@dataclass(frozen=True)
class LagrangeInterpolants:
    """Basis ``l_i`` of ``X_h`` with ``l_i(d_j) = delta_ij``.

    ``coeff[i, j]`` is the weight of the ``j``-th trial-space function of the
    evaluation basis in ``l_i``.
    """

    space: FittingSpace
    nodes: np.ndarray
    coeff: np.ndarray
    cond_lambda: float
    evaluator: EvaluationBasis = field(repr=False)

    def __call__(self, tau):
        return self.evaluator.X(tau) @ self.coeff.T


def lagrange_interpolants(space: FittingSpace, d_nodes):
    d_nodes = np.asarray(d_nodes, dtype=float)
    n = space.r + 1
    if d_nodes.shape != (n,):
        raise ValueError(f"need {n} interpolation nodes, got {d_nodes.size}")
    if np.unique(d_nodes).size != n:
        raise NodeDegeneracyError("interpolation nodes must be distinct", cond_lambda=np.inf)
    ev = evaluation_basis(space)
    Lam = ev.X(d_nodes)
    # column equilibration leaves the interpolants unchanged; the scale is
    # taken over the whole interval so a function vanishing at every node
    # still shows up as a singular column
    colscale = np.max(np.abs(ev.X(build_quadrature().nodes)), axis=0)
    colscale[colscale == 0] = 1.0
    Lam_s = Lam / colscale
    cond = float(np.linalg.cond(Lam_s, 1)) if np.all(np.isfinite(Lam_s)) else np.inf
    if not cond < 1.0 / np.finfo(float).eps:
        raise NodeDegeneracyError(
            f"trial-space collocation matrix is singular at the stage nodes "
            f"(cond {cond:.3g}, nu={space.nu:g})",
            cond_lambda=cond,
        )
    if cond > COND_WARN:
        warnings.warn(f"ill-conditioned Lagrange system (cond {cond:.3g})", RuntimeWarning, stacklevel=2)
    lu = scipy.linalg.lu_factor(Lam_s.T)
    # Lam_s.T @ C_s = I  ->  l(tau) = X_s(tau) @ C_s
    C_s = scipy.linalg.lu_solve(lu, np.eye(n))
    coeff = C_s / colscale[None, :]
    return LagrangeInterpolants(space, d_nodes, coeff, cond, ev)


@dataclass(frozen=True)
class DiscreteTableau:
    """Everything the fixed-point step needs for one ``(space, h, omega, s)``.

    ``Amat[i - 1, k] = A(d_{i+1}, c_k)`` for the ``r`` unknown stages and
    ``Lmat[i, k] = l_i(c_k)``.
    """

    space: FittingSpace
    r: int
    nu: float
    h: float
    omega: float
    d: np.ndarray
    quad: QuadratureRule
    Amat: np.ndarray
    Lmat: np.ndarray
    lag_end: np.ndarray
    cond_lambda: float
    gram_cond: float
    limit_fallback: bool = False
    label: str = field(default="")

    @cached_property
    def weighted_A(self):
        """``h``-free stage matrix ``Amat[i, k] * b_k``."""
        return self.Amat * self.quad.weights[None, :]

    @property
    def s(self):
        return self.quad.s

    def as_dict(self):
        return {
            "method": self.label,
            "r": self.r,
            "s": self.s,
            "nu": self.nu,
            "h": self.h,
            "omega": self.omega,
            "limit_fallback": self.limit_fallback,
            "d": self.d.tolist(),
            "c": self.quad.nodes.tolist(),
            "b": self.quad.weights.tolist(),
            "Amat": self.Amat.tolist(),
            "Lmat": self.Lmat.tolist(),
            "cond_lambda": self.cond_lambda,
            "gram_cond": self.gram_cond,
        }


def build_tableau(space: FittingSpace, omega=0.0, h=1.0, s=None, d_nodes=None):
    """Assemble the discrete scheme for ``nu = |h| * omega``.

    Below ``NU_MIN`` a trigonometric space is replaced by the polynomial
    space of the same dimension, its ``nu -> 0`` limit, and
    ``limit_fallback`` is set.
    """
    if h == 0 or not np.isfinite(h):
        raise ValueError("step size must be finite and nonzero")
    if omega < 0:
        raise ValueError("fitting frequency must be nonnegative")
    r = space.r
    s = r + 1 if s is None else int(s)
    if s < r + 1:
        warnings.warn(f"s={s} < r+1={r + 1}: quadrature is below the scheme order", RuntimeWarning, stacklevel=2)
    nu = abs(h) * omega
    fallback = False
    if space.is_polynomial:
        used = space
        nu = 0.0
    elif nu < NU_MIN:
        used = make_cfe_space(r)
        fallback = True
    else:
        used = space.with_nu(nu)
    basis = orthonormalize(used)
    quad = gauss_legendre(s)
    d = np.arange(r + 1) / r if d_nodes is None else np.asarray(d_nodes, dtype=float)
    lag = lagrange_interpolants(used, d)
    Amat = coefficient_A(basis, d[1:, None], quad.nodes[None, :])
    Lmat = lag(quad.nodes).T
    lag_end = lag(1.0)
    for arr in (d, Amat, Lmat, lag_end):
        arr.flags.writeable = False
    return DiscreteTableau(
        space=space,
        r=r,
        nu=nu,
        h=float(h),
        omega=float(omega),
        d=d,
        quad=quad,
        Amat=Amat,
        Lmat=Lmat,
        lag_end=lag_end,
        cond_lambda=lag.cond_lambda,
        gram_cond=basis.gram_cond,
        limit_fallback=fallback,
        label=space.label or space.family,
    )


def dump_tableau(tab: DiscreteTableau, fmt="json"):
    """Text export with 17 significant digits."""
    data = tab.as_dict()
    if fmt == "json":
        return _json_17(data) + "\n"
    if fmt != "text":
        raise ValueError(f"unknown dump format {fmt!r}")
    lines = [f"# {data['method']} r={tab.r} s={tab.s} nu={tab.nu:.17g} h={tab.h:.17g} omega={tab.omega:.17g}"]
    if tab.limit_fallback:
        lines.append("# polynomial limit tableau (nu below threshold)")
    for key in ("d", "c", "b"):
        lines.append(f"{key} " + " ".join(f"{v:.17g}" for v in data[key]))
    for key in ("Amat", "Lmat"):
        lines.append(key)
        for row in data[key]:
            lines.append("  " + " ".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"


def _json_17(obj, indent=0):
    pad = " " * indent
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return json.dumps(obj)
    if isinstance(obj, float):
        return f"{obj:.17g}" if np.isfinite(obj) else json.dumps(str(obj))
    if isinstance(obj, dict):
        items = [f'{pad} {json.dumps(k)}: {_json_17(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_json_17(v, indent + 1) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")
