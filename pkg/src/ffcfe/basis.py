"""Fitting function spaces on the reference interval [0, 1].

A space ``Y`` is described by a list of symbolic atoms evaluated in the
scaled variable ``tau`` with the dimensionless frequency ``nu = h * omega``.
The trial space is ``X = span{1, int_0^tau phi_i}``, so every atom carries a
closed-form antiderivative that vanishes at ``tau = 0``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Sequence

import numpy as np

MONOMIAL = "monomial"
COS = "cos"
SIN = "sin"
MONOMIAL_COS = "monomial_cos"
MONOMIAL_SIN = "monomial_sin"

_KINDS = (MONOMIAL, COS, SIN, MONOMIAL_COS, MONOMIAL_SIN)
_TRIG_KINDS = (COS, SIN, MONOMIAL_COS, MONOMIAL_SIN)

FAMILIES = ("CFE", "TF1", "TF2", "TF3", "custom")


@dataclass(frozen=True)
class BasisAtom:
    """One basis function ``tau**n``, ``cos(j nu tau)``, ``tau**n sin(j nu tau)``, ...

    ``n`` is the monomial degree, ``j`` the harmonic multiple. Plain
    harmonics are stored with ``n = 0``.
    """

    kind: str
    n: int = 0
    j: int = 0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown atom kind {self.kind!r}")
        if self.n < 0:
            raise ValueError("monomial degree must be nonnegative")
        if self.kind in _TRIG_KINDS and self.j < 1:
            raise ValueError("harmonic multiple must be a positive integer")
        if self.kind in (COS, SIN) and self.n != 0:
            raise ValueError("use monomial_cos/monomial_sin for tau**n factors")

    @property
    def is_trig(self):
        return self.kind in _TRIG_KINDS

    def __str__(self):
        if self.kind == MONOMIAL:
            return "1" if self.n == 0 else ("tau" if self.n == 1 else f"tau^{self.n}")
        fn = "cos" if self.kind in (COS, MONOMIAL_COS) else "sin"
        arg = "nu*tau" if self.j == 1 else f"{self.j}*nu*tau"
        pre = "" if self.n == 0 else ("tau*" if self.n == 1 else f"tau^{self.n}*")
        return f"{pre}{fn}({arg})"

    def value(self, tau, nu=0.0):
        tau = np.asarray(tau, dtype=float)
        if self.kind == MONOMIAL:
            return tau**self.n
        a = self.j * nu
        trig = np.cos(a * tau) if self.kind in (COS, MONOMIAL_COS) else np.sin(a * tau)
        return trig if self.n == 0 else tau**self.n * trig

    def derivative(self, tau, nu=0.0):
        tau = np.asarray(tau, dtype=float)
        n = self.n
        if self.kind == MONOMIAL:
            return n * tau ** (n - 1) if n > 0 else np.zeros_like(tau)
        a = self.j * nu
        c, s = np.cos(a * tau), np.sin(a * tau)
        if self.kind in (COS, MONOMIAL_COS):
            out = -a * tau**n * s
            if n > 0:
                out = out + n * tau ** (n - 1) * c
        else:
            out = a * tau**n * c
            if n > 0:
                out = out + n * tau ** (n - 1) * s
        return out

    def antiderivative(self, tau, nu=0.0):
        """``int_0^tau`` of the atom, in closed form."""
        tau = np.asarray(tau, dtype=float)
        if self.kind == MONOMIAL:
            return tau ** (self.n + 1) / (self.n + 1)
        a = self.j * nu
        if a == 0.0:
            # cos -> 1, sin -> 0 in the degenerate limit
            if self.kind in (COS, MONOMIAL_COS):
                return tau ** (self.n + 1) / (self.n + 1)
            return np.zeros_like(tau)
        cn, sn = _trig_moments(self.n, a, tau)
        return cn if self.kind in (COS, MONOMIAL_COS) else sn


_MOMENT_SERIES_MAX = 3.0
_MOMENT_SERIES_TERMS = 30


def _trig_moments(n, a, tau):
    """Return ``(int_0^tau s^n cos(a s) ds, int_0^tau s^n sin(a s) ds)``.

    Integration by parts, ``n`` levels deep; the recursion divides by ``a``
    at every level, so for ``|a tau| <= 3`` the Taylor series is used instead.
    """
    tau = np.asarray(tau, dtype=float)
    c, s = np.cos(a * tau), np.sin(a * tau)
    cm = s / a
    sm = 2.0 * np.sin(0.5 * a * tau) ** 2 / a  # (1 - cos a tau)/a without cancellation
    for m in range(1, n + 1):
        tm = tau**m
        cm, sm = tm * s / a - (m / a) * sm, -tm * c / a + (m / a) * cm
    small = np.abs(a * tau) <= _MOMENT_SERIES_MAX
    if n > 0 and np.any(small):
        cs, ss = _trig_moment_series(n, a, tau)
        cm, sm = np.where(small, cs, cm), np.where(small, ss, sm)
    return cm, sm


def _trig_moment_series(n, a, tau):
    x2 = (a * tau) ** 2
    term = tau ** (n + 1)  # (-1)^k (a tau)^(2k) tau^(n+1) / (2k)!
    cm = np.zeros_like(tau)
    sm = np.zeros_like(tau)
    for k in range(_MOMENT_SERIES_TERMS):
        cm = cm + term / (n + 2 * k + 1)
        odd = term * a * tau / (2 * k + 1)
        sm = sm + odd / (n + 2 * k + 2)
        term = -term * x2 / ((2 * k + 1) * (2 * k + 2))
    return cm, sm


def monomial(n):
    return BasisAtom(MONOMIAL, n=n)


def cos_harmonic(j=1):
    return BasisAtom(COS, j=j)


def sin_harmonic(j=1):
    return BasisAtom(SIN, j=j)


def monomial_cos(n, j=1):
    return BasisAtom(MONOMIAL_COS, n=n, j=j)


def monomial_sin(n, j=1):
    return BasisAtom(MONOMIAL_SIN, n=n, j=j)


@dataclass(frozen=True)
class FittingSpace:
    """Test space ``Y`` (dimension ``r``) and the induced trial space ``X``.

    The frequency is stored scaled, ``nu = h * omega``; ``with_nu`` returns
    the same family at another scaled frequency.
    """

    atoms: tuple[BasisAtom, ...]
    nu: float = 0.0
    family: str = "custom"
    order: int | None = None
    label: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        atoms = tuple(self.atoms)
        object.__setattr__(self, "atoms", atoms)
        if not atoms:
            raise ValueError("a fitting space needs at least one atom")
        if len(set(atoms)) != len(atoms):
            raise ValueError("duplicate atoms in fitting space")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family tag {self.family!r}")
        if not math.isfinite(self.nu) or self.nu < 0:
            raise ValueError("nu must be a finite nonnegative number")

    @property
    def r(self):
        return len(self.atoms)

    @property
    def is_polynomial(self):
        return not any(a.is_trig for a in self.atoms)

    def with_nu(self, nu):
        if self.is_polynomial:
            return self
        return replace(self, nu=float(nu))

    def eval_Y(self, tau):
        """Atom values, shape ``tau.shape + (r,)``."""
        return np.stack([a.value(tau, self.nu) for a in self.atoms], axis=-1)

    def eval_dY(self, tau):
        return np.stack([a.derivative(tau, self.nu) for a in self.atoms], axis=-1)

    def eval_X(self, tau):
        """Trial-space basis ``(1, int_0^tau atom_0, ..., int_0^tau atom_{r-1})``."""
        tau = np.asarray(tau, dtype=float)
        cols = [np.ones_like(tau)] + [a.antiderivative(tau, self.nu) for a in self.atoms]
        return np.stack(cols, axis=-1)

    def eval_dX(self, tau):
        tau = np.asarray(tau, dtype=float)
        return np.concatenate([np.zeros(tau.shape + (1,)), self.eval_Y(tau)], axis=-1)

    def describe(self):
        body = ", ".join(str(a) for a in self.atoms)
        return f"{self.label or self.family}: Y = span{{{body}}}, nu = {self.nu:g}"

    def affine_residual(self, shifts=(0.37, -0.81, 1.6), npts=48):
        """Largest relative least-squares residual of shifted/reflected atoms.

        Each atom ``w`` is mapped to ``w(tau + c)`` and ``w(-tau)`` and fitted
        in the span of the atoms on ``[0, 1]``. A space closed under
        translation and reflection gives a residual at roundoff level.
        """
        tau = 0.5 * (1.0 + np.cos(np.pi * (np.arange(npts) + 0.5) / npts))
        V = self.eval_Y(tau)
        scale = np.linalg.norm(V, axis=0)
        Vs = V / scale
        worst = 0.0
        for atom in self.atoms:
            targets = [atom.value(tau + c, self.nu) for c in shifts]
            targets.append(atom.value(-tau, self.nu))
            for w in targets:
                coef, *_ = np.linalg.lstsq(Vs, w, rcond=None)
                res = np.linalg.norm(Vs @ coef - w) / max(np.linalg.norm(w), 1e-300)
                worst = max(worst, res)
        return worst


SERIES_NU_MAX = 2.0
SERIES_TERMS = 40


def _taylor_row(atom, nterms):
    """Taylor coefficients of the atom written in the unscaled variable ``t = nu * tau``."""
    row = np.zeros(nterms)
    if atom.kind == MONOMIAL:
        row[atom.n] = 1.0
        return row
    even = atom.kind in (COS, MONOMIAL_COS)
    for k in range(nterms - atom.n):
        if (k % 2 == 0) == even:
            sign = (-1.0) ** (k // 2)
            row[k + atom.n] = sign * atom.j**k / math.factorial(k)
    return row


@dataclass(frozen=True)
class EvaluationBasis:
    """A numerically safe basis of ``Y_h`` used for all coefficient builds.

    For trigonometric spaces with ``j * nu <= SERIES_NU_MAX`` the basis is
    ``psi_i(tau) = tau**i + sum_{n >= r} E[i, n] nu**(n - i) tau**n``, the
    row-echelon form of the atoms' Taylor coefficients in ``t = nu * tau``.
    That form is free of the cancellation suffered by ``cos(nu tau) - 1``
    and tends to the monomials as ``nu -> 0``. Otherwise the raw atoms are
    used. ``to_atoms`` maps coefficients in this basis to atom coefficients.
    """

    space: FittingSpace
    series: bool
    to_atoms: np.ndarray
    poly: np.ndarray | None = None  # (r, nterms) power coefficients in tau

    def Y(self, tau):
        if not self.series:
            return self.space.eval_Y(tau)
        return _polyval_rows(self.poly, tau)

    def X(self, tau):
        if not self.series:
            return self.space.eval_X(tau)
        tau = np.asarray(tau, dtype=float)
        r, nterms = self.poly.shape
        anti = np.zeros((r, nterms + 1))
        anti[:, 1:] = self.poly / np.arange(1, nterms + 1)
        return np.concatenate([np.ones(tau.shape + (1,)), _polyval_rows(anti, tau)], axis=-1)


def _polyval_rows(coef, tau):
    """Evaluate each row of a power-coefficient matrix; output ``tau.shape + (rows,)``."""
    tau = np.asarray(tau, dtype=float)
    out = np.zeros(tau.shape + (coef.shape[0],))
    for n in range(coef.shape[1] - 1, -1, -1):
        out = out * tau[..., None] + coef[:, n]
    return out


def evaluation_basis(space: FittingSpace):
    return _evaluation_basis(space)


@lru_cache(maxsize=256)
def _evaluation_basis(space):
    r = space.r
    jmax = max((a.j for a in space.atoms if a.is_trig), default=0)
    if space.is_polynomial or jmax * space.nu > SERIES_NU_MAX or space.nu == 0.0:
        return EvaluationBasis(space, False, np.eye(r))
    nterms = SERIES_TERMS + max(a.n for a in space.atoms) + r
    W = np.array([_taylor_row(a, nterms) for a in space.atoms])
    B = W[:, :r]
    try:
        Binv = np.linalg.inv(B)
    except np.linalg.LinAlgError:
        Binv = None
    if Binv is None or not np.linalg.cond(B) < 1e12:
        # Wronskian at the origin is singular; no echelon form available
        return EvaluationBasis(space, False, np.eye(r))
    E = Binv @ W
    E[:, :r] = np.eye(r)
    nu = space.nu
    powers = np.arange(nterms)
    with np.errstate(under="ignore"):
        poly = E * nu ** (powers[None, :] - np.arange(r)[:, None]).clip(min=0)
    poly[:, :r] = np.eye(r)
    deg = np.array([a.n for a in space.atoms], dtype=float)
    to_atoms = (nu ** -np.arange(r))[:, None] * Binv * (nu**deg)[None, :]
    return EvaluationBasis(space, True, to_atoms, poly)


def make_cfe_space(r):
    """Classical continuous finite element space ``Y = P_{r-1}``."""
    r = _check_int(r, "r", 1)
    return FittingSpace(
        tuple(monomial(n) for n in range(r)), 0.0, "CFE", order=2 * r, label=f"CFE{r}"
    )


def make_tf1_space(r, nu):
    """``{cos, sin}`` for ``r = 2``, otherwise ``{1, ..., tau^(r-3), cos, sin}``."""
    r = _check_int(r, "r", 2)
    nu = _check_nu(nu)
    atoms = tuple(monomial(n) for n in range(r - 2)) + (cos_harmonic(1), sin_harmonic(1))
    return FittingSpace(atoms, nu, "TF1", order=2 * r, label=f"TFCFE{r}")


def make_tf2_space(k, nu):
    """Harmonics ``cos(j nu tau), sin(j nu tau)`` for ``j = 1..k`` (``r = 2k``)."""
    k = _check_int(k, "k", 1)
    nu = _check_nu(nu)
    atoms = []
    for j in range(1, k + 1):
        atoms += [cos_harmonic(j), sin_harmonic(j)]
    return FittingSpace(tuple(atoms), nu, "TF2", order=4 * k, label=f"TF2CFE{2 * k}")


def make_tf3_space(p, k, nu, include_harmonic=False):
    """Monomials up to ``tau^p`` plus ``tau^m cos, tau^m sin`` for ``m = 1..k``.

    The literal atom list is not closed under translation (shifting
    ``tau cos`` produces a bare ``cos``). ``include_harmonic=True`` adds the
    ``m = 0`` pair, which restores the invariance.
    """
    p = _check_int(p, "p", 0)
    k = _check_int(k, "k", 1)
    nu = _check_nu(nu)
    atoms = [monomial(n) for n in range(p + 1)]
    if include_harmonic:
        atoms += [cos_harmonic(1), sin_harmonic(1)]
    for m in range(1, k + 1):
        atoms += [monomial_cos(m), monomial_sin(m)]
    return FittingSpace(
        tuple(atoms),
        nu,
        "TF3",
        order=2 * (k + p + 1),
        label=f"TF3CFE(p={p},k={k})",
        meta={"p": p, "k": k, "include_harmonic": include_harmonic},
    )


def make_custom_space(atoms: Sequence[BasisAtom], nu=0.0, label="custom"):
    return FittingSpace(tuple(atoms), float(nu), "custom", label=label)


def space_for_method(name, nu=1.0):
    """Build the space template named by a method string.

    Recognised: ``cfeR``, ``tfcfeR`` (R >= 2), ``tf2cfeR`` (R even),
    ``tf3cfe:P,K`` and ``custom:ATOM,ATOM,...`` (see :func:`parse_atom`).
    """
    key = name.strip().lower()
    if key.startswith("tf3cfe:"):
        try:
            p, k = (int(v) for v in key[7:].split(","))
        except ValueError:
            raise ValueError(f"{name!r}: expected tf3cfe:P,K") from None
        return make_tf3_space(p, k, nu)
    if key.startswith("custom:"):
        atoms = [parse_atom(tok) for tok in key[7:].split(",") if tok.strip()]
        return make_custom_space(atoms, nu if any(a.is_trig for a in atoms) else 0.0, label=name.strip())
    for prefix, build in (
        ("tf2cfe", lambda r: make_tf2_space(_even_half(r, name), nu)),
        ("tfcfe", lambda r: make_tf1_space(r, nu)),
        ("cfe", make_cfe_space),
    ):
        if key.startswith(prefix):
            digits = key[len(prefix):]
            if not digits.isdigit():
                break
            return build(int(digits))
    raise ValueError(f"unknown method {name!r}; expected cfeR, tfcfeR or tf2cfeR")


_ATOM_RE = re.compile(r"^(?:(t|tau)(?:\^(\d+))?)?\*?(?:(cos|sin)(\d*))?$")


def parse_atom(token):
    """Parse ``1``, ``t``, ``t^3``, ``cos``, ``sin2``, ``t*cos``, ``t^2*sin3``."""
    tok = token.strip().lower().replace(" ", "")
    if tok == "1":
        return monomial(0)
    m = _ATOM_RE.match(tok)
    if not tok or m is None or (m.group(1) is None and m.group(3) is None):
        raise ValueError(f"cannot parse basis atom {token!r}")
    n = 0 if m.group(1) is None else int(m.group(2) or 1)
    if m.group(3) is None:
        return monomial(n)
    j = int(m.group(4) or 1)
    if n == 0:
        return cos_harmonic(j) if m.group(3) == "cos" else sin_harmonic(j)
    return monomial_cos(n, j) if m.group(3) == "cos" else monomial_sin(n, j)


def _even_half(r, name):
    if r % 2:
        raise ValueError(f"{name}: TF2 spaces need an even dimension")
    return r // 2


def _check_int(value, name, lo):
    if isinstance(value, bool) or int(value) != value or value < lo:
        raise ValueError(f"{name} must be an integer >= {lo}, got {value!r}")
    return int(value)


def _check_nu(nu):
    nu = float(nu)
    if not math.isfinite(nu) or nu <= 0:
        raise ValueError(f"nu must be positive, got {nu!r}")
    return nu
