"""Benchmark Hamiltonian systems.

All states are ordered ``y = (p, q)`` so that ``y' = J^{-1} grad H(y)`` with
the canonical ``J = [[0, I], [-I, 0]]``, i.e. ``p' = -dH/dq``, ``q' = dH/dp``.
Right-hand sides and Hamiltonians accept arrays with extra leading axes,
which lets the integrator evaluate all quadrature points in one call.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .elliptic import jacobi_sn_cn_dn


@dataclass(frozen=True)
class HamiltonianSystem:
    name: str
    dim: int
    f: Callable
    H: Callable
    y0: np.ndarray
    suggested_omega: float
    extra_invariants: dict = field(default_factory=dict)
    reference: Callable | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dim % 2:
            raise ValueError("Hamiltonian systems have even dimension")
        y0 = np.array(self.y0, dtype=float)
        y0.flags.writeable = False
        object.__setattr__(self, "y0", y0)

    def grad_H(self, y):
        """``grad H = J f`` recovered from the vector field."""
        fy = self.f(np.asarray(y, dtype=float))
        d1 = self.dim // 2
        return np.concatenate([fy[..., d1:], -fy[..., :d1]], axis=-1)


def _split(y, d1):
    return y[..., :d1], y[..., d1:]


def perturbed_kepler(eps=0.001):
    if not abs(eps) < 0.1:
        raise ValueError("perturbation parameter must satisfy |eps| < 0.1")
    c = 2.0 * eps + eps**2

    def radius(q):
        r = np.sqrt(np.sum(q * q, axis=-1))
        if np.any(r == 0):
            raise ZeroDivisionError("Kepler collision: |q| = 0")
        return r

    def f(y):
        p, q = _split(y, 2)
        r = radius(q)[..., None]
        dp = -q / r**3 - c * q / r**5
        return np.concatenate([dp, p], axis=-1)

    def H(y):
        p, q = _split(y, 2)
        r = radius(q)
        return 0.5 * np.sum(p * p, axis=-1) - 1.0 / r - c / (3.0 * r**3)

    w = 1.0 + eps

    def reference(t):
        t = np.asarray(t, dtype=float)
        cs, sn = np.cos(w * t), np.sin(w * t)
        return np.stack([-w * sn, w * cs, cs, sn], axis=-1)

    return HamiltonianSystem(
        "kepler", 4, f, H, [0.0, 1.0 + eps, 1.0, 0.0], 1.0, reference=reference, params={"eps": eps}
    )


def duffing(k=0.07, omega=5.0):
    """``q'' = -(omega^2 + k^2) q + 2 k^2 q^3`` with ``q(0) = 0, p(0) = omega``."""
    if not 0 <= k < omega:
        raise ValueError("Duffing reference needs 0 <= k < omega")
    w2 = omega**2 + k**2

    def f(y):
        p, q = y[..., :1], y[..., 1:]
        return np.concatenate([-w2 * q + 2.0 * k**2 * q**3, p], axis=-1)

    def H(y):
        p, q = y[..., 0], y[..., 1]
        return 0.5 * p**2 + 0.5 * w2 * q**2 - 0.5 * k**2 * q**4

    def reference(t):
        sn, cn, dn = jacobi_sn_cn_dn(omega * np.asarray(t, dtype=float), k / omega)
        return np.stack([omega * cn * dn, sn], axis=-1)

    return HamiltonianSystem(
        "duffing", 2, f, H, [omega, 0.0], omega, reference=reference, params={"k": k, "omega": omega}
    )


def harmonic(omega=5.0, q0=1.0, p0=0.0):
    """Linear oscillator; its solution lies in the trigonometric trial spaces."""
    if not omega > 0:
        raise ValueError("omega must be positive")

    def f(y):
        return np.concatenate([-(omega**2) * y[..., 1:], y[..., :1]], axis=-1)

    def H(y):
        return 0.5 * y[..., 0] ** 2 + 0.5 * omega**2 * y[..., 1] ** 2

    def reference(t):
        t = np.asarray(t, dtype=float)
        c, s = np.cos(omega * t), np.sin(omega * t)
        return np.stack([p0 * c - omega * q0 * s, q0 * c + p0 / omega * s], axis=-1)

    return HamiltonianSystem(
        "harmonic", 2, f, H, [p0, q0], omega, reference=reference, params={"omega": omega}
    )


def fpu_coupling(m):
    """Matrix ``G`` with ``U(q) = sum((G q)**4) / 4``."""
    G = np.zeros((m + 1, 2 * m))
    G[0, 0], G[0, m] = 1.0, -1.0
    for i in range(1, m):
        # q_{i+1} - q_{m+i+1} - q_i - q_{m+i}  (1-based)
        G[i, i], G[i, m + i], G[i, i - 1], G[i, m + i - 1] = 1.0, -1.0, -1.0, -1.0
    G[m, m - 1], G[m, 2 * m - 1] = 1.0, 1.0
    return G


def fpu(m_pairs=2, omega=50.0):
    """Fermi-Pasta-Ulam chain with stiff linear springs of frequency ``omega``."""
    m = int(m_pairs)
    if m < 1:
        raise ValueError("need at least one pair")
    n = 2 * m
    G = fpu_coupling(m)
    stiff = np.zeros(n)
    stiff[m:] = omega**2

    def f(y):
        p, q = _split(y, n)
        a = q @ G.T
        return np.concatenate([-stiff * q - (a**3) @ G, p], axis=-1)

    def H(y):
        p, q = _split(y, n)
        a = q @ G.T
        return 0.5 * np.sum(p * p, axis=-1) + 0.5 * np.sum(stiff * q * q, axis=-1) + 0.25 * np.sum(a**4, axis=-1)

    p0 = np.zeros(n)
    q0 = np.zeros(n)
    q0[0], p0[0] = 1.0, 1.0
    q0[m], p0[m] = 1.0 / omega, 1.0
    return HamiltonianSystem(
        "fpu", 2 * n, f, H, np.concatenate([p0, q0]), omega, params={"m_pairs": m, "omega": omega}
    )


@dataclass(frozen=True)
class SpectralOperator:
    """Fourier pseudospectral first-derivative matrix on a periodic grid."""

    d: int
    L: float
    x0: float
    x: np.ndarray
    D: np.ndarray
    D2: np.ndarray


def spectral_operator(d=64, L=100.0, x0=-50.0):
    if d % 2 or d < 8:
        raise ValueError("grid size must be even and at least 8")
    j = np.arange(d)
    x = x0 + j * L / d
    diff = j[:, None] - j[None, :]
    sign = np.where(diff % 2 == 0, 1.0, -1.0)
    D = np.zeros((d, d))
    off = diff != 0
    D[off] = (np.pi / L) * sign[off] / np.tan(np.pi * diff[off] / d)
    D2 = D @ D
    D2 = 0.5 * (D2 + D2.T)
    for arr in (x, D, D2):
        arr.flags.writeable = False
    return SpectralOperator(d, float(L), float(x0), x, D, D2)


def peregrine_bisoliton(x, t, A=10.0, M=1.0, N=np.sqrt(2.0)):
    """Two-soliton solution of ``i u_t + u_xx + 2|u|^2 u = 0``."""
    if M == N:
        raise ValueError("soliton amplitudes must differ")
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    J = np.arctanh(2.0 * M * N / (M**2 + N**2))
    zm, zn = M * (x - A), N * (x + A)
    sm, sn = 1.0 / np.cosh(zm), 1.0 / np.cosh(zn)
    U = np.exp(1j * M**2 * t) * M * sm - np.exp(1j * N**2 * t) * N * sn
    V = np.cosh(J) - np.sinh(J) * (np.tanh(zm) * np.tanh(zn) + np.cos((M**2 - N**2) * t) * sm * sn)
    if np.any(V == 0):
        raise ZeroDivisionError("bi-soliton denominator vanishes")
    return U / V


def nls_semidiscrete(op: SpectralOperator, omega=2.0, initial=None, reference=None):
    """Cubic Schroedinger equation on the grid as a real system ``y = (P, Q)``."""
    d = op.d
    D2 = op.D2

    def f(y):
        P, Q = _split(y, d)
        rho2 = 2.0 * (P * P + Q * Q)
        return np.concatenate([-(Q @ D2) - rho2 * Q, P @ D2 + rho2 * P], axis=-1)

    def H(y):
        P, Q = _split(y, d)
        rho = P * P + Q * Q
        return 0.5 * np.sum(P * (P @ D2), axis=-1) + 0.5 * np.sum(Q * (Q @ D2), axis=-1) + 0.5 * np.sum(rho**2, axis=-1)

    def charge(y):
        return np.sum(y * y, axis=-1)

    y0 = np.zeros(2 * d) if initial is None else np.asarray(initial, dtype=float)
    return HamiltonianSystem(
        "nls",
        2 * d,
        f,
        H,
        y0,
        omega,
        extra_invariants={"charge": charge},
        reference=reference,
        params={"d": d, "L": op.L, "x0": op.x0},
    )


def nls_peregrine(d=450, L=100.0, x0=-50.0, A=10.0, M=1.0, N=np.sqrt(2.0), omega=2.0):
    """Semi-discrete NLS started from the bi-soliton, with it as reference."""
    op = spectral_operator(d, L, x0)

    def as_state(u):
        return np.concatenate([u.real, u.imag], axis=-1)

    def reference(t):
        t = np.asarray(t, dtype=float)
        return as_state(peregrine_bisoliton(op.x, t[..., None], A, M, N))

    u0 = peregrine_bisoliton(op.x, 0.0, A, M, N)
    sys = nls_semidiscrete(op, omega, initial=as_state(u0), reference=reference)
    sys.params.update({"A": A, "M": M, "N": N})
    return sys


PRESETS = {
    "kepler": (perturbed_kepler, {"eps": 0.001}),
    "duffing": (duffing, {"k": 0.07, "omega": 5.0}),
    "fpu": (fpu, {"m_pairs": 2, "omega": 50.0}),
    "nls": (nls_peregrine, {"d": 450, "L": 100.0, "x0": -50.0, "A": 10.0, "M": 1.0, "N": float(np.sqrt(2.0)), "omega": 2.0}),
    "harmonic": (harmonic, {"omega": 5.0}),
}

# step sizes and intervals used for each problem in the original study
BENCHMARK_SETTINGS = {
    "kepler": {"h": [2.0 ** -i for i in range(-1, 7)], "tmax": 200 * np.pi, "omega": 1.0},
    "duffing": {"h": [0.2 * 2.0 ** -i for i in range(6)], "tmax": 100.0, "omega": 5.0},
    "fpu": {"h": [1 / 50], "tmax": 100.0, "omega": 50.0},
    "nls": {"h": [0.2], "tmax": 100.0, "omega": 2.0},
}


def make_problem(name, **overrides):
    try:
        factory, defaults = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {', '.join(PRESETS)}") from None
    unknown = set(overrides) - set(defaults)
    if unknown:
        raise ValueError(f"{name}: unknown parameter(s) {', '.join(sorted(unknown))}")
    return factory(**{**defaults, **overrides})
