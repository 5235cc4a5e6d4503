"""The fixed bumps omega_0 and omega, the constant c, and the h-function.

omega lives on (1/2, 1) and omega_0 on (-1/2, 1/2). Outside the open
supports both return an exact 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .quad import QuadratureError, adaptive_integral, panel_count, panel_rule


DEFAULT_GAMMA = 0.15


class CalibrationError(RuntimeError):
    pass


def _omega_raw(x: np.ndarray, gamma: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = (x > 0.5) & (x < 1.0)
    xm = x[m]
    out[m] = np.exp(-gamma / ((xm - 0.5) * (1.0 - xm)))
    return out


def _bump0_raw(y: np.ndarray) -> np.ndarray:
    # exp(-y^2/(1-y^2)) on (-1, 1); equals 1 at y = 0
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    m = np.abs(y) < 1.0
    y2 = y[m] ** 2
    out[m] = np.exp(-y2 / (1.0 - y2))
    return out


@dataclass(frozen=True)
class KernelProfile:
    """omega(x) = beta*exp(-gamma/((x-1/2)(1-x))) on (1/2, 1);
    omega_0(x) = (1 + t0*(2x)^2)*exp(-(2x)^2/(1-(2x)^2)) on (-1/2, 1/2).

    beta and t0 are fixed by unit integrals, c = (2*pi*int r*omega)^-1.
    """
    beta: float
    gamma: float
    t0: float
    c: float
    tol: float
    moments: Tuple[float, ...] = field(default=())

    # -- pointwise evaluation (vectorised)
    def omega(self, x):
        return self.beta * _omega_raw(x, self.gamma)

    def omega0(self, x):
        y = 2.0 * np.asarray(x, dtype=float)
        return (1.0 + self.t0 * y * y) * _bump0_raw(y)

    def shape_params(self) -> dict:
        return {"gamma": self.gamma, "beta": self.beta, "t0": self.t0}

    def fingerprint(self) -> str:
        return f"gamma={self.gamma!r};beta={self.beta!r};t0={self.t0!r};c={self.c!r}"


def build_kernel_profile(tol: float = 1e-10, gamma: float = DEFAULT_GAMMA) -> KernelProfile:
    if not (0 < tol <= 1e-6):
        raise ValueError("tol must lie in (0, 1e-6]")
    qtol = min(tol, 1e-12) * 1e-2
    try:
        i_omega = adaptive_integral(lambda x: _omega_raw(x, gamma), 0.5, 1.0, qtol)
        beta = 1.0 / i_omega
        i_r_omega = beta * adaptive_integral(lambda x: x * _omega_raw(x, gamma), 0.5, 1.0, qtol)
        i0 = adaptive_integral(_bump0_raw, -1.0, 1.0, qtol)
        i2 = adaptive_integral(lambda y: y * y * _bump0_raw(y), -1.0, 1.0, qtol)
    except QuadratureError as exc:
        raise CalibrationError(str(exc)) from exc
    # (1/2) * int (1 + t0 y^2) b(y) dy = 1 is linear in t0
    t0 = (2.0 - i0) / i2
    if not t0 > 0:
        raise CalibrationError("omega_0 normalisation gave a non-positive shape parameter")
    c = 1.0 / (2.0 * math.pi * i_r_omega)
    return KernelProfile(beta=beta, gamma=gamma, t0=t0, c=c, tol=tol,
                         moments=(i_omega, i_r_omega, i0, i2))


_DEFAULT = None


def default_profile() -> KernelProfile:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = build_kernel_profile(1e-10)
    return _DEFAULT


# ---------------------------------------------------------------- h

def h_vec(profile: KernelProfile, y, z) -> np.ndarray:
    """h(y, z) = sum_j (1/(yj)) (omega(yj) - omega(|z|/(yj))), broadcast.

    Terms are added in increasing j; only j with 1/(2y) < j < 1/y or
    |z|/y < j < 2|z|/y can be nonzero, everything else adds an exact 0.
    """
    y, z = np.broadcast_arrays(np.asarray(y, dtype=float), np.abs(np.asarray(z, dtype=float)))
    if np.any(y <= 0):
        raise ValueError("h needs y > 0")
    out = np.zeros(y.shape)
    if out.size == 0:
        return out
    jlo = np.minimum(np.floor(0.5 / y), np.floor(z / y)) + 1
    jhi = np.ceil(np.maximum(1.0 / y, 2.0 * z / y))
    j0 = int(jlo.min())
    j1 = int(jhi.max())
    for j in range(max(j0, 1), j1 + 1):
        m = (jlo <= j) & (j <= jhi)
        if not m.any():
            continue
        yj = y[m] * j
        out[m] += (profile.omega(yj) - profile.omega(z[m] / yj)) / yj
    return out


def h_eval(profile: KernelProfile, y: float, z: float) -> float:
    if y <= 0:
        raise ValueError("h needs y > 0")
    return float(h_vec(profile, np.array([y]), np.array([z]))[0])


# ---------------------------------------------------------------- transforms

def omega0_hat(profile: KernelProfile, t):
    """int omega_0(x) e(-t x) dx, real and even; vectorised in t."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(t.shape)
    for idx, tv in np.ndenumerate(t):
        n = panel_count(0.5, tv, base=16)
        x, wts = panel_rule(0.0, 0.5, n, 16)
        out[idx] = 2.0 * np.dot(wts, profile.omega0(x) * np.cos(2 * math.pi * tv * x))
    return out if out.size > 1 else float(out[0])


def omega0_hat_table(profile: KernelProfile, t: np.ndarray, nodes: int = 256) -> np.ndarray:
    """Fast vectorised omega0_hat for moderate |t| (|t| <~ nodes/4)."""
    x, wts = panel_rule(0.0, 0.5, max(16, nodes // 16), 16)
    f = profile.omega0(x) * wts
    return 2.0 * np.cos(2 * math.pi * np.multiply.outer(np.asarray(t, float), x)) @ f
