"""Oscillatory integrals I_q(w, u), J(w) and the singular integral.

    I_q(w, u) = P^s int weight(x) e(P^2 w.F(x)) e(-P x.u / q) dx
    J(w)      = int weight(x) e(w.F(x)) dx

For a diagonal pair and a product weight everything factors into
one-dimensional integrals int phi(x) e(a x^2 - b x) dx, which is the fast
path used by all s > 4 computations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from .quad import QuadratureError, gl_rule, panel_rule
from .quadpair import QuadraticPair

TWO_PI = 2.0 * math.pi
GENERAL_MAX_S = 4
GENERAL_NODE_BUDGET = 4_000_000
W_MAX_CAP = 2 ** 10


class IntegralBudgetError(RuntimeError):
    pass


def _smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    out = np.zeros_like(t)
    inside = (t > 0) & (t < 1)
    a = np.exp(-1.0 / t[inside])
    b = np.exp(-1.0 / (1.0 - t[inside]))
    out[inside] = a / (a + b)
    out[t >= 1] = 1.0
    return out


def plateau(x) -> np.ndarray:
    """1 on |x| <= 1/2, smooth descent to 0 at |x| = 1."""
    x = np.abs(np.asarray(x, dtype=float))
    return _smooth_step(2.0 * (1.0 - x))


@dataclass(frozen=True)
class WeightFunction:
    """Product of plateau bumps on [-1, 1]^s, or a general callable on a box."""
    s: int
    func: Optional[Callable[[np.ndarray], np.ndarray]] = None
    box: Tuple[float, float] = (-1.0, 1.0)

    @property
    def is_product(self) -> bool:
        return self.func is None

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.func is not None:
            v = np.asarray(self.func(X), dtype=float)
            inside = np.all((X >= self.box[0]) & (X <= self.box[1]), axis=1)
            return np.where(inside, v, 0.0)
        return np.prod(plateau(X), axis=1)

    def mass(self) -> float:
        if self.is_product:
            return plateau_mass() ** self.s
        raise NotImplementedError("mass of a general weight needs the general path")


def plateau_weight(s: int) -> WeightFunction:
    return WeightFunction(s)


@lru_cache(maxsize=1)
def plateau_mass() -> float:
    x, w = panel_rule(0.0, 1.0, 32, 16)
    return float(2.0 * np.dot(w, plateau(x)))


# ---------------------------------------------------------------- 1D engine

def osc_1d(a, b=0.0) -> np.ndarray:
    """int phi(x) e(a x^2 - b x) dx over [-1, 1], vectorised over a and b.

    Panels are sized by the largest phase derivative 2|a| + |b| so each one
    spans at most half an oscillation.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.broadcast_to(np.atleast_1d(np.asarray(b, dtype=float)), a.shape)
    out = np.empty(a.shape, dtype=complex)
    need = np.maximum(8, np.ceil(4.0 * (2.0 * np.abs(a) + np.abs(b)) + 1)).astype(int)
    # bucket by panel count (powers of two) to vectorise
    buckets = np.maximum(3, np.ceil(np.log2(need)).astype(int))
    for bk in np.unique(buckets):
        idx = np.nonzero(buckets == bk)[0]
        x, w = panel_rule(-1.0, 1.0, 1 << int(bk), 16)
        keep = (x > -1.0) & (x < 1.0)
        x, w = x[keep], w[keep] * plateau(x[keep])
        nz = w != 0
        x, w = x[nz], w[nz]
        for j in range(0, len(idx), 256):
            ii = idx[j:j + 256]
            ph = np.outer(a[ii], x * x) - np.outer(b[ii], x)
            out[ii] = np.exp(1j * TWO_PI * ph) @ w
    return out


A0 = 48.0
_TABLE_STEP = 1.0 / 64


@lru_cache(maxsize=1)
def _osc_table():
    a = np.arange(0.0, A0 + _TABLE_STEP / 2, _TABLE_STEP)
    v = osc_1d(a)
    return CubicSpline(a, v.real), CubicSpline(a, v.imag)


def osc_1d_fast(a) -> np.ndarray:
    """int phi(x) e(a x^2) dx from a spline table, stationary phase beyond A0.

    Since phi = 1 near 0, the stationary-phase expansion has only its
    leading term; the remainder is far below the spline error at A0.
    """
    a = np.asarray(a, dtype=float)
    aa = np.abs(a)
    re, im = _osc_table()
    small = aa <= A0
    out = np.empty(a.shape, dtype=complex)
    out[small] = re(aa[small]) + 1j * im(aa[small])
    big = ~small
    out[big] = np.exp(1j * math.pi / 4) / np.sqrt(2.0 * aa[big])
    return np.where(a < 0, np.conj(out), out)


# ---------------------------------------------------------------- I_q and J

def _diag(pair: QuadraticPair) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    s = pair.s
    if any(pair.H1[i][j] or pair.H2[i][j] for i in range(s) for j in range(s) if i != j):
        return None
    return (np.array([pair.H1[i][i] // 2 for i in range(s)], dtype=float),
            np.array([pair.H2[i][i] // 2 for i in range(s)], dtype=float))


def _general(pair: QuadraticPair, weight: WeightFunction, w, u, P: float, q: int) -> complex:
    s = pair.s
    if s > GENERAL_MAX_S:
        raise IntegralBudgetError("general quadrature path is limited to s <= 4")
    H = np.array(pair.H1, dtype=float) * w[0] + np.array(pair.H2, dtype=float) * w[1]
    lo, hi = weight.box
    span = hi - lo
    # largest phase derivative per coordinate
    grad = P * P * np.abs(H).sum(axis=1) * max(abs(lo), abs(hi)) + P * np.abs(np.asarray(u, float)) / q
    nodes = []
    for g in grad:
        panels = max(4, int(math.ceil(g * span / 1.5)) + 2)
        nodes.append(panel_rule(lo, hi, panels, 16))
    total = math.prod(len(x) for x, _ in nodes)
    if total > GENERAL_NODE_BUDGET:
        raise IntegralBudgetError(f"general quadrature needs {total} nodes")
    grids = np.meshgrid(*[x for x, _ in nodes], indexing="ij")
    X = np.stack([g.ravel() for g in grids], axis=1)
    Wt = np.ones(len(X))
    for k, (_, wk) in enumerate(nodes):
        shape = [1] * s
        shape[k] = -1
        Wt = Wt * np.broadcast_to(wk.reshape(shape), grids[0].shape).ravel()
    ph = P * P * 0.5 * np.einsum("ni,ij,nj->n", X, H, X) - P * X @ np.asarray(u, float) / q
    val = np.sum(Wt * weight(X) * np.exp(1j * TWO_PI * ph))
    return complex(val) * P ** s


def iq(pair: QuadraticPair, weight: WeightFunction, q: int, w: Sequence[float],
       u: Sequence[int], P: float, path: str = "auto") -> complex:
    """P^s int weight(x) e(P^2 w.F(x) - P x.u/q) dx."""
    if q < 1 or P <= 0:
        raise ValueError("need q >= 1 and P > 0")
    w = np.asarray(w, dtype=float)
    u = np.asarray(u, dtype=float)
    d = _diag(pair)
    if path == "auto":
        path = "product" if (d is not None and weight.is_product) else "general"
    if path == "product":
        if d is None or not weight.is_product:
            raise ValueError("product path needs a diagonal pair and a product weight")
        a = P * P * (w[0] * d[0] + w[1] * d[1])
        b = P * u / q
        return complex(np.prod(P * osc_1d(a, b)))
    return _general(pair, weight, w, u, P, q)


def j_of_w(pair: QuadraticPair, weight: WeightFunction, w: Sequence[float], path: str = "auto") -> complex:
    return iq(pair, weight, 1, w, np.zeros(pair.s), 1.0, path)


def j_many(pair: QuadraticPair, W: np.ndarray) -> np.ndarray:
    """J at many points for a diagonal pair with the plateau product weight."""
    d = _diag(pair)
    if d is None:
        raise ValueError("j_many needs a diagonal pair")
    W = np.asarray(W, dtype=float)
    out = np.ones(W.shape[:-1], dtype=complex)
    for e, al in zip(*d):
        out *= osc_1d_fast(W[..., 0] * e + W[..., 1] * al)
    return out


# ---------------------------------------------------------------- envelopes

def decay_envelope(pair: QuadraticPair, w, P: float) -> float:
    """prod_j (1 + P^2 |lambda_j w1 + mu_j w2|)^(-1/2)."""
    out = 1.0
    for lam, mu in pair.pencil_roots:
        out *= (1.0 + P * P * abs(lam * w[0] + mu * w[1])) ** -0.5
    return out


def iq_envelope_constant(pair: QuadraticPair, weight: WeightFunction, P: float, grid) -> float:
    """sup over the w-grid of |I_q(w, 0)| / (P^s envelope)."""
    best = 0.0
    for w in grid:
        v = abs(iq(pair, weight, 1, w, np.zeros(pair.s), P))
        best = max(best, v / (P ** pair.s * decay_envelope(pair, w, P)))
    return best


def _bad_angles(pair: QuadraticPair) -> np.ndarray:
    d = _diag(pair)
    ang = []
    for e, al in zip(*d):
        # e cos t + al sin t = 0
        ang.append(math.atan2(-e, al) % math.pi)
    return np.unique(np.round(ang, 15))


def j_envelope_constant(pair: QuadraticPair, r_max: float = 64.0) -> float:
    """sup |J(w)| (1 + |w|)^((s-1)/2) over a polar sample grid including bad rays."""
    th = np.concatenate([np.linspace(0, math.pi, 721, endpoint=False), _bad_angles(pair)])
    r = np.geomspace(0.01, r_max, 200)
    R, T = np.meshgrid(r, th, indexing="ij")
    W = np.stack([R * np.cos(T), R * np.sin(T)], axis=-1)
    v = np.abs(j_many(pair, W)) * (1 + R) ** ((pair.s - 1) / 2)
    return float(v.max())


# ---------------------------------------------------------------- singular integral

def _theta_rule(pair: QuadraticPair, W: float) -> Tuple[np.ndarray, np.ndarray]:
    bad = _bad_angles(pair)
    pts = {0.0, math.pi}
    finest = 1.0 / (8.0 * max(W, 1.0))
    for b in bad:
        pts.add(float(b))
        h = 0.25
        while h > finest:
            for sgn in (-1, 1):
                t = b + sgn * h
                if 0 < t < math.pi:
                    pts.add(t)
            h /= 2
    edges = np.array(sorted(pts))
    xs, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi - lo < 1e-14:
            continue
        x, w = gl_rule(lo, hi, 16)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def _radial_edges(radii: Sequence[float]) -> np.ndarray:
    Wmax = max(radii)
    pts = {0.0, *map(float, radii)}
    r = 0.25
    while r < Wmax:
        pts.add(r)
        r *= 2
    edges = np.array(sorted(p for p in pts if p <= Wmax))
    fine = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        fine.extend(np.linspace(lo, hi, 5)[:-1])
    fine.append(Wmax)
    return np.array(fine)


def singular_integral_disc(pair: QuadraticPair, radii: Sequence[float], with_imag: bool = False):
    """int_{|w| < W} J(w) dw (real part) for each W in radii, by polar quadrature.

    The angle runs over [0, pi) with w and -w taken together.
    """
    radii = [float(r) for r in radii]
    th, wth = _theta_rule(pair, max(radii))
    edges = _radial_edges(radii)
    d = _diag(pair)
    L = [np.cos(th) * e + np.sin(th) * al for e, al in zip(*d)]
    cum, cum_im = [0.0], [0.0]
    for lo, hi in zip(edges[:-1], edges[1:]):
        r, wr = gl_rule(lo, hi, 16)
        plus = np.ones((len(th), len(r)), dtype=complex)
        minus = np.ones((len(th), len(r)), dtype=complex)
        for Lj in L:
            arg = Lj[:, None] * r[None, :]
            plus *= osc_1d_fast(arg)
            minus *= osc_1d_fast(-arg)
        both = wth @ (plus + minus) @ (wr * r)
        cum.append(cum[-1] + float(both.real))
        cum_im.append(cum_im[-1] + float(both.imag))
    idx = [int(np.searchsorted(edges, R)) for R in radii]
    if with_imag:
        return np.array([cum[i] for i in idx]), np.array([cum_im[i] for i in idx])
    return np.array([cum[i] for i in idx])


@dataclass(frozen=True)
class SingularIntegral:
    value: float
    tail: float
    W_max: float
    envelope_C: float
    imag: float


def singular_integral(pair: QuadraticPair, weight: Optional[WeightFunction] = None,
                      tol: float = 1e-3, W0: float = 8.0) -> SingularIntegral:
    """int_{R^2} J(w) dw with an envelope-based tail bound C W^(-(s-5)/2)."""
    s = pair.s
    if s < 6:
        raise ValueError("singular integral needs s >= 6")
    if weight is not None and not weight.is_product:
        raise ValueError("singular integral is implemented for the plateau product weight")
    if _diag(pair) is None:
        raise ValueError("singular integral needs a diagonal pair")
    C = j_envelope_constant(pair)
    W = W0
    while True:
        re, im = singular_integral_disc(pair, [W], with_imag=True)
        val = float(re[0])
        tail = TWO_PI * C * W ** (-(s - 5) / 2) / ((s - 5) / 2)
        if tail < tol * abs(val):
            return SingularIntegral(val, tail, W, C, abs(float(im[0])))
        W *= 2
        if W > W_MAX_CAP:
            raise QuadratureError("singular integral tail did not reach tolerance by W = 2^10")
