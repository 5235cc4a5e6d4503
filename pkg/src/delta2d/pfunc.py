"""The kernels p_1, p_2 and p_Lambda.

p_2 only depends on w through alpha = Q^2 (w.r)/|r|^2 and
beta = Q^{3/2} (w.perp(r))/|r|. With t = z_1 |r|^2/Q^2, u = z_2 |r|/Q^{3/2}
and rho = sqrt(Q)/|r| it reads

    p_2 = c rho * int int omega_0(sqrt((t rho)^2 + u^2)) h(y, t) e(-alpha t - beta u) dt du,

y = kq/Q. The t-integral against h is done with a discrete "h-measure":
h(y, t) dt is the constant h(y, 0) dt minus a sum of rescaled copies of
omega, and each copy is integrated on its own Gauss-Legendre rule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Tuple

import numpy as np
from scipy.special import j0

from .kernels import KernelProfile, h_vec
from .lattice import Lattice2D, WeightedEmbedding, annulus_points, k_of, shortest_vector
from .quad import panel_count, panel_rule

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PContext:
    profile: KernelProfile
    Q: float
    quad_tol: float = 1e-6
    trunc_margin: float = 12.0

    def __post_init__(self):
        if self.Q < 1:
            raise ValueError("Q must be at least 1")
        if not (0 < self.quad_tol <= 1e-4):
            raise ValueError("quad_tol must lie in (0, 1e-4]")


# ---------------------------------------------------------------- p_1

def _p1_jmax(Q: float, q: int) -> int:
    # omega_0(j q rho / Q) omega(rho) vanishes unless j < Q/q
    return max(0, math.ceil(Q / q) - 1)


def p1_radial(ctx: PContext, q: int, radius) -> np.ndarray:
    """p_1 as a function of |w| (vectorised)."""
    Q = ctx.Q
    if q < 1 or q > Q:
        raise ValueError("p1 needs 1 <= q <= Q")
    prof = ctx.profile
    radius = np.atleast_1d(np.asarray(radius, dtype=float))
    J = _p1_jmax(Q, q)
    if J == 0:
        return np.zeros(radius.shape)
    js = np.arange(1, J + 1, dtype=float)
    fmax = q * J * math.sqrt(Q) * float(radius.max(initial=0.0))
    rho, wts = panel_rule(0.5, 1.0, max(8, panel_count(0.5, fmax, 8)), 16)
    base = prof.omega(rho) * rho * wts  # (nodes,)
    g = prof.omega0(np.multiply.outer(js * q / Q, rho))  # (J, nodes)
    out = np.empty(radius.shape)
    for idx, R in np.ndenumerate(radius):
        if R == 0.0:
            out[idx] = g.sum(axis=0) @ base
        else:
            arg = TWO_PI * q * math.sqrt(Q) * R * np.multiply.outer(js, rho)
            out[idx] = np.sum(g * j0(arg) * base)
    return -2.0 * TWO_PI * prof.c * out


def p1_eval(ctx: PContext, q: int, w: Sequence[float]) -> float:
    return float(p1_radial(ctx, q, math.hypot(w[0], w[1]))[0])


def p1_fourier_pair(ctx: PContext, q: int, n: Sequence[int]) -> float:
    Q = ctx.Q
    if q < 1 or q > Q:
        raise ValueError("p1 needs 1 <= q <= Q")
    prof = ctx.profile
    nn = math.hypot(n[0], n[1])
    w0 = float(prof.omega0(nn / Q ** 1.5))
    if w0 == 0.0 or nn == 0.0:
        return 0.0
    J = _p1_jmax(Q, q)
    js = np.arange(1, J + 1, dtype=float)
    terms = prof.omega(nn / (js * q * math.sqrt(Q))) / (q * js) ** 2
    return -2.0 * prof.c / Q * w0 * float(terms.sum())


def p1_fourier_numeric(ctx: PContext, q: int, n: Sequence[int], span: float = 0.0) -> float:
    """Nested radial quadrature of the integral of p_1 * e(w.n) over w.

    Term j of p_1 is a Hankel transform evaluated at S = q j sqrt(Q) |w|; it
    is integrated in S over [0, span] (default 4 * trunc_margin decay lengths).
    """
    Q = ctx.Q
    if q < 1 or q > Q:
        raise ValueError("p1 needs 1 <= q <= Q")
    prof = ctx.profile
    J = _p1_jmax(Q, q)
    X = span or 4.0 * ctx.trunc_margin
    nn = math.hypot(n[0], n[1])
    rho, wr = panel_rule(0.5, 1.0, max(8, panel_count(0.5, X, 8)), 16)
    if J == 0:
        return 0.0
    js = np.arange(1, J + 1, dtype=float)
    scales = q * js * math.sqrt(Q)
    bs = nn / scales
    # one S-rule fine enough for the fastest outer oscillation (j = 1)
    S, wS = panel_rule(0.0, X, panel_count(X, 1.0 + float(bs.max()), 16), 16)
    G = prof.omega0(np.multiply.outer(rho, js * q / Q)) * (rho * prof.omega(rho) * wr)[:, None]
    F = j0(TWO_PI * np.multiply.outer(S, rho)) @ G  # (S, J)
    outer = j0(TWO_PI * np.multiply.outer(S, bs)) * (S * wS)[:, None]
    total = float(np.sum(np.sum(F * outer, axis=0) * TWO_PI / scales ** 2))
    return -2.0 * TWO_PI * prof.c * total


# ---------------------------------------------------------------- h-measure

@lru_cache(maxsize=2048)
def _h_measure(profile: KernelProfile, y: float, T: float, band: float) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes t >= 0 and masses m with int f h(y,.) ~ sum m f(t) for even f on |t| < T.

    band is the largest frequency (in e(alpha t)) the rule must resolve.
    """
    ts = []
    ms = []
    c0 = float(h_vec(profile, np.array([y]), np.array([0.0]))[0])
    if c0 != 0.0:
        x, w = panel_rule(0.0, T, panel_count(T, band, 8), 16)
        ts.append(x)
        ms.append(2.0 * c0 * w)
    s, ws = panel_rule(0.5, 1.0, 4, 16)
    om = profile.omega(s) * ws
    j = 1
    while y * j * 0.5 < T:
        yj = y * j
        if band * yj > 1.0:
            s2, ws2 = panel_rule(0.5, 1.0, panel_count(0.5, band * yj, 4), 16)
            ts.append(yj * s2)
            ms.append(-2.0 * profile.omega(s2) * ws2)
        else:
            ts.append(yj * s)
            ms.append(-2.0 * om)
        j += 1
    t = np.concatenate(ts)
    m = np.concatenate(ms)
    keep = t < T
    t, m = t[keep], m[keep]
    t.setflags(write=False)
    m.setflags(write=False)
    return t, m


@lru_cache(maxsize=256)
def _u_rule(band: float) -> Tuple[np.ndarray, np.ndarray]:
    u, w = panel_rule(0.0, 0.5, panel_count(0.5, band, 8), 16)
    w = 2.0 * w
    u.setflags(write=False)
    w.setflags(write=False)
    return u, w


def _band(x: float) -> float:
    # quantise bandwidths so rules are shared between nearby evaluations
    return float(2.0 ** math.ceil(math.log2(max(abs(x), 1.0) + 1.0)))


class P2Kernel:
    """Discretised p_2 for fixed (y, rho); evaluates at arbitrary (alpha, beta)."""

    def __init__(self, profile: KernelProfile, y: float, rho: float, band_a: float, band_b: float):
        self.y = y
        self.rho = rho
        self.scale = profile.c * rho
        T = 0.5 / rho
        self.t, m = _h_measure(profile, y, T, _band(band_a))
        self.u, v = _u_rule(_band(band_b))
        K = profile.omega0(np.sqrt(np.add.outer((self.t * rho) ** 2, self.u ** 2)))
        self.K = (m[:, None] * K) * v[None, :]

    def __call__(self, alpha, beta) -> np.ndarray:
        alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
        beta = np.atleast_1d(np.asarray(beta, dtype=float))
        A = np.cos(TWO_PI * np.multiply.outer(alpha, self.t))
        B = np.cos(TWO_PI * np.multiply.outer(beta, self.u))
        return self.scale * np.einsum("pi,ij,pj->p", A, self.K, B, optimize=True)

    def grid(self, alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
        A = np.cos(TWO_PI * np.multiply.outer(alpha, self.t))
        B = np.cos(TWO_PI * np.multiply.outer(beta, self.u))
        return self.scale * (A @ self.K @ B.T)


def p2_coords(ctx: PContext, r: Sequence[int], w) -> Tuple[np.ndarray, np.ndarray]:
    w = np.asarray(w, dtype=float)
    r2 = r[0] * r[0] + r[1] * r[1]
    Q = ctx.Q
    wr = w[..., 0] * r[0] + w[..., 1] * r[1]
    wp = w[..., 0] * r[1] - w[..., 1] * r[0]
    return Q * Q * wr / r2, Q ** 1.5 * wp / math.sqrt(r2)


def p2_kernel(ctx: PContext, r: Sequence[int], k: int, q: int, band_a: float = 1.0,
              band_b: float = 1.0) -> P2Kernel:
    r2 = r[0] * r[0] + r[1] * r[1]
    return _p2_kernel_cached(ctx.profile, float(ctx.Q), r2, k * q, _band(band_a), _band(band_b))


# kernels for tiny y are large; keep the cache short
@lru_cache(maxsize=128)
def _p2_kernel_cached(profile, Q, r2, kq, band_a, band_b) -> P2Kernel:
    return P2Kernel(profile, kq / Q, math.sqrt(Q / r2), band_a, band_b)


def p2_eval_many(ctx: PContext, r: Sequence[int], k: int, q: int, w) -> np.ndarray:
    if r[0] == 0 and r[1] == 0:
        raise ValueError("p2 needs r != 0")
    if k < 1 or q < 1:
        raise ValueError("p2 needs k, q >= 1")
    w = np.atleast_2d(np.asarray(w, dtype=float))
    if k * q >= ctx.Q:
        return np.zeros(len(w))
    a, b = p2_coords(ctx, r, w)
    ker = p2_kernel(ctx, r, k, q, float(np.abs(a).max()), float(np.abs(b).max()))
    return ker(a, b)


def p2_eval(ctx: PContext, r: Sequence[int], k: int, q: int, w: Sequence[float]) -> float:
    return float(p2_eval_many(ctx, r, k, q, [w])[0])


def p2_fourier_pair(ctx: PContext, r: Sequence[int], k: int, q: int, n: Sequence[int]) -> float:
    if r[0] == 0 and r[1] == 0:
        raise ValueError("p2 needs r != 0")
    Q = ctx.Q
    prof = ctx.profile
    w0 = float(prof.omega0(math.hypot(n[0], n[1]) / Q ** 1.5))
    if w0 == 0.0:
        return 0.0
    z = (r[0] * n[0] + r[1] * n[1]) / Q ** 2
    return prof.c / Q ** 3 * w0 * float(h_vec(prof, np.array([k * q / Q]), np.array([z]))[0])


def p2_fourier_numeric(ctx: PContext, r: Sequence[int], k: int, q: int, n: Sequence[int],
                       step: float = 0.5, span_a: float = 0.0, span_b: float = 0.0) -> float:
    """Trapezoid rule in (alpha, beta) for the integral of p_2 * e(w.n) over w.

    p_2 is band limited in both variables (|t|, |u| < 1/2), so a step of 1/2
    aliases nothing; the sums over the truncated window collapse to two
    Dirichlet-type vectors against the discretised kernel.
    """
    if r[0] == 0 and r[1] == 0:
        raise ValueError("p2 needs r != 0")
    Q = ctx.Q
    if k * q >= Q:
        return 0.0
    nr = math.hypot(r[0], r[1])
    rho = math.sqrt(Q) / nr
    y = k * q / Q
    A = span_a or ctx.trunc_margin * max(1.0, rho / y)
    B = span_b or ctx.trunc_margin * max(1.0, rho)
    a_n = (r[0] * n[0] + r[1] * n[1]) / Q ** 2
    b_n = (n[0] * r[1] - n[1] * r[0]) / (nr * Q ** 1.5)
    ker = p2_kernel(ctx, r, k, q, A, B)

    def dirichlet(nodes, x, span):
        m = step * np.arange(-math.ceil(span / step), math.ceil(span / step) + 1)
        return step * (np.cos(TWO_PI * np.multiply.outer(nodes, m)) @ np.cos(TWO_PI * m * x))

    da = dirichlet(ker.t, a_n, A)
    db = dirichlet(ker.u, b_n, B)
    return nr / Q ** 3.5 * ker.scale * float(da @ ker.K @ db)


def p2_stationary(ctx: PContext, r: Sequence[int], w: Sequence[float]) -> float:
    from .kernels import omega0_hat
    Q = ctx.Q
    nr = math.hypot(r[0], r[1])
    beta = Q ** 1.5 * (w[0] * r[1] - w[1] * r[0]) / nr
    return ctx.profile.c * math.sqrt(Q) / nr * float(omega0_hat(ctx.profile, beta))


# ---------------------------------------------------------------- p_Lambda

def lattice_annulus(ctx: PContext, L: Lattice2D) -> np.ndarray:
    s = math.sqrt(ctx.Q)
    return annulus_points(L, 0.5 * s, s)


def p_lambda_many(ctx: PContext, L: Lattice2D, w) -> np.ndarray:
    w = np.atleast_2d(np.asarray(w, dtype=float))
    q = L.q
    out = p1_radial(ctx, q, np.hypot(w[:, 0], w[:, 1]))
    sq = math.sqrt(ctx.Q)
    for r in lattice_annulus(ctx, L):
        r = (int(r[0]), int(r[1]))
        k = k_of(r, q)
        if k * q >= ctx.Q:
            continue
        wt = float(ctx.profile.omega(math.hypot(*r) / sq))
        if wt:
            out = out + wt * p2_eval_many(ctx, r, k, q, w)
    return out


def p_lambda(ctx: PContext, L: Lattice2D, w: Sequence[float]) -> float:
    return float(p_lambda_many(ctx, L, [w])[0])


def lattice_p2_sum(ctx: PContext, L: Lattice2D, w: Sequence[float]) -> float:
    """sum over r in Lambda of omega(|r|/sqrt Q) p_2(w), i.e. p_Lambda - p_1."""
    return p_lambda(ctx, L, w) - p1_eval(ctx, L.q, w)


def lattice_p2_asymptotic(ctx: PContext, q: int, w: Sequence[float], nodes: int = 2048) -> float:
    """(c sqrt(Q)/q) * integral of |r|^-1 omega(|r|/sqrt Q) omega0_hat(Q^1.5 w.perp(r)/|r|) dr.

    In polar coordinates the radial part is sqrt(Q) * int omega = sqrt(Q), leaving
    (c Q/q) * int_0^{2 pi} omega0_hat(Q^1.5 |w| sin t) dt (periodic, so the
    uniform rule is spectrally accurate).
    """
    from .kernels import omega0_hat
    Q = ctx.Q
    t = np.linspace(0.0, TWO_PI, nodes, endpoint=False)
    vals = omega0_hat(ctx.profile, Q ** 1.5 * math.hypot(w[0], w[1]) * np.sin(t))
    return ctx.profile.c * Q / q * TWO_PI * float(np.mean(vals))


def lattice_sum_regime(ctx: PContext, L: Lattice2D, w: Sequence[float], delta: float = 0.1) -> bool:
    """mu_M >= Q^delta (q/Q + |w| q sqrt Q)."""
    Q = ctx.Q
    mu, _ = shortest_vector(L, WeightedEmbedding((float(w[0]), float(w[1])), Q))
    return mu >= Q ** delta * (L.q / Q + math.hypot(w[0], w[1]) * L.q * math.sqrt(Q))
