"""The two-dimensional delta symbol: duality identity, arc decomposition, arcs.

Everything is organised around an ``ArcTable``: for a given Q it lists one
row per (q, class of a, r) with r in Lambda(a, q) and sqrt(Q)/2 < |r| < sqrt(Q).
Since Lambda(a, q) only depends on the class {lambda*a}, the character sum
over a class collapses to a Ramanujan sum c_q(a.n).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .arith import Vec2, content, divisors, euler_phi
from .expsum import ramanujan_table
from .kernels import KernelProfile, h_vec
from .lattice import annulus_points, lattice_from, residue_classes
from .pfunc import (PContext, p1_fourier_numeric, p1_fourier_pair, p2_fourier_numeric)

QUAD_MODE_MAX_Q = 64


@dataclass(frozen=True)
class ArcPoint:
    q: int
    a: Vec2
    kind: str
    delta_param: float
    radius: float          # major radius if kind == "major", else 0
    minor_inner: float
    minor_outer: float


@dataclass
class DeltaReport:
    n: Vec2
    Q: float
    value: float
    residual: float
    per_q_contributions: List[Tuple[int, float]]
    scale: float = 0.0
    imag: float = 0.0
    extras: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "n": list(self.n), "Q": self.Q, "value": self.value, "residual": self.residual,
            "scale": self.scale, "imag": self.imag, "extras": dict(self.extras),
            "per_q": [[q, v] for q, v in self.per_q_contributions],
        }


# ---------------------------------------------------------------- arc table

@dataclass(frozen=True)
class ArcTable:
    Q: float
    # one row per class
    cls_q: np.ndarray
    cls_a: np.ndarray       # (C, 2)
    # one row per (class, r)
    row_cls: np.ndarray
    row_r: np.ndarray       # (R, 2)
    row_k: np.ndarray
    row_w: np.ndarray       # omega(|r|/sqrt(Q))

    @property
    def row_q(self) -> np.ndarray:
        return self.cls_q[self.row_cls]


@lru_cache(maxsize=16)
def arc_table(profile: KernelProfile, Q: float) -> ArcTable:
    sq = math.sqrt(Q)
    cq, ca, rc, rr, rk = [], [], [], [], []
    for q in range(1, int(math.floor(Q)) + 1):
        for canon, _ in residue_classes(q):
            ci = len(cq)
            cq.append(q)
            ca.append(canon)
            pts = annulus_points(lattice_from(canon, q), 0.5 * sq, sq)
            for r in pts:
                r = (int(r[0]), int(r[1]))
                g = content(r)
                rc.append(ci)
                rr.append(r)
                rk.append(g // math.gcd(g, q))
    row_r = np.array(rr, dtype=np.int64).reshape(-1, 2)
    row_w = profile.omega(np.hypot(row_r[:, 0], row_r[:, 1]) / sq) if len(rr) else np.zeros(0)
    arrays = [np.array(cq, dtype=np.int64), np.array(ca, dtype=np.int64).reshape(-1, 2),
              np.array(rc, dtype=np.int64), row_r, np.array(rk, dtype=np.int64), row_w]
    for a in arrays:
        a.setflags(write=False)
    return ArcTable(Q, *arrays)


def _class_charsums(table: ArcTable, n: Vec2) -> np.ndarray:
    """sum over the class of a of e_q(lambda a.n), i.e. c_q(a.n), per class."""
    m = table.cls_a[:, 0] * n[0] + table.cls_a[:, 1] * n[1]
    out = np.empty(len(table.cls_q))
    for q in np.unique(table.cls_q):
        sel = table.cls_q == q
        out[sel] = ramanujan_table(int(q))[np.mod(m[sel], q)]
    return out


def _class_charsums_direct(table: ArcTable, n: Vec2) -> np.ndarray:
    out = np.empty(len(table.cls_q), dtype=complex)
    for i, (q, a) in enumerate(zip(table.cls_q, table.cls_a)):
        q = int(q)
        m = int(a[0]) * n[0] + int(a[1]) * n[1]
        out[i] = sum(cmath.exp(2j * math.pi * ((lam * m) % q) / q)
                     for lam in range(1, q + 1) if math.gcd(lam, q) == 1)
    return out


def _ordered_sum_by_q(q: np.ndarray, terms: np.ndarray, Qmax: int) -> List[Tuple[int, float]]:
    per = np.zeros(Qmax + 1)
    np.add.at(per, q, terms)
    return [(qq, float(per[qq])) for qq in range(1, Qmax + 1)]


def divisor_term(profile: KernelProfile, n: Vec2, Q: float) -> float:
    """(2c/Q) sum_{d' | n} omega(|n|/(d' sqrt(Q))); zero for n = 0.

    The factor 2 accounts for the two primitive directions +-c orthogonal to n.
    """
    g = content(n)
    if g == 0:
        return 0.0
    nn = math.hypot(n[0], n[1])
    ds = np.array(divisors(g), dtype=float)
    vals = profile.omega(nn / (ds * math.sqrt(Q)))
    return 2.0 * profile.c / Q * math.fsum(vals.tolist())


def _check_Q(Q: float) -> None:
    if Q < 4:
        raise ValueError("Q must be at least 4")


def duality_rhs(profile: KernelProfile, n: Sequence[int], Q: float, weighted: bool = False,
                charsum: str = "ramanujan") -> DeltaReport:
    """Right side of the duality identity for delta_n.

    weighted=True multiplies by omega_0(|n|/Q^{3/2}); that is the exact value
    the closed-form decomposition reproduces.
    """
    _check_Q(Q)
    n = (int(n[0]), int(n[1]))
    tab = arc_table(profile, float(Q))
    Qmax = int(math.floor(Q))
    if charsum == "ramanujan":
        cs = _class_charsums(tab, n)
        imag = 0.0
    elif charsum == "direct":
        csc = _class_charsums_direct(tab, n)
        cs = csc.real
        imag_c = csc.imag
    else:
        raise ValueError(f"unknown charsum mode {charsum!r}")
    q = tab.row_q
    y = tab.row_k * q / Q
    z = (tab.row_r[:, 0] * n[0] + tab.row_r[:, 1] * n[1]) / Q ** 2
    hv = h_vec(profile, y, z) if len(q) else np.zeros(0)
    base = profile.c / Q ** 3 * tab.row_w * hv
    terms = cs[tab.row_cls] * base
    if charsum == "direct":
        imag = float(abs(np.sum(imag_c[tab.row_cls] * base)))
        if imag > 1e-9 * max(1, len(terms)):
            raise ArithmeticError(f"character sums left an imaginary part {imag}")
    per_q = _ordered_sum_by_q(q, terms, Qmax)
    dterm = divisor_term(profile, n, Q)
    value = math.fsum(v for _, v in per_q) - dterm
    scale = float(np.abs(terms).sum()) + dterm
    if weighted:
        w0 = float(profile.omega0(math.hypot(*n) / Q ** 1.5))
        value *= w0
        scale *= w0
        per_q = [(qq, v * w0) for qq, v in per_q]
        dterm *= w0
    target = 1.0 if n == (0, 0) else 0.0
    return DeltaReport(n, float(Q), value, abs(value - target), per_q, scale, imag,
                       {"divisor_term": dterm, "rows": float(len(terms))})


# ---------------------------------------------------------------- decomposition

def _p1_column(ctx: PContext, n: Vec2, Qmax: int, numeric: bool) -> np.ndarray:
    out = np.zeros(Qmax + 1)
    for q in range(1, Qmax + 1):
        out[q] = p1_fourier_numeric(ctx, q, n) if numeric else p1_fourier_pair(ctx, q, n)
    return out


def delta_decomposition(ctx: PContext, n: Sequence[int], Q: Optional[float] = None,
                        mode: str = "closed_form") -> DeltaReport:
    """Sum of e_q(a.n) times the Fourier pairs of p_1 and p_2 over all arcs."""
    Q = float(ctx.Q if Q is None else Q)
    if Q != ctx.Q:
        ctx = PContext(ctx.profile, Q, ctx.quad_tol, ctx.trunc_margin)
    _check_Q(Q)
    if mode not in ("closed_form", "quadrature"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "quadrature" and Q > QUAD_MODE_MAX_Q:
        raise ValueError(f"quadrature mode is limited to Q <= {QUAD_MODE_MAX_Q}")
    prof = ctx.profile
    n = (int(n[0]), int(n[1]))
    tab = arc_table(prof, Q)
    Qmax = int(math.floor(Q))
    cs = _class_charsums(tab, n)
    p1col = _p1_column(ctx, n, Qmax, mode == "quadrature")
    cls_terms = cs * p1col[tab.cls_q]
    q = tab.row_q
    w0 = float(prof.omega0(math.hypot(*n) / Q ** 1.5))
    if mode == "closed_form":
        if w0 == 0.0:
            p2 = np.zeros(len(q))
        else:
            y = tab.row_k * q / Q
            z = (tab.row_r[:, 0] * n[0] + tab.row_r[:, 1] * n[1]) / Q ** 2
            p2 = prof.c / Q ** 3 * w0 * h_vec(prof, y, z) if len(q) else np.zeros(0)
    else:
        p2 = np.array([
            p2_fourier_numeric(ctx, (int(r[0]), int(r[1])), int(k), int(qq), n) if k * qq < Q else 0.0
            for r, k, qq in zip(tab.row_r, tab.row_k, q)])
    row_terms = cs[tab.row_cls] * tab.row_w * p2
    per = np.zeros(Qmax + 1)
    np.add.at(per, tab.cls_q, cls_terms)
    np.add.at(per, q, row_terms)
    per_q = [(qq, float(per[qq])) for qq in range(1, Qmax + 1)]
    value = math.fsum(v for _, v in per_q)
    scale = float(np.abs(cls_terms).sum() + np.abs(row_terms).sum())
    target = 1.0 if n == (0, 0) else 0.0
    return DeltaReport(n, Q, value, abs(value - target), per_q, scale, 0.0, {"omega0_weight": w0})


def kloosterman_average_check(ctx: PContext, n: Sequence[int]) -> Tuple[float, float]:
    """Closed-form decomposition summed over every primitive a individually.

    Returns (value over all a, value grouped by class). They agree because
    p_Lambda is constant on classes.
    """
    prof = ctx.profile
    Q = float(ctx.Q)
    n = (int(n[0]), int(n[1]))
    tab = arc_table(prof, Q)
    Qmax = int(math.floor(Q))
    w0 = float(prof.omega0(math.hypot(*n) / Q ** 1.5))
    p1col = np.array([0.0] + [p1_fourier_pair(ctx, q, n) for q in range(1, Qmax + 1)])
    # class-level kernel integral: p1 pair + sum over the lattice of omega * p2 pair
    q = tab.row_q
    if len(q) and w0:
        y = tab.row_k * q / Q
        z = (tab.row_r[:, 0] * n[0] + tab.row_r[:, 1] * n[1]) / Q ** 2
        p2 = prof.c / Q ** 3 * w0 * h_vec(prof, y, z) * tab.row_w
    else:
        p2 = np.zeros(len(q))
    kern = p1col[tab.cls_q].copy()
    np.add.at(kern, tab.row_cls, p2)
    total_each = 0.0
    for ci, (qq, a) in enumerate(zip(tab.cls_q, tab.cls_a)):
        qq = int(qq)
        for _, orbit in (x for x in residue_classes(qq) if x[0] == (int(a[0]), int(a[1]))):
            for b in orbit:
                total_each += math.cos(2 * math.pi * ((b[0] * n[0] + b[1] * n[1]) % qq) / qq) * kern[ci]
    grouped = math.fsum((_class_charsums(tab, n) * kern).tolist())
    return total_each, grouped


# ---------------------------------------------------------------- arcs

def major_threshold(Q: float, delta_param: float) -> float:
    return Q ** (0.5 - delta_param)


def arc_partition(Q: float, delta_param: float) -> List[ArcPoint]:
    """One ArcPoint per primitive a mod q, q <= Q, with its arc radii."""
    _check_Q(Q)
    if not 0 < delta_param < 0.25:
        raise ValueError("delta_param must lie in (0, 1/4)")
    thr = major_threshold(Q, delta_param)
    out = []
    for q in range(1, int(math.floor(Q)) + 1):
        major = q < thr
        r_major = Q ** (-1 - delta_param) / q
        r_minor = Q ** (-0.5 + delta_param) / q
        for _, orbit in residue_classes(q):
            for a in sorted(orbit):
                if major:
                    out.append(ArcPoint(q, a, "major", delta_param, r_major, r_major, r_minor))
                else:
                    out.append(ArcPoint(q, a, "minor", delta_param, 0.0, 0.0, r_minor))
    return out


def arc_count(Q: float) -> int:
    """sum over q <= Q of (#classes) * phi(q)."""
    return sum(len(residue_classes(q)) * euler_phi(q) for q in range(1, int(math.floor(Q)) + 1))


def heuristic_efficacy(Q: float, A: float, s: int) -> float:
    if Q < 1 or A < 1:
        raise ValueError("Q and A must be at least 1")
    return Q ** (s / 2) * A ** -0.5
