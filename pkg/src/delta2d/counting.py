"""Weighted point counts N(P), the singular series and the main-term pipeline."""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import j0, j1

from .deltasym import _class_charsums, arc_table, major_threshold
from .expsum import BudgetError, dq_fast
from .kernels import KernelProfile, default_profile
from .oscint import (WeightFunction, plateau, singular_integral,
                     singular_integral_disc)
from .pfunc import PContext, p1_radial, p2_eval_many
from .quad import gl_rule
from .quadpair import QuadraticPair

BRUTE_BUDGET = 10 ** 9
HALF_BUDGET = 10 ** 9
TWO_PI = 2.0 * math.pi


@dataclass
class CountReport:
    P: float
    Q: float
    N_exact: float
    main_term: float
    N0: float
    singular_series: float
    singular_integral: float
    runtime_ms: Dict[str, float] = field(default_factory=dict)

    @property
    def ratio_N_main(self) -> float:
        return self.N_exact / self.main_term

    @property
    def ratio_n0_main(self) -> float:
        return self.N0 / self.main_term

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ratio_N_main"] = self.ratio_N_main
        d["ratio_n0_main"] = self.ratio_n0_main
        return d


def q_of_p(P: float) -> float:
    return float(P) ** (4.0 / 3.0)


def _radius(P: float, weight: WeightFunction, box_radius: Optional[int]) -> int:
    R = math.ceil(P * max(abs(weight.box[0]), abs(weight.box[1])))
    if box_radius is not None:
        R = min(R, int(box_radius))
    return R


def _grid(R: int, m: int) -> np.ndarray:
    ax = np.arange(-R, R + 1, dtype=np.int64)
    g = np.meshgrid(*([ax] * m), indexing="ij")
    return np.stack([x.ravel() for x in g], axis=1)


def _values(H: np.ndarray, X: np.ndarray) -> np.ndarray:
    return np.einsum("ni,ij,nj->n", X, H, X) // 2


def count_points_brute(pair: QuadraticPair, weight: WeightFunction, P: float,
                       box_radius: Optional[int] = None) -> float:
    """sum of weight(x/P) over integer x with F_1(x) = F_2(x) = 0, |x_i| <= box."""
    s = pair.s
    R = _radius(P, weight, box_radius)
    total_pts = (2 * R + 1) ** s
    if total_pts > BRUTE_BUDGET:
        raise BudgetError(f"brute count needs {total_pts} points")
    H1 = np.array(pair.H1, dtype=np.int64)
    H2 = np.array(pair.H2, dtype=np.int64)
    tail = min(s, max(1, int(math.log(2e6) / math.log(2 * R + 1))))
    T = _grid(R, tail)
    acc = []
    for head in product(range(-R, R + 1), repeat=s - tail):
        X = np.concatenate([np.broadcast_to(np.array(head, dtype=np.int64), (len(T), s - tail)), T], axis=1)
        hit = (_values(H1, X) == 0) & (_values(H2, X) == 0)
        if hit.any():
            acc.extend(weight(X[hit] / P).tolist())
    return math.fsum(acc)


def split_halves(pair: QuadraticPair) -> Optional[Tuple[List[int], List[int]]]:
    """Two groups of variables with no cross terms between them, or None.

    Connected components of the coupling graph are packed greedily into two
    halves of (nearly) equal size.
    """
    s = pair.s
    adj = {i: {j for j in range(s) if j != i and (pair.H1[i][j] or pair.H2[i][j])} for i in range(s)}
    seen, comps = set(), []
    for i in range(s):
        if i in seen:
            continue
        stack, comp = [i], []
        seen.add(i)
        while stack:
            v = stack.pop()
            comp.append(v)
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        comps.append(sorted(comp))
    if len(comps) < 2:
        return None
    comps.sort(key=len, reverse=True)
    a, b = [], []
    for c in comps:
        (a if len(a) <= len(b) else b).extend(c)
    return sorted(a), sorted(b)


def _half_table(pair: QuadraticPair, idx: List[int], P: float, R: int,
                base: int, sign: int) -> Tuple[np.ndarray, np.ndarray]:
    """Distinct encoded values sign*(G1, G2) over the half box, with accumulated weights."""
    H1 = np.array(pair.H1, dtype=np.int64)[np.ix_(idx, idx)]
    H2 = np.array(pair.H2, dtype=np.int64)[np.ix_(idx, idx)]
    m = len(idx)
    diagonal = not (np.any(H1 - np.diag(np.diag(H1))) or np.any(H2 - np.diag(np.diag(H2))))
    if diagonal:
        # values depend on x_i^2 and the weight is even: fold x_i -> |x_i|
        ax = np.arange(0, R + 1, dtype=np.int64)
        mult = np.where(ax > 0, 2.0, 1.0)
        g = np.meshgrid(*([ax] * m), indexing="ij")
        X = np.stack([x.ravel() for x in g], axis=1)
        wts = np.prod(mult[X], axis=1)
    else:
        X = _grid(R, m)
        wts = np.ones(len(X))
    if len(X) > HALF_BUDGET:
        raise BudgetError(f"half enumeration needs {len(X)} keys")
    wts = wts * np.prod(plateau(X / P), axis=1)
    keep = wts != 0
    X, wts = X[keep], wts[keep]
    code = sign * _values(H1, X) * (2 * base + 1) + (sign * _values(H2, X) + base)
    keys, inv = np.unique(code, return_inverse=True)
    acc = np.bincount(inv.ravel(), weights=wts, minlength=len(keys))
    return keys, acc


def count_points_split(pair: QuadraticPair, weight: WeightFunction, P: float,
                       box_radius: Optional[int] = None) -> float:
    """Meet in the middle: match (G1, G2)(x) against (-H1, -H2)(y)."""
    if not weight.is_product:
        raise ValueError("split counting needs the product weight")
    halves = split_halves(pair)
    if halves is None:
        raise ValueError("pair does not split into two uncoupled halves")
    R = _radius(P, weight, box_radius)
    # |G2| is at most sum |H2| R^2 / 2, so this base encodes (G1, G2) injectively
    base = (sum(abs(x) for r in pair.H2 for x in r) * R * R) // 2 + 1
    ka, aw = _half_table(pair, halves[0], P, R, base, 1)
    kb, bw = _half_table(pair, halves[1], P, R, base, -1)
    _, ia, ib = np.intersect1d(ka, kb, assume_unique=True, return_indices=True)
    return math.fsum((aw[ia] * bw[ib]).tolist())


# ---------------------------------------------------------------- main term

@dataclass
class SeriesReport:
    value: float
    partial_sums: List[Tuple[int, float]]
    tail_bound: float
    C: float
    eps: float
    imag_max: float


def singular_series(pair: QuadraticPair, Q_max: int, eps: float = 0.1,
                    C: Optional[float] = None) -> SeriesReport:
    """sum_{q <= Q_max} q^-s D_q(0), with the tail bounded through |D_q(0)| <= C q^(s/2+2+eps).

    Without an explicit C the largest observed ratio over the computed q is used.
    """
    s = pair.s
    if s < 7:
        raise ValueError("singular series needs s >= 7")
    zero = (0,) * s
    terms, partial, ratios, imag = [], [], [], 0.0
    for q in range(1, int(Q_max) + 1):
        v = dq_fast(pair, q, zero)
        imag = max(imag, v.imag_residual / q ** s)
        terms.append(v.value.real / q ** s)
        ratios.append(abs(v.value) / q ** (s / 2 + 2 + eps))
        partial.append((q, math.fsum(terms)))
    if C is None:
        C = max(ratios)
    expo = s / 2 - 3 - eps
    tail = C * Q_max ** (-expo) / expo
    return SeriesReport(partial[-1][1], partial, tail, C, eps, imag)


def n0_term(pair: QuadraticPair, weight: WeightFunction, P: float, delta_param: float = 0.05,
            details: bool = False):
    """Major-arc term: sum_{q < Q^(1/2-delta)} q^-s D_q(0) P^(s-4) int_{|w| < W_q} J(w) dw
    with W_q = Q^(1/2-delta)/q.
    """
    s = pair.s
    if s < 7:
        raise ValueError("n0_term needs s >= 7")
    Q = q_of_p(P)
    thr = major_threshold(Q, delta_param)
    qs = [q for q in range(1, math.ceil(thr) + 1) if q < thr]
    discs = singular_integral_disc(pair, [thr / q for q in qs])
    zero = (0,) * s
    parts = []
    for q, J in zip(qs, discs):
        parts.append(dq_fast(pair, q, zero).value.real / q ** s * P ** (s - 4) * float(J))
    val = math.fsum(parts)
    if details:
        return val, list(zip(qs, parts))
    return val


def main_term(pair: QuadraticPair, P: float, Q_max: int = 100, tol: float = 1e-3) -> Tuple[float, float, float]:
    S = singular_series(pair, Q_max).value
    J = singular_integral(pair, None, tol).value
    return S * J * P ** (pair.s - 4), S, J


def end_to_end_report(pair: QuadraticPair, weight: WeightFunction, P_list: Sequence[float],
                      delta_param: float = 0.05, Q_max: int = 100) -> List[CountReport]:
    if pair.s < 7:
        raise ValueError("end-to-end main term needs s >= 7 (singular series diverges below)")
    t0 = time.perf_counter()
    S = singular_series(pair, Q_max).value
    t1 = time.perf_counter()
    J = singular_integral(pair, weight).value
    t2 = time.perf_counter()
    out = []
    for P in P_list:
        a = time.perf_counter()
        N = count_points_split(pair, weight, P)
        b = time.perf_counter()
        n0 = n0_term(pair, weight, P, delta_param)
        c = time.perf_counter()
        rt = {"series": (t1 - t0) * 1e3, "integral": (t2 - t1) * 1e3,
              "count": (b - a) * 1e3, "n0": (c - b) * 1e3}
        out.append(CountReport(float(P), q_of_p(P), N, S * J * P ** (pair.s - 4), n0, S, J, rt))
    return out


def regression_slope(reports: Sequence[CountReport]) -> float:
    x = np.log([r.P for r in reports])
    y = np.log([r.N_exact for r in reports])
    return float(np.polyfit(x, y, 1)[0])


# ---------------------------------------------------------------- decomposition

def _value_counts(pair: QuadraticPair, weight: WeightFunction, P: float) -> Tuple[np.ndarray, np.ndarray]:
    R = _radius(P, weight, None)
    X = _grid(R, pair.s)
    if len(X) > BRUTE_BUDGET:
        raise BudgetError("value enumeration over budget")
    wt = weight(X / P)
    keep = wt != 0
    X, wt = X[keep], wt[keep]
    n = np.stack([_values(np.array(pair.H1, dtype=np.int64), X),
                  _values(np.array(pair.H2, dtype=np.int64), X)], axis=1)
    keys, inv = np.unique(n, axis=0, return_inverse=True)
    return keys, np.bincount(inv.ravel(), weights=wt, minlength=len(keys))


def _annulus_rule(r_in: float, r_out: float, nr: int = 48, nt: int = 96):
    r, wr = gl_rule(r_in, r_out, nr)
    t = TWO_PI * (np.arange(nt) + 0.5) / nt
    R, T = np.meshgrid(r, t, indexing="ij")
    W = np.stack([R * np.cos(T), R * np.sin(T)], axis=-1).reshape(-1, 2)
    wts = (wr[:, None] * r[:, None] * np.full((1, nt), TWO_PI / nt)).ravel()
    return W, wts


def decomposition_check(pair: QuadraticPair, weight: WeightFunction, P: float,
                        delta_param: float = 0.05, profile: Optional[KernelProfile] = None) -> dict:
    """N(P) against N_0 + N_1 + N_2 assembled per distinct value n = F(x).

    N_0: kernel 1 on the major arcs |w| < Q^(-1-delta)/q, q < Q^(1/2-delta).
    N_1, N_2: p_1 and the lattice sum of p_2 on the minor arcs.
    """
    if pair.s != 3 or P > 6:
        raise BudgetError("decomposition check is limited to s = 3 and P <= 6")
    prof = profile or default_profile()
    Q = q_of_p(P)
    ctx = PContext(prof, Q)
    keys, cnt = _value_counts(pair, weight, P)
    N = float(cnt[(keys[:, 0] == 0) & (keys[:, 1] == 0)].sum())
    if len(keys) == 0:
        return {"P": P, "Q": Q, "N": 0.0, "N0": 0.0, "N1": 0.0, "N2": 0.0, "residual": 0.0}
    tab = arc_table(prof, Q)
    thr = major_threshold(Q, delta_param)
    nrm = np.hypot(keys[:, 0], keys[:, 1]).astype(float)
    cs = np.stack([_class_charsums(tab, (int(a), int(b))) for a, b in keys])  # (n, classes)
    N0 = N1 = N2 = 0.0
    for ci, q in enumerate(tab.cls_q):
        q = int(q)
        weight_n = cnt * cs[:, ci]
        r_maj = Q ** (-1 - delta_param) / q
        r_out = Q ** (-0.5 + delta_param) / q
        if q < thr:
            disk = np.where(nrm > 0, r_maj * j1(TWO_PI * r_maj * nrm) / np.where(nrm > 0, nrm, 1.0),
                            math.pi * r_maj ** 2)
            N0 += float(weight_n @ disk)
            r_in = r_maj
        else:
            r_in = 0.0
        if r_out <= r_in:
            continue
        rr, wr = gl_rule(r_in, r_out, 64)
        rad = p1_radial(ctx, q, rr) * wr * rr * TWO_PI
        N1 += float(weight_n @ (j0(TWO_PI * np.outer(nrm, rr)) @ rad))
        rows = np.nonzero(tab.row_cls == ci)[0]
        if len(rows) == 0:
            continue
        W, wts = _annulus_rule(r_in, r_out)
        phase = np.cos(TWO_PI * (keys @ W.T))
        for ri in rows:
            r = (int(tab.row_r[ri, 0]), int(tab.row_r[ri, 1]))
            k = int(tab.row_k[ri])
            vals = p2_eval_many(ctx, r, k, q, W) * wts * float(tab.row_w[ri])
            N2 += float(weight_n @ (phase @ vals))
    total = N0 + N1 + N2
    return {"P": P, "Q": Q, "N": N, "N0": N0, "N1": N1, "N2": N2, "residual": abs(N - total)}
