"""Complete exponential sums attached to a pair of quadratic forms.

D_q(u)      = sum*_{a mod q} sum_{b mod q} e_q(a.F(b) + b.u)
S_{q,dc}(u) = the same with a restricted to q | d (c . a^perp)

Here "a mod q" runs over pairs with gcd(a1, a2, q) = 1 and b over (Z/q)^s.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from math import gcd
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .arith import (divisors, factorize, is_prime, legendre_symbol,
                    mobius, quad_value, valuation)
from .quadpair import QuadraticPair


class BudgetError(RuntimeError):
    """Raised instead of silently truncating an expensive sum."""


BRUTE_TERM_BUDGET = 2 * 10 ** 8
TWO_ADIC_BUDGET = 1 << 22


@dataclass(frozen=True)
class ExpSumValue:
    value: complex
    provenance: str
    modulus: int
    imag_residual: float

    @property
    def real(self) -> float:
        return self.value.real

    def to_dict(self) -> dict:
        return {"re": self.value.real, "im": self.value.imag, "provenance": self.provenance,
                "modulus": self.modulus, "imag_residual": self.imag_residual}


def _wrap(v: complex, provenance: str, q: int) -> ExpSumValue:
    v = complex(v)
    return ExpSumValue(v, provenance, q, abs(v.imag))


# ---------------------------------------------------------------- tables

@lru_cache(maxsize=256)
def roots_of_unity(q: int) -> np.ndarray:
    """e_q(k) for k = 0..q-1."""
    t = np.exp(2j * np.pi * np.arange(q) / q)
    t.setflags(write=False)
    return t


def e_q(m: int, q: int) -> complex:
    return complex(roots_of_unity(q)[m % q])


def ramanujan_sum(q: int, a: int) -> int:
    """c_q(a) = sum over x mod q, gcd(x, q) = 1, of e_q(a x)."""
    if q < 1:
        raise ValueError("q must be positive")
    g = gcd(q, a)
    return sum(mobius(q // d) * d for d in divisors(g))


@lru_cache(maxsize=1024)
def ramanujan_table(q: int) -> np.ndarray:
    """c_q(m) for m = 0..q-1 as a float array."""
    t = np.array([ramanujan_sum(q, m) for m in range(q)], dtype=float)
    t.setflags(write=False)
    return t


def eps_p(p: int) -> complex:
    return 1.0 if p % 4 == 1 else 1j


def gauss_char_sum(p: int, k: int, a: int) -> complex:
    """g_{p^k}(a) = sum_{x mod p^k} chi_p(x) e_{p^k}(a x), chi_p the Legendre symbol."""
    if p == 2 or not is_prime(p):
        raise ValueError("gauss_char_sum needs an odd prime")
    pk = p ** k
    a %= pk
    if a == 0:
        return 0j
    # chi_p only sees x mod p, so the sum dies unless p^(k-1) | a
    if a % p ** (k - 1):
        return 0j
    a1 = a // p ** (k - 1)
    if a1 % p == 0:
        return 0j
    return p ** (k - 1) * legendre_symbol(a1, p) * eps_p(p) * math.sqrt(p)


def gauss_char_sum_brute(p: int, k: int, a: int) -> complex:
    pk = p ** k
    r = roots_of_unity(pk)
    return complex(sum(legendre_symbol(x, p) * r[(a * x) % pk] for x in range(pk)))


def _gauss_1d_odd(p: int, k: int, m: int, v: int) -> complex:
    """sum_{x mod p^k} e_{p^k}(m x^2 + v x) for odd p, in closed form."""
    pk = p ** k
    m %= pk
    v %= pk
    j = valuation(m, p) if m else k
    if j >= k:
        return complex(pk) if v == 0 else 0j
    pj = p ** j
    if v % pj:
        return 0j
    e = k - j
    P = p ** e
    mm = (m // pj) % P
    vv = (v // pj) % P
    shift = (-vv * vv * pow(4 * mm, -1, P)) % P
    if e % 2 == 0:
        g = complex(p ** (e // 2))
    else:
        g = p ** ((e - 1) // 2) * legendre_symbol(mm, p) * eps_p(p) * math.sqrt(p)
    return pj * e_q(shift, P) * g


def _sum_1d_direct(pk: int, m: int, v: int) -> complex:
    """sum_{x mod pk} e_pk(m x^2 + v x) by direct summation."""
    x = np.arange(pk, dtype=np.int64)
    return complex(roots_of_unity(pk)[(m * x * x + v * x) % pk].sum())


def _diagonalize_odd(M: List[List[int]], v: List[int], p: int, pk: int) -> Tuple[List[int], List[int]]:
    """Congruence-diagonalise b^T M b + v.b over Z/p^k (p odd).

    Unimodular substitutions only; returns the diagonal and the transformed
    linear term.
    """
    s = len(M)
    M = [[x % pk for x in r] for r in M]
    v = [x % pk for x in v]

    def val(x):
        return valuation(x, p) if x % pk else 10 ** 9

    def swap(i, j):
        M[i], M[j] = M[j], M[i]
        for r in M:
            r[i], r[j] = r[j], r[i]
        v[i], v[j] = v[j], v[i]

    def add_col(dst, src, f):
        # substitution e_dst -> e_dst + f e_src
        for r in M:
            r[dst] = (r[dst] + f * r[src]) % pk
        M[dst] = [(a + f * b) % pk for a, b in zip(M[dst], M[src])]
        v[dst] = (v[dst] + f * v[src]) % pk

    for t in range(s):
        dv, di = min((val(M[i][i]), i) for i in range(t, s))
        off = [(val(M[i][j]), i, j) for i in range(t, s) for j in range(i + 1, s)]
        ov, oi, oj = min(off) if off else (10 ** 9, -1, -1)
        if min(dv, ov) >= 10 ** 9:
            break
        if dv <= ov:
            bi = di
        else:
            # both diagonal entries have larger valuation, so this one drops to ov
            add_col(oi, oj, 1)
            bi = oi
        swap(t, bi)
        piv = M[t][t]
        e = val(piv)
        w_inv = pow(piv // p ** e, -1, pk)
        for j in range(t + 1, s):
            if M[t][j] % pk:
                f = (M[t][j] // p ** e) * w_inv % pk
                add_col(j, t, -f)
    return [M[i][i] for i in range(s)], v


def _local_sum(pk: int, p: int, H: Sequence[Sequence[int]], v: Sequence[int]) -> complex:
    """sum_{b mod p^k} e_{p^k}(b^T H b / 2 + v.b)."""
    s = len(H)
    k = round(math.log(pk, p))
    diagonal = all(H[i][j] % pk == 0 for i in range(s) for j in range(s) if i != j)
    if p != 2:
        inv2 = pow(2, -1, pk)
        if diagonal:
            d = [H[i][i] * inv2 for i in range(s)]
            vv = list(v)
        else:
            M = [[x * inv2 for x in r] for r in H]
            d, vv = _diagonalize_odd(M, list(v), p, pk)
        out = 1 + 0j
        for m, w in zip(d, vv):
            out *= _gauss_1d_odd(p, k, m, w)
            if out == 0:
                break
        return out
    if diagonal:
        out = 1 + 0j
        for i in range(s):
            out *= _sum_1d_direct(pk, H[i][i] // 2, v[i])
        return out
    if pk ** s > TWO_ADIC_BUDGET:
        raise BudgetError(f"2-adic block of size {pk}^{s} exceeds budget")
    return _direct_sum(pk, H, v)


def _all_vectors(q: int, s: int) -> np.ndarray:
    grids = np.meshgrid(*([np.arange(q, dtype=np.int64)] * s), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _direct_sum(q: int, H: Sequence[Sequence[int]], v: Sequence[int]) -> complex:
    B = _all_vectors(q, len(H))
    Hm = np.array(H, dtype=np.int64) % (2 * q)
    f = (np.einsum("ni,ij,nj->n", B, Hm, B) // 2 + B @ (np.array(v, dtype=np.int64) % q)) % q
    return complex(roots_of_unity(q)[f].sum())


def quad_complete_sum(q: int, H: Sequence[Sequence[int]], v: Sequence[int]) -> complex:
    """sum_{b mod q} e_q(b^T H b / 2 + v.b) for a symmetric H with even diagonal.

    CRT over prime powers, completion of squares at odd primes, direct
    summation at 2.
    """
    if q < 1:
        raise ValueError("q must be positive")
    H = [[int(x) for x in r] for r in H]
    if any(H[i][i] % 2 for i in range(len(H))):
        raise ValueError("H needs an even diagonal (F = b^T H b / 2 integral)")
    v = [int(x) for x in v]
    out = 1 + 0j
    for p, k in factorize(q):
        pk = p ** k
        w = pow(q // pk, -1, pk)
        Hl = [[x * w % (2 * pk) for x in r] for r in H]
        vl = [x * w % pk for x in v]
        out *= _local_sum(pk, p, Hl, vl)
    return out


# ---------------------------------------------------------------- brute force

def _primitive_pairs(q: int) -> np.ndarray:
    a = np.array([(a1, a2) for a1 in range(q) for a2 in range(q) if gcd(gcd(a1, a2), q) == 1],
                 dtype=np.int64)
    return a.reshape(-1, 2)


def _s_pairs(q: int, d: int, c: Sequence[int]) -> np.ndarray:
    a = _primitive_pairs(q)
    if len(a) == 0:
        return a
    cond = (d * (c[0] * a[:, 1] - c[1] * a[:, 0])) % q == 0
    return a[cond]


def _is_diagonal(pair: QuadraticPair) -> bool:
    s = pair.s
    return all(pair.H1[i][j] == 0 and pair.H2[i][j] == 0 for i in range(s) for j in range(s) if i != j)


def _brute_over(pair: QuadraticPair, q: int, A: np.ndarray, u: Sequence[int]) -> complex:
    """sum over the given a-pairs and all b mod q, literally.

    For diagonal pairs the b-sum is a product of one-variable sums, which is
    the same finite sum regrouped; otherwise every b is enumerated.
    """
    if q == 1:
        return complex(len(A))
    s = pair.s
    r = roots_of_unity(q)
    u = np.array(u, dtype=np.int64) % q
    if len(A) == 0:
        return 0j
    if _is_diagonal(pair):
        x = np.arange(q, dtype=np.int64)
        h1 = np.array([pair.H1[i][i] // 2 for i in range(s)], dtype=np.int64)
        h2 = np.array([pair.H2[i][i] // 2 for i in range(s)], dtype=np.int64)
        total = 0j
        for a1, a2 in A:
            m = (a1 * h1 + a2 * h2) % q
            idx = (m[:, None] * (x * x)[None, :] + u[:, None] * x[None, :]) % q
            total += np.prod(r[idx].sum(axis=1))
        return complex(total)
    if len(A) * q ** s > BRUTE_TERM_BUDGET:
        raise BudgetError(f"brute sum needs {len(A) * q ** s} terms")
    B = _all_vectors(q, s)
    H1 = np.array(pair.H1, dtype=np.int64)
    H2 = np.array(pair.H2, dtype=np.int64)
    f1 = (np.einsum("ni,ij,nj->n", B, H1, B) // 2) % q
    f2 = (np.einsum("ni,ij,nj->n", B, H2, B) // 2) % q
    bu = (B @ u) % q
    total = 0j
    chunk = max(1, 4_000_000 // len(B))
    for i in range(0, len(A), chunk):
        a = A[i:i + chunk]
        idx = (a[:, 0:1] * f1[None, :] + a[:, 1:2] * f2[None, :] + bu[None, :]) % q
        total += r[idx].sum()
    return complex(total)


def dq_brute(pair: QuadraticPair, q: int, u: Sequence[int]) -> ExpSumValue:
    if q < 1:
        raise ValueError("q must be positive")
    return _wrap(_brute_over(pair, q, _primitive_pairs(q), u), "brute", q)


def s_qdc_brute(pair: QuadraticPair, q: int, d: int, c: Sequence[int], u: Sequence[int]) -> ExpSumValue:
    if q < 1 or d < 1 or q % d:
        raise ValueError("need d | q")
    return _wrap(_brute_over(pair, q, _s_pairs(q, d, c), u), "brute", q)


# ---------------------------------------------------------------- fast paths

def _local_over(pair: QuadraticPair, pk: int, p: int, A: np.ndarray, u: Tuple[int, ...]) -> complex:
    s = pair.s
    if len(A) == 0:
        return 0j
    if _is_diagonal(pair):
        # tables T_i[m] = sum_x e_pk(m x^2 + u_i x), then a product per a
        x = np.arange(pk, dtype=np.int64)
        r = roots_of_unity(pk)
        m = np.arange(pk, dtype=np.int64)
        h1 = [pair.H1[i][i] // 2 for i in range(s)]
        h2 = [pair.H2[i][i] // 2 for i in range(s)]
        tabs: Dict[int, np.ndarray] = {}
        prod_ = np.ones(len(A), dtype=complex)
        for i in range(s):
            ui = u[i] % pk
            if ui not in tabs:
                tabs[ui] = r[(m[:, None] * (x * x)[None, :] + ui * x[None, :]) % pk].sum(axis=1)
            prod_ *= tabs[ui][(A[:, 0] * h1[i] + A[:, 1] * h2[i]) % pk]
        return complex(prod_.sum())
    total = 0j
    for a1, a2 in A:
        H = [[int(a1) * x + int(a2) * y for x, y in zip(r1, r2)] for r1, r2 in zip(pair.H1, pair.H2)]
        total += _local_sum(pk, p, H, u)
    return total


@lru_cache(maxsize=4096)
def _dq_local(pair_key, pk: int, p: int, u: Tuple[int, ...]) -> complex:
    pair = _PAIRS[pair_key]
    return _local_over(pair, pk, p, _primitive_pairs(pk), u)


_PAIRS: Dict = {}


def _key(pair: QuadraticPair):
    k = (pair.H1, pair.H2)
    _PAIRS.setdefault(k, pair)
    return k


def dq_fast(pair: QuadraticPair, q: int, u: Sequence[int]) -> ExpSumValue:
    """D_q(u) as a product of prime-power pieces."""
    if q < 1:
        raise ValueError("q must be positive")
    key = _key(pair)
    out = 1 + 0j
    for p, k in factorize(q):
        pk = p ** k
        out *= _dq_local(key, pk, p, tuple(int(x) % pk for x in u))
    return _wrap(out, "multiplicative", q)


def type_one(pair: QuadraticPair, c: Sequence[int], p: int) -> bool:
    """p odd and p does not divide 2 det M_c (c good)."""
    if p == 2:
        return False
    dd = pair.direction(c)
    return dd.good and dd.det_Mc.numerator % p != 0


def type_one_closed_form(pair: QuadraticPair, p: int, k: int, c: Sequence[int], u: Sequence[int]) -> complex:
    """S_{p^k, c}(u) for p not dividing 2 det M_c, in closed form."""
    if not type_one(pair, c, p):
        raise ValueError("closed form needs p odd with p not dividing det M_c")
    s = pair.s
    pk = p ** k
    dd = pair.direction(c)
    det = dd.det_Mc
    adjH, e = pair.dual_form(c)
    # F*_c(u) = u^T adj(H_c) u / 2^(s-1), reduced mod p^k
    fstar = quad_value(adjH, u) * pow(2 ** e, -1, pk) % pk
    chi_det = legendre_symbol(det.numerator, p) * legendre_symbol(det.denominator, p)
    scale = p ** (s * k / 2)
    if s % 2 == 0:
        return scale * eps_p(p) ** (s * k) * chi_det ** k * ramanujan_sum(pk, fstar)
    if k % 2 == 0:
        return scale * ramanujan_sum(pk, fstar)
    return scale * eps_p(p) ** s * legendre_symbol(-1, p) * gauss_char_sum(p, k, fstar)


def s_qdc_fast(pair: QuadraticPair, q: int, d: int, c: Sequence[int], u: Sequence[int]) -> ExpSumValue:
    if q < 1 or d < 1 or q % d:
        raise ValueError("need d | q")
    out = 1 + 0j
    closed = True
    for p, k in factorize(q):
        pk = p ** k
        dp = gcd(d, pk)
        if dp == 1 and gcd(c[0], c[1]) == 1 and type_one(pair, c, p):
            out *= type_one_closed_form(pair, p, k, c, u)
        else:
            closed = False
            out *= _local_over(pair, pk, p, _s_pairs(pk, dp, c), tuple(int(x) % pk for x in u))
        if out == 0:
            break
    prov = "closed_form" if closed and q > 1 else "multiplicative"
    return _wrap(out, prov, q)


def partial_sum_S(pair: QuadraticPair, c: Sequence[int], u: Sequence[int], x: int, B: int) -> Tuple[complex, float]:
    """sum_{q <= x, (q, B) = 1} S_{q,c}(u) and its ratio to x^(s/2+1).

    Diagnostic only; no cancellation claim is made.
    """
    dd = pair.direction(c)
    if not dd.good:
        raise ValueError("c must be good")
    two_det = 2 * dd.det_Mc
    if two_det.denominator != 1 or B % two_det.numerator:
        raise ValueError("B must be a multiple of 2 det M_c")
    tot = 0j
    for q in range(1, int(x) + 1):
        if gcd(q, B) == 1:
            tot += s_qdc_fast(pair, q, 1, c, u).value
    return tot, abs(tot) / x ** (pair.s / 2 + 1)


# ---------------------------------------------------------------- bound ratios

def dq_prime_ratio(pair, p, u) -> float:
    return abs(dq_fast(pair, p, u).value) / p ** ((pair.s + 2) / 2)


def dq_general_ratio(pair, q, u, eps=0.1) -> float:
    return abs(dq_fast(pair, q, u).value) / q ** (pair.s / 2 + 2 + eps)


def sqdc_good_ratio(pair, q, d, c, u) -> float:
    rf = pair.restricted_form_and_dual(c) if pair.direction(c).rank >= pair.s - 1 else None
    last = rf.last_coordinate(u) if rf is not None else 0
    det = pair.direction(c).det_Mc
    g = gcd(gcd(q // d, last), det.numerator)
    return abs(s_qdc_fast(pair, q, d, c, u).value) / (d * q ** (pair.s / 2 + 1) * math.sqrt(g))


def sqdc_bad_ratio(pair, p, c, u) -> float:
    g1 = gcd(p, *[int(x) for x in u])
    fs = pair.dual_variety_value(u)
    g2 = gcd(p, fs)
    return abs(s_qdc_fast(pair, p, p, c, u).value) / (p ** (pair.s / 2 + 1) * math.sqrt(g1 * g2))


def spkpm_ratio(pair, p, m, k, c, u) -> float:
    """|S_{p^k, p^m c}(u)| against p^{m + k(s/2+1)} gcd(p^(k-m), det M_c)^(1/2)."""
    det = pair.direction(c).det_Mc
    g = gcd(p ** (k - m), det.numerator)
    return abs(s_qdc_fast(pair, p ** k, p ** m, c, u).value) / (p ** (m + k * (pair.s / 2 + 1)) * math.sqrt(g))
