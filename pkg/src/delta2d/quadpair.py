"""Geometry of a pair of integral quadratic forms.

Forms are stored by their Hessians: F_i(x) = x^T H_i x / 2 with H_i symmetric
and of even diagonal. The "defining matrices" M_i are H_i / 2. Everything that
is naturally a statement about M_c is computed on the integer matrix
H_c = c1 H1 + c2 H2 = 2 M_c and rescaled by an explicit power of two.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import product
from math import gcd
from typing import Dict, List, Sequence, Tuple

import numpy as np
import sympy

from .arith import (IntMatrix, adjugate, as_matrix, content, determinant,
                    inverse_unimodular, is_prime, matmul, matvec, primes_up_to,
                    quad_value, smith_normal_form, transpose)


class PairValidationError(ValueError):
    pass


def _binary_coeffs(values: Sequence[int], degree: int) -> List[Fraction]:
    """Coefficients a_0..a_d of f(x, y) = sum a_i x^(d-i) y^i from f(1, t), t = 0..d."""
    t = sympy.Symbol("t")
    pts = list(range(degree + 1))
    poly = sympy.Poly(sympy.interpolate(list(zip(pts, values)), t), t) if degree else None
    if poly is None:
        return [Fraction(values[0])]
    low = [Fraction(int(c.p), int(c.q)) for c in reversed(poly.all_coeffs())]
    low += [Fraction(0)] * (degree + 1 - len(low))
    return low  # a_i is the coefficient of t^i


def binary_form_eval(coeffs: Sequence[Fraction], x, y):
    d = len(coeffs) - 1
    return sum(a * x ** (d - i) * y ** i for i, a in enumerate(coeffs))


def binary_discriminant(coeffs: Sequence[Fraction]) -> Fraction:
    """Discriminant of a binary form given by a_0..a_d (a_i on x^(d-i) y^i).

    A unimodular shear (x, y) -> (x, y + t x) makes the x^d coefficient
    nonzero without changing the discriminant; then we take the usual
    discriminant of the dehomogenised polynomial in x.
    """
    d = len(coeffs) - 1
    if all(a == 0 for a in coeffs):
        return Fraction(0)
    if d == 1:
        return Fraction(1)
    x = sympy.Symbol("x")
    for t in range(0, d + 2):
        lead = binary_form_eval(coeffs, 1, t)
        if lead != 0:
            break
    g = sum(sympy.Rational(a.numerator, a.denominator) * x ** (d - i) * (1 + t * x) ** i
            for i, a in enumerate(coeffs))
    disc = sympy.discriminant(sympy.Poly(sympy.expand(g), x))
    disc = sympy.Rational(disc)
    return Fraction(int(disc.p), int(disc.q))


@dataclass(frozen=True)
class DirectionData:
    c: Tuple[int, int]
    H_c: IntMatrix
    M_c: Tuple[Tuple[Fraction, ...], ...]
    det_Mc: Fraction
    good: bool
    smith: Tuple[IntMatrix, IntMatrix, IntMatrix]
    y_basis: Tuple[Tuple[int, ...], ...]  # columns of S^-1
    rho: Tuple[int, ...]

    @property
    def rank(self) -> int:
        return sum(1 for r in self.rho if r != 0)


@dataclass(frozen=True)
class RestrictedForm:
    gram: IntMatrix         # Hessian of Q_c in the y_1..y_{s-1} coordinates
    dual_gram: IntMatrix    # adjugate of gram
    y_basis: Tuple[Tuple[int, ...], ...]
    S: IntMatrix

    def project(self, u: Sequence[int]) -> Tuple[int, ...]:
        """u' = sum_{j<s} (S u)_j y_j."""
        Su = matvec(self.S, u)
        s = len(u)
        return tuple(sum(Su[j] * self.y_basis[j][i] for j in range(s - 1)) for i in range(s))

    def coordinates(self, u: Sequence[int]) -> Tuple[int, ...]:
        return tuple(matvec(self.S, u)[:-1])

    def last_coordinate(self, u: Sequence[int]) -> int:
        # ((S^-1)^T u)_s = y_s . u
        return sum(a * b for a, b in zip(self.y_basis[-1], u))

    def value(self, z: Sequence[int]) -> Fraction:
        return Fraction(quad_value(self.gram, z), 2)

    @property
    def discriminant(self) -> Fraction:
        # determinant of the half-Hessian, the usual Delta(Q_c)
        n = len(self.gram)
        return Fraction(determinant(self.gram), 2 ** n)


@dataclass
class QuadraticPair:
    H1: IntMatrix
    H2: IntMatrix
    name: str = ""
    _cache: Dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.H1 = as_matrix(self.H1)
        self.H2 = as_matrix(self.H2)
        s = len(self.H1)
        if s < 3:
            raise PairValidationError("need s >= 3 variables")
        for H in (self.H1, self.H2):
            if len(H) != s or any(len(r) != s for r in H):
                raise PairValidationError("Hessians must be s x s")
            for i in range(s):
                if H[i][i] % 2:
                    raise PairValidationError("Hessian diagonal must be even")
                for j in range(s):
                    if H[i][j] != H[j][i]:
                        raise PairValidationError("Hessians must be symmetric")

    @property
    def s(self) -> int:
        return len(self.H1)

    @classmethod
    def diagonal(cls, eps: Sequence[int], alpha: Sequence[int], name: str = "") -> "QuadraticPair":
        """F1 = sum eps_i x_i^2, F2 = sum alpha_i x_i^2."""
        s = len(eps)
        H1 = [[2 * eps[i] if i == j else 0 for j in range(s)] for i in range(s)]
        H2 = [[2 * alpha[i] if i == j else 0 for j in range(s)] for i in range(s)]
        return cls(H1, H2, name)

    @classmethod
    def from_dict(cls, d: dict) -> "QuadraticPair":
        try:
            s = int(d["s"])
            H1, H2 = d["H1"], d["H2"]
        except (KeyError, TypeError, ValueError) as e:
            raise PairValidationError(f"bad pair document: {e}") from None
        for H in (H1, H2):
            if not isinstance(H, list) or any(not isinstance(r, list) for r in H):
                raise PairValidationError("H1/H2 must be lists of lists")
            if any(not isinstance(x, int) or isinstance(x, bool) for r in H for x in r):
                raise PairValidationError("Hessian entries must be integers")
        pair = cls(H1, H2, d.get("name", ""))
        if pair.s != s:
            raise PairValidationError("s does not match the matrix size")
        return pair

    @classmethod
    def load(cls, path: str) -> "QuadraticPair":
        with open(path) as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as e:
                raise PairValidationError(f"invalid JSON: {e}") from None
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        return {"s": self.s, "H1": [list(r) for r in self.H1], "H2": [list(r) for r in self.H2]}

    # values
    def F(self, x: Sequence[int]) -> Tuple[int, int]:
        return quad_value(self.H1, x) // 2, quad_value(self.H2, x) // 2

    def H_c(self, c: Sequence[int]) -> IntMatrix:
        return tuple(tuple(c[0] * a + c[1] * b for a, b in zip(r1, r2)) for r1, r2 in zip(self.H1, self.H2))

    def F_c(self, c: Sequence[int], x: Sequence[int]) -> int:
        return quad_value(self.H_c(c), x) // 2

    @cached_property
    def H_array(self) -> np.ndarray:
        return np.array([self.H1, self.H2], dtype=np.int64)

    # pencil
    @cached_property
    def pencil_coeffs_H(self) -> List[Fraction]:
        """Coefficients of det(x H1 + y H2) (a_i on x^(s-i) y^i)."""
        s = self.s
        vals = [determinant(self.H_c((1, t))) for t in range(s + 1)]
        return _binary_coeffs(vals, s)

    @cached_property
    def pencil_coeffs(self) -> List[Fraction]:
        """Coefficients of det(x M1 + y M2) = det(x H1 + y H2) / 2^s."""
        return [a / 2 ** self.s for a in self.pencil_coeffs_H]

    @cached_property
    def D_F(self) -> Fraction:
        return 2 * binary_discriminant(self.pencil_coeffs)

    @cached_property
    def D_F_int(self) -> int:
        """Integer whose odd prime divisors are those of D_F; the product of
        numerator and denominator of D_F (denominator is a power of two)."""
        d = self.D_F
        return d.numerator * d.denominator

    @property
    def nonsingular(self) -> bool:
        return self.D_F != 0

    @cached_property
    def pencil_roots(self) -> Tuple[Tuple[complex, complex], ...]:
        """Unit-normalised (lambda_j, mu_j) with det(xM1+yM2) ∝ prod(lambda_j x + mu_j y)."""
        a = [float(v) for v in self.pencil_coeffs]
        s = self.s
        if all(v == 0 for v in a):
            raise ValueError("degenerate pencil: det(x M1 + y M2) vanishes identically")
        # factors of y correspond to roots at infinity of f(x, 1)
        lead = next(i for i, v in enumerate(a) if v != 0)
        roots = np.roots(a[lead:]) if lead < s else np.array([])
        out = [(complex(0.0), complex(1.0))] * lead
        for r in roots:
            v = np.array([1.0, -r], dtype=complex)
            v /= np.linalg.norm(v)
            out.append((complex(v[0]), complex(v[1])))
        return tuple(out)

    def pencil_product(self, x: float, y: float) -> complex:
        p = 1.0 + 0j
        for lam, mu in self.pencil_roots:
            p *= lam * x + mu * y
        return p

    @cached_property
    def pencil_h(self) -> complex:
        """h with det(x M1 + y M2) = h^-1 prod(lambda_j x + mu_j y), fitted at a fixed point."""
        x, y = 0.6180339887, 0.7861513777
        return self.pencil_product(x, y) / float(binary_form_eval(self.pencil_coeffs, Fraction(x), Fraction(y)))

    def lambda_w(self, w: Sequence[float]) -> float:
        w = np.asarray(w, dtype=float)
        n = float(np.hypot(w[0], w[1]))
        if n == 0:
            raise ValueError("w must be nonzero")
        return min(abs(lam * w[0] + mu * w[1]) for lam, mu in self.pencil_roots) / n

    # directions
    @cached_property
    def bad_directions(self) -> Tuple[Tuple[int, int], ...]:
        """Primitive c (up to sign) with det M_c = 0, from the rational linear factors."""
        x, y = sympy.symbols("x y")
        f = sum(sympy.Rational(a.numerator, a.denominator) * x ** (self.s - i) * y ** i
                for i, a in enumerate(self.pencil_coeffs_H))
        out = set()
        for fac, _ in sympy.factor_list(sympy.expand(f))[1]:
            p = sympy.Poly(fac, x, y)
            if p.total_degree() != 1:
                continue
            al = int(p.coeff_monomial(x))
            be = int(p.coeff_monomial(y))
            c = (be, -al)
            g = gcd(*c)
            c = (c[0] // g, c[1] // g)
            if c[0] < 0 or (c[0] == 0 and c[1] < 0):
                c = (-c[0], -c[1])
            out.add(c)
        return tuple(sorted(out))

    def direction(self, c: Sequence[int]) -> DirectionData:
        c = (int(c[0]), int(c[1]))
        key = ("dir", c)
        if key in self._cache:
            return self._cache[key]
        if content(c) != 1:
            raise ValueError("c must be primitive")
        H = self.H_c(c)
        s = self.s
        T, D, S = smith_normal_form(H)
        Sinv = inverse_unimodular(S)
        ycols = tuple(tuple(Sinv[i][j] for i in range(s)) for j in range(s))
        M = tuple(tuple(Fraction(x, 2) for x in r) for r in H)
        det_m = Fraction(determinant(H), 2 ** s)
        dd = DirectionData(c, H, M, det_m, det_m != 0, (T, D, S), ycols,
                           tuple(D[i][i] for i in range(s)))
        self._cache[key] = dd
        return dd

    classify_direction = direction

    def dual_form(self, c: Sequence[int]) -> Tuple[IntMatrix, int]:
        """(adj(H_c), e) with F*_c(u) = u^T adj(H_c) u / 2^e, e = s - 1."""
        dd = self.direction(c)
        if not dd.good:
            raise ValueError("dual form needs a good direction c")
        return adjugate(dd.H_c), self.s - 1

    def dual_value(self, c: Sequence[int], u: Sequence[int]) -> Fraction:
        A, e = self.dual_form(c)
        return Fraction(quad_value(A, u), 2 ** e)

    def restricted_form_and_dual(self, c: Sequence[int]) -> RestrictedForm:
        dd = self.direction(c)
        s = self.s
        if dd.rank < s - 1:
            raise ValueError("restricted form needs rank(M_c) >= s - 1")
        Y = transpose(dd.y_basis[: s - 1])  # s x (s-1)
        G = matmul(transpose(Y), matmul(dd.H_c, Y))
        return RestrictedForm(G, adjugate(G), dd.y_basis, dd.smith[2])

    # dual variety
    def _dual_binary_coeffs_H(self, u: Sequence[int]) -> List[Fraction]:
        # c -> u^T adj(H_c) u is a binary form of degree s-1
        d = self.s - 1
        vals = [quad_value(adjugate(self.H_c((1, t))), u) for t in range(d + 1)]
        return _binary_coeffs(vals, d)

    def _raw_dual_variety(self, u: Sequence[int]) -> Fraction:
        return binary_discriminant(self._dual_binary_coeffs_H(u))

    @cached_property
    def dual_variety_sign(self) -> int:
        s = self.s
        for u in product(range(3), repeat=s):
            v = self._raw_dual_variety(u)
            if v != 0:
                return 1 if v > 0 else -1
        return 1

    @property
    def dual_variety_scale_exp2(self) -> int:
        """Disc of the M-normalised dual binary form is the H-based value over 2^this."""
        return (self.s - 1) * (2 * self.s - 4)

    def dual_variety_value(self, u: Sequence[int]) -> int:
        if self.s < 4:
            raise ValueError("dual variety value needs s >= 4")
        v = self._raw_dual_variety([int(x) for x in u]) * self.dual_variety_sign
        if v.denominator != 1:
            raise ArithmeticError("dual variety value is not integral")
        return int(v)

    def dual_degree(self, u: Sequence[int]) -> int:
        co = self._dual_binary_coeffs_H(u)
        # degree of c -> F*_c(u) as a binary form; it is homogeneous of degree s-1
        return len(co) - 1 if any(co) else -1

    # primes
    def prime_type(self, c: Sequence[int], p: int) -> str:
        if not is_prime(p):
            raise ValueError("p must be prime")
        if self.D_F == 0 or (self.D_F.numerator % p == 0) or (self.D_F.denominator % p == 0):
            return "bad_prime"
        dd = self.direction(c)
        if not dd.good:
            return "good_for_bad_c"
        det = dd.det_Mc
        if det.numerator % p == 0:
            return "typeII"
        return "typeI"

    def nonsingularity_screen(self, trials: int = 200, seed: int = 0) -> str:
        if self.D_F == 0:
            return "fail"
        rng = random.Random(seed)
        s = self.s
        primes = [p for p in primes_up_to(200) if p > 2 and self.D_F_int % p][:3]
        for p in primes:
            H1 = [[x % p for x in r] for r in self.H1]
            H2 = [[x % p for x in r] for r in self.H2]
            found = 0
            for _ in range(trials * p * p):
                if found >= trials:
                    break
                x = [rng.randrange(p) for _ in range(s)]
                if not any(x):
                    continue
                if quad_value(H1, x) % (2 * p) or quad_value(H2, x) % (2 * p):
                    continue
                found += 1
                if _rank_mod_p([matvec(H1, x), matvec(H2, x)], p) < 2:
                    return "inconclusive"
        return "pass"


def _rank_mod_p(J: Sequence[Sequence[int]], p: int) -> int:
    rows = [[int(v) % p for v in r] for r in J]
    r = 0
    ncol = len(rows[0])
    for col in range(ncol):
        piv = next((i for i in range(r, len(rows)) if rows[i][col]), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = pow(rows[r][col], -1, p)
        rows[r] = [v * inv % p for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][col]:
                f = rows[i][col]
                rows[i] = [(a - f * b) % p for a, b in zip(rows[i], rows[r])]
        r += 1
    return r


def ex10_pair() -> QuadraticPair:
    """Diagonal s = 10 pair used by the end-to-end checks."""
    eps = [1, -1, 1, -1, 1, -1, 1, -1, 1, -1]
    alpha = [5, -1, 2, -3, 7, -4, 9, -6, 11, -8]
    return QuadraticPair.diagonal(eps, alpha, "EX10")
