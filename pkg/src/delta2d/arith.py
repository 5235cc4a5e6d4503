"""Exact integer, modular and integer-matrix arithmetic.

Everything here works on Python ints, so intermediates never wrap. Matrices
are plain tuples of tuples (row-major) so they can be hashed and cached.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import gcd, isqrt
from typing import List, Sequence, Tuple

IntMatrix = Tuple[Tuple[int, ...], ...]
Vec2 = Tuple[int, int]

INT128_LIMIT = 1 << 127


class ArithmeticRangeError(ValueError):
    pass


def check128(x: int) -> int:
    """Hard error if x does not fit a signed 128-bit integer."""
    if not -INT128_LIMIT <= x < INT128_LIMIT:
        raise ArithmeticRangeError(f"integer {x} exceeds 128-bit range")
    return x


# ---------------------------------------------------------------- vectors

def perp(v: Sequence[int]) -> Vec2:
    return (v[1], -v[0])


def dot(u: Sequence[int], v: Sequence[int]) -> int:
    return sum(a * b for a, b in zip(u, v))


def content(v: Sequence[int]) -> int:
    g = 0
    for x in v:
        g = gcd(g, x)
    return g


def is_primitive(v: Sequence[int]) -> bool:
    return content(v) == 1


def ext_gcd(a: int, b: int) -> Tuple[int, int, int]:
    """Return (g, x, y) with a*x + b*y = g = gcd(a, b) >= 0."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        t = a // b
        a, b = b, a - t * b
        x0, x1 = x1, x0 - t * x1
        y0, y1 = y1, y0 - t * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


# ---------------------------------------------------------------- matrices

def as_matrix(rows: Sequence[Sequence[int]]) -> IntMatrix:
    return tuple(tuple(int(x) for x in r) for r in rows)


def identity(n: int) -> IntMatrix:
    return tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))


def matmul(A: Sequence[Sequence], B: Sequence[Sequence]) -> IntMatrix:
    Bt = list(zip(*B))
    return tuple(tuple(sum(a * b for a, b in zip(row, col)) for col in Bt) for row in A)


def matvec(A: Sequence[Sequence], v: Sequence) -> Tuple:
    return tuple(sum(a * x for a, x in zip(row, v)) for row in A)


def transpose(A: Sequence[Sequence]) -> IntMatrix:
    return tuple(tuple(r) for r in zip(*A))


def determinant(A: Sequence[Sequence[int]]) -> int:
    """Exact determinant by fraction-free Bareiss elimination."""
    n = len(A)
    if n == 0:
        return 1
    M = [list(r) for r in A]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if M[k][k] == 0:
            for i in range(k + 1, n):
                if M[i][k] != 0:
                    M[k], M[i] = M[i], M[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) // prev
        prev = M[k][k]
    return sign * M[n - 1][n - 1]


def rational_determinant(A: Sequence[Sequence]) -> Fraction:
    """Determinant of a matrix with Fraction (or int) entries."""
    n = len(A)
    M = [[Fraction(x) for x in r] for r in A]
    det = Fraction(1)
    for k in range(n):
        piv = next((i for i in range(k, n) if M[i][k] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != k:
            M[k], M[piv] = M[piv], M[k]
            det = -det
        det *= M[k][k]
        for i in range(k + 1, n):
            f = M[i][k] / M[k][k]
            if f:
                for j in range(k, n):
                    M[i][j] -= f * M[k][j]
    return det


def minor(A: Sequence[Sequence[int]], i: int, j: int) -> IntMatrix:
    return tuple(tuple(x for c, x in enumerate(r) if c != j) for rr, r in enumerate(A) if rr != i)


def adjugate(A: Sequence[Sequence[int]]) -> IntMatrix:
    """Exact adjugate, so that A·adj(A) = det(A)·I."""
    n = len(A)
    if n == 1:
        return ((1,),)
    cof = [[(-1) ** (i + j) * determinant(minor(A, i, j)) for j in range(n)] for i in range(n)]
    return transpose(cof)


def quad_value(A: Sequence[Sequence[int]], u: Sequence[int]) -> int:
    """uᵀ A u."""
    return dot(u, matvec(A, u))


def is_unimodular(A: Sequence[Sequence[int]]) -> bool:
    return abs(determinant(A)) == 1


def smith_normal_form(M: Sequence[Sequence[int]]) -> Tuple[IntMatrix, IntMatrix, IntMatrix]:
    """Smith normal form M = T·D·S with T, S unimodular.

    Pivot is the nonzero entry of least absolute value in the active block,
    ties going to the lowest (row, col). We keep T and S as the inverses of
    the accumulated row and column operations, so the invariant
    T·(current)·S = M holds after every step.
    """
    n = len(M)
    if any(len(r) != n for r in M):
        raise ValueError("smith_normal_form needs a square matrix")
    A = [list(r) for r in M]
    T = [[int(i == j) for j in range(n)] for i in range(n)]
    S = [[int(i == j) for j in range(n)] for i in range(n)]

    # Row op R_i += f R_j on A is undone on the left by T col_j -= f col_i.
    def row_add(i, j, f):
        A[i] = [a + f * b for a, b in zip(A[i], A[j])]
        for r in T:
            r[j] -= f * r[i]

    def col_add(i, j, f):
        # C_i += f C_j on A; undone on the right by S row_j -= f row_i
        for r in A:
            r[i] += f * r[j]
        S[j] = [a - f * b for a, b in zip(S[j], S[i])]

    def row_swap(i, j):
        A[i], A[j] = A[j], A[i]
        for r in T:
            r[i], r[j] = r[j], r[i]

    def col_swap(i, j):
        for r in A:
            r[i], r[j] = r[j], r[i]
        S[i], S[j] = S[j], S[i]

    def row_neg(i):
        A[i] = [-a for a in A[i]]
        for r in T:
            r[i] = -r[i]

    for t in range(n):
        while True:
            best = None
            for i in range(t, n):
                for j in range(t, n):
                    if A[i][j] != 0 and (best is None or abs(A[i][j]) < abs(A[best[0]][best[1]])):
                        best = (i, j)
            if best is None:
                break
            row_swap(t, best[0])
            col_swap(t, best[1])
            p = A[t][t]
            dirty = False
            for i in range(t + 1, n):
                f = A[i][t] // p
                if f:
                    row_add(i, t, -f)
                if A[i][t]:
                    dirty = True
            for j in range(t + 1, n):
                f = A[t][j] // p
                if f:
                    col_add(j, t, -f)
                if A[t][j]:
                    dirty = True
            if dirty:
                continue
            # divisibility: fold in a row whose entries p does not divide
            bad = next(((i, j) for i in range(t + 1, n) for j in range(t + 1, n) if A[i][j] % p), None)
            if bad is None:
                break
            row_add(t, bad[0], 1)
        if A[t][t] < 0:
            row_neg(t)
    return as_matrix(T), as_matrix(A), as_matrix(S)


def inverse_unimodular(A: Sequence[Sequence[int]]) -> IntMatrix:
    d = determinant(A)
    if abs(d) != 1:
        raise ValueError("matrix is not unimodular")
    return tuple(tuple(d * x for x in r) for r in adjugate(A))


# ---------------------------------------------------------------- primes

def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in (2, 3, 5):
        if n % p == 0:
            return n == p
    for f in _wheel(isqrt(n)):
        if n % f == 0:
            return False
    return True


def _wheel(limit: int):
    # candidates coprime to 30, starting at 7
    incs = (4, 2, 4, 2, 4, 6, 2, 6)
    f, i = 7, 0
    while f <= limit:
        yield f
        f += incs[i]
        i = (i + 1) % 8


@lru_cache(maxsize=4096)
def factorize(n: int) -> Tuple[Tuple[int, int], ...]:
    """Trial division with a mod-30 wheel. Returns ((p, e), ...) sorted."""
    if n <= 0:
        raise ValueError("factorize needs n >= 1")
    out: List[Tuple[int, int]] = []
    for p in (2, 3, 5):
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        if e:
            out.append((p, e))
    f, i = 7, 0
    incs = (4, 2, 4, 2, 4, 6, 2, 6)
    while f * f <= n:
        e = 0
        while n % f == 0:
            n //= f
            e += 1
        if e:
            out.append((f, e))
        f += incs[i]
        i = (i + 1) % 8
    if n > 1:
        out.append((n, 1))
    return tuple(out)


def crt_decompose(q: int) -> List[int]:
    return [p ** e for p, e in factorize(q)]


def primes_up_to(n: int) -> List[int]:
    return [p for p in range(2, n + 1) if is_prime(p)]


def divisors(n: int) -> List[int]:
    n = abs(n)
    if n == 0:
        raise ValueError("divisors of 0 are unbounded")
    ds = [1]
    for p, e in factorize(n):
        ds = [d * p ** k for d in ds for k in range(e + 1)]
    return sorted(ds)


def euler_phi(n: int) -> int:
    r = n
    for p, _ in factorize(n):
        r -= r // p
    return r


def mobius(n: int) -> int:
    f = factorize(n)
    if any(e > 1 for _, e in f):
        return 0
    return -1 if len(f) % 2 else 1


def valuation(n: int, p: int) -> int:
    """p-adic valuation; returns a large sentinel for n = 0."""
    if n == 0:
        return 10 ** 9
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def legendre_symbol(a: int, p: int) -> int:
    if p == 2 or not is_prime(p):
        raise ValueError("legendre_symbol needs an odd prime")
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def legendre_rational(x: Fraction, p: int) -> int:
    x = Fraction(x)
    return legendre_symbol(x.numerator, p) * legendre_symbol(x.denominator, p)
