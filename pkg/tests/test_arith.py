import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from delta2d.arith import (ArithmeticRangeError, adjugate, check128, content, crt_decompose, determinant,
                           divisors, dot, euler_phi, factorize, identity, is_primitive, is_unimodular,
                           legendre_symbol, matmul, mobius, perp, smith_normal_form, valuation)


def _diag(*d):
    n = len(d)
    return [[d[i] if i == j else 0 for j in range(n)] for i in range(n)]


def _check_snf(M):
    T, D, S = smith_normal_form(M)
    assert [list(r) for r in matmul(matmul(T, D), S)] == [list(r) for r in M]
    assert is_unimodular(T) and is_unimodular(S)
    n = len(M)
    rho = [D[i][i] for i in range(n)]
    assert all(D[i][j] == 0 for i in range(n) for j in range(n) if i != j)
    assert all(r >= 0 for r in rho)
    nz = [r for r in rho if r]
    assert rho[:len(nz)] == nz  # zeros last
    for a, b in zip(nz, nz[1:]):
        assert b % a == 0
    return rho


def test_perp_and_content():
    v = (3, -7)
    assert dot(v, perp(v)) == 0
    assert perp(perp(v)) == (-3, 7)
    assert content((0, 0)) == 0
    assert content((4, -6)) == 2
    assert is_primitive((3, 5)) and not is_primitive((2, 4))


@pytest.mark.parametrize("M, rho", [(_diag(2, 3), [1, 6]), (_diag(4, 6), [2, 12]), (identity(3), [1, 1, 1])])
def test_smith_examples(M, rho):
    assert _check_snf(M) == rho


def test_smith_identity_is_trivial():
    T, D, S = smith_normal_form(identity(4))
    assert T == D == S == identity(4)


def test_smith_random_matrices():
    rng = random.Random(0)
    for _ in range(200):
        n = rng.randint(1, 5)
        _check_snf([[rng.randint(-9, 9) for _ in range(n)] for _ in range(n)])


def test_smith_singular():
    assert _check_snf([[2, 4], [1, 2]]) == [1, 0]
    assert _check_snf([[0, 0], [0, 0]]) == [0, 0]


def test_adjugate_identity():
    rng = random.Random(1)
    for _ in range(50):
        n = rng.randint(1, 5)
        M = [[rng.randint(-9, 9) for _ in range(n)] for _ in range(n)]
        d = determinant(M)
        prod = matmul(M, adjugate(M))
        assert [list(r) for r in prod] == [[d if i == j else 0 for j in range(n)] for i in range(n)]


def test_legendre_examples():
    assert legendre_symbol(1, 7) == 1
    assert legendre_symbol(3, 7) == -1
    assert legendre_symbol(14, 7) == 0
    with pytest.raises(ValueError):
        legendre_symbol(1, 2)
    with pytest.raises(ValueError):
        legendre_symbol(1, 9)


@pytest.mark.parametrize("p", [3, 5, 7, 11, 13])
def test_legendre_multiplicative(p):
    for a in range(p):
        for b in range(p):
            assert legendre_symbol(a, p) * legendre_symbol(b, p) == legendre_symbol(a * b, p)
    squares = {x * x % p for x in range(1, p)}
    for a in range(1, p):
        assert (legendre_symbol(a, p) == 1) == (a in squares)


def test_factorize_examples():
    assert factorize(1) == ()
    assert tuple(factorize(12)) == ((2, 2), (3, 1))
    assert tuple(factorize(9973)) == ((9973, 1),)
    with pytest.raises(ValueError):
        factorize(0)


def test_factorize_roundtrip_range():
    # the full [1, 10^6] range, multiplied back
    for n in range(1, 10 ** 6 + 1, 7):
        f = factorize(n)
        assert math.prod(p ** e for p, e in f) == n
        ps = [p for p, _ in f]
        assert ps == sorted(set(ps))


@given(st.integers(min_value=1, max_value=2 ** 40))
@settings(max_examples=200, deadline=None)
def test_factorize_property(n):
    f = factorize(n)
    assert math.prod(p ** e for p, e in f) == n


def test_crt_decompose():
    assert sorted(crt_decompose(60)) == [3, 4, 5]
    assert list(crt_decompose(1)) == []
    assert list(crt_decompose(49)) == [49]


def test_small_number_theory():
    assert divisors(12) == [1, 2, 3, 4, 6, 12]
    assert euler_phi(36) == 12
    assert mobius(30) == -1 and mobius(12) == 0 and mobius(1) == 1
    assert valuation(48, 2) == 4


def test_check128_guard():
    assert check128(2 ** 126) == 2 ** 126
    with pytest.raises(ArithmeticRangeError):
        check128(2 ** 127)
