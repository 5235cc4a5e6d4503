import math
import random
from itertools import product
from math import gcd

import pytest

from delta2d.expsum import (BudgetError, dq_brute, dq_fast, e_q, gauss_char_sum, gauss_char_sum_brute,
                            partial_sum_S, quad_complete_sum, ramanujan_sum, s_qdc_brute, s_qdc_fast,
                            type_one, type_one_closed_form)
from delta2d.quadpair import QuadraticPair


def test_ramanujan_examples():
    assert ramanujan_sum(1, 7) == 1
    assert ramanujan_sum(5, 10) == 4
    assert ramanujan_sum(4, 2) == -2
    for q in range(1, 25):
        for a in range(-3, 30, 5):
            direct = sum(e_q(a * x, q) for x in range(q) if gcd(x, q) == 1)
            assert ramanujan_sum(q, a) == pytest.approx(direct.real, abs=1e-9)


def test_gauss_char_sum():
    assert abs(gauss_char_sum(3, 1, 1)) == pytest.approx(math.sqrt(3))
    assert gauss_char_sum(5, 2, 0) == 0
    for p in (3, 5, 7, 11):
        for k in (1, 2):
            for a in range(0, p ** k, max(1, p ** k // 13)):
                assert gauss_char_sum(p, k, a) == pytest.approx(gauss_char_sum_brute(p, k, a), abs=1e-8)
        for a in range(1, p):
            assert abs(gauss_char_sum(p, 1, a)) == pytest.approx(math.sqrt(p))
    with pytest.raises(ValueError):
        gauss_char_sum(2, 1, 1)


def _direct(q, H, v):
    s = len(H)
    tot = 0j
    for b in product(range(q), repeat=s):
        f = sum(H[i][j] * b[i] * b[j] for i in range(s) for j in range(s)) // 2
        tot += e_q(f + sum(x * y for x, y in zip(v, b)), q)
    return tot


def test_quad_complete_sum_examples():
    assert abs(quad_complete_sum(3, [[2]], [0])) == pytest.approx(math.sqrt(3))
    assert quad_complete_sum(6, [[0, 0], [0, 0]], [0, 0]) == pytest.approx(36)
    assert abs(quad_complete_sum(6, [[0, 0], [0, 0]], [1, 0])) < 1e-12
    with pytest.raises(ValueError):
        quad_complete_sum(5, [[1]], [0])


def test_quad_complete_sum_random():
    rng = random.Random(11)
    for _ in range(60):
        s = rng.randint(1, 3)
        q = rng.choice([2, 3, 4, 5, 8, 9, 12, 16, 25, 27])
        M = [[rng.randint(-4, 4) for _ in range(s)] for _ in range(s)]
        H = [[M[i][j] + M[j][i] for j in range(s)] for i in range(s)]
        v = [rng.randint(-5, 5) for _ in range(s)]
        assert quad_complete_sum(q, H, v) == pytest.approx(_direct(q, H, v), abs=1e-7)


def test_dq_small(toy3):
    assert dq_fast(toy3, 1, (0, 0, 0)).value == 1
    assert dq_brute(toy3, 1, (0, 0, 0)).value == 1
    assert dq_fast(toy3, 2, (0, 0, 0)).value == pytest.approx(dq_brute(toy3, 2, (0, 0, 0)).value, abs=1e-9)


def test_dq_multiplicative(toy3):
    u = (1, 0, 2)
    d4 = dq_brute(toy3, 4, u).value
    d9 = dq_brute(toy3, 9, u).value
    d36 = dq_brute(toy3, 36, u).value
    assert abs(d36 - d4 * d9) <= 1e-6 * max(1.0, abs(d36))
    assert dq_fast(toy3, 36, u).value == pytest.approx(d36, abs=1e-6 * max(1.0, abs(d36)))


def test_dq_fast_matches_brute(toy3, pair4):
    rng = random.Random(2)
    for pair in (toy3, pair4):
        for q in (3, 4, 5, 6, 9):
            u = [rng.randint(-9, 9) for _ in range(pair.s)]
            a, b = dq_fast(pair, q, u).value, dq_brute(pair, q, u).value
            assert abs(a - b) <= 1e-7 * max(1.0, abs(b))


def test_dq_square_vanishes(diag4):
    dfa = diag4.D_F
    for p in (7, 11, 13):
        if (dfa.numerator * dfa.denominator) % p == 0:
            continue
        hits = 0
        for u in product(range(-2, 3), repeat=4):
            if diag4.dual_variety_value(u) % p == 0:
                continue
            v = dq_fast(diag4, p * p, u).value
            assert abs(v) <= 1e-6 * p ** (2 * (4 / 2 + 2))
            hits += 1
            if hits >= 5:
                break
        assert hits


def test_s_qdc_parametrisation(toy3):
    c = (1, 2)
    u = (1, -1, 3)
    for q in (3, 5, 7):
        ref = 0j
        for t in range(1, q):
            for b in product(range(q), repeat=3):
                ref += e_q(t * toy3.F_c(c, b) + sum(x * y for x, y in zip(b, u)), q)
        assert s_qdc_brute(toy3, q, 1, c, u).value == pytest.approx(ref, abs=1e-8)
        assert s_qdc_fast(toy3, q, 1, c, u).value == pytest.approx(ref, abs=1e-8)
    assert s_qdc_fast(toy3, 1, 1, c, u).value == 1
    with pytest.raises(ValueError):
        s_qdc_fast(toy3, 6, 4, c, u)


@pytest.mark.parametrize("name", ["diag4", "pair4"])
def test_type_one_closed_form(name, request):
    pair = request.getfixturevalue(name)
    rng = random.Random(7)
    for p in (3, 5, 7):
        for k in (1, 2):
            if name == "pair4" and p ** k > 25:
                continue  # brute force on a general pair is over budget here
            cs = [c for c in [(1, 0), (0, 1), (1, 1), (1, -2), (2, 3)] if type_one(pair, c, p)]
            for c in cs[:2]:
                for _ in range(5):
                    u = [rng.randint(-20, 20) for _ in range(pair.s)]
                    a = type_one_closed_form(pair, p, k, c, u)
                    b = s_qdc_brute(pair, p ** k, 1, c, u).value
                    assert abs(a - b) <= 1e-6 * max(1.0, abs(b))


def test_budget_guard(ex10):
    with pytest.raises(BudgetError):
        dq_brute(QuadraticPair([[2 if i == j else 0 for j in range(10)] for i in range(10)],
                               [[2 * (i + 1) if i == j else 2 * (i == j + 1) + 2 * (j == i + 1)
                                 for j in range(10)] for i in range(10)]), 25, [0] * 10)


def test_partial_sum(diag4):
    c = (1, 0)
    det = diag4.direction(c).det_Mc
    tot, ratio = partial_sum_S(diag4, c, (1, 0, 0, 0), 1, 2 * abs(det.numerator))
    assert tot == 1 and ratio == 1
    with pytest.raises(ValueError):
        partial_sum_S(diag4, c, (1, 0, 0, 0), 5, 3)
