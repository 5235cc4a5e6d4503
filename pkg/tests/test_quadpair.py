import json
from fractions import Fraction
from itertools import product
from math import gcd

import numpy as np
import pytest

from delta2d.quadpair import PairValidationError, QuadraticPair


def test_validation():
    with pytest.raises(PairValidationError):
        QuadraticPair([[1, 0, 0], [0, 2, 0], [0, 0, 2]], [[2, 0, 0], [0, 2, 0], [0, 0, 2]])
    with pytest.raises(PairValidationError):
        QuadraticPair([[2, 1, 0], [0, 2, 0], [0, 0, 2]], [[2, 0, 0], [0, 2, 0], [0, 0, 2]])
    with pytest.raises(PairValidationError):
        QuadraticPair([[2, 0], [0, 2]], [[2, 0], [0, 2]])
    with pytest.raises(PairValidationError):
        QuadraticPair.from_dict({"s": 4, "H1": [[2, 0, 0], [0, 2, 0], [0, 0, 2]], "H2": [[2, 0, 0], [0, 2, 0], [0, 0, 2]]})
    with pytest.raises(PairValidationError):
        QuadraticPair.from_dict({"s": 3, "H1": [[2.0, 0, 0], [0, 2, 0], [0, 0, 2]], "H2": [[2, 0, 0], [0, 2, 0], [0, 0, 2]]})


def test_round_trip(tmp_path, toy3):
    p = tmp_path / "pair.json"
    p.write_text(json.dumps(toy3.to_dict()))
    again = QuadraticPair.load(str(p))
    assert again.to_dict() == toy3.to_dict()
    p.write_text("{not json")
    with pytest.raises(PairValidationError):
        QuadraticPair.load(str(p))


def test_values_use_half_hessian(toy3):
    x = (1, -2, 3)
    H1 = np.array(toy3.H1)
    assert toy3.F(x)[0] == int(np.array(x) @ H1 @ np.array(x)) // 2
    assert toy3.F_c((2, -1), x) == 2 * toy3.F(x)[0] - toy3.F(x)[1]


def test_diagonal_direction_good():
    pair = QuadraticPair.diagonal([1, -1, 1, -1], [1, 2, -3, 5])
    dd = pair.direction((1, 0))
    assert dd.good and dd.det_Mc == 1  # product of the eps
    assert dd.rank == 4


def test_bad_directions_diagonal(diag3):
    bad = diag3.bad_directions
    assert len(bad) == 3
    for c in bad:
        dd = diag3.direction(c)
        assert not dd.good and dd.rho[-1] == 0


def test_at_most_s_bad_classes(toy3, diag4):
    for pair in (toy3, diag4):
        found = set()
        for c in product(range(-50, 51), repeat=2):
            if c == (0, 0) or gcd(*c) != 1:
                continue
            if c[0] < 0 or (c[0] == 0 and c[1] < 0):
                continue
            if pair.direction(c).det_Mc == 0:
                found.add(c)
        assert len(found) <= pair.s
        assert found == set(pair.bad_directions)


def test_dual_form_examples():
    ident = QuadraticPair.diagonal([1, 1, 1], [1, 2, 3])
    u = (2, -1, 5)
    assert ident.dual_value((1, 0), u) == sum(x * x for x in u)
    m = QuadraticPair([[2, 0, 0], [0, 4, 0], [0, 0, 6]], [[2, 0, 0], [0, 2, 0], [0, 0, 2]])
    assert m.dual_value((1, 0), u) == 6 * 4 + 3 * 1 + 2 * 25
    assert m.dual_value((1, 0), (0, 0, 0)) == 0


def test_restricted_form(toy3):
    # a bad direction for toy3 with a rank s-1 Hessian, or any good one
    for c in [(1, 0), (1, 1), (2, -3)]:
        rf = toy3.restricted_form_and_dual(c)
        for z in product(range(-2, 3), repeat=2):
            x = [sum(z[j] * rf.y_basis[j][i] for j in range(2)) for i in range(3)]
            assert rf.value(z) == Fraction(toy3.F_c(c, x))
        for u in [(1, 0, 2), (3, -1, 4)]:
            assert rf.coordinates(u) == tuple(rf.S[j][0] * u[0] + rf.S[j][1] * u[1] + rf.S[j][2] * u[2] for j in range(2))


def test_prime_types(diag4):
    assert diag4.prime_type((1, 0), 9973) == "typeI"
    bad_p = next(p for p in (2, 3, 5, 7, 11, 13) if diag4.D_F.numerator % p == 0)
    assert diag4.prime_type((1, 0), bad_p) == "bad_prime"
    assert diag4.prime_type(diag4.bad_directions[0], 9973) == "good_for_bad_c"
    # a good c whose det M_c has a prime factor not dividing D_F
    primes = [p for p in range(3, 200) if all(p % d for d in range(2, p))]
    c, p = next((c, p) for c in [(1, 1), (1, 2), (3, 2), (1, 3), (4, 1)] for p in primes
                if diag4.direction(c).good and diag4.direction(c).det_Mc.numerator % p == 0
                and diag4.D_F.numerator % p)
    assert diag4.prime_type(c, p) == "typeII"


def test_lambda_vanishes_on_root_direction(diag3):
    for lam, mu in diag3.pencil_roots:
        assert diag3.lambda_w((-mu.real, lam.real)) < 1e-8
    assert diag3.lambda_w((0.3, 0.7)) > 1e-3


def test_nonsingularity_screen(ex10):
    assert ex10.nonsingularity_screen() == "pass"
    assert QuadraticPair.diagonal([1, 1, 1], [1, 1, 2]).nonsingularity_screen() == "fail"
    assert ex10.nonsingularity_screen(seed=4) == ex10.nonsingularity_screen(seed=4)
