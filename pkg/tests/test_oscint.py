import numpy as np
import pytest

from delta2d.oscint import (WeightFunction, iq, j_envelope_constant, j_many, j_of_w, osc_1d, osc_1d_fast,
                            plateau, plateau_mass, plateau_weight, singular_integral, singular_integral_disc)


def test_plateau():
    x = np.linspace(-1.2, 1.2, 241)
    v = plateau(x)
    assert np.all(v[np.abs(x) <= 0.5] == 1.0)
    assert np.all(v[np.abs(x) >= 1.0] == 0.0)
    assert np.all((v >= 0) & (v <= 1))
    # by symmetry of the smooth step the mass is 1.5
    assert plateau_mass() == pytest.approx(1.5, abs=1e-12)


def test_osc_fast_matches_direct():
    a = np.concatenate([np.linspace(-40, 40, 161), [47.9, -47.9]])
    assert np.max(np.abs(osc_1d_fast(a) - osc_1d(a))) < 1e-6
    big = np.array([60.0, 200.0])
    assert np.max(np.abs(osc_1d_fast(big) - osc_1d(big))) < 1e-6


def test_zero_phase(diag3, toy3):
    w1 = plateau_weight(3)
    for P in (2.0, 5.0):
        assert iq(diag3, w1, 1, (0, 0), (0, 0, 0), P).real == pytest.approx(P ** 3 * 1.5 ** 3, rel=1e-10)
        assert iq(toy3, w1, 1, (0, 0), (0, 0, 0), P).real == pytest.approx(P ** 3 * 1.5 ** 3, rel=1e-8)


def test_paths_agree(diag3):
    w1 = plateau_weight(3)
    for w, u, q in [((0.01, -0.02), (1, 0, 2), 3), ((0.05, 0.03), (0, 0, 0), 1)]:
        a = iq(diag3, w1, q, w, u, 4.0, path="product")
        b = iq(diag3, w1, q, w, u, 4.0, path="general")
        assert abs(a - b) < 1e-6 * 4.0 ** 3  # panel quadrature accuracy of the general path


def test_general_weight(toy3):
    wt = WeightFunction(3, func=lambda X: np.ones(len(X)), box=(-0.5, 0.5))
    assert iq(toy3, wt, 1, (0, 0), (0, 0, 0), 2.0).real == pytest.approx(8.0, rel=1e-10)
    with pytest.raises(ValueError):
        iq(toy3, plateau_weight(3), 1, (0, 0), (0, 0, 0), 2.0, path="product")


def test_conjugate_symmetry(diag4, toy3):
    w = (0.7, -1.3)
    for pair in (diag4, toy3):
        a = j_of_w(pair, plateau_weight(pair.s), w)
        b = j_of_w(pair, plateau_weight(pair.s), (-w[0], -w[1]))
        assert a == pytest.approx(b.conjugate(), abs=1e-9)
    assert j_of_w(diag4, plateau_weight(4), (0, 0)).real == pytest.approx(1.5 ** 4)


def test_j_many_matches_direct(diag4):
    W = np.array([[0.0, 0.0], [0.3, 0.2], [-2.0, 1.1], [5.0, -7.0]])
    direct = np.array([j_of_w(diag4, plateau_weight(4), w) for w in W])
    assert np.max(np.abs(j_many(diag4, W) - direct)) < 1e-6


def test_envelope_constant(diag5):
    C = j_envelope_constant(diag5, r_max=16.0)
    assert np.isfinite(C) and C >= 1.5 ** 5


def test_truncation_tail():
    from delta2d.calibration import iq_truncation
    assert iq_truncation(16.0) < 1e-3


def test_singular_integral(ex10):
    si = singular_integral(ex10)
    assert si.value > 0
    assert si.tail < 1e-3 * si.value
    doubled = float(singular_integral_disc(ex10, [2 * si.W_max])[0])
    assert abs(doubled - si.value) < 0.01 * si.value
    with pytest.raises(ValueError):
        singular_integral(QuadPairStub.s5())


class QuadPairStub:
    @staticmethod
    def s5():
        from delta2d.quadpair import QuadraticPair
        return QuadraticPair.diagonal([1, -1, 1, -1, 1], [2, 3, -1, 5, -4])
