import math

import numpy as np
import pytest

from delta2d.lattice import lattice_from
from delta2d.pfunc import (PContext, p1_eval, p1_fourier_numeric, p1_fourier_pair, p1_radial, p2_eval,
                           p2_eval_many, p2_fourier_numeric, p2_fourier_pair, p_lambda)


@pytest.fixture(scope="module")
def ctx16(profile):
    return PContext(profile, 16.0)


def test_context_validation(profile):
    with pytest.raises(ValueError):
        PContext(profile, 0.5)
    with pytest.raises(ValueError):
        PContext(profile, 16.0, quad_tol=1e-2)


def test_p1_rejects_large_q(ctx16):
    with pytest.raises(ValueError):
        p1_eval(ctx16, 17, (0.0, 0.0))
    with pytest.raises(ValueError):
        p1_eval(ctx16, 0, (0.0, 0.0))


def test_p1_symmetry(ctx16):
    w = (0.013, -0.004)
    v = p1_eval(ctx16, 3, w)
    for u in [(-w[1], w[0]), (w[1], w[0]), (-w[0], -w[1])]:
        assert p1_eval(ctx16, 3, u) == v


def test_p1_at_zero_grid_oracle(ctx16, profile):
    # -2c sum_j int omega_0(j|x|/16) omega(|x|) dx on a dense Cartesian grid
    h = 1e-3
    x = np.arange(-1 + h / 2, 1, h)
    X, Y = np.meshgrid(x, x)
    R = np.hypot(X, Y)
    om = profile.omega(R)
    total = sum(float(np.sum(profile.omega0(j * R / 16.0) * om)) for j in range(1, 16)) * h * h
    assert p1_eval(ctx16, 1, (0.0, 0.0)) == pytest.approx(-2 * profile.c * total, abs=1e-6)


def test_p1_pair_zero_cases(ctx16):
    assert p1_fourier_pair(ctx16, 2, (0, 0)) == 0.0
    assert p1_fourier_pair(ctx16, 2, (33, 0)) == 0.0  # |n| >= Q^1.5 / 2
    assert p1_fourier_pair(ctx16, 8, (15, 0)) == 0.0  # |n| <= q sqrt(Q) / 2, omega vanishes for every j


def test_p1_pair_oracle_example(ctx16):
    assert abs(p1_fourier_numeric(ctx16, 2, (5, 0)) - p1_fourier_pair(ctx16, 2, (5, 0))) < 1e-4


def test_p1_decay(ctx16):
    r = np.array([0.0, 0.05, 0.2, 1.0])
    v = np.abs(p1_radial(ctx16, 2, r))
    assert v[-1] < 1e-3 * v[0]


def test_p2_support_and_errors(ctx16):
    assert p2_eval(ctx16, (3, 1), 4, 4, (0.01, 0.0)) == 0.0  # kq >= Q
    with pytest.raises(ValueError):
        p2_eval(ctx16, (0, 0), 1, 1, (0.0, 0.0))


def test_p2_perpendicular_decay(ctx16):
    r = (3, 1)
    nr = math.hypot(*r)
    rp = np.array([r[1], -r[0]]) / nr
    peak = max(abs(p2_eval(ctx16, r, 1, 2, t * rp)) for t in (0.0, 1e-3, 2e-3))
    far = 10 * ctx16.trunc_margin / ctx16.Q
    W = np.array([far * rp, 1.5 * far * rp, -far * rp])
    assert np.max(np.abs(p2_eval_many(ctx16, r, 1, 2, W))) < 1e-6 * peak


def test_p2_pair_zero_and_oracle(ctx16):
    assert p2_fourier_pair(ctx16, (3, 1), 1, 2, (40, 0)) == 0.0
    # kq/Q >= 1 and |r.n|/Q^2 <= kq/(2Q)
    assert p2_fourier_pair(ctx16, (3, 1), 4, 4, (1, 1)) == 0.0
    assert abs(p2_fourier_numeric(ctx16, (3, 1), 1, 2, (1, 1)) - p2_fourier_pair(ctx16, (3, 1), 1, 2, (1, 1))) < 1e-4


def test_p_lambda_class_invariance(ctx16):
    w = (0.004, -0.011)
    assert p_lambda(ctx16, lattice_from((1, 2), 5), w) == p_lambda(ctx16, lattice_from((2, 4), 5), w)


def test_p_lambda_empty_annulus(profile):
    ctx = PContext(profile, 4.0)
    L = lattice_from((1, 0), 3)  # covolume 3, no points with 1 < |r| < 2 reached by the weight
    w = (0.01, 0.02)
    from delta2d.pfunc import lattice_annulus
    pts = lattice_annulus(ctx, L)
    live = [r for r in pts if profile.omega(math.hypot(*r) / 2.0) > 0]
    if not live:
        assert p_lambda(ctx, L, w) == p1_eval(ctx, 3, w)
    else:
        pytest.skip("annulus is not empty for this lattice")


def test_stationary_region(profile):
    from delta2d.calibration import stationary_deviation
    assert stationary_deviation(profile, 256.0, (4, 8, 16), 0.5) < 0.05
