import pytest

from delta2d.calibration import load_fixture
from delta2d.deltasym import (arc_count, arc_partition, delta_decomposition, duality_rhs, heuristic_efficacy,
                              kloosterman_average_check, major_threshold)
from delta2d.pfunc import PContext


@pytest.fixture(scope="module")
def duality_fixture():
    return load_fixture()["results"]["duality"]


def test_zero_frequency(profile, duality_fixture):
    rep = duality_rhs(profile, (0, 0), 16)
    assert rep.residual == abs(rep.value - 1)
    assert rep.residual <= duality_fixture["Q=16"]["value"]


def test_nonzero_frequency(profile, duality_fixture):
    rep = duality_rhs(profile, (3, 4), 16)
    assert rep.residual <= duality_fixture["Q=16"]["value"]


def test_residual_shrinks_with_Q(profile):
    res = [duality_rhs(profile, (7, -2), Q).residual for Q in (8, 16, 32)]
    # all three sit near the rounding floor, so compare above it
    assert res[1] <= res[0] + 1e-15 and res[2] <= res[1] + 1e-15


def test_charsum_modes_agree(profile):
    a = duality_rhs(profile, (2, 5), 12)
    b = duality_rhs(profile, (2, 5), 12, charsum="direct")
    assert a.value == pytest.approx(b.value, abs=1e-12)
    with pytest.raises(ValueError):
        duality_rhs(profile, (1, 1), 2)


def test_decomposition_matches_weighted(profile):
    ctx = PContext(profile, 16.0)
    for n in [(0, 0), (2, 1), (5, -3), (20, 7)]:
        dec = delta_decomposition(ctx, n)
        ref = duality_rhs(profile, n, 16, weighted=True)
        assert abs(dec.value - ref.value) <= 1e-9 * max(ref.scale, 1.0)


def test_decomposition_quadrature(profile):
    ctx = PContext(profile, 16.0)
    a = delta_decomposition(ctx, (2, 1), mode="quadrature")
    b = delta_decomposition(ctx, (2, 1))
    assert abs(a.value - b.value) < 1e-3


def test_decomposition_outside_support(profile):
    ctx = PContext(profile, 16.0)
    assert delta_decomposition(ctx, (40, 0)).value == 0.0


def test_kloosterman_grouping(profile):
    each, grouped = kloosterman_average_check(PContext(profile, 12.0), (3, -1))
    assert each == pytest.approx(grouped, abs=1e-10)


def test_arcs():
    assert major_threshold(16, 0.1) == pytest.approx(16 ** 0.4)
    arcs = arc_partition(16, 0.1)
    q1 = [a for a in arcs if a.q == 1]
    assert q1 and all(a.kind == "major" for a in q1)
    assert all(a.kind == "minor" for a in arcs if a.q >= 16 ** 0.4)
    assert len(arcs) == arc_count(16)
    with pytest.raises(ValueError):
        arc_partition(16, 0.3)


def test_heuristic_efficacy():
    assert heuristic_efficacy(1, 1, 4) == 1
    P = 8.0
    Q = P ** (4 / 3)
    assert heuristic_efficacy(Q, Q, 10) == pytest.approx(8.0 ** 6)
    assert heuristic_efficacy(9.0, 81.0, 2) == pytest.approx(1.0)
