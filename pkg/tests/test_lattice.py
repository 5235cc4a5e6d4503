import math
import random

import numpy as np
import pytest

from delta2d.lattice import (WeightedEmbedding, annulus_points, basis_membership, canonical_residue, k_of,
                             lattice_equal, lattice_from, membership_characterization_check,
                             parallelogram_measure, primitive_residues, reduced_basis, residue_classes,
                             shortest_vector)

ORIGIN = WeightedEmbedding((0.0, 0.0), 1.0)


def test_lattice_examples():
    L = lattice_from((1, 0), 5)
    assert L.covolume == 5
    assert basis_membership(L, (1, 0)) and basis_membership(L, (0, 5))
    assert lattice_from((1, 2), 5).contains((2, -1))
    Z = lattice_from((1, 1), 1)
    assert Z.covolume == 1
    with pytest.raises(ValueError):
        lattice_from((5, 10), 5)


def test_lattice_equal_examples():
    assert lattice_equal(lattice_from((1, 2), 5), lattice_from((2, 4), 5))
    assert not lattice_equal(lattice_from((1, 0), 5), lattice_from((0, 1), 5))
    assert lattice_equal(lattice_from((3, 7), 1), lattice_from((1, 0), 1))


def test_membership_examples():
    L = lattice_from((1, 2), 5)
    assert basis_membership(L, (5, 0)) and basis_membership(L, (1, 2))
    assert not basis_membership(L, (1, 0))


def test_membership_characterisation_small_q():
    for q in range(1, 13):
        for a in primitive_residues(q):
            L = lattice_from(a, q)
            assert L.covolume == q
            for x in range(-q, q + 1):
                for y in range(-q, q + 1):
                    assert basis_membership(L, (x, y)) == membership_characterization_check(L, (x, y))


def test_classes_give_equal_lattices():
    for q in (6, 7, 12):
        classes = residue_classes(q)
        assert sum(len(o) for _, o in classes) == len(primitive_residues(q))
        for canon, orbit in classes:
            L = lattice_from(canon, q)
            assert canonical_residue(orbit[-1], q) == canon
            assert all(lattice_equal(L, lattice_from(b, q)) for b in orbit)
        canons = [c for c, _ in classes]
        assert not lattice_equal(lattice_from(canons[0], q), lattice_from(canons[1], q))


def _brute_mu(L, E, box=12):
    best = math.inf
    for x in range(-box, box + 1):
        for y in range(-box, box + 1):
            if (x, y) != (0, 0) and basis_membership(L, (x, y)):
                best = min(best, E.norm2((x, y)))
    return math.sqrt(best)


def test_shortest_vector_examples():
    mu, v = shortest_vector(lattice_from((1, 2), 5), ORIGIN)
    assert mu == pytest.approx(math.sqrt(5))
    assert v in {(1, 2), (2, -1), (-1, -2), (-2, 1)}
    mu, _ = shortest_vector(lattice_from((1, 0), 1), ORIGIN)
    assert mu == pytest.approx(1.0)


def test_shortest_vector_against_enumeration():
    rng = random.Random(3)
    for _ in range(60):
        q = rng.randint(1, 15)
        a = rng.choice(primitive_residues(q))
        Q = rng.choice([1.0, 4.0, 9.0])
        E = WeightedEmbedding((rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05)), Q)
        L = lattice_from(a, q)
        mu, v = shortest_vector(L, E)
        assert basis_membership(L, v)
        assert mu == pytest.approx(math.sqrt(E.norm2(v)), rel=1e-12)
        assert mu == pytest.approx(_brute_mu(L, E, box=2 * q + 2), rel=1e-9)
        assert mu >= Q ** -0.5 - 1e-12


def test_reduced_basis():
    x1, x2 = reduced_basis(lattice_from((1, 0), 1), ORIGIN)
    assert {tuple(map(abs, x1)), tuple(map(abs, x2))} == {(1, 0), (0, 1)}
    rng = random.Random(5)
    for _ in range(40):
        L = lattice_from((1, 2), 5)
        E = WeightedEmbedding((rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2)), 4.0)
        x1, x2 = reduced_basis(L, E)
        assert abs(x1[0] * x2[1] - x1[1] * x2[0]) == 5
        n1, n2 = E.norm2(x1), E.norm2(x2)
        assert n1 <= n2 + 1e-12
        # kappa = |x1||x2| / (covolume of M Lambda) stays bounded for a reduced basis
        cov = 5 * parallelogram_measure(E)
        assert math.sqrt(n1 * n2) / cov < 2.0


def test_parallelogram_measure():
    assert parallelogram_measure(WeightedEmbedding((0.0, 0.0), 4.0)) == pytest.approx(0.25)
    assert parallelogram_measure(WeightedEmbedding((1.0, 0.0), 1.0)) == pytest.approx(math.sqrt(2))
    E = WeightedEmbedding((0.3, -0.2), 2.0)
    assert parallelogram_measure(E) == parallelogram_measure(WeightedEmbedding((-0.3, 0.2), 2.0))
    # the embedded unit square has this area
    a, b = E.apply((1, 0)), E.apply((0, 1))
    assert parallelogram_measure(E) == pytest.approx(np.linalg.norm(np.cross(a, b)), rel=1e-12)


def test_annulus_and_k():
    L = lattice_from((1, 0), 1)
    pts = annulus_points(L, 0.5 * 4, 4)
    brute = sorted((x, y) for x in range(-4, 5) for y in range(-4, 5) if 4 < x * x + y * y < 16)
    assert [tuple(p) for p in pts] == brute
    assert k_of((6, 4), 4) == 1 and k_of((6, 9), 2) == 3 and k_of((4, 8), 1) == 4
