"""The lattices Lambda(a, q) = {r : q | r.perp(a)} and their embeddings by M(w)."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from math import gcd
from typing import List, Sequence, Tuple

import numpy as np

from .arith import Vec2, content, ext_gcd, perp

TIE_RTOL = 1e-12


@dataclass(frozen=True)
class Lattice2D:
    a: Vec2
    q: int
    basis: Tuple[Vec2, Vec2]

    @property
    def covolume(self) -> int:
        (x1, y1), (x2, y2) = self.basis
        return abs(x1 * y2 - x2 * y1)

    def contains(self, r: Sequence[int]) -> bool:
        return membership_characterization_check(self, r)


@dataclass(frozen=True)
class WeightedEmbedding:
    w: Tuple[float, float]
    Q: float

    def gram(self) -> np.ndarray:
        w1, w2 = self.w
        Q = self.Q
        g11 = 1.0 / Q + Q * Q * w2 * w2
        g22 = 1.0 / Q + Q * Q * w1 * w1
        g12 = -Q * Q * w1 * w2
        return np.array([[g11, g12], [g12, g22]])

    def apply(self, r: Sequence[float]) -> np.ndarray:
        sq = math.sqrt(self.Q)
        return np.array([r[0] / sq, r[1] / sq, self.Q * (self.w[0] * r[1] - self.w[1] * r[0])])

    def norm2(self, r: Sequence[float]) -> float:
        v = self.apply(r)
        return float(v @ v)


def _check_residue(a: Sequence[int], q: int) -> None:
    if q < 1:
        raise ValueError("q must be positive")
    if gcd(gcd(a[0], a[1]), q) != 1:
        raise ValueError(f"gcd(a, q) must be 1, got a={tuple(a)}, q={q}")


def _euclid_reduce(b1: Vec2, b2: Vec2) -> Tuple[Vec2, Vec2]:
    """Exact Lagrange-Gauss reduction in the Euclidean norm."""
    n1 = b1[0] ** 2 + b1[1] ** 2
    n2 = b2[0] ** 2 + b2[1] ** 2
    if n2 < n1:
        b1, b2, n1, n2 = b2, b1, n2, n1
    while True:
        d = b1[0] * b2[0] + b1[1] * b2[1]
        # nearest integer to d/n1, halves rounded toward -inf for determinism
        m = (2 * d + n1) // (2 * n1)
        b2 = (b2[0] - m * b1[0], b2[1] - m * b1[1])
        n2 = b2[0] ** 2 + b2[1] ** 2
        if n2 >= n1:
            return b1, b2
        b1, b2, n1, n2 = b2, b1, n2, n1


def lattice_from(a: Sequence[int], q: int) -> Lattice2D:
    a = (int(a[0]), int(a[1]))
    _check_residue(a, q)
    if q == 1:
        return Lattice2D(a, 1, ((1, 0), (0, 1)))
    g = content(a)
    a0 = (a[0] // g, a[1] // g)
    _, s, t = ext_gcd(a0[0], a0[1])
    a1 = (-t, s)  # det(a0, a1) = 1
    b1, b2 = _euclid_reduce(a0, (q * a1[0], q * a1[1]))
    return Lattice2D(a, q, (b1, b2))


def membership_characterization_check(L: Lattice2D, r: Sequence[int]) -> bool:
    ap = perp(L.a)
    return (r[0] * ap[0] + r[1] * ap[1]) % L.q == 0


def basis_membership(L: Lattice2D, r: Sequence[int]) -> bool:
    """Solve r = x*b1 + y*b2 exactly and test integrality."""
    (p1, p2), (s1, s2) = L.basis
    det = p1 * s2 - s1 * p2
    x = r[0] * s2 - s1 * r[1]
    y = p1 * r[1] - r[0] * p2
    return x % det == 0 and y % det == 0


def lattice_equal(L1: Lattice2D, L2: Lattice2D) -> bool:
    if L1.q != L2.q:
        raise ValueError("lattice_equal needs equal moduli")
    return all(basis_membership(L2, b) for b in L1.basis) and all(
        basis_membership(L1, b) for b in L2.basis)


def parallelogram_measure(E: WeightedEmbedding) -> float:
    w1, w2 = E.w
    return math.sqrt(E.Q ** -2 + E.Q * (w1 * w1 + w2 * w2))


def _gauss_reduce_metric(b1, b2, G: np.ndarray):
    def n(v):
        return G[0, 0] * v[0] * v[0] + 2 * G[0, 1] * v[0] * v[1] + G[1, 1] * v[1] * v[1]

    def ip(u, v):
        return G[0, 0] * u[0] * v[0] + G[0, 1] * (u[0] * v[1] + u[1] * v[0]) + G[1, 1] * u[1] * v[1]

    if n(b2) < n(b1):
        b1, b2 = b2, b1
    for _ in range(10000):
        m = round(ip(b1, b2) / n(b1))
        if m:
            b2 = (b2[0] - m * b1[0], b2[1] - m * b1[1])
        if n(b2) >= n(b1) * (1 - 1e-15):
            return b1, b2
        b1, b2 = b2, b1
    raise RuntimeError("metric reduction did not terminate")


def _enumerate_ball(b1, b2, G: np.ndarray, radius2: float) -> Tuple[np.ndarray, np.ndarray]:
    """All lattice vectors v (integer combos of b1, b2) with vᵀGv <= radius2."""
    B = np.array([b1, b2], dtype=float).T
    Gb = B.T @ G @ B
    inv = np.linalg.inv(Gb)
    r = math.sqrt(max(radius2, 0.0))
    xmax = int(math.floor(r * math.sqrt(max(inv[0, 0], 0.0)) + 1e-9)) + 1
    ymax = int(math.floor(r * math.sqrt(max(inv[1, 1], 0.0)) + 1e-9)) + 1
    xs = np.arange(-xmax, xmax + 1)
    ys = np.arange(-ymax, ymax + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    X = X.ravel()
    Y = Y.ravel()
    V = np.stack([X * b1[0] + Y * b2[0], X * b1[1] + Y * b2[1]], axis=1).astype(np.int64)
    nrm = G[0, 0] * V[:, 0] ** 2 + 2 * G[0, 1] * V[:, 0] * V[:, 1] + G[1, 1] * V[:, 1] ** 2
    keep = (nrm <= radius2) & ((V[:, 0] != 0) | (V[:, 1] != 0))
    return V[keep], nrm[keep]


def _pick(V: np.ndarray, nrm: np.ndarray) -> Tuple[float, Vec2]:
    nmin = nrm.min()
    tied = np.nonzero(nrm <= nmin * (1 + TIE_RTOL))[0]
    best = min(tied, key=lambda i: (int(V[i, 0]) ** 2 + int(V[i, 1]) ** 2, int(V[i, 0]), int(V[i, 1])))
    return float(nrm[best]), (int(V[best, 0]), int(V[best, 1]))


def shortest_vector(L: Lattice2D, E: WeightedEmbedding) -> Tuple[float, Vec2]:
    """mu_M and the minimiser, ties broken on (|v|, v_x, v_y)."""
    G = E.gram()
    b1, b2 = _gauss_reduce_metric(*L.basis, G)
    n1 = G[0, 0] * b1[0] ** 2 + 2 * G[0, 1] * b1[0] * b1[1] + G[1, 1] * b1[1] ** 2
    V, nrm = _enumerate_ball(b1, b2, G, n1 * (1 + 1e-9))
    n, v = _pick(V, nrm)
    return math.sqrt(n), v


def reduced_basis(L: Lattice2D, E: WeightedEmbedding) -> Tuple[Vec2, Vec2]:
    G = E.gram()
    _, x1 = shortest_vector(L, E)
    b1, b2 = _gauss_reduce_metric(*L.basis, G)
    n2 = G[0, 0] * b2[0] ** 2 + 2 * G[0, 1] * b2[0] * b2[1] + G[1, 1] * b2[1] ** 2
    V, nrm = _enumerate_ball(b1, b2, G, n2 * (1 + 1e-9))
    det = np.abs(x1[0] * V[:, 1] - x1[1] * V[:, 0])
    keep = det == L.q
    _, x2 = _pick(V[keep], nrm[keep])
    return x1, x2


# ---------------------------------------------------------------- classes

def canonical_residue(a: Sequence[int], q: int) -> Vec2:
    """Lexicographically least member of {lambda*a mod q : gcd(lambda, q) = 1}."""
    _check_residue(a, q)
    if q == 1:
        return (0, 0)
    best = None
    for lam in range(1, q):
        if gcd(lam, q) == 1:
            c = ((lam * a[0]) % q, (lam * a[1]) % q)
            if best is None or c < best:
                best = c
    return best


@lru_cache(maxsize=512)
def residue_classes(q: int) -> Tuple[Tuple[Vec2, Tuple[Vec2, ...]], ...]:
    """Partition of primitive residues mod q into lambda-scaling classes.

    Returns ((canonical, members), ...) in increasing canonical order; the
    members are listed by increasing lambda.
    """
    if q == 1:
        return (((0, 0), ((0, 0),)),)
    units = [lam for lam in range(1, q) if gcd(lam, q) == 1]
    seen = set()
    out = []
    for x in range(q):
        for y in range(q):
            if (x, y) in seen or gcd(gcd(x, y), q) != 1:
                continue
            orbit = tuple(((lam * x) % q, (lam * y) % q) for lam in units)
            seen.update(orbit)
            out.append(((x, y), orbit))
    return tuple(out)


def primitive_residues(q: int) -> List[Vec2]:
    if q == 1:
        return [(0, 0)]
    return [(x, y) for x in range(q) for y in range(q) if gcd(gcd(x, y), q) == 1]


def annulus_points(L: Lattice2D, r_in: float, r_out: float) -> np.ndarray:
    """Lattice points with r_in < |r| < r_out, sorted lexicographically."""
    b1, b2 = L.basis
    G = np.eye(2)
    V, nrm = _enumerate_ball(b1, b2, G, r_out * r_out)
    keep = (nrm > r_in * r_in) & (nrm < r_out * r_out)
    V = V[keep]
    if len(V):
        V = V[np.lexsort((V[:, 1], V[:, 0]))]
    return V


@lru_cache(maxsize=4096)
def class_annulus(q: int, canon: Vec2, r_in: float, r_out: float) -> np.ndarray:
    pts = annulus_points(lattice_from(canon, q), r_in, r_out)
    pts.setflags(write=False)
    return pts


def k_of(r: Sequence[int], q: int) -> int:
    g = content(r)
    return g // gcd(g, q)
