"""Calibration fixture: measured residuals, bound constants and tolerances.

Every threshold that is not an exact identity is measured here and written to
a versioned JSON document. Two kinds of entries:

* ``constant``: sup of |quantity| / envelope over a sample grid, recomputed for
  every member of a sweep (Q values, P values or sampling seeds). Stable means
  max/min over the sweep is at most ``STABILITY_FACTOR``.
* ``tolerance``: a measured deviation (residual, relative error) together with
  the limit it is judged against, if any.

``check_fixture`` recomputes everything and reports regressions; the CLI maps
regressions to exit code 4.
"""
from __future__ import annotations

import hashlib
import itertools
import json
import math
import random
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np

from .arith import content, divisors
from .counting import decomposition_check
from .deltasym import duality_rhs
from .expsum import (dq_prime_ratio, dq_general_ratio, sqdc_good_ratio, sqdc_bad_ratio, spkpm_ratio)
from .kernels import KernelProfile, default_profile
from .lattice import lattice_from, primitive_residues
from .oscint import iq, iq_envelope_constant, plateau_weight
from .pfunc import (PContext, _p2_kernel_cached, lattice_p2_asymptotic, lattice_p2_sum,
                    lattice_sum_regime, p1_radial, p2_eval, p2_eval_many, p2_stationary, p_lambda)
from .quadpair import QuadraticPair

FIXTURE_VERSION = 1
STABILITY_FACTOR = 2.0
# slack for float noise when a tolerance is recomputed on another machine
TOLERANCE_SLACK = 1.05
PAIR_NAMES = ("toy3", "diag3", "diag4", "pair4", "diag5", "ex10")
SECTIONS = ("duality", "bounds", "tolerances", "decomposition")


class CalibrationRegression(RuntimeError):
    pass


# ---------------------------------------------------------------- inputs

def pair_path(name: str) -> Path:
    return Path(str(resources.files("delta2d") / "data" / "pairs" / f"{name}.json"))


@lru_cache(maxsize=None)
def fixture_pair(name: str) -> QuadraticPair:
    pair = QuadraticPair.load(str(pair_path(name)))
    return QuadraticPair(pair.H1, pair.H2, name)


def default_fixture_path() -> Path:
    return Path(str(resources.files("delta2d") / "data" / "calibration.json"))


def _canonical(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def input_hashes(profile: KernelProfile) -> Dict[str, str]:
    out = {"kernel_profile": hashlib.sha256(profile.fingerprint().encode()).hexdigest()}
    for name in PAIR_NAMES:
        out[f"pair:{name}"] = hashlib.sha256(pair_path(name).read_bytes()).hexdigest()
    return out


def _constant(sweep: Dict[str, float], envelope: str) -> dict:
    vals = list(sweep.values())
    hi, lo = max(vals), min(vals)
    if hi == 0.0:
        stab = 1.0
    elif lo == 0.0:
        stab = math.inf
    else:
        stab = hi / lo
    return {"kind": "constant", "envelope": envelope, "value": hi, "sweep": sweep,
            "stability": stab}


def _tolerance(value: float, limit: Optional[float], what: str, **extra) -> dict:
    d = {"kind": "tolerance", "what": what, "value": value, "limit": limit}
    d.update(extra)
    return d


# ---------------------------------------------------------------- duality

def duality_sample(Q: float, count: int = 200, seed: int = 0) -> List[tuple]:
    """n = 0 plus `count` distinct nonzero n with |n| <= Q^1.5."""
    rng = np.random.default_rng(seed)
    R = Q ** 1.5
    out = [(0, 0)]
    seen = set(out)
    while len(out) < count + 1:
        v = tuple(int(x) for x in rng.integers(-int(R), int(R) + 1, 2))
        if v not in seen and 0 < math.hypot(*v) <= R:
            seen.add(v)
            out.append(v)
    return out


def duality_residuals(profile: KernelProfile, Q: float, seed: int = 0) -> dict:
    res = [duality_rhs(profile, n, Q).residual for n in duality_sample(Q, seed=seed)]
    return {"Q": Q, "max": max(res), "n0": res[0], "max_nonzero": max(res[1:])}


def calibrate_duality(profile: KernelProfile, seed: int = 0) -> dict:
    out = {}
    for Q in (8, 16, 32):
        r = duality_residuals(profile, Q, seed)
        out[f"Q={Q}"] = _tolerance(r["max"], None, "max duality residual over n = 0 and 200 sampled n",
                                   n0=r["n0"], max_nonzero=r["max_nonzero"])
    return out


# ---------------------------------------------------------------- pfunc bounds

def p1_envelope_constant(profile: KernelProfile, Q: float, nr: int = 120) -> float:
    """sup |p_1| / ((Q/q)(1+|w|Q^1.5)^-1 (1+|w|q sqrt Q)^-3) over q and |w| grids."""
    ctx = PContext(profile, Q)
    best = 0.0
    for q in sorted({2, int(math.isqrt(int(Q))), int(Q) // 4, int(Q) // 2}):
        R = np.concatenate([[0.0], np.geomspace(1e-3 / Q ** 1.5, 12.0 / (q * math.sqrt(Q)), nr)])
        v = np.abs(p1_radial(ctx, q, R))
        env = (Q / q) / (1 + R * Q ** 1.5) * (1 + R * q * math.sqrt(Q)) ** -3
        best = max(best, float(np.max(v / env)))
    return best


def _p2_grid(kq: int, Q: float, rh: np.ndarray, rp: np.ndarray) -> np.ndarray:
    # in units of the two decay scales: A = |w| kq sqrt Q along r, B = Q |w.perp(r)|
    a = np.concatenate([[0.0], np.geomspace(1e-2, 12.0, 48)])
    a = np.concatenate([-a[1:], a])
    b = np.linspace(-3.0, 3.0, 13)
    A = np.concatenate([a, 0 * a, np.repeat(b, len(b))])
    B = np.concatenate([0 * a, a, np.tile(b, len(b))])
    return np.outer(A / (kq * math.sqrt(Q)), rh) + np.outer(B / Q, rp)


def p2_envelope_constant(profile: KernelProfile, Q: float) -> float:
    """sup |p_2| (1 + |w| kq sqrt Q + |w.perp(r)| Q)^3 over r, kq and w samples."""
    ctx = PContext(profile, Q)
    sq = math.sqrt(Q)
    best = 0.0
    rs = [(math.ceil(0.6 * sq), 1), (math.ceil(0.7 * sq), math.ceil(0.5 * sq)), (0, math.ceil(0.9 * sq))]
    for r in rs:
        nr = math.hypot(*r)
        rh = np.array(r, dtype=float) / nr
        rp = np.array([r[1], -r[0]], dtype=float) / nr
        for kq in sorted({int(sq) // 2, int(sq), int(Q) // 4}):
            W = _p2_grid(kq, Q, rh, rp)
            v = np.abs(np.concatenate([p2_eval_many(ctx, r, 1, kq, W[i:i + 97])
                                       for i in range(0, len(W), 97)]))
            env = (1 + np.hypot(W[:, 0], W[:, 1]) * kq * sq + np.abs(W @ np.array([r[1], -r[0]])) * Q) ** -3
            best = max(best, float(np.max(v / env)))
        # kernels for small y are large; do not let them pile up
        _p2_kernel_cached.cache_clear()
    return best


def iq_envelope_grid(pair: QuadraticPair) -> List[tuple]:
    """Fixed polar w-grid, including the real bad rays lambda w1 + mu w2 = 0."""
    angles = list(np.linspace(0.0, math.pi, 12, endpoint=False))
    for lam, mu in pair.pencil_roots:
        lam, mu = complex(lam), complex(mu)
        if abs(lam.imag) + abs(mu.imag) < 1e-12:
            angles.append(math.atan2(-lam.real, mu.real) % math.pi)
    return [(r * math.cos(a), r * math.sin(a)) for r in np.geomspace(1e-3, 0.5, 10) for a in angles] + [(0.0, 0.0)]


def _u_sample(s: int, seed: int, extra: int, box: int = 20) -> List[List[int]]:
    """The core {-1,0,1}^s plus `extra` seeded vectors in [-box, box]^s."""
    core = [list(v) for v in itertools.product((-1, 0, 1), repeat=s)]
    rng = random.Random(seed)
    return core + [[rng.randint(-box, box) for _ in range(s)] for _ in range(extra)]


def _c_sample() -> List[tuple]:
    return [(c1, c2) for c1 in range(-2, 3) for c2 in range(0, 3)
            if content((c1, c2)) == 1 and (c2 > 0 or c1 > 0)]


SEEDS = (0, 1, 2)
BOUND_PRIMES = (5, 7, 11, 13)
SPKPM_TRIPLES = ((3, 1, 2), (5, 1, 1), (3, 2, 2))


def dq_prime_constant(seed: int) -> float:
    best = 0.0
    for name in ("diag4", "pair4"):
        pair = fixture_pair(name)
        us = _u_sample(4, seed, 40)
        for p in BOUND_PRIMES:
            if pair.D_F_int % p == 0:
                continue
            for u in us:
                if pair.dual_variety_value(u) % p:
                    best = max(best, dq_prime_ratio(pair, p, u))
    return best


def dq_general_constant(seed: int, q_max: int = 24) -> float:
    best = 0.0
    for name in ("toy3", "diag4"):
        pair = fixture_pair(name)
        for u in _u_sample(pair.s, seed, 8):
            best = max(best, max(dq_general_ratio(pair, q, u) for q in range(2, q_max + 1)))
    return best


def sqdc_good_constant(seed: int, q_max: int = 12) -> float:
    pair = fixture_pair("toy3")
    best = 0.0
    for u in _u_sample(3, seed, 3):
        for q in range(2, q_max + 1):
            for d in divisors(q):
                for c in _c_sample():
                    best = max(best, sqdc_good_ratio(pair, q, d, c, u))
    return best


def sqdc_bad_constant(seed: int) -> float:
    pair = fixture_pair("diag4")
    us = _u_sample(4, seed, 40)
    return max(sqdc_bad_ratio(pair, p, c, u) for c in pair.bad_directions
               for p in BOUND_PRIMES for u in us)


def spkpm_constant(seed: int, p: int, m: int, k: int) -> float:
    best = 0.0
    for name in ("diag4", "pair4"):
        pair = fixture_pair(name)
        for u in _u_sample(4, seed, 4):
            for c in _c_sample():
                best = max(best, spkpm_ratio(pair, p, m, k, c, u))
    return best


def calibrate_bounds(profile: KernelProfile, log: Callable[[str], None] = lambda s: None) -> dict:
    out = {}
    out["p1_envelope"] = _constant({f"Q={Q}": p1_envelope_constant(profile, Q) for Q in (16, 64, 256)},
                                "(Q/q)(1+|w|Q^1.5)^-1 (1+|w|q sqrt Q)^-3")
    log("p1_envelope")
    out["p2_envelope"] = _constant({f"Q={Q}": p2_envelope_constant(profile, Q) for Q in (16, 64, 256)},
                                "(1+|w|kq sqrt Q+|w.perp(r)|Q)^-3")
    log("p2_envelope")
    pair = fixture_pair("diag3")
    wt = plateau_weight(3)
    grid = iq_envelope_grid(pair)
    out["iq_envelope"] = _constant({f"P={P}": iq_envelope_constant(pair, wt, P, grid) for P in (8, 16, 32)},
                               "P^s prod_j (1+P^2|lambda_j w1+mu_j w2|)^-1/2, diag3, q=1, u=0")
    log("iq_envelope")
    out["dq_prime"] = _constant({f"seed={s}": dq_prime_constant(s) for s in SEEDS},
                               "p^((s+2)/2), p in {5,7,11,13} good, p not dividing F*(u); diag4, pair4")
    log("dq_prime")
    out["dq_general"] = _constant({f"seed={s}": dq_general_constant(s) for s in SEEDS},
                               "q^(s/2+2+0.1), 2 <= q <= 24; toy3, diag4")
    log("dq_general")
    out["sqdc_good"] = _constant({f"seed={s}": sqdc_good_constant(s) for s in SEEDS},
                               "d q^(s/2+1) gcd(q/d, last coord, det M_c)^1/2, q <= 12, |c| <= 2; toy3")
    log("sqdc_good")
    out["sqdc_bad"] = _constant({f"seed={s}": sqdc_bad_constant(s) for s in SEEDS},
                               "p^(s/2+1) gcd(p,u)^1/2 gcd(p,F*(u))^1/2, bad c; diag4")
    log("sqdc_bad")
    for (p, m, k) in SPKPM_TRIPLES:
        out[f"spkpm(p={p},m={m},k={k})"] = _constant(
            {f"seed={s}": spkpm_constant(s, p, m, k) for s in SEEDS},
            "p^(m+k(s/2+1)) gcd(p^(k-m), det M_c)^1/2; diag4, pair4")
    log("spkpm")
    return out


# ---------------------------------------------------------------- tolerances

STATIONARY_RS = ((9, 2), (12, 5), (5, 14))


def stationary_deviation(profile: KernelProfile, Q: float, kqs: Iterable[int], limit_exp: float) -> float:
    """max |p_2 - stationary| / |stationary(0)| over kq(Q|w.r| + 1) <= Q^limit_exp."""
    ctx = PContext(profile, Q)
    worst = 0.0
    for r in STATIONARY_RS:
        nr = math.hypot(*r)
        rh = np.array(r) / nr
        rp = np.array([r[1], -r[0]]) / nr
        peak = abs(p2_stationary(ctx, r, (0.0, 0.0)))
        for kq in kqs:
            for a in (0.0, 1.0):
                if kq * (a + 1) > Q ** limit_exp:
                    continue
                for b in (0.0, 0.3, 1.0):
                    w = tuple(a / (Q * nr) * rh + b / Q ** 1.5 * rp)
                    v = p2_eval(ctx, r, 1, kq, w)
                    worst = max(worst, abs(v - p2_stationary(ctx, r, w)) / peak)
    return worst


def lattice_sum_samples():
    return [((0, 1), 1), ((1, 1), 2), ((1, 2), 3), ((1, 0), 4)], [(0.0, 0.0), (1e-4, 0.0), (3e-4, 2e-4), (1e-3, 0.0)]


def lattice_sum_deviation(profile: KernelProfile, Q: float = 256.0) -> dict:
    ctx = PContext(profile, Q)
    worst = 0.0
    used = 0
    classes, ws = lattice_sum_samples()
    for a, q in classes:
        L = lattice_from(a, q)
        for w in ws:
            if not lattice_sum_regime(ctx, L, w):
                continue
            used += 1
            s = lattice_p2_sum(ctx, L, w)
            A = lattice_p2_asymptotic(ctx, q, w)
            worst = max(worst, abs(s / A - 1))
    return {"value": worst, "samples": used}


def plateau_samples(Q: float, delta: float, count: int = 50, seed: int = 0) -> List[tuple]:
    """(q, a, w) with q < Q^(1/2-delta), |w| < Q^(-1-delta)/q."""
    rng = random.Random(seed)
    qmax = Q ** (0.5 - delta)
    qs = [q for q in range(1, math.ceil(qmax)) if q < qmax]
    out = []
    for _ in range(count):
        q = rng.choice(qs)
        a = rng.choice(primitive_residues(q))
        rad = rng.random() * Q ** (-1 - delta) / q
        th = rng.random() * 2 * math.pi
        out.append((q, a, (rad * math.cos(th), rad * math.sin(th))))
    return out


def plateau_deviation(profile: KernelProfile, Q: float = 64.0, delta: float = 0.1, seed: int = 0) -> float:
    ctx = PContext(profile, Q)
    return max(abs(p_lambda(ctx, lattice_from(a, q), w) - 1.0) for q, a, w in plateau_samples(Q, delta, seed=seed))


def iq_truncation(P: float = 16.0) -> float:
    """max |I_q(w,u)| / P^s over |u| past (q/P)(1+P^2|w|) P^0.3 on diag3."""
    pair = fixture_pair("diag3")
    wt = plateau_weight(3)
    worst = 0.0
    rng = random.Random(0)
    for q in (1, 2, 5):
        for wr in (0.0, 1e-3, 1e-2):
            w = (wr, 0.5 * wr)
            thr = (q / P) * (1 + P * P * math.hypot(*w)) * P ** 0.3
            for _ in range(6):
                u = [rng.randint(-3, 3) for _ in range(3)]
                u[rng.randrange(3)] = math.ceil(thr) + rng.randint(0, 3)
                worst = max(worst, abs(iq(pair, wt, q, w, u, P)) / P ** 3)
    return worst


def calibrate_tolerances(profile: KernelProfile, log: Callable[[str], None] = lambda s: None) -> dict:
    out = {}
    out["p2_stationary"] = _tolerance(stationary_deviation(profile, 256.0, (1, 2, 4, 8, 16), 0.5), 0.05,
                                "p_2 vs stationary value, kq(Q|w.r|+1) <= Q^0.5, Q = 256",
                                q08_region=stationary_deviation(profile, 256.0, (32, 64), 0.8))
    log("p2_stationary")
    dlat = lattice_sum_deviation(profile)
    out["lattice_p2_sum"] = _tolerance(dlat["value"], 0.10, "lattice sum of p_2 vs its integral, Q = 256",
                                samples=dlat["samples"])
    log("lattice_p2_sum")
    out["plateau"] = _tolerance(plateau_deviation(profile), 0.05,
                                "|p_Lambda - 1| on the major-arc plateau, Q = 64, delta = 0.1")
    log("plateau")
    out["iq_truncation"] = _tolerance(iq_truncation(), 1e-3,
                                           "|I_q| / P^s past the u-truncation, diag3, P = 16")
    log("iq_truncation")
    return out


def calibrate_decomposition(profile: KernelProfile) -> dict:
    r = decomposition_check(fixture_pair("toy3"), plateau_weight(3), 4.0, profile=profile)
    return {"toy3,P=4": _tolerance(r["residual"], None, "|N - (N0+N1+N2)|",
                                   N=r["N"], N0=r["N0"], N1=r["N1"], N2=r["N2"])}


# ---------------------------------------------------------------- fixture

def build_fixture(profile: Optional[KernelProfile] = None, sections: Sequence[str] = SECTIONS,
                  log: Callable[[str], None] = lambda s: None) -> dict:
    prof = profile or default_profile()
    results = {}
    for sec in sections:
        if sec == "duality":
            results[sec] = calibrate_duality(prof)
        elif sec == "bounds":
            results[sec] = calibrate_bounds(prof, log)
        elif sec == "tolerances":
            results[sec] = calibrate_tolerances(prof, log)
        elif sec == "decomposition":
            results[sec] = calibrate_decomposition(prof)
        else:
            raise ValueError(f"unknown section {sec!r}")
        log(sec)
    inputs = input_hashes(prof)
    return {"version": FIXTURE_VERSION,
            "inputs": inputs,
            "input_hash": hashlib.sha256(_canonical(inputs)).hexdigest(),
            "results": results}


def _finalise(doc: dict, previous: Optional[dict]) -> dict:
    # chain: link to the previous fixture only when the inputs changed, so that
    # re-running on the same inputs reproduces the file byte for byte
    parent = None
    if previous is not None:
        if previous.get("input_hash") == doc["input_hash"]:
            parent = previous.get("parent_hash")
        else:
            parent = previous.get("content_hash")
    doc = dict(doc)
    doc["parent_hash"] = parent
    body = {k: v for k, v in doc.items() if k != "content_hash"}
    doc["content_hash"] = hashlib.sha256(_canonical(body)).hexdigest()
    return doc


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def load_fixture(path: Optional[Path] = None) -> dict:
    with open(path or default_fixture_path()) as fh:
        return json.load(fh)


def write_fixture(doc: dict, path: Optional[Path] = None) -> dict:
    path = Path(path or default_fixture_path())
    previous = load_fixture(path) if path.exists() else None
    doc = _finalise(doc, previous)
    path.write_text(dumps(doc))
    return doc


def entry_problems(name: str, entry: dict) -> List[str]:
    """Self-consistency of one entry against its own thresholds."""
    out = []
    if entry["kind"] == "constant" and entry["stability"] > STABILITY_FACTOR:
        out.append(f"{name}: constant unstable across sweep (max/min = {entry['stability']:.3g})")
    return out


def compare(recorded: dict, fresh: dict) -> List[str]:
    """Regressions of `fresh` results against the recorded fixture."""
    problems = []
    for sec, entries in fresh.items():
        old = recorded.get(sec, {})
        for name, e in entries.items():
            label = f"{sec}/{name}"
            problems += entry_problems(label, e)
            if name not in old:
                problems.append(f"{label}: missing from fixture")
                continue
            ref = old[name]["value"]
            if e["kind"] == "constant":
                if ref > 0 and not (ref / STABILITY_FACTOR <= e["value"] <= ref * STABILITY_FACTOR):
                    problems.append(f"{label}: constant {e['value']:.6g} vs recorded {ref:.6g}")
            elif e["value"] > ref * TOLERANCE_SLACK + 1e-12:
                problems.append(f"{label}: {e['value']:.6g} exceeds recorded {ref:.6g}")
    return problems


def check_fixture(path: Optional[Path] = None, profile: Optional[KernelProfile] = None,
                  sections: Sequence[str] = SECTIONS, log: Callable[[str], None] = lambda s: None) -> List[str]:
    recorded = load_fixture(path)
    prof = profile or default_profile()
    problems = []
    if recorded.get("version") != FIXTURE_VERSION:
        problems.append(f"fixture version {recorded.get('version')} != {FIXTURE_VERSION}")
    if recorded.get("input_hash") != hashlib.sha256(_canonical(input_hashes(prof))).hexdigest():
        problems.append("fixture inputs (kernel profile or pair files) changed; recalibrate")
    fresh = build_fixture(prof, sections, log)["results"]
    problems += compare(recorded["results"], fresh)
    return problems
