"""Command line front end.

Exit codes: 0 success, 2 validation error, 3 budget guard, 4 calibration
regression. Reports go to stdout as JSON (CSV for ``report``); errors go to
stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_BUDGET = 3
EXIT_REGRESSION = 4

# unforced ceilings; --force lifts them
MAX_Q = 1024
MAX_P = 24
MAX_EXPSUM_Q = 64

REPORT_COLUMNS = ("P", "Q", "N", "main_term", "n0", "ratio_N_main", "ratio_n0_main", "runtime_ms")


class ValidationError(ValueError):
    pass


class BudgetGuard(RuntimeError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


# ---------------------------------------------------------------- config

@dataclass
class RunConfig:
    command: str
    subcommand: Optional[str] = None
    params: dict = field(default_factory=dict)
    pair: Optional[str] = None
    kernel_tol: float = 1e-10
    delta_param: float = 0.05
    seed: int = 0
    jobs: int = 1
    force: bool = False
    out: Optional[str] = None
    fixture: Optional[str] = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return cls(**d)

    def validate(self) -> "RunConfig":
        if not (0 < self.kernel_tol <= 1e-6):
            raise ValidationError("--kernel-tol must lie in (0, 1e-6]")
        if not (0 < self.delta_param < 0.25):
            raise ValidationError("--delta must lie in (0, 1/4)")
        if not (0 <= self.seed < 2 ** 64):
            raise ValidationError("--seed must be a 64-bit unsigned integer")
        if self.jobs < 1:
            raise ValidationError("--jobs must be at least 1")
        return self


def _ints(text: str) -> List[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip() != ""]
    except ValueError:
        raise ValidationError(f"expected comma separated integers, got {text!r}")


def _floats(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError:
        raise ValidationError(f"expected comma separated numbers, got {text!r}")


def _vec(text: str, n: Optional[int] = None, kind=_ints):
    v = kind(text)
    if n is not None and len(v) != n:
        raise ValidationError(f"expected {n} components, got {text!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--force", action="store_true")
    common.add_argument("--kernel-tol", type=float, default=1e-10)
    common.add_argument("--delta", type=float, default=0.05)
    common.add_argument("--out")

    p = _Parser(prog="delta2d", description="Two-dimensional delta symbol toolkit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("delta").add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    v = d.add_parser("verify", parents=[common])
    v.add_argument("--Q", type=float, required=True)
    v.add_argument("--n", required=True)
    v.add_argument("--mode", choices=("closed_form", "quadrature"), default="closed_form")
    a = d.add_parser("arcs", parents=[common])
    a.add_argument("--Q", type=float, required=True)

    e = sub.add_parser("expsum").add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    for name in ("dq", "sqdc"):
        x = e.add_parser(name, parents=[common])
        x.add_argument("--pair", required=True)
        x.add_argument("--q", type=int, required=True)
        x.add_argument("--u", required=True)
        x.add_argument("--method", choices=("fast", "brute"), default="fast")
        if name == "sqdc":
            x.add_argument("--d", type=int, required=True)
            x.add_argument("--c", required=True)
    x = e.add_parser("check", parents=[common])
    x.add_argument("--pair", required=True)
    x.add_argument("--max-q", type=int, default=12)
    x.add_argument("--max-c", type=int, default=5)
    x.add_argument("--samples", type=int, default=3)

    lt = sub.add_parser("lattice").add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    x = lt.add_parser("info", parents=[common])
    x.add_argument("--a", required=True)
    x.add_argument("--q", type=int, required=True)
    x.add_argument("--w", default="0,0")
    x.add_argument("--Q", type=float, default=1.0)

    pf = sub.add_parser("pfunc").add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    x = pf.add_parser("p1", parents=[common])
    x.add_argument("--Q", type=float, required=True)
    x.add_argument("--q", type=int, required=True)
    x.add_argument("--w", default="0,0")
    x = pf.add_parser("p2", parents=[common])
    x.add_argument("--Q", type=float, required=True)
    x.add_argument("--r", required=True)
    x.add_argument("--k", type=int, required=True)
    x.add_argument("--q", type=int, required=True)
    x.add_argument("--w", default="0,0")
    x = pf.add_parser("plambda", parents=[common])
    x.add_argument("--Q", type=float, required=True)
    x.add_argument("--a", required=True)
    x.add_argument("--q", type=int, required=True)
    x.add_argument("--w", default="0,0")

    it = sub.add_parser("integral").add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    x = it.add_parser("iq", parents=[common])
    x.add_argument("--pair", required=True)
    x.add_argument("--q", type=int, default=1)
    x.add_argument("--w", required=True)
    x.add_argument("--u")
    x.add_argument("--P", type=float, required=True)
    x = it.add_parser("singular", parents=[common])
    x.add_argument("--pair", required=True)
    x.add_argument("--tol", type=float, default=1e-3)
    x = it.add_parser("series", parents=[common])
    x.add_argument("--pair", required=True)
    x.add_argument("--Q-max", type=int, default=100)

    ct = sub.add_parser("count").add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    x = ct.add_parser("run", parents=[common])
    x.add_argument("--pair", required=True)
    x.add_argument("--P", required=True)
    x.add_argument("--method", choices=("split", "brute"), default="split")
    x.add_argument("--box-radius", type=int)
    x.add_argument("--main", action="store_true")
    x.add_argument("--Q-max", type=int, default=100)

    cal = sub.add_parser("calibrate", parents=[common])
    cal.add_argument("--fixture")
    cal.add_argument("--check", action="store_true")
    cal.add_argument("--sections", default="duality,bounds,tolerances,decomposition")

    rp = sub.add_parser("report", parents=[common])
    rp.add_argument("--pair", required=True)
    rp.add_argument("--P", default="8,12,16,20")
    rp.add_argument("--Q-max", type=int, default=100)
    return p


_COMMON = ("seed", "jobs", "force", "kernel_tol", "delta", "out", "pair", "fixture", "command", "subcommand")


def config_from_args(argv: Sequence[str]) -> RunConfig:
    ns = vars(build_parser().parse_args(list(argv)))
    params = {k: v for k, v in ns.items() if k not in _COMMON}
    return RunConfig(command=ns["command"], subcommand=ns.get("subcommand"), params=params,
                     pair=ns.get("pair"), kernel_tol=ns["kernel_tol"], delta_param=ns["delta"],
                     seed=ns["seed"], jobs=ns["jobs"], force=ns["force"], out=ns.get("out"),
                     fixture=ns.get("fixture")).validate()


# ---------------------------------------------------------------- handlers

def _guard(cfg: RunConfig, ok: bool, what: str) -> None:
    if not ok and not cfg.force:
        raise BudgetGuard(f"{what}; pass --force to run anyway")


def _profile(cfg: RunConfig):
    from .kernels import build_kernel_profile, default_profile
    return default_profile() if cfg.kernel_tol == 1e-10 else build_kernel_profile(cfg.kernel_tol)


def _pair(cfg: RunConfig):
    from .calibration import PAIR_NAMES, fixture_pair
    from .quadpair import QuadraticPair
    if cfg.pair in PAIR_NAMES:
        return fixture_pair(cfg.pair)
    stem = Path(cfg.pair).stem
    if not Path(cfg.pair).exists() and stem in PAIR_NAMES:
        return fixture_pair(stem)
    return QuadraticPair.load(cfg.pair)


def _check_Q(cfg: RunConfig, Q: float) -> None:
    _guard(cfg, Q <= MAX_Q, f"Q = {Q:g} exceeds {MAX_Q}")


def _cmd_delta(cfg: RunConfig) -> dict:
    from .deltasym import arc_count, arc_partition, delta_decomposition, duality_rhs
    from .pfunc import PContext
    p = cfg.params
    Q = p["Q"]
    _check_Q(cfg, Q)
    prof = _profile(cfg)
    if cfg.subcommand == "verify":
        n = _vec(p["n"], 2)
        rhs = duality_rhs(prof, n, Q)
        weighted = duality_rhs(prof, n, Q, weighted=True)
        dec = delta_decomposition(PContext(prof, Q), n, mode=p["mode"])
        return {"n": n, "Q": Q, "duality": rhs.to_dict(), "duality_weighted": weighted.value,
                "decomposition": dec.value, "mode": p["mode"],
                "decomposition_gap": abs(dec.value - weighted.value)}
    arcs = arc_partition(Q, cfg.delta_param)
    return {"Q": Q, "delta": cfg.delta_param, "arcs": arc_count(Q),
            "major": sum(a.kind == "major" for a in arcs), "minor": sum(a.kind == "minor" for a in arcs)}


def _exp_value(v) -> dict:
    return v.to_dict()


def expsum_check(pair, max_q: int, max_c: int, samples: int, seed: int) -> dict:
    """Oracle sweep: fast evaluators against brute force on q <= max_q."""
    import random
    from .arith import content, divisors
    from .expsum import dq_brute, dq_fast, s_qdc_brute, s_qdc_fast
    rng = random.Random(seed)
    us = [[0] * pair.s] + [[rng.randint(-9, 9) for _ in range(pair.s)] for _ in range(samples)]
    cs = [(c1, c2) for c1 in range(-max_c, max_c + 1) for c2 in range(-max_c, max_c + 1)
          if (c1 or c2) and content((c1, c2)) == 1]
    worst_dq = worst_s = 0.0
    count = 0
    for q in range(1, max_q + 1):
        for u in us:
            a, b = dq_fast(pair, q, u).value, dq_brute(pair, q, u).value
            worst_dq = max(worst_dq, abs(a - b) / max(1.0, abs(b)))
            count += 1
            for d in divisors(q):
                for c in cs:
                    a, b = s_qdc_fast(pair, q, d, c, u).value, s_qdc_brute(pair, q, d, c, u).value
                    worst_s = max(worst_s, abs(a - b) / max(1.0, abs(b)))
                    count += 1
    return {"max_q": max_q, "max_c": max_c, "evaluations": count, "dq_max_rel_err": worst_dq,
            "sqdc_max_rel_err": worst_s, "pass": max(worst_dq, worst_s) <= 1e-6}


def _cmd_expsum(cfg: RunConfig) -> dict:
    from .expsum import dq_brute, dq_fast, s_qdc_brute, s_qdc_fast
    p = cfg.params
    pair = _pair(cfg)
    if cfg.subcommand == "check":
        _guard(cfg, p["max_q"] <= MAX_EXPSUM_Q, f"--max-q {p['max_q']} exceeds {MAX_EXPSUM_Q}")
        return expsum_check(pair, p["max_q"], p["max_c"], p["samples"], cfg.seed)
    q = p["q"]
    _guard(cfg, q <= 10 ** 6, f"q = {q} exceeds 10^6")
    u = _vec(p["u"], pair.s)
    if cfg.subcommand == "dq":
        f = dq_fast if p["method"] == "fast" else dq_brute
        return _exp_value(f(pair, q, u))
    c = _vec(p["c"], 2)
    f = s_qdc_fast if p["method"] == "fast" else s_qdc_brute
    return _exp_value(f(pair, q, p["d"], c, u))


def _cmd_lattice(cfg: RunConfig) -> dict:
    from .lattice import WeightedEmbedding, lattice_from, reduced_basis, shortest_vector
    p = cfg.params
    L = lattice_from(_vec(p["a"], 2), p["q"])
    E = WeightedEmbedding(tuple(_vec(p["w"], 2, _floats)), p["Q"])
    mu, v = shortest_vector(L, E)
    return {"a": list(L.a), "q": L.q, "basis": [list(b) for b in L.basis], "covolume": L.covolume,
            "mu": mu, "shortest": list(v), "reduced_basis": [list(b) for b in reduced_basis(L, E)]}


def _cmd_pfunc(cfg: RunConfig) -> dict:
    from .lattice import lattice_from
    from .pfunc import PContext, p1_eval, p2_eval, p_lambda
    p = cfg.params
    Q = p["Q"]
    _check_Q(cfg, Q)
    ctx = PContext(_profile(cfg), Q)
    w = _vec(p["w"], 2, _floats)
    if cfg.subcommand == "p1":
        return {"Q": Q, "q": p["q"], "w": w, "p1": p1_eval(ctx, p["q"], w)}
    if cfg.subcommand == "p2":
        r = _vec(p["r"], 2)
        return {"Q": Q, "r": r, "k": p["k"], "q": p["q"], "w": w, "p2": p2_eval(ctx, r, p["k"], p["q"], w)}
    a = _vec(p["a"], 2)
    return {"Q": Q, "a": a, "q": p["q"], "w": w, "p_lambda": p_lambda(ctx, lattice_from(a, p["q"]), w)}


def _cmd_integral(cfg: RunConfig) -> dict:
    from .counting import singular_series
    from .oscint import iq, plateau_weight, singular_integral
    p = cfg.params
    pair = _pair(cfg)
    if cfg.subcommand == "iq":
        w = _vec(p["w"], 2, _floats)
        u = _vec(p["u"], pair.s) if p.get("u") else [0] * pair.s
        v = iq(pair, plateau_weight(pair.s), p["q"], w, u, p["P"])
        return {"q": p["q"], "w": w, "u": u, "P": p["P"], "re": v.real, "im": v.imag}
    if cfg.subcommand == "singular":
        J = singular_integral(pair, None, p["tol"])
        return {"value": J.value, "tail": J.tail, "W_max": J.W_max, "envelope_C": J.envelope_C, "imag": J.imag}
    _guard(cfg, p["Q_max"] <= 400, f"--Q-max {p['Q_max']} exceeds 400")
    S = singular_series(pair, p["Q_max"])
    return {"value": S.value, "tail_bound": S.tail_bound, "C": S.C, "eps": S.eps, "imag_max": S.imag_max}


def _cmd_count(cfg: RunConfig) -> dict:
    from .counting import count_points_brute, count_points_split, end_to_end_report
    from .oscint import plateau_weight
    p = cfg.params
    pair = _pair(cfg)
    Ps = _vec(p["P"], None, _floats)
    if not Ps:
        raise ValidationError("--P needs at least one value")
    _guard(cfg, max(Ps) <= MAX_P, f"P = {max(Ps):g} exceeds {MAX_P}")
    weight = plateau_weight(pair.s)
    if p["main"]:
        reports = end_to_end_report(pair, weight, Ps, cfg.delta_param, p["Q_max"])
        return {"delta": cfg.delta_param, "rows": [r.to_dict() for r in reports]}
    f = count_points_split if p["method"] == "split" else count_points_brute
    rows = []
    for P in Ps:
        t = time.perf_counter()
        N = f(pair, weight, P, box_radius=p.get("box_radius"))
        rows.append({"P": P, "N": N, "runtime_ms": (time.perf_counter() - t) * 1e3})
    return {"method": p["method"], "rows": rows}


def _cmd_calibrate(cfg: RunConfig) -> dict:
    from .calibration import build_fixture, check_fixture, write_fixture
    p = cfg.params
    sections = [s for s in p["sections"].split(",") if s]
    log = lambda s: print(json.dumps({"progress": s}), file=sys.stderr)
    prof = _profile(cfg)
    if p["check"]:
        problems = check_fixture(cfg.fixture, prof, sections, log)
        if problems:
            raise RegressionFound(problems)
        return {"status": "ok", "sections": sections}
    doc = write_fixture(build_fixture(prof, sections, log), cfg.fixture)
    return {"status": "written", "content_hash": doc["content_hash"], "input_hash": doc["input_hash"]}


def report_rows(reports) -> List[dict]:
    rows = []
    for r in reports:
        rows.append({"P": r.P, "Q": r.Q, "N": r.N_exact, "main_term": r.main_term, "n0": r.N0,
                     "ratio_N_main": r.ratio_N_main, "ratio_n0_main": r.ratio_n0_main,
                     "runtime_ms": round(sum(r.runtime_ms.values()), 3)})
    return rows


def render_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\r\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def _cmd_report(cfg: RunConfig) -> str:
    from .counting import end_to_end_report
    from .oscint import plateau_weight
    p = cfg.params
    pair = _pair(cfg)
    Ps = _vec(p["P"], None, _floats)
    _guard(cfg, max(Ps) <= MAX_P, f"P = {max(Ps):g} exceeds {MAX_P}")
    reports = end_to_end_report(pair, plateau_weight(pair.s), Ps, cfg.delta_param, p["Q_max"])
    return render_csv(report_rows(reports))


class RegressionFound(RuntimeError):
    def __init__(self, problems):
        super().__init__("calibration regression")
        self.problems = list(problems)


HANDLERS = {"delta": _cmd_delta, "expsum": _cmd_expsum, "lattice": _cmd_lattice, "pfunc": _cmd_pfunc,
            "integral": _cmd_integral, "count": _cmd_count, "calibrate": _cmd_calibrate,
            "report": _cmd_report}


def _emit(cfg: RunConfig, result) -> None:
    text = result if isinstance(result, str) else json.dumps(result, indent=2, default=str) + "\n"
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)


def _error(code: int, kind: str, message: str, **extra) -> int:
    d = {"error": kind, "message": message, "exit_code": code}
    d.update(extra)
    print(json.dumps(d), file=sys.stderr)
    return code


def dispatch(cfg: RunConfig) -> int:
    from .expsum import BudgetError
    from .oscint import IntegralBudgetError
    try:
        cfg.validate()
        _emit(cfg, HANDLERS[cfg.command](cfg))
        return EXIT_OK
    except RegressionFound as exc:
        return _error(EXIT_REGRESSION, "calibration_regression", str(exc), problems=exc.problems)
    except (BudgetGuard, BudgetError, IntegralBudgetError) as exc:
        return _error(EXIT_BUDGET, "budget", str(exc))
    except (ValidationError, ValueError, ArithmeticError) as exc:
        return _error(EXIT_VALIDATION, "validation", str(exc))
    except OSError as exc:
        return _error(EXIT_VALIDATION, "io", str(exc))


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        cfg = config_from_args(sys.argv[1:] if argv is None else argv)
    except ValidationError as exc:
        return _error(EXIT_VALIDATION, "validation", str(exc))
    return dispatch(cfg)


if __name__ == "__main__":
    sys.exit(main())
