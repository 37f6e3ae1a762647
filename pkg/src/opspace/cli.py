"""``opspace run``: seeded experiment suites with JSON, CSV or text reports.

Every suite returns a section ``{"name", "ok", "columns", "rows", "failures"}``;
the process exits 0 only when every executed section is ok. Seeds for the
suites are derived from the master seed and the suite name, so a suite gives
the same numbers whether it runs alone, inside ``all``, or in a worker.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .bioperators import (
    bifunctional,
    bifunctional_composite,
    compression_identity_check,
    estimate_scb,
    estimate_wcb,
    inner_product_bifunctional,
    opposite,
    strong_amplify,
    weak_amplify,
    witness_report,
)
from .matrix_core import (
    DiamondContext,
    delta_conjugate,
    diamond,
    diamond_square_factor,
    op_norm,
    random_cmatrix,
    rank_one,
)
from .quantum_space import (
    amplified_norm,
    cb_norm_estimate,
    check_ruan_ri,
    check_ruan_rii,
    make_column_hilbertian,
    make_conjugate_column,
    make_conjugate_row,
    make_matrix_space,
    make_omega,
    make_row_hilbertian,
    make_varpi,
    module_action,
    random_element,
    random_operator_space,
    spatial_product,
)
from .tensor_products import (
    EQUALITY_CASES,
    chain_brackets,
    diamond_tensor,
    effros,
    effros_rep,
    equality_suite,
    merge_effros,
    merge_rigged,
    reconstruction_error,
    rigged_rep,
)

SUITES = ("growth", "counterexamples", "axioms", "identities", "merges", "chain",
          "equalities", "factorization")
FORMATS = ("json", "csv", "text")


@dataclass
class ExperimentConfig:
    suite: str = "all"
    seed: int = 0
    max_n: int = 8
    restarts: int = 4
    iterations: int = 50
    trials: int = 20
    fmt: str = "json"
    out: str | None = None
    jobs: int = 1

    def __post_init__(self):
        if self.suite not in SUITES + ("all",):
            raise ValueError(f"unknown suite {self.suite!r}")
        if self.fmt not in FORMATS:
            raise ValueError(f"unknown format {self.fmt!r}")
        for name in ("max_n", "restarts", "iterations", "trials", "jobs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    @property
    def suites(self) -> tuple[str, ...]:
        return SUITES if self.suite == "all" else (self.suite,)


def suite_seed(seed: int, name: str) -> int:
    ss = np.random.SeedSequence([seed & (2**64 - 1), SUITES.index(name)])
    return int(ss.generate_state(1, np.uint64)[0])


class _Section:
    def __init__(self, name: str, columns):
        self.name, self.columns = name, list(columns)
        self.rows, self.failures = [], []

    def row(self, **values):
        self.rows.append(values)

    def check(self, cond: bool, message: str):
        if not cond:
            self.failures.append(message)

    def result(self) -> dict:
        return {"name": self.name, "ok": not self.failures, "columns": self.columns,
                "rows": self.rows, "failures": self.failures}


def run_growth(cfg: ExperimentConfig, seed: int) -> dict:
    """Lower bounds for the cb norm of the identity ``H_c -> H_r`` at level ``n``;
    every sampled candidate must stay below ``sqrt(n)`` and the estimate must
    reach it."""
    sec = _Section("growth", ["n", "estimate", "expected", "max_sampled"])
    for n in range(1, cfg.max_n + 1):
        Hc, Hr = make_column_hilbertian(n), make_row_hilbertian(n)
        est = cb_norm_estimate(np.eye(n), Hc, Hr, n, cfg.restarts, cfg.iterations,
                               seed=(seed, n), witnesses=[make_omega(n, n, Hc)])
        expected = math.sqrt(n)
        sec.row(n=n, estimate=est.value, expected=expected, max_sampled=est.max_sampled,
                witness=est.witness[0].to_json(inline_space=False))
        sec.check(est.value >= expected - 1e-9, f"n={n}: estimate {est.value} < {expected}")
        sec.check(est.max_sampled <= expected + 1e-6,
                  f"n={n}: sampled {est.max_sampled} exceeds {expected}")
    return sec.result()


def run_counterexamples(cfg: ExperimentConfig, seed: int) -> dict:
    """Unbounded growth of the inner product under both amplifications, and the
    contrasting boundedness of a bifunctional on ``H_r x K_c``."""
    sec = _Section("counterexamples", ["n", "scb_col_row", "wcb_col_col", "wcb_row_row",
                                       "wcb_row_col_max", "f_norm"])
    rng = np.random.default_rng(seed)
    for n in range(1, cfg.max_n + 1):
        Hc, Hr = make_column_hilbertian(n), make_row_hilbertian(n)
        Hbr, Hbc = make_conjugate_row(n), make_conjugate_column(n)
        sub = (seed, n)
        scb = estimate_scb(inner_product_bifunctional(Hc, Hbr), n, 1, cfg.iterations, sub,
                           [(make_omega(n, n, Hc), make_varpi(n, n, Hbr))])
        wcc = estimate_wcb(inner_product_bifunctional(Hc, Hbc), n, 1, cfg.iterations, sub,
                           [(make_omega(n, n, Hc), make_omega(n, n, Hbc))])
        wrr = estimate_wcb(inner_product_bifunctional(Hr, Hbr), n, 1, cfg.iterations, sub,
                           [(make_varpi(n, n, Hr), make_varpi(n, n, Hbr))])
        f = bifunctional(Hr, Hc, random_cmatrix(rng, n, n))
        fn = op_norm(f.structure[:, :, 0])
        bounded = estimate_wcb(f, n, cfg.restarts, cfg.iterations, sub)
        sec.row(n=n, scb_col_row=scb.value, wcb_col_col=wcc.value, wcb_row_row=wrr.value,
                wcb_row_col_max=bounded.max_sampled, f_norm=fn,
                witnesses={"scb": witness_report(scb), "wcb_col_col": witness_report(wcc),
                           "wcb_row_row": witness_report(wrr)})
        sec.check(scb.value >= n - 1e-10, f"n={n}: scb {scb.value} < {n}")
        for label, est in (("col_col", wcc), ("row_row", wrr)):
            sec.check(est.value >= math.sqrt(n) - 1e-10, f"n={n}: wcb {label} {est.value} < sqrt(n)")
        sec.check(bounded.max_sampled <= fn + 1e-8,
                  f"n={n}: bounded bifunctional sampled {bounded.max_sampled} > {fn}")
    return sec.result()


def _test_spaces(rng):
    Hc, Hr = make_column_hilbertian(3), make_row_hilbertian(3)
    return {"column": Hc, "row": Hr, "matrix": make_matrix_space(2),
            "random": random_operator_space(rng, 3, 2, 3),
            "spatial": spatial_product(make_column_hilbertian(2), make_row_hilbertian(2))}


def run_axioms(cfg: ExperimentConfig, seed: int) -> dict:
    """Ruan's inequality and orthogonal-support equality, and the square-sum
    bound for pieces with orthogonal left or right supports."""
    sec = _Section("axioms", ["space", "trials", "ri_max_excess", "rii_max_error",
                              "square_sum_max_excess"])
    rng = np.random.default_rng(seed)
    for name, E in _test_spaces(rng).items():
        ri_ex = rii_err = sq_ex = 0.0
        for _ in range(cfg.trials):
            m = int(rng.integers(2, 5))
            u = random_element(E, rng, m)
            a, b = random_cmatrix(rng, m), random_cmatrix(rng, m)
            lhs = amplified_norm(module_action(a, u, b))
            ri_ex = max(ri_ex, lhs - op_norm(a) * amplified_norm(u) * op_norm(b))
            sec.check(check_ruan_ri(a, u, b), f"{name}: RI violated")

            k = int(rng.integers(1, m))
            P = np.diag([1.0] * k + [0.0] * (m - k)).astype(complex)
            Q = np.eye(m) - P
            w1 = module_action(P, random_element(E, rng, m), P)
            w2 = module_action(Q, random_element(E, rng, m), Q)
            rep = check_ruan_rii(w1, w2, P, Q)
            rii_err = max(rii_err, abs(rep.norm_sum - rep.expected) / max(rep.expected, 1e-300))
            sec.check(rep.ok, f"{name}: RII violated")

            n = int(rng.integers(1, 6))
            side = rng.integers(2)
            pieces = []
            for p in range(n):
                Pk = np.zeros((n * m, n * m), dtype=complex)
                Pk[p * m:(p + 1) * m, p * m:(p + 1) * m] = np.eye(m)
                w = random_element(E, rng, n * m)
                pieces.append(module_action(Pk, w) if side == 0 else module_action(None, w, Pk))
            total = pieces[0]
            for w in pieces[1:]:
                total = total + w
            bound = math.sqrt(sum(amplified_norm(w) ** 2 for w in pieces))
            excess = amplified_norm(total) - bound
            sq_ex = max(sq_ex, excess)
            sec.check(excess <= 1e-12 * max(bound, 1.0), f"{name}: square-sum bound violated")
        sec.row(space=name, trials=cfg.trials, ri_max_excess=ri_ex, rii_max_error=rii_err,
                square_sum_max_excess=sq_ex)
    return sec.result()


def _rel(x, y) -> float:
    x, y = np.asarray(x), np.asarray(y)
    scale = max(float(np.abs(y).max()) if y.size else 0.0, 1.0)
    return float(np.abs(x - y).max()) / scale if x.size else 0.0


def identity_errors(rng: np.random.Generator) -> dict:
    """Relative errors of the structural identities on one random instance."""
    m = int(rng.integers(2, 4))
    ctx = DiamondContext(m)
    E = random_operator_space(rng, 2, 2, 2)
    F = make_matrix_space(2)
    a, b, c, d = (random_cmatrix(rng, m) for _ in range(4))
    xi, eta, xi2, eta2 = (random_cmatrix(rng, m, 1).ravel() for _ in range(4))
    u, v = random_element(E, rng, m), random_element(F, rng, m)
    out = {}
    out["rank_one_product"] = _rel(rank_one(xi, eta) @ rank_one(xi2, eta2),
                                   np.vdot(eta, xi2) * rank_one(xi, eta2))
    out["rank_one_module"] = _rel(a @ rank_one(xi, eta), rank_one(a @ xi, eta))
    ab = diamond(a, b, ctx)
    out["diamond_product"] = _rel(ab @ diamond(c, d, ctx), diamond(a @ c, b @ d, ctx))
    out["diamond_adjoint"] = _rel(ab.conj().T, diamond(a.conj().T, b.conj().T, ctx))
    out["diamond_norm"] = abs(op_norm(ab) - op_norm(a) * op_norm(b)) / (op_norm(a) * op_norm(b))
    from .bioperators import diamond_act_left, diamond_act_right
    out["diamond_module_left"] = _rel(module_action(ab, diamond_act_left(c, u, ctx)).coeffs,
                                      diamond_act_left(a @ c, module_action(b, u), ctx).coeffs)
    out["diamond_module_right"] = _rel(
        module_action(None, diamond_act_right(u, c, ctx), ab).coeffs,
        diamond_act_right(module_action(None, u, a), c @ b, ctx).coeffs)
    lhs = module_action(ab, diamond_tensor(u, v, ctx), diamond(c, d, ctx))
    rhs = diamond_tensor(module_action(a, u, c), module_action(b, v, d), ctx)
    out["diamond_tensor_module"] = _rel(lhs.coeffs, rhs.coeffs)
    out["effros_balanced"] = _rel(effros(module_action(None, u, a), v).coeffs,
                                  effros(u, module_action(a, v)).coeffs)
    R = _random_bioperator(rng, E, F)
    P = np.diag((rng.random(m) < 0.6).astype(float)).astype(complex)
    rep = compression_identity_check(R, u, v, P, ctx)
    out["compression_identity"] = rep.error / max(1.0, rep.lhs_norm)
    out["opposite_flip"] = _rel(weak_amplify(opposite(R), v, u, ctx).coeffs,
                                np.array([delta_conjugate(x, ctx)
                                          for x in weak_amplify(R, u, v, ctx).coeffs]))
    h, k = 3, 2
    Hr, Kc = make_row_hilbertian(h), make_column_hilbertian(k)
    f = bifunctional(Hr, Kc, random_cmatrix(rng, h, k))
    vv, uu = random_element(Hr, rng, m), random_element(Kc, rng, m)
    out["bifunctional_composite"] = _rel(bifunctional_composite(f, vv, uu),
                                         strong_amplify(f, vv, uu).coeffs[0])
    return out


def _random_bioperator(rng, E, F):
    from .bioperators import Bioperator
    G = random_operator_space(rng, 2, 2, 2)
    c = (rng.standard_normal((E.dim, F.dim, G.dim))
         + 1j * rng.standard_normal((E.dim, F.dim, G.dim)))
    return Bioperator(E, F, G, c)


IDENTITY_TOL = 1e-12


def run_identities(cfg: ExperimentConfig, seed: int) -> dict:
    sec = _Section("identities", ["identity", "trials", "max_relative_error"])
    worst: dict[str, float] = {}
    for rng in (np.random.default_rng([seed, t]) for t in range(cfg.trials * 10)):
        for key, err in identity_errors(rng).items():
            worst[key] = max(worst.get(key, 0.0), err)
    for key, err in worst.items():
        sec.row(identity=key, trials=cfg.trials * 10, max_relative_error=err)
        sec.check(err <= IDENTITY_TOL, f"{key}: error {err}")
    return sec.result()


def merge_checks(rng: np.random.Generator) -> dict:
    """Reconstruction errors and norm-bound excesses for one random merge of
    each kind."""
    E, F = random_operator_space(rng, 2, 2, 2), make_matrix_space(2)
    n = int(rng.integers(2, 5))
    terms = []
    for _ in range(n):
        r, s, c = (int(x) for x in rng.integers(1, 4, 3))
        terms.append((random_element(E, rng, r, s), random_element(F, rng, s, c)))
    r0, c0 = terms[0][0].shape[0], terms[0][1].shape[1]
    terms = [(random_element(E, rng, r0, u.shape[1]), random_element(F, rng, v.shape[0], c0))
             for u, v in terms]
    rep = effros_rep(*terms)
    U = rep.assemble()
    merged = merge_effros(rep, balanced=False)
    (u, v), = merged.terms
    out = {"effros_reconstruction": reconstruction_error(merged, U)}
    out["effros_u_excess"] = amplified_norm(u) - math.sqrt(sum(amplified_norm(x) ** 2 for x, _ in terms))
    out["effros_v_excess"] = amplified_norm(v) - math.sqrt(sum(amplified_norm(y) ** 2 for _, y in terms))
    bal = merge_effros(rep)
    out["effros_balanced_excess"] = bal.value() - rep.value()

    rterms = []
    for _ in range(n):
        m1, m2, m3, m4 = (int(x) for x in rng.integers(1, 4, 4))
        uk, vk = random_element(E, rng, m1, m2), random_element(F, rng, m3, m4)
        rterms.append((random_cmatrix(rng, 2, m1 * m3), uk, vk, random_cmatrix(rng, m2 * m4, 3)))
    rrep = rigged_rep(*rterms)
    V = rrep.assemble()
    rmerged = merge_rigged(rrep)
    (a, _, _, b), = rmerged.terms
    from .tensor_products import normalize_rigged
    norm_terms = [normalize_rigged(t) for t in rrep.terms]
    out["rigged_reconstruction"] = reconstruction_error(rmerged, V)
    out["rigged_a_excess"] = op_norm(a) - math.sqrt(sum(op_norm(t[0]) ** 2 for t in norm_terms))
    out["rigged_b_excess"] = op_norm(b) - math.sqrt(sum(op_norm(t[3]) ** 2 for t in norm_terms))
    out["rigged_value_excess"] = rmerged.value() - rrep.value()
    return out


def run_merges(cfg: ExperimentConfig, seed: int) -> dict:
    sec = _Section("merges", ["quantity", "trials", "max_value"])
    worst: dict[str, float] = {}
    for t in range(cfg.trials * 5):
        for key, val in merge_checks(np.random.default_rng([seed, t])).items():
            worst[key] = max(worst.get(key, -math.inf), val)
    for key, val in worst.items():
        sec.row(quantity=key, trials=cfg.trials * 5, max_value=val)
        tol = 1e-10 if "reconstruction" in key else 1e-9
        sec.check(val <= tol, f"{key}: {val}")
    return sec.result()


def chain_instance(rng: np.random.Generator, restarts: int, iterations: int, seed) -> dict:
    """Spatial, Haagerup and four-named brackets of a random sum of Effros symbols."""
    spaces = [make_column_hilbertian, make_row_hilbertian, make_matrix_space]
    E = spaces[int(rng.integers(3))](int(rng.integers(1, 4)) if rng.random() < 0.7 else 2)
    F = random_operator_space(rng, int(rng.integers(1, 4)), 2, 2)
    m = int(rng.integers(1, 3))
    terms = [(random_element(E, rng, m), random_element(F, rng, m))
             for _ in range(int(rng.integers(1, 3)))]
    rep = effros_rep(*terms)
    U = rep.assemble()
    sp, hb, fb = chain_brackets(rep, restarts, iterations, functionals=8, seed=seed)
    return {"spatial": sp, "h_lower": hb.lower, "h_upper": hb.upper,
            "four_lower": fb.lower, "four_upper": fb.upper,
            "h_error": reconstruction_error(hb.witness, U),
            "four_error": reconstruction_error(fb.witness, U)}


def run_chain(cfg: ExperimentConfig, seed: int) -> dict:
    sec = _Section("chain", ["trial", "spatial", "h_lower", "h_upper", "four_upper"])
    for t in range(cfg.trials):
        rng = np.random.default_rng([seed, t])
        r = chain_instance(rng, 1, min(cfg.iterations, 20), (seed, t))
        sec.row(trial=t, **{k: r[k] for k in ("spatial", "h_lower", "h_upper", "four_upper")})
        sec.check(r["spatial"] <= r["h_upper"] + 1e-9, f"trial {t}: spatial > h upper")
        sec.check(r["h_lower"] <= r["four_upper"] + 1e-9, f"trial {t}: h lower > 4 upper")
        sec.check(max(r["h_error"], r["four_error"]) <= 1e-10,
                  f"trial {t}: certificate does not reconstruct")
    return sec.result()


def run_equalities(cfg: ExperimentConfig, seed: int) -> dict:
    sec = _Section("equalities", ["case", "h", "space", "seed", "lower", "upper",
                                  "relative_gap", "ok"])
    trials = max(1, cfg.trials // 10)
    for case in EQUALITY_CASES:
        for h in (2, 3):
            for space in ("M2", "random3"):
                for t in range(trials):
                    s = suite_seed(seed, "equalities") % (2**31) + 1000 * t + h
                    rep = equality_suite(case, h, space, 2, s)
                    sec.row(case=case, h=h, space=space, seed=s, lower=rep["lower"],
                            upper=rep["upper"], relative_gap=rep["relative_gap"], ok=rep["ok"])
                    sec.check(rep["ok"], f"{case} h={h} {space} seed={s}: gap {rep['relative_gap']}")
    return sec.result()


def run_factorization(cfg: ExperimentConfig, seed: int) -> dict:
    sec = _Section("factorization", ["m", "trials", "max_relative_error"])
    for m in (2, 3):
        ctx = DiamondContext(m)
        worst = 0.0
        for t in range(cfg.trials * 5):
            rng = np.random.default_rng([seed, m, t])
            a = random_cmatrix(rng, m * m)
            b, c, bp = diamond_square_factor(a, ctx)
            err = op_norm(a - b @ diamond(c, c, ctx) @ bp) / op_norm(a)
            worst = max(worst, err)
        sec.row(m=m, trials=cfg.trials * 5, max_relative_error=worst)
        sec.check(worst <= 1e-8, f"m={m}: reconstruction error {worst}")
    return sec.result()


RUNNERS = {
    "growth": run_growth,
    "counterexamples": run_counterexamples,
    "axioms": run_axioms,
    "identities": run_identities,
    "merges": run_merges,
    "chain": run_chain,
    "equalities": run_equalities,
    "factorization": run_factorization,
}


def _run_one(args):
    name, cfg = args
    return RUNNERS[name](cfg, suite_seed(cfg.seed, name))


def run_suite(cfg: ExperimentConfig) -> dict:
    """Run the configured suites and assemble the report (without writing it)."""
    jobs = [(name, cfg) for name in cfg.suites]
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            sections = list(pool.map(_run_one, jobs))
    else:
        sections = [_run_one(j) for j in jobs]
    config = asdict(cfg)
    for key in ("out", "jobs", "fmt"):
        config.pop(key)
    return {
        "version": __version__,
        "config": config,
        "ok": all(s["ok"] for s in sections),
        "sections": sections,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }


def _fmt_value(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    single = len(report["sections"]) == 1
    for sec in report["sections"]:
        if fmt == "csv":
            if not single:
                buf.write(f"# {sec['name']}\n")
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(sec["columns"])
            for row in sec["rows"]:
                w.writerow([_fmt_value(row[c]) for c in sec["columns"]])
        else:
            status = "PASS" if sec["ok"] else "FAIL"
            buf.write(f"== {sec['name']} [{status}]\n")
            table = [sec["columns"]] + [[_fmt_value(r[c]) for c in sec["columns"]]
                                        for r in sec["rows"]]
            widths = [max(len(row[i]) for row in table) for i in range(len(table[0]))]
            for row in table:
                buf.write("  ".join(v.rjust(wd) for v, wd in zip(row, widths)) + "\n")
            for msg in sec["failures"]:
                buf.write(f"  failure: {msg}\n")
            buf.write("\n")
    if fmt == "text":
        buf.write(f"overall: {'PASS' if report['ok'] else 'FAIL'}\n")
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="opspace", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run experiment suites")
    run.add_argument("--suite", choices=SUITES + ("all",), default="all")
    run.add_argument("--seed", type=int, default=0,
                     help="master seed (OPSPACE_SEED overrides it)")
    run.add_argument("--max-n", type=int, default=8, dest="max_n")
    run.add_argument("--restarts", type=int, default=4)
    run.add_argument("--iters", type=int, default=50, dest="iterations")
    run.add_argument("--trials", type=int, default=20,
                     help="instance count scale for the sampled suites")
    run.add_argument("--format", choices=FORMATS, default="json", dest="fmt")
    run.add_argument("--out", default=None, help="report path (default: stdout)")
    run.add_argument("--jobs", type=int, default=1, help="worker processes for suites")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    env_seed = os.environ.get("OPSPACE_SEED")
    if env_seed is not None:
        try:
            args.seed = int(env_seed)
        except ValueError:
            parser.error(f"OPSPACE_SEED must be an integer, got {env_seed!r}")
    try:
        cfg = ExperimentConfig(args.suite, args.seed, args.max_n, args.restarts,
                               args.iterations, args.trials, args.fmt, args.out, args.jobs)
    except ValueError as exc:
        parser.error(str(exc))
    report = run_suite(cfg)
    text = render(report, cfg.fmt)
    if cfg.out:
        try:
            with open(cfg.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"error: cannot write report to {cfg.out}: {exc.strerror}", file=sys.stderr)
            return 3
    else:
        sys.stdout.write(text)
    for sec in report["sections"]:
        if not sec["ok"]:
            print(f"FAIL {sec['name']}: {sec['failures'][0]}", file=sys.stderr)
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
