"""Command-line experiment runner.

``circleconj <subcommand> --config cfg.json [--out DIR] [--seed N] [--precision standard|extended]``

Every subcommand writes CSV tables, a JSON summary and ``summary.txt`` into
the output directory.  The exit status reports execution health only: a
divergent verdict is a result, while a module error writes ``errors.json``
next to whatever artifacts already exist and exits with status 1.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import traceback
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import conjugacy, crossratio, denjoy, integrability, maps, mocs, numberth
from ._io import jsonable, write_csv, write_json, write_summary
from .errors import CircleConjError

SUBCOMMANDS = ("cf", "rotnum", "crossratio", "denjoy", "conjugate", "integrability", "appendix")
DEFAULT_MAP = {"family": "sine", "K": 0.5, "tune": "golden"}


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------------ config


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def parse_number(x):
    """Named constant, ``"p/q"`` string, int or float."""
    if isinstance(x, str):
        if x in numberth.NAMED_CONSTANTS:
            return numberth.NAMED_CONSTANTS[x]
        if "/" in x:
            return Fraction(x)
        return float(x)
    return x


def build_map(cfg: dict):
    """CircleMap from ``cfg["map"]``; a ``tune`` key tunes omega to a target."""
    spec = dict(cfg.get("map", DEFAULT_MAP))
    family = spec.pop("family", "sine")
    info = {"family": family}
    if family == "sine" and "tune" in spec:
        target = spec.pop("tune")
        tr = maps.tune_parameter(float(spec.get("K", 0.5)), target)
        info.update({"tuned_to": target, "omega": tr.omega, "K": tr.K, "matched": tr.matched,
                     "error": tr.error})
        return tr.map(), info
    if family == "rigid" and isinstance(spec.get("rho"), str):
        info["rho"] = spec["rho"]
    m = maps.make_map(family, **spec)
    info.update({k: v for k, v in m.params.items() if isinstance(v, (int, float, str))})
    return m, info


def build_moc(spec):
    if spec is None:
        return None
    return mocs.make_moc(spec["kind"], spec.get("params", {}))


def build_phi(spec) -> numberth.PhiType:
    if spec is None:
        return numberth.phi_constant()
    return numberth.PhiType(spec["kind"], dict(spec.get("params", {})))


# ------------------------------------------------------------- subcommands


def run_cf(cfg, out: Path) -> dict:
    x = parse_number(cfg.get("x", "golden"))
    n = int(cfg.get("n_terms", 20))
    if "ks" in cfg:
        cf = numberth.from_quotients(cfg["ks"])
    else:
        cf = numberth.cf_expand(x, n, strict=bool(cfg.get("strict", False)))
    rows = cf.rows()
    write_csv(out / "cf.csv", ["n", "k", "p", "q", "delta"], rows)
    det_ok = all(cf.p(i) * cf.q(i - 1) - cf.p(i - 1) * cf.q(i) == (-1) ** (i + 1)
                 for i in range(0, cf.depth + 1))
    rho = Fraction(x) if "ks" not in cfg and isinstance(x, Fraction) else Fraction(cf.rho)
    last = cf.depth - 1 if rho == Fraction(cf.p(cf.depth), cf.q(cf.depth)) else None

    def within(i):
        err = abs(rho - Fraction(cf.p(i), cf.q(i)))
        bound = Fraction(1, cf.q(i) * cf.q(i + 1))
        return err <= bound if i == last else err < bound

    bound_ok = all(within(i) for i in range(1, cf.depth))
    checks = {"determinant identity": det_ok, "approximation bound": bound_ok}
    summary = {"cf": cf.to_dict(), "checks": checks}
    lines = [f"quotients: {list(cf.ks)}", f"depth: {cf.depth}"]
    return summary, lines, checks


def run_rotnum(cfg, out: Path) -> dict:
    m, info = build_map(cfg)
    depth = int(cfg.get("depth", 12))
    res = maps.rotation_number(m, float(cfg.get("x0", 0.0)), depth, birkhoff=True,
                               precision=cfg.get("precision", "standard"))
    rows = [(i + 1, k, q, p, d) for i, (k, q, p, d) in
            enumerate(zip(res.ks, res.q_returns, res.p_returns, res.displacements))]
    write_csv(out / "rotnum.csv", ["n", "k", "q", "p", "displacement"], rows)
    alternating = all(np.sign(res.displacements[i]) != np.sign(res.displacements[i + 1])
                      for i in range(len(res.displacements) - 1))
    checks = {"closest returns alternate sides": alternating}
    summary = {"map": info, "rotation": res.to_dict(), "fraction": res.fraction, "checks": checks}
    lines = [f"rho ~ {res.rho_est!r}", f"quotients: {list(res.ks)}"]
    return summary, lines, checks


def run_crossratio(cfg, out: Path) -> dict:
    m, info = build_map(cfg)
    spans = np.geomspace(float(cfg.get("span_min", 1e-4)), float(cfg.get("span_max", 1e-1)),
                         int(cfg.get("n_spans", 13)))
    center = float(cfg.get("center", 0.3))
    n = int(cfg.get("n", 64))
    seed = int(cfg.get("seed", 0))
    moc = build_moc(cfg.get("modulus"))
    d = crossratio.residual_scan_D(m, center, spans, moc, n, seed)
    dist = crossratio.residual_scan_Dist(m, center, spans, moc, n, seed)
    rows = [("D",) + r for r in d.rows()] + [("Dist",) + r for r in dist.rows()]
    write_csv(out / "crossratio.csv", ["quantity", "span", "residual", "omega", "case"], rows)
    checks = {
        "D slope in [0.9, 1.1]": 0.9 <= d.slope <= 1.1,
        "Dist slope in [0.9, 1.1]": 0.9 <= dist.slope <= 1.1,
    }
    summary = {"map": info, "D": d.to_dict(), "Dist": dist.to_dict(), "checks": checks}
    lines = [f"D slope {d.slope:.4f}", f"Dist slope {dist.slope:.4f}"]
    return summary, lines, checks


def run_denjoy(cfg, out: Path) -> dict:
    m, info = build_map(cfg)
    N = int(cfg.get("N", 14))
    rep = denjoy.denjoy_inequality_report(m, build_moc(cfg.get("modulus")), N,
                                          int(cfg.get("grid_size", 1024)),
                                          float(cfg.get("x0", 0.0)),
                                          int(cfg.get("distortion_samples", 0)))
    write_csv(out / "denjoy.csv", ["n", "q", "delta", "l", "tau", "sup_dev", "ratio"], rep.rows())
    c = rep.checks()
    checks = {
        "partition disjoint": c["partition_ok"],
        "closest returns ordered": c["ordering_ok"],
        "l_n >= Delta_n": c["l_ge_delta"],
        "lambda_emp <= lambda + 0.02": c["lambda_emp_le_lambda"],
        "sup|log (T^q_n)'| not growing": math.isfinite(c["sup_log_max"]) and c["sup_log_growth"] <= 1e-3,
        "deviation/tau trend <= 1.5": c["ratio_trend"] <= 1.5,
        "identity residuals < 1e-8": c["max_identity_residual"] < 1e-8,
    }
    summary = {"map": info, "report": rep.to_dict(), "checks": checks}
    lines = [f"lambda = {rep.lam:.6f}, lambda_emp = {rep.lam_emp:.6f}",
             f"max identity residual = {c['max_identity_residual']:.3e}"]
    return summary, lines, checks


def run_conjugate(cfg, out: Path) -> dict:
    m, info = build_map(cfg)
    N = int(cfg.get("N", 16))
    prof = conjugacy.build_profile(m, N, float(cfg.get("x0", 0.0)), int(cfg.get("probes", 1000)))
    write_csv(out / "conjugate.csv", ["xi", "gamma", "h", "phi"], prof.rows())
    d = prof.to_dict()
    checks = {
        "homological residual < 1e-3": prof.residual_homological < 1e-3,
        "conjugation residual < 1e-3": prof.residual_conjugation < 1e-3,
        "integral of h = 1": abs(d["integral_h"] - 1.0) < 1e-9,
        "phi increasing": d["min_phi_slope"] > 0,
        "discrepancy < 2/q_N": prof.discrepancy < 2.0 / prof.M,
    }
    summary = {"map": info, "profile": d, "checks": checks}
    lines = [f"M = q_{N} = {prof.M}",
             f"homological residual {prof.residual_homological:.3e}",
             f"conjugation residual {prof.residual_conjugation:.3e}"]
    return summary, lines, checks


def run_integrability(cfg, out: Path) -> dict:
    lam = float(cfg.get("lambda", 0.7))
    if cfg.get("matrix"):
        rows = integrability.verdict_matrix(lam, int(cfg.get("N", 400)))
        write_csv(out / "matrix.csv",
                  ["case", "params", "modulus", "expected", "main", "fubini", "series", "reduced", "agree"],
                  [(r["case"], json.dumps(r["params"], sort_keys=True),
                    json.dumps(jsonable(r["modulus"]), sort_keys=True), r["expected"], r["main"],
                    r["fubini"], r["series"], r["reduced"], r["agree"]) for r in rows])
        checks = {"verdicts agree on every pair": all(r["agree"] for r in rows)}
        return {"lambda": lam, "matrix": rows, "checks": checks}, [f"{len(rows)} pairs"], checks
    phi = build_phi(cfg.get("phi"))
    moc = build_moc(cfg.get("modulus", {"kind": "holder", "params": {"alpha": 0.5}}))
    cf = None
    if "target" in cfg:
        t = cfg["target"]
        cf = numberth.from_quotients(t) if isinstance(t, list) else numberth.cf_expand(parse_number(t), 30, strict=False)
    rep = integrability.integrability_report(phi, moc, lam, ks=cfg.get("ks"), cf=cf,
                                             N=int(cfg.get("N", 400)), n_max=int(cfg.get("n_max", 60)),
                                             alpha=cfg.get("alpha"))
    write_csv(out / "series.csv", ["n", "term", "partial_sum"],
              [(i, t, s) for i, (t, s) in enumerate(zip(rep.series.terms, rep.series.partial_sums))])
    if rep.higher is not None:
        write_csv(out / "R.csv", ["n", "R"], rep.higher.R_rows())
        if rep.higher.x.size:
            write_csv(out / "omega_tilde.csv", ["x", "omega_tilde"], rep.higher.omega_rows())
    checks = {"verdicts agree": rep.agree}
    lines = [f"verdict: {rep.verdict}", f"series: {rep.series.verdict}"]
    if rep.case is not None:
        lines.append(f"case {rep.case.case}: {rep.case.reduced.verdict}")
    return {"lambda": lam, "phi": phi.to_dict(), "modulus": moc.to_dict(), "report": rep.to_dict(),
            "checks": checks}, lines, checks


def run_appendix(cfg, out: Path) -> dict:
    rep = numberth.appendix_monte_carlo(int(cfg.get("n_seeds", 10_000)), int(cfg.get("n_terms", 16_384)),
                                        int(cfg.get("seed", 0)), float(cfg.get("tail_tol", 0.01)))
    write_csv(out / "appendix.csv", ["checkpoint", "median_partial_sum"],
              list(zip(rep.checkpoints, rep.median_partial_sums)))
    checks = {
        "converged fraction >= 0.99": rep.converged_fraction >= 0.99,
        "medians strictly increase": rep.strictly_increasing,
    }
    summary = {
        "n_seeds": rep.n_seeds, "n_terms": rep.n_terms, "tail_tol": rep.tail_tol,
        "converged_fraction": rep.converged_fraction, "checkpoints": rep.checkpoints,
        "median_partial_sums": rep.median_partial_sums, "checks": checks,
    }
    return summary, [f"converged fraction {rep.converged_fraction:.4f}"], checks


RUNNERS = {
    "cf": run_cf,
    "rotnum": run_rotnum,
    "crossratio": run_crossratio,
    "denjoy": run_denjoy,
    "conjugate": run_conjugate,
    "integrability": run_integrability,
    "appendix": run_appendix,
}


# -------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="circleconj", description="Circle-diffeomorphism experiments.")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--seed", type=int, help="overrides the config seed")
    p.add_argument("--precision", choices=("standard", "extended"), help="overrides the config precision")
    return p


def run(subcommand: str, cfg: dict, out) -> int:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        summary, lines, checks = RUNNERS[subcommand](cfg, out)
    except (CircleConjError, ConfigError, ValueError, KeyError, TypeError) as exc:
        write_json(out / "errors.json", {
            "subcommand": subcommand,
            "error": type(exc).__name__,
            "message": str(exc),
            "traceback": traceback.format_exc(),
        })
        print(f"circleconj {subcommand}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    summary["config"] = cfg
    write_json(out / f"{subcommand}.json", summary)
    write_summary(out / "summary.txt", f"circleconj {subcommand}", lines, checks)
    for name, ok in checks.items():
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        out = Path(args.out)
        write_json(out / "errors.json", {"subcommand": args.subcommand, "error": "ConfigError",
                                         "message": str(exc)})
        print(f"circleconj: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.precision is not None:
        cfg["precision"] = args.precision
    return run(args.subcommand, cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
