"""Command-line experiment runner.

Exit status: 0 on success, 2 for configuration errors, 3 for numerical
failures, 4 for file-system errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from datetime import datetime, timezone
from typing import Any, Sequence

import numpy as np

from . import __version__, config, criteria, mc, renewal, scenarios, shotnoise
from .config import ConfigError, ExperimentConfig
from .errors import AccuracyError, NoRootError, PreconditionError, PRWError
from .renewal import _jsonable

log = logging.getLogger("prwlab")

EXIT_SCHEMA, EXIT_NUMERIC, EXIT_IO = 2, 3, 4


def _list(v, default: Sequence[float] = ()) -> list[float]:
    if v is None:
        return list(default)
    return [float(x) for x in (v if isinstance(v, (list, tuple)) else [v])]


# ---------------------------------------------------------------------------
# experiments: each returns (result dict, csv rows)

def run_classify(cfg: ExperimentConfig, law) -> tuple[dict, list[dict]]:
    p = cfg.params
    rep = criteria.build_report(law, _list(p.get("a")), _list(p.get("x"), [0.0]), _list(p.get("p")),
                                p.get("c"))
    regime, basis = criteria.walk_regime(law)
    out = rep.to_dict()
    out["walk"] = {"regime": regime, "basis": basis}
    rows = [{"quantity": "trichotomy", "key": "", "verdict": rep.trichotomy, "criterion": rep.drift_basis}]
    for group in ("exp_tau", "exp_N", "exp_rho", "pow_N", "pow_rho", "sigma_pow"):
        for key, val in getattr(rep, group).items():
            rows.append({"quantity": group, "key": key, "verdict": val.get("verdict"),
                         "criterion": val.get("criterion", val.get("reason", ""))})
    for key, ok in rep.tau_as_finite.items():
        rows.append({"quantity": "tau_as_finite", "key": key, "verdict": "Finite" if ok else "Infinite",
                     "criterion": "tau(x) < inf a.s."})
    return out, rows


def _prediction(law, functional: str, kind, x: float, c) -> tuple[str, str]:
    try:
        if isinstance(kind, mc.Power):
            if functional == "N":
                pred = criteria.power_moment_N(law, kind.p)
            elif functional == "rho":
                pred = criteria.power_moment_rho(law, kind.p)
            elif functional == "sigma" and c is not None:
                pred = criteria.sigma_power_verdict(law, c, kind.p, x)
            else:
                return "", ""
        else:
            fn = {"tau": criteria.exp_moment_tau, "N": criteria.exp_moment_N,
                  "rho": criteria.exp_moment_rho}.get(functional)
            if fn is None:
                return "", ""
            pred = fn(law, kind.a, x)
    except (PreconditionError, NoRootError) as exc:
        return "NotApplicable", str(exc)
    return pred.verdict, pred.criterion


def run_moments(cfg: ExperimentConfig, law) -> tuple[dict, list[dict]]:
    p = cfg.params
    functional = p.get("functional", "N")
    c = p.get("c")
    results, rows = [], []
    for x in _list(p.get("x"), [0.0]):
        direct = None
        kinds = [mc.Power(v) for v in _list(p.get("p"), [1.0])] + [mc.Exponential(v) for v in _list(p.get("a"))]
        for kind in kinds:
            tilt = (isinstance(kind, mc.Exponential) and functional in ("tau", "tau_star", "N", "rho")
                    and law.independent_coupling and law.p_xi_neg > 0)
            if tilt:
                d = mc.sample_functional(law, functional, x, cfg.paths, cfg.horizon, cfg.seed, c=c,
                                         tilt_a=kind.a, threads=cfg.threads)
            else:
                if direct is None:
                    direct = mc.sample_functional(law, functional, x, cfg.paths, cfg.horizon, cfg.seed, c=c,
                                                  threads=cfg.threads)
                d = direct
            est = mc.estimate_moment(d, kind, seed=cfg.seed, cfg=cfg.verdict)
            pred, crit = _prediction(law, functional, kind, x, c)
            results.append({"functional": functional, "x": x, "estimate": est.to_dict(),
                            "prediction": pred, "criterion": crit})
            rows.append({"functional": functional, "x": x, "kind": est.kind, "point": est.point,
                         "ci_low": est.ci95[0], "ci_high": est.ci95[1], "censor_rate": est.censor_rate,
                         "verdict": est.verdict, "prediction": pred, "criterion": crit})
    return {"moments": results}, rows


def run_verify(cfg: ExperimentConfig, law) -> tuple[dict, list[dict]]:
    p = dict(cfg.params)
    theorem = p.pop("theorem", None)
    if theorem is None:
        raise ConfigError("params.theorem: required for verify")
    if theorem not in mc.THEOREMS:
        raise ConfigError(f"params.theorem: unknown theorem id {theorem!r}")
    if "x" in p and isinstance(p["x"], list):
        p["x"] = p["x"][0]
    if "t" in p and isinstance(p["t"], list):
        p["t"] = p["t"][0]
    budget = mc.Budget(cfg.paths, cfg.horizon, cfg.n_max, cfg.seed, cfg.threads)
    rep = mc.verify_theorem(law, theorem, p, budget, cfg.verdict)
    out = rep.to_dict()
    out["constants"] = {"R": _safe_R(law)}
    rows = [{"theorem": theorem, "criterion": r.criterion, "params": json.dumps(r.params, sort_keys=True),
             "prediction": r.prediction, "empirical": r.empirical, "agree": r.agree} for r in rep.rows]
    return out, rows


def _safe_R(law):
    from .laws import rate_R
    try:
        return rate_R(law)
    except PRWError:
        return None


def run_shotnoise(cfg: ExperimentConfig, law) -> tuple[dict, list[dict]]:
    p = cfg.params
    resp = shotnoise.ResponseProcess.from_dict(p.get("response", {"kind": shotnoise.INDICATOR}))
    results, rows = [], []
    for t in _list(p.get("t"), [0.0]):
        items = []
        for a in _list(p.get("a")):
            if law.p_xi_neg == 0:
                items.append(shotnoise.integral_r(law, resp, a, t, cfg.paths, cfg.n_max, cfg.seed, cfg.verdict))
                items.append(shotnoise.integral_l(law, resp, a, t, min(cfg.paths, 10_000), cfg.horizon,
                                                  cfg.seed, cfg.verdict))
            else:
                items.append(shotnoise.integral_r_gt(law, resp, a, t, min(cfg.paths, 1000), 1000,
                                                     min(cfg.n_max, 400), cfg.horizon, cfg.seed, cfg.verdict))
        if law.p_xi_neg == 0:
            for q in _list(p.get("q"), [1.0]):
                items.append(shotnoise.integral_s_q(law, resp, q, t, cfg.paths, cfg.n_max, cfg.seed, cfg.verdict))
        z = mc.shotnoise_draws(law, resp, t, cfg.paths, cfg.n_max, cfg.seed)
        est = mc.estimate_moment(z, mc.Power(1.0), seed=cfg.seed, cfg=cfg.verdict)
        results.append({"t": t, "response": resp.describe(), "integrals": [r.to_dict() for r in items],
                        "mean_Z": est.to_dict()})
        for r in items:
            rows.append({"t": t, "quantity": r.name, "value": r.value, "se": r.se, "verdict": r.verdict,
                         "criterion": SHOTNOISE_CRITERIA.get(r.name, "")})
        rows.append({"t": t, "quantity": "E Z(t)", "value": est.point, "se": (est.ci95[1] - est.ci95[0]) / 3.92,
                     "verdict": est.verdict, "criterion": "E Z(t) = s_1(t)"})
    return {"shotnoise": results}, rows


RENEWAL_CRITERIA = {
    "PlainU": "U(y) = sum_n P{S_n <= y}; J+(y) <= U(y) <= 2 J+(y) up to P{xi>0}",
    "LadderU_gt": "U>(y) = sum_n P{S_{tau*_n} <= y}",
    "ExpV": "V*_a(y) = sum_n e^{an} P{S_n <= y}; e^{-gamma y} V*_a(y) bounded above and below",
    "PowerU": "U_{p-1}(y) = sum_n n^(p-1) P{S_n <= y} of order J+(y)^p",
}

SHOTNOISE_CRITERIA = {
    "r": "E e^{aZ(t)} finite iff r(t) and l(t) finite (xi >= 0)",
    "l": "E e^{aZ(t)} finite iff r(t) and l(t) finite (xi >= 0)",
    "r_gt": "E e^{aZ(t)} finite iff r>(t) finite",
    "s_q": "E Z(t)^q finite iff s_q(t) finite (xi >= 0)",
}


def run_renewal(cfg: ExperimentConfig, law) -> tuple[dict, list[dict]]:
    p = cfg.params
    kind = p.get("kind", "PlainU")
    if kind == "duality":
        lo, hi = p.get("interval", [-2.0, 0.0])
        a = p.get("a")
        rep = renewal.ladder_duality_check(law, (lo, hi), cfg.paths, cfg.n_max, cfg.seed,
                                           None if a is None else _list(a)[0])
        d = rep.to_dict()
        return {"duality": d}, [{k: d[k] for k in ("before_ladder", "descending_ladder", "difference",
                                                   "difference_se", "agree")}]
    grid = p.get("grid")
    if grid is None:
        raise ConfigError("params.grid: required for renewal")
    if kind in ("PlainU", "LadderU_gt"):
        table = renewal.estimate_renewal_measure(law, kind, grid, cfg.paths, cfg.n_max, cfg.seed, cfg.verdict)
    elif kind == "ExpV":
        table = renewal.exp_renewal_V(law, _list(p.get("a"), [0.1])[0], grid, cfg.paths, cfg.n_max,
                                      cfg.seed, cfg.verdict)
    else:
        table = renewal.power_renewal_U(law, _list(p.get("p"), [1.0])[0], grid, cfg.paths, cfg.n_max,
                                        cfg.seed, cfg.verdict)
    crit = RENEWAL_CRITERIA[kind]
    return {"table": table.to_dict(), "criterion": crit}, [dict(r, criterion=crit) for r in table.rows()]


def run_scenario(cfg: ExperimentConfig, law) -> tuple[dict, list[dict]]:
    p = cfg.params
    name = p.get("scenario")
    if name == "bernoulli-sieve":
        res = scenarios.bernoulli_sieve(_list(p.get("x"), [5.0])[0], _list(p.get("p"), [1.0, 2.0]),
                                        _list(p.get("a"), [0.5]), cfg.paths, cfg.horizon, cfg.seed,
                                        threads=cfg.threads, cfg=cfg.verdict)
        rows = [{"moment": r["moment"], "x": r["x"], "point": r["estimate"]["point"],
                 "verdict": r["estimate"]["verdict"], "prediction": r["prediction"], "criterion": r["criterion"]}
                for r in res["rows"]]
        return res, rows
    if name == "gig-infty-queue":
        qlaw = law if law is not None else config.build_law({"preset": "queue"})
        res = scenarios.gig_infty_queue(qlaw, _list(p.get("t"), [3.0]), cfg.paths, cfg.horizon, cfg.seed)
        return res, res["rows"]
    raise ConfigError(f"params.scenario: expected one of {list(scenarios.SCENARIOS)}")


RUNNERS = {"classify": run_classify, "moments": run_moments, "verify": run_verify,
           "shotnoise": run_shotnoise, "renewal": run_renewal, "scenario": run_scenario}


# ---------------------------------------------------------------------------
# reports

def _csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        fields: list[str] = []
        for r in rows:
            fields.extend(k for k in r if k not in fields)
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def report(cfg: ExperimentConfig, result: dict, timestamp: str | None = None) -> dict[str, Any]:
    return _jsonable({
        "tool": "prwlab",
        "version": __version__,
        "config": cfg.resolved(),
        "result": result,
        "timestamp": timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds"),
    })


def write_outputs(cfg: ExperimentConfig, result: dict, rows: list[dict]) -> list[str]:
    os.makedirs(cfg.out_dir, exist_ok=True)
    name = cfg.name or cfg.experiment
    written = []
    if cfg.fmt in ("json", "both"):
        path = os.path.join(cfg.out_dir, f"{name}.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(report(cfg, result), fh, sort_keys=True, indent=2)
            fh.write("\n")
        written.append(path)
    if cfg.fmt in ("csv", "both"):
        path = os.path.join(cfg.out_dir, f"{name}.csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(_csv(rows))
        written.append(path)
    return written


def execute(cfg: ExperimentConfig) -> tuple[dict, list[dict]]:
    law = None
    if cfg.law:
        law = config.build_law(cfg.law)
    elif cfg.experiment != "scenario":
        raise ConfigError("law: required")
    elif cfg.params.get("scenario") == "bernoulli-sieve":
        law = scenarios.sieve_law()
    np.seterr(over="ignore", under="ignore")
    return RUNNERS[cfg.experiment](cfg, law)


# ---------------------------------------------------------------------------
# argument parsing

def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prwlab", description="Perturbed random walk experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON experiment configuration")
    common.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    common.add_argument("--paths", type=int, help="number of simulated paths")
    common.add_argument("--horizon", type=int, help="path horizon in steps")
    common.add_argument("--n-max", type=int, dest="n_max", help="truncation index for series")
    common.add_argument("--threads", type=int, help="worker threads (results do not depend on it)")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--format", choices=["json", "csv", "both"], help="report format")
    common.add_argument("--law", metavar="PRESET", help=f"law preset: {', '.join(sorted(config.PRESETS))}")
    common.add_argument("--x", type=_floats, help="levels x (comma separated)")
    common.add_argument("--a", type=_floats, help="exponential rates a (comma separated)")
    common.add_argument("--p", type=_floats, help="power exponents p (comma separated)")
    common.add_argument("--t", type=_floats, help="times t (comma separated)")
    common.add_argument("--q", type=_floats, help="power exponents q for s_q (comma separated)")
    common.add_argument("--c", type=float, help="slope c for sigma(x)")
    sub.add_parser("classify", parents=[common], help="analytic criteria for a law")
    m = sub.add_parser("moments", parents=[common], help="moment estimates of a functional")
    m.add_argument("--functional", choices=["tau", "tau_star", "N", "rho", "nu", "sigma"])
    v = sub.add_parser("verify", parents=[common], help="check a theorem's prediction by simulation")
    v.add_argument("--theorem", choices=list(mc.THEOREMS))
    s = sub.add_parser("shotnoise", parents=[common], help="shot-noise criterion integrals")
    s.add_argument("--response", choices=["IndicatorOfEta", "DeterministicF", "MultiplicativeEtaF"])
    s.add_argument("--f", choices=["step", "ramp", "zero", "exp"])
    r = sub.add_parser("renewal", parents=[common], help="renewal functions")
    r.add_argument("--kind", choices=["PlainU", "LadderU_gt", "ExpV", "PowerU", "duality"])
    r.add_argument("--grid", type=_floats, help="evaluation points (comma separated)")
    sc = sub.add_parser("scenario", parents=[common], help="applied presets")
    sc.add_argument("name", nargs="?", choices=list(scenarios.SCENARIOS))
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    doc: dict[str, Any] = config.load(args.config) if args.config else {}
    if doc.get("experiment", args.command) != args.command:
        raise ConfigError(f"experiment: config says {doc['experiment']!r} but the command is {args.command!r}")
    doc["experiment"] = args.command
    if args.law:
        doc["law"] = {"preset": args.law}
    if args.seed is not None:
        doc["seed"] = args.seed
    budget = doc.setdefault("budget", {})
    for key in ("paths", "horizon", "n_max", "threads"):
        if getattr(args, key) is not None:
            budget[key] = getattr(args, key)
    out = doc.setdefault("output", {})
    if args.out:
        out["dir"] = args.out
    if args.format:
        out["format"] = args.format
    params = doc.setdefault("params", {})
    for key in ("x", "a", "p", "t", "q"):
        if getattr(args, key) is not None:
            params[key] = getattr(args, key)
    if args.c is not None:
        params["c"] = args.c
    extra = {"functional": "functional", "theorem": "theorem", "kind": "kind", "grid": "grid", "name": "scenario"}
    for attr, key in extra.items():
        val = getattr(args, attr, None)
        if val is not None:
            params[key] = val
    if getattr(args, "response", None):
        resp = {"kind": args.response}
        if args.f:
            resp["f"] = args.f
        params["response"] = resp
    return config.from_document(doc)


def _setup_logging() -> None:
    level = os.environ.get("PRWLAB_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv: Sequence[str] | None = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        log.info("running %s with seed %d", cfg.experiment, cfg.seed)
        result, rows = execute(cfg)
        for path in write_outputs(cfg, result, rows):
            print(path)
    except (ConfigError, PreconditionError) as exc:
        print(f"prwlab: configuration error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (AccuracyError, NoRootError, PRWError, FloatingPointError, ArithmeticError) as exc:
        print(f"prwlab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"prwlab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
