"""Applied presets: the Bernoulli sieve and the GI/G/infinity queue."""

from __future__ import annotations

import math
from typing import Any, Sequence

import numpy as np
from scipy import stats

from . import criteria, mc, prw
from .errors import PreconditionError
from .laws import JointLaw

SCENARIOS = ("bernoulli-sieve", "gig-infty-queue")


def scenario_presets() -> tuple[str, ...]:
    return SCENARIOS


def sieve_law(a: float = 1.0, b: float = 1.0) -> JointLaw:
    """``(|log W|, |log(1 - W)|)`` for ``W ~ Beta(a, b)``."""
    return JointLaw.bernoulli_sieve(a, b)


def sieve_marginal_ks(law: JointLaw, n: int = 10_000, seed: int = 0) -> dict[str, float]:
    """Kolmogorov-Smirnov test of the simulated ``xi`` against its declared cdf."""
    xi, _ = law.sample(prw.path_rng(seed, 0), n)
    res = stats.kstest(xi, law.xi.cdf_array)
    return {"statistic": float(res.statistic), "pvalue": float(res.pvalue), "n": n}


def bernoulli_sieve(x: float = 5.0, p_values: Sequence[float] = (1.0, 2.0), a_values: Sequence[float] = (0.5,),
                    n_paths: int = 100_000, horizon: int = 10_000, seed: int = 0, w_a: float = 1.0,
                    w_b: float = 1.0, threads: int = 1, cfg=mc.DEFAULT_VERDICT) -> dict[str, Any]:
    """Moment table of ``N(x)``, the number of occupied boxes below level
    ``x`` in the sieve's perturbed-walk representation."""
    law = sieve_law(w_a, w_b)
    cls, basis = criteria.classify_trichotomy(law)
    d = mc.sample_functional(law, "N", x, n_paths, horizon, seed, threads=threads)
    rows = []
    for p in p_values:
        est = mc.estimate_moment(d, mc.Power(p), seed=seed, cfg=cfg)
        pred = criteria.power_moment_N(law, p)
        rows.append({"moment": est.kind, "x": x, "estimate": est.to_dict(), "prediction": pred.verdict,
                     "criterion": pred.criterion})
    for a in a_values:
        est = mc.estimate_moment(d, mc.Exponential(a), seed=seed, cfg=cfg)
        pred = criteria.exp_moment_N(law, a, x)
        rows.append({"moment": est.kind, "x": x, "estimate": est.to_dict(), "prediction": pred.verdict,
                     "criterion": pred.criterion})
    return {"scenario": "bernoulli-sieve", "law": law.describe(), "trichotomy": cls, "basis": basis,
            "xi_marginal_ks": sieve_marginal_ks(law, seed=seed), "rows": rows}


def queue_paths(law: JointLaw, t: float, n_paths: int, horizon: int, seed: int = 0) -> dict[str, np.ndarray]:
    """Busy servers ``R(t)`` and the pair ``(tau*(t), N(t))`` on each path.

    Customer ``k`` arrives at ``S_k`` and stays ``eta_{k+1}``; ``tau*(t)``
    counts arrivals up to ``t`` and ``N(t)`` departures up to ``t``.
    """
    if law.xi.lower < 0 or law.eta.lower < 0:
        raise PreconditionError("the queue needs nonnegative interarrival and service times")
    busy = np.empty(n_paths)
    arrivals = np.empty(n_paths)
    departures = np.empty(n_paths)
    censored = np.zeros(n_paths, dtype=bool)
    for start, count in prw.blocks(n_paths, 1024):
        xi, eta = prw.simulate_block(law, count, horizon, seed, start)
        for i in range(count):
            b = prw.PathBundle.from_steps(xi[i], eta[i])
            busy[start + i] = prw.busy_servers(b, t)
            arrivals[start + i] = np.count_nonzero(b.s[:-1] <= t)
            departures[start + i] = np.count_nonzero(b.t <= t)
            censored[start + i] = b.s[-1] <= t
    return {"busy": busy, "arrivals": arrivals, "departures": departures, "censored": censored}


def gig_infty_queue(law: JointLaw, t_values: Sequence[float] = (3.0,), n_paths: int = 10_000,
                    horizon: int = 1000, seed: int = 0) -> dict[str, Any]:
    """Mean number of busy servers with the identity ``R(t) = tau*(t) - N(t)``."""
    rows = []
    for t in t_values:
        q = queue_paths(law, t, n_paths, horizon, seed)
        busy = q["busy"]
        ident = q["arrivals"] - q["departures"]
        rows.append({
            "t": t,
            "mean_busy": float(busy.mean()),
            "se": float(busy.std(ddof=1) / math.sqrt(busy.size)) if busy.size > 1 else 0.0,
            "identity_holds": bool(np.array_equal(busy, ident)),
            "censor_rate": float(q["censored"].mean()),
        })
    return {"scenario": "gig-infty-queue", "law": law.describe(), "rows": rows}
