"""Three-way finiteness verdicts for truncated series and growth curves."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

FINITE = "Finite"
INFINITE = "Infinite"
INCONCLUSIVE = "Inconclusive"
BOUNDARY = "Boundary"


@dataclass(frozen=True)
class VerdictConfig:
    """Calibration constants for empirical divergence detection."""

    stabilization_tol: float = 0.01
    divergence_slope: float = 0.2
    censor_cap: float = 1e-3
    max_relative_se: float = 0.1


DEFAULT_VERDICT = VerdictConfig()


def log_growth_slope(v1: float, v3: float, ratio: float = 4.0) -> float:
    """Slope of ``log v`` against ``log n`` between ``n/ratio`` and ``n``."""
    if v3 <= 0:
        return 0.0
    if v1 <= 0:
        return math.inf
    if math.isinf(v3):
        return math.inf
    return math.log(v3 / v1) / math.log(ratio)


def series_verdict(partials, cfg: VerdictConfig = DEFAULT_VERDICT, noise: float = 0.0) -> str:
    """Verdict from nonnegative partial sums at ``n/4``, ``n/2`` and ``n``.

    Infinite when the log-log slope exceeds ``cfg.divergence_slope``; Finite
    when the last relative increment is below ``cfg.stabilization_tol`` (or
    within ``noise``, an absolute Monte Carlo allowance) and not larger than
    the previous one.
    """
    s1, s2, s3 = (float(v) for v in partials)
    if math.isinf(s3):
        return INFINITE
    if s3 == 0:
        return FINITE
    if log_growth_slope(s1, s3) > cfg.divergence_slope:
        return INFINITE
    inc1 = (s2 - s1) / s3
    inc2 = (s3 - s2) / s3
    if (inc2 < cfg.stabilization_tol and inc2 <= inc1 + 1e-12) or (s3 - s2) <= noise:
        return FINITE
    return INCONCLUSIVE


@dataclass(frozen=True)
class CurveSummary:
    """Weighted Monte Carlo mean in log scale with its two growth curves.

    ``sample_curve`` holds the means over the first ``n/4``, ``n/2`` and
    ``n`` paths; ``horizon_curve`` the means of the values truncated at
    ``H/4``, ``H/2`` and ``H``.  Both curves are stored relative to
    ``exp(scale)``.
    """

    log_mean: float
    se: float
    scale: float
    sample_curve: tuple[float, float, float]
    horizon_curve: tuple[float, float, float] | None
    censor_rate: float
    verdict: str

    @property
    def mean(self) -> float:
        return math.exp(self.log_mean) if self.log_mean < 709 else math.inf


def _prefix_means(x, n):
    cuts = (max(n // 4, 1), max(n // 2, 1), n)
    return tuple(float(x[:k].mean()) for k in cuts)


def summarize(log_values, censored=None, horizon_logs=None,
              cfg: VerdictConfig = DEFAULT_VERDICT) -> CurveSummary:
    """Mean of ``exp(log_values)`` with a three-way verdict.

    Infinite when either curve has log-log slope above
    ``cfg.divergence_slope``; Finite when the censoring rate is below
    ``cfg.censor_cap`` and the last step of both curves moves by less than
    ``cfg.stabilization_tol`` relative (or three standard errors, when the
    standard error itself is below ``cfg.max_relative_se`` of the mean);
    otherwise Inconclusive.
    """
    lv = np.asarray(log_values, dtype=float)
    n = lv.size
    if n == 0:
        raise ValueError("no samples")
    top = float(lv.max())
    if not math.isfinite(top):
        top = 0.0
    x = np.exp(lv - top)
    m = float(x.mean())
    se = float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    cens = 0.0 if censored is None else float(np.mean(censored))
    curve = _prefix_means(x, n)
    hcurve = None
    slope_h = 0.0
    h_stable = True
    if horizon_logs is not None:
        hl = np.exp(np.asarray(horizon_logs, dtype=float) - top)
        hcurve = tuple(float(v) for v in hl.mean(axis=1))
        slope_h = log_growth_slope(hcurve[0], hcurve[2])
        d = hl[2] - hl[1]
        d_se = float(d.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        h_stable = hcurve[2] - hcurve[1] <= max(cfg.stabilization_tol * hcurve[2], 3 * d_se)
    slope_n = log_growth_slope(curve[0], curve[2])
    if slope_h > cfg.divergence_slope or slope_n > cfg.divergence_slope:
        verdict = INFINITE
    elif (cens < cfg.censor_cap and h_stable
          and (abs(curve[2] - curve[1]) <= cfg.stabilization_tol * curve[2]
               or (abs(curve[2] - curve[1]) <= 3 * se and se <= cfg.max_relative_se * m))):
        verdict = FINITE
    else:
        verdict = INCONCLUSIVE
    log_mean = math.log(m) + top if m > 0 else -math.inf
    return CurveSummary(log_mean, se * math.exp(min(top, 700.0)), top, curve, hcurve, cens, verdict)
