"""Renewal shot noise ``Z(t) = sum_{n>=1} X_n(t - S_{n-1})`` and the integrals
that decide finiteness of its moments.

The response ``X_n`` of the ``n``-th shot is built from the perturbation
``eta_n`` of the same step, so the coupling of ``(xi, eta)`` carries over to
the pair ``(xi, X)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import laws, prw
from .criteria import WALK_UP, walk_regime
from .errors import DivergenceError, PreconditionError
from .laws import JointLaw
from .renewal import tilt_parameter
from .verdicts import DEFAULT_VERDICT, FINITE, INFINITE, VerdictConfig, series_verdict, summarize

INDICATOR = "IndicatorOfEta"
DETERMINISTIC = "DeterministicF"
MULTIPLICATIVE = "MultiplicativeEtaF"

ENVELOPE_FLOOR = 1e-12


def _step(u):
    return (np.asarray(u) >= 0).astype(float)


def _ramp(u):
    return np.clip(np.asarray(u, dtype=float), 0.0, 1.0)


def _zero(u):
    return np.zeros_like(np.asarray(u, dtype=float))


_SHAPES = {"step": _step, "ramp": _ramp, "zero": _zero}


@dataclass(frozen=True)
class ResponseProcess:
    """``X(t) = 1{eta <= t}``, ``f(t)`` or ``eta f(t)``.

    ``f`` is one of ``step`` (``1{t >= 0}``), ``ramp`` (``t`` clipped to
    ``[0, 1]``), ``zero``, or ``exp`` (``e^{rate t}`` with ``rate > 0``).
    Every shape is nondecreasing with limit 0 at ``-inf``.
    """

    kind: str
    f: str = "step"
    rate: float = 1.0

    def __post_init__(self):
        if self.kind not in (INDICATOR, DETERMINISTIC, MULTIPLICATIVE):
            raise ValueError(f"unknown response kind {self.kind!r}")
        if self.kind != INDICATOR:
            if self.f not in _SHAPES and self.f != "exp":
                raise ValueError(f"unknown response shape {self.f!r}")
            if self.f == "exp" and not self.rate > 0:
                raise ValueError("exp shape needs rate > 0 (nondecreasing, vanishing at -inf)")

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ResponseProcess":
        return cls(d["kind"], d.get("f", "step"), float(d.get("rate", 1.0)))

    def describe(self) -> dict[str, Any]:
        if self.kind == INDICATOR:
            return {"kind": self.kind}
        d = {"kind": self.kind, "f": self.f}
        if self.f == "exp":
            d["rate"] = self.rate
        return d

    def shape(self, u) -> np.ndarray:
        if self.f == "exp":
            return np.exp(self.rate * np.minimum(np.asarray(u, dtype=float), 700.0 / self.rate))
        return _SHAPES[self.f](u)

    def terms(self, s_prev: np.ndarray, eta: np.ndarray, t: float) -> np.ndarray:
        """``X_n(t - S_{n-1})`` for each step.

        The indicator is evaluated as ``S_{n-1} + eta_n <= t`` so it agrees
        with the visit count of the walk bit for bit.
        """
        if self.kind == INDICATOR:
            return (s_prev + eta <= t).astype(float)
        f = self.shape(t - s_prev)
        return f if self.kind == DETERMINISTIC else eta * f

    def support_start(self, law: JointLaw) -> float:
        """Smallest argument at which ``X`` can be positive (``-inf`` if none)."""
        if self.kind == INDICATOR:
            return law.eta.lower
        if self.f in ("step", "ramp"):
            return 0.0
        if self.f == "zero":
            return math.inf
        return -math.inf

    # expectations over one response, as functions of the argument u
    def mean_exp_minus_one(self, law: JointLaw, a: float, u: np.ndarray) -> np.ndarray:
        """``E exp(a X(u)) - 1``."""
        u = np.asarray(u, dtype=float)
        if self.kind == INDICATOR:
            return math.expm1(a) * law.eta.cdf_array(u)
        f = self.shape(u)
        if self.kind == DETERMINISTIC:
            return np.expm1(a * f)
        uniq, inv = np.unique(a * f, return_inverse=True)
        vals = np.array([law.eta.mgf(float(v)) - 1.0 for v in uniq])
        return vals[inv].reshape(u.shape)

    def mean_power(self, law: JointLaw, q: float, u: np.ndarray) -> np.ndarray:
        """``E X(u)^q``."""
        u = np.asarray(u, dtype=float)
        if self.kind == INDICATOR:
            return law.eta.cdf_array(u)
        f = self.shape(u)
        if self.kind == DETERMINISTIC:
            return f ** q
        return eta_moment(law, q) * f ** q


def eta_moment(law: JointLaw, q: float) -> float:
    eta = law.eta
    if eta.lower < 0:
        raise PreconditionError("multiplicative responses need eta >= 0")
    if math.isinf(eta.upper) and not eta.right_tail.power_moment_finite(q):
        return math.inf
    return eta.expect(lambda v: v ** q, 0.0, math.inf) + (0.0 if q > 0 else eta.atom(0.0))


@dataclass(frozen=True)
class ShotNoiseSample:
    t: float
    z: float
    truncation: int
    tail_bound: float | None
    status: str = prw.EXACT

    @property
    def exact(self) -> bool:
        return self.status == prw.EXACT


def _require_up(law: JointLaw) -> None:
    regime, basis = walk_regime(law)
    if regime != WALK_UP:
        raise DivergenceError(f"shot noise needs S_n -> +inf ({basis})")


def _tail_bound(law: JointLaw, response: ResponseProcess, t: float, s_h: float) -> float | None:
    """Expected mass of the omitted terms ``n > H`` given ``S_H``, when it is
    available in closed form (exponential shape only)."""
    if response.kind == INDICATOR or response.f != "exp":
        return None
    phi = law.xi.laplace(response.rate)
    if not phi < 1:
        return math.inf
    scale = 1.0 if response.kind == DETERMINISTIC else eta_moment(law, 1.0)
    return scale * math.exp(min(response.rate * (t - s_h), 700.0)) / (1.0 - phi)


def shot_noise_path(bundle: prw.PathBundle, law: JointLaw, response: ResponseProcess, t: float,
                    certify_margin: float = 0.0, eps: float = prw.DEFAULT_EPS) -> ShotNoiseSample:
    """``Z(t)`` on a given path, summed over the ``H`` simulated shots."""
    terms = response.terms(bundle.s[:-1], bundle.eta, t)
    z = float(terms.sum())
    start = response.support_start(law)
    if response.kind == INDICATOR:
        ok = prw.certified(bundle, t, certify_margin, prw.eta_quantile(law, eps))
        return ShotNoiseSample(t, z, bundle.horizon, 0.0 if ok else None, prw.EXACT if ok else prw.CENSORED)
    if math.isinf(start) and start > 0:
        return ShotNoiseSample(t, z, bundle.horizon, 0.0)
    if math.isfinite(start):
        ok = bool(bundle.s[-1] - certify_margin > t - start)
        return ShotNoiseSample(t, z, bundle.horizon, 0.0 if ok else None, prw.EXACT if ok else prw.CENSORED)
    bound = _tail_bound(law, response, t, float(bundle.s[-1]))
    ok = bound is not None and bound < ENVELOPE_FLOOR * max(1.0, z)
    return ShotNoiseSample(t, z, bundle.horizon, bound, prw.EXACT if ok else prw.CENSORED)


def simulate_shotnoise(law: JointLaw, response: ResponseProcess, t: float,
                       horizon: int = prw.DEFAULT_HORIZON, master_seed: int = 0, path_index: int = 0,
                       certify_margin: float = 0.0) -> ShotNoiseSample:
    """``Z(t)`` on one seeded path of ``horizon`` shots."""
    _require_up(law)
    if response.kind != INDICATOR and math.isinf(response.support_start(law)) and response.support_start(law) < 0:
        if not law.xi.laplace(response.rate) < 1:
            raise DivergenceError("tail of the exponential response cannot be bounded for this walk")
    bundle = prw.simulate_path(law, horizon, master_seed, path_index)
    return shot_noise_path(bundle, law, response, t, certify_margin)


# ---------------------------------------------------------------------------
# criterion integrals

@dataclass(frozen=True)
class IntegralResult:
    name: str
    value: float
    se: float
    verdict: str
    n_paths: int
    extra: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        from .renewal import _jsonable
        return _jsonable({"name": self.name, "value": self.value, "se": self.se,
                          "verdict": self.verdict, "n_paths": self.n_paths, "extra": self.extra})


def _need_nonneg_xi(law: JointLaw, what: str) -> None:
    if law.p_xi_neg > 0:
        raise PreconditionError(f"{what} needs xi >= 0 a.s. (P{{xi<0}} = {law.p_xi_neg:.3g})")


def _renewal_integral(law, g, t, n_paths, n_max, seed, cfg, name) -> IntegralResult:
    """``E sum_{n=0}^{n_max} g(t - S_n)`` with a series verdict."""
    cps = (max(n_max // 4, 1), max(n_max // 2, 1), n_max)
    parts = []
    for start, count in prw.blocks(n_paths):
        xi, _ = prw.simulate_block(law, count, n_max, seed, start)
        s = prw.partial_sums(xi)
        vals = g(t - s)
        if np.any(np.isinf(vals)):
            return IntegralResult(name, math.inf, math.inf, INFINITE, n_paths,
                                  {"reason": "an integrand value is infinite"})
        parts.append(np.cumsum(vals, axis=1)[:, list(cps)])
    x = np.concatenate(parts, axis=0)
    mean = x.mean(axis=0)
    se = x.std(axis=0, ddof=1) / math.sqrt(n_paths)
    incr_se = float((x[:, 2] - x[:, 1]).std(ddof=1) / math.sqrt(n_paths))
    verdict = series_verdict(mean, cfg, noise=3 * incr_se)
    return IntegralResult(name, float(mean[2]), float(se[2]), verdict, n_paths,
                          {"partial_sums": mean.tolist(), "n_max": n_max})


def integral_r(law: JointLaw, response: ResponseProcess, a: float, t: float, n_paths: int,
               n_max: int = 1000, seed: int = 0, cfg: VerdictConfig = DEFAULT_VERDICT) -> IntegralResult:
    """``r(t) = int (E e^{aX(t-y)} - 1) U(dy)``, summed over simulated epochs."""
    if not a > 0:
        raise ValueError("a must be positive")
    _need_nonneg_xi(law, "integral_r")
    return _renewal_integral(law, lambda u: response.mean_exp_minus_one(law, a, u),
                             t, n_paths, n_max, seed, cfg, "r")


def integral_s_q(law: JointLaw, response: ResponseProcess, q: float, t: float, n_paths: int,
                 n_max: int = 1000, seed: int = 0, cfg: VerdictConfig = DEFAULT_VERDICT) -> IntegralResult:
    """``s_q(t) = int E X(t-y)^q U(dy)``.

    For the indicator response with ``eta`` unbounded below the integral is
    compared with ``E J+(eta^-)``: when that is infinite so is ``s_1``.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    _need_nonneg_xi(law, "integral_s_q")
    if response.kind == INDICATOR and law.p_xi_pos > 0:
        if math.isinf(laws.expected_j_power(law, "eta_minus", 1.0)):
            res = _renewal_integral(law, lambda u: response.mean_power(law, q, u),
                                    t, n_paths, n_max, seed, cfg, "s_q")
            return IntegralResult("s_q", res.value, res.se, INFINITE, n_paths,
                                  dict(res.extra, reason="E J+(eta^-) = inf"))
    if response.kind == MULTIPLICATIVE and math.isinf(eta_moment(law, q)):
        return IntegralResult("s_q", math.inf, math.inf, INFINITE, n_paths, {"reason": "E eta^q = inf"})
    return _renewal_integral(law, lambda u: response.mean_power(law, q, u),
                             t, n_paths, n_max, seed, cfg, "s_q")


@dataclass
class _Excursions:
    """Paths run up to ``tau*`` under a tilted increment law, with their
    log likelihood ratios; ``queries`` evaluate ``l(s)`` for many ``s``."""

    s_prev: list[np.ndarray]
    eta: list[np.ndarray]
    log_lr: np.ndarray
    censored: np.ndarray
    horizon: int
    lr_at: list[np.ndarray]  # log likelihood ratio truncated at H/4, H/2 (for censored curves)
    stops: np.ndarray

    def log_values(self, response: ResponseProcess, a: float, s: float, cut: int | None = None) -> np.ndarray:
        out = np.empty(len(self.s_prev))
        for j, (sp, et) in enumerate(zip(self.s_prev, self.eta)):
            k = sp.size if cut is None else min(cut, sp.size)
            out[j] = a * float(response.terms(sp[:k], et[:k], s).sum())
        return out


def _excursions(law: JointLaw, a: float, n_paths: int, horizon: int, seed: int) -> _Excursions:
    theta, a_theta = tilt_parameter(law, a) if law.independent_coupling else (0.0, 0.0)
    sampler = None if theta == 0 else law.xi.tilted_sampler(theta)
    s_prev, etas, log_lr, cens, stops = [], [], np.empty(n_paths), np.zeros(n_paths, bool), np.empty(n_paths, int)
    cuts = (max(horizon // 4, 1), max(horizon // 2, 1))
    lr_at = [np.empty(n_paths), np.empty(n_paths)]
    for i in range(n_paths):
        stream = prw.PathStream(law, seed, i, sampler)
        xi, eta, stop = prw.run_until(stream, prw.ascending_ladder_hit, horizon)
        s = np.concatenate(([0.0], np.cumsum(xi)))
        n = stop.value
        s_prev.append(s[:-1])
        etas.append(eta)
        stops[i] = n
        cens[i] = not stop.exact
        # dP/dP_theta on the first n increments
        log_lr[i] = -a_theta * n + theta * s[n]
        for j, c in enumerate(cuts):
            m = min(c, n)
            lr_at[j][i] = -a_theta * m + theta * s[m]
    return _Excursions(s_prev, etas, log_lr, cens, horizon, lr_at, stops)


def _l_summary(exc: _Excursions, response: ResponseProcess, a: float, s: float, cfg: VerdictConfig):
    full = exc.log_values(response, a, s) + exc.log_lr
    cuts = (max(exc.horizon // 4, 1), max(exc.horizon // 2, 1))
    curves = [exc.log_values(response, a, s, c) + lr for c, lr in zip(cuts, exc.lr_at)]
    return summarize(full, exc.censored, np.vstack(curves + [full]), cfg)


def integral_l(law: JointLaw, response: ResponseProcess, a: float, t: float, n_paths: int,
               horizon: int = 2000, seed: int = 0, cfg: VerdictConfig = DEFAULT_VERDICT) -> IntegralResult:
    """``l(t) = E prod_{n <= tau*} exp(a X_n(t - S_{n-1}))``.

    Excursions up to ``tau*`` are drawn under an exponentially tilted
    increment law when the coupling allows it and reweighted; a path still
    below zero at ``horizon`` contributes its truncated (lower-bound) value.
    """
    if not a > 0:
        raise ValueError("a must be positive")
    exc = _excursions(law, a, n_paths, horizon, seed)
    summ = _l_summary(exc, response, a, t, cfg)
    return IntegralResult("l", summ.mean, summ.se, summ.verdict, n_paths,
                          {"censor_rate": summ.censor_rate, "log_value": summ.log_mean,
                           "sample_curve": summ.sample_curve, "horizon_curve": summ.horizon_curve})


def integral_r_gt(law: JointLaw, response: ResponseProcess, a: float, t: float, n_outer: int = 1000,
                  n_inner: int = 1000, n_max: int = 400, horizon: int = 2000, seed: int = 0,
                  cfg: VerdictConfig = DEFAULT_VERDICT) -> IntegralResult:
    """``r^>(t) = int (l(t-u) - 1) U^>(du)`` by nested Monte Carlo.

    Outer paths give the strict ascending ladder heights ``0 = H_0 < H_1 <
    ...`` up to ``n_max`` steps; ``l`` is estimated once from ``n_inner``
    excursions (common random numbers for every query).  Plugging the
    estimate into ``l - 1`` is unbiased here because ``l`` enters linearly.
    """
    if not a > 0:
        raise ValueError("a must be positive")
    if law.p_xi_neg == 0:
        raise PreconditionError("integral_r_gt is for walks with P{xi<0} > 0; use integral_r")
    regime, basis = walk_regime(law)
    if regime != WALK_UP:
        raise PreconditionError(f"integral_r_gt needs a positively divergent walk ({basis})")
    if response.kind == DETERMINISTIC and response.f == "zero":
        return IntegralResult("r_gt", 0.0, 0.0, FINITE, n_outer, {"reason": "X = 0"})
    exc = _excursions(law, a, n_inner, horizon, seed + 1)
    at_t = _l_summary(exc, response, a, t, cfg)
    extra: dict[str, Any] = {"l(t)": at_t.mean, "l_verdict": at_t.verdict,
                             "inner_censor_rate": at_t.censor_rate, "n_inner": n_inner,
                             "limitation": "l is estimated once from the inner sample and reused"}
    if at_t.verdict == INFINITE:
        return IntegralResult("r_gt", math.inf, math.inf, INFINITE, n_outer, extra)
    heights = []
    for start, count in prw.blocks(n_outer):
        xi, _ = prw.simulate_block(law, count, n_max, seed, start)
        s = prw.partial_sums(xi)
        rec = np.ones_like(s, dtype=bool)
        rec[:, 1:] = s[:, 1:] > np.maximum.accumulate(s, axis=1)[:, :-1]
        heights.extend((s[i][rec[i]], np.flatnonzero(rec[i])) for i in range(count))
    start_u = response.support_start(law)
    lo_excursion = min(float(sp.min()) for sp in exc.s_prev)
    cache: dict[float, float] = {}

    def l_minus_one(sq: float) -> float:
        # no response term can be positive below this argument
        if math.isfinite(start_u) and sq - lo_excursion < start_u:
            return 0.0
        if sq not in cache:
            # E_theta[LR (e^{aX} - 1)] keeps the exact zero where no term fires
            with np.errstate(over="ignore"):
                v = np.exp(exc.log_lr) * np.expm1(exc.log_values(response, a, sq))
            cache[sq] = float(v.mean())
        return cache[sq]

    cps = (max(n_max // 4, 1), max(n_max // 2, 1), n_max)
    per_path = np.zeros((n_outer, 3))
    for i, (h, epochs) in enumerate(heights):
        vals = np.array([l_minus_one(float(t - u)) for u in h])
        for j, c in enumerate(cps):
            per_path[i, j] = vals[epochs <= c].sum()
    mean = per_path.mean(axis=0)
    se = per_path.std(axis=0, ddof=1) / math.sqrt(n_outer)
    incr_se = float((per_path[:, 2] - per_path[:, 1]).std(ddof=1) / math.sqrt(n_outer))
    verdict = series_verdict(mean, cfg, noise=3 * incr_se)
    if at_t.verdict != FINITE and verdict == FINITE:
        verdict = at_t.verdict
    extra["partial_sums"] = mean.tolist()
    return IntegralResult("r_gt", float(mean[2]), float(se[2]), verdict, n_outer, extra)

