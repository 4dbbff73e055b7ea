"""Analytic finite/infinite predictions for the perturbed-walk functionals.

Every evaluator is a pure function of a :class:`~prwlab.laws.JointLaw`.
Results carry the constants they used and a short ``criterion`` string that
names the condition being tested.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

from . import laws
from ._numerics import safe_exp
from .errors import NoRootError, NotApplicable, PreconditionError
from .laws import JointLaw
from .verdicts import BOUNDARY, FINITE, INFINITE

POS_DIV = "PosDiv"
NEG_DIV = "NegDiv"
OSC = "Osc"

WALK_UP = "+inf"
WALK_DOWN = "-inf"
WALK_OSC = "oscillating"

_BOUNDARY_TOL = 1e-9


@dataclass(frozen=True)
class Prediction:
    verdict: str
    case: str
    criterion: str
    constants: dict[str, float] = field(default_factory=dict)

    @property
    def finite(self) -> bool:
        return self.verdict == FINITE

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def walk_regime(law: JointLaw) -> tuple[str, str]:
    """Regime of ``S_n`` and how it was decided."""
    xi = law.xi
    pos, neg = xi.mean_part(1), xi.mean_part(-1)
    if not (math.isinf(pos) and math.isinf(neg)):
        mean = pos - neg
        basis = f"mean E xi = {mean:.6g}"
        if mean > 0:
            return WALK_UP, basis
        if mean < 0:
            return WALK_DOWN, basis
        return WALK_OSC, basis
    # both halves infinite: compare tails through E J+(xi^-) and E J-(xi^+)
    if math.isfinite(laws.expected_j_power(law, "xi_minus", 1.0, side=1)):
        return WALK_UP, "E J+(xi^-) < inf with infinite mean halves"
    if math.isfinite(laws.expected_j_power(law, "xi_plus", 1.0, side=-1)):
        return WALK_DOWN, "E J-(xi^+) < inf with infinite mean halves"
    return WALK_OSC, "E J+(xi^-) = E J-(xi^+) = inf"


def classify_trichotomy(law: JointLaw) -> tuple[str, str]:
    """``(class, basis)`` with class one of PosDiv, NegDiv, Osc."""
    regime, basis = walk_regime(law)
    if regime == WALK_UP:
        val = laws.expected_j_power(law, "eta_minus", 1.0, side=1)
        if math.isfinite(val):
            return POS_DIV, f"{basis}; E J+(eta^-) = {val:.6g}"
        return OSC, f"{basis}; E J+(eta^-) = inf"
    if regime == WALK_DOWN:
        val = laws.expected_j_power(law, "eta_plus", 1.0, side=-1)
        if math.isfinite(val):
            return NEG_DIV, f"{basis}; E J-(eta^+) = {val:.6g}"
        return OSC, f"{basis}; E J-(eta^+) = inf"
    return OSC, f"{basis}; the walk oscillates"


def _require_posdiv(law: JointLaw, what: str) -> None:
    cls, _ = classify_trichotomy(law)
    if cls != POS_DIV:
        raise NotApplicable(f"{what} needs a positively divergent walk, got {cls}")


def tau_as_finite(law: JointLaw, x: float) -> tuple[bool, str]:
    """Whether ``tau(x) < inf`` a.s., with the regime used."""
    cls, _ = classify_trichotomy(law)
    if cls != NEG_DIV:
        return True, f"{cls}: limsup T_n = inf"
    return law.joint_neg(x) == 0, f"NegDiv: P{{xi<0, eta<=x}} = {law.joint_neg(x):.6g}"


def rho_as_finite(law: JointLaw) -> tuple[bool, str]:
    cls, _ = classify_trichotomy(law)
    return cls == POS_DIV, f"finite iff positively divergent; class {cls}"


def exp_moment_tau(law: JointLaw, a: float, x: float) -> Prediction:
    if not a > 0:
        raise ValueError("a must be positive")
    neg = law.joint_neg(x)
    if neg == 0:
        atom = law.joint_atom(x)
        lhs = math.exp(a) * atom
        return Prediction(
            FINITE if lhs < 1 else INFINITE, "a",
            "P{xi<0, eta<=x} = 0: finite iff e^a P{xi=0, eta<=x} < 1",
            {"P(xi=0,eta<=x)": atom, "e^a P(xi=0,eta<=x)": lhs,
             "threshold": -math.log(atom) if atom > 0 else math.inf},
        )
    R = laws.rate_R(law)
    return Prediction(
        FINITE if R >= a - _BOUNDARY_TOL else INFINITE, "b",
        "P{xi<0, eta<=x} > 0: finite iff R >= a",
        {"R": R, "P(xi<0,eta<=x)": neg, "threshold": R},
    )


def exp_moment_N(law: JointLaw, a: float, x: float) -> Prediction:
    """Prediction for ``E exp(a N(x))``; ``constants['threshold']`` is ``a(x)``."""
    if not a > 0:
        raise ValueError("a must be positive")
    _require_posdiv(law, "exp_moment_N")
    if law.p_xi_neg == 0:
        if law.p_xi_zero == 0:
            return Prediction(FINITE, "b", "xi > 0 a.s.: a(x) = inf", {"threshold": math.inf})
        le, gt = law.joint_atom(x), law.joint_atom_above(x)
        threshold = math.log((1 - gt) / le) if le > 0 else math.inf
        return Prediction(
            FINITE if a < threshold else INFINITE, "a",
            "xi >= 0: finite iff e^a P{xi=0, eta<=x} + P{xi=0, eta>x} < 1",
            {"P(xi=0,eta<=x)": le, "P(xi=0,eta>x)": gt, "threshold": threshold},
        )
    R = laws.rate_R(law)
    return Prediction(
        FINITE if R >= a - _BOUNDARY_TOL else INFINITE, "c",
        "P{xi<0} > 0: finite iff R >= a", {"R": R, "threshold": R},
    )


def exp_moment_rho(law: JointLaw, a: float, x: float) -> Prediction:
    if not a > 0:
        raise ValueError("a must be positive")
    _require_posdiv(law, "exp_moment_rho")
    if law.p_xi_neg == 0:
        if law.eta.cdf(x) == 0:
            return Prediction(FINITE, "trivial", "xi >= 0 and P{eta<=x} = 0: rho(x) = 0 a.s.")
        p0 = law.p_xi_zero
        bound = -math.log(p0) if p0 > 0 else math.inf
        if a >= bound:
            return Prediction(INFINITE, "a", "xi >= 0: needs a < -log P{xi=0}", {"-log P(xi=0)": bound})
        gamma = laws.solve_gamma(law, a)
        lap = law.eta.laplace(gamma)
        return Prediction(
            FINITE if math.isfinite(lap) else INFINITE, "a",
            "xi >= 0: finite iff a < -log P{xi=0} and E exp(-gamma eta) < inf",
            {"-log P(xi=0)": bound, "gamma": gamma, "E exp(-gamma eta)": lap},
        )
    t_min, m = laws.laplace_minimum(law)
    R = -math.log(m)
    if a > R + _BOUNDARY_TOL:
        return Prediction(INFINITE, "b", "P{xi<0} > 0: a > R", {"R": R})
    if a < R - _BOUNDARY_TOL:
        gamma = laws.solve_gamma(law, a)
        lap = law.eta.laplace(gamma)
        return Prediction(
            FINITE if math.isfinite(lap) else INFINITE, "b",
            "P{xi<0} > 0: finite iff a < R and E exp(-gamma eta) < inf",
            {"R": R, "gamma": gamma, "E exp(-gamma eta)": lap},
        )
    # a = R: finite only when the infimum sits at the edge of the domain
    # where the transform is still decreasing, i.e. E xi exp(-gamma xi) > 0
    gamma = t_min
    drift = law.xi.expect(lambda v: v * safe_exp(-gamma * v))
    lap = law.eta.laplace(gamma)
    ok = drift > 1e-12 and math.isfinite(lap)
    return Prediction(
        FINITE if ok else INFINITE, "b-boundary",
        "a = R: finite iff E xi exp(-gamma xi) > 0 and E exp(-gamma eta) < inf",
        {"R": R, "gamma": gamma, "E xi exp(-gamma xi)": drift, "E exp(-gamma eta)": lap},
    )


def power_moment_N(law: JointLaw, p: float) -> Prediction:
    if not p > 0:
        raise ValueError("p must be positive")
    _require_posdiv(law, "power_moment_N")
    val = laws.expected_j_power(law, "xi_minus", p + 1)
    return Prediction(
        FINITE if math.isfinite(val) else INFINITE, "power",
        "finite iff E J+(xi^-)^(p+1) < inf", {"E J+(xi^-)^(p+1)": val},
    )


def power_moment_rho(law: JointLaw, p: float) -> Prediction:
    if not p > 0:
        raise ValueError("p must be positive")
    _require_posdiv(law, "power_moment_rho")
    vx = laws.expected_j_power(law, "xi_minus", p + 1)
    ve = laws.expected_j_power(law, "eta_minus", p + 1)
    ok = math.isfinite(vx) and math.isfinite(ve)
    return Prediction(
        FINITE if ok else INFINITE, "power",
        "finite iff E J+(xi^-)^(p+1) < inf and E J+(eta^-)^(p+1) < inf",
        {"E J+(xi^-)^(p+1)": vx, "E J+(eta^-)^(p+1)": ve},
    )


def series_criterion_experimental(law: JointLaw, p: float) -> Prediction:
    """Convergence of ``sum n^(p-1) P{T_n <= x}``.

    Unverified: the condition (``E J+(xi^-)^(p+1) < inf`` and
    ``E J+(eta^-)^p < inf``) is stated without proof in the source.
    """
    _require_posdiv(law, "series_criterion_experimental")
    vx = laws.expected_j_power(law, "xi_minus", p + 1)
    ve = laws.expected_j_power(law, "eta_minus", max(p, 1.0))
    ok = math.isfinite(vx) and math.isfinite(ve)
    return Prediction(
        FINITE if ok else INFINITE, "experimental-unverified",
        "sum n^(p-1) P{T_n<=x} < inf iff E rho*(x)^p < inf and E J+(eta^-)^p < inf",
        {"E J+(xi^-)^(p+1)": vx, "E J+(eta^-)^p": ve},
    )


def sigma_power_verdict(law: JointLaw, c: float, p: float, x: float = 0.0) -> Prediction:
    """Finiteness of ``E sigma(x)^p`` for ``sigma(x) = inf{k: eta_k - (k-1)c > x}``."""
    if c < 0 or not p > 0:
        raise ValueError("need c >= 0 and p > 0")
    if law.xi.lower < -c:
        raise PreconditionError(f"needs P{{xi >= -c}} = 1, xi reaches {law.xi.lower}")
    if c == 0:
        q = law.eta.cdf(x)
        verdict = FINITE if q < 1 else INFINITE
        return Prediction(verdict, "geometric", "c = 0: sigma(x) is geometric with parameter P{eta > x}",
                          {"P(eta<=x)": q})
    s = law.eta.s_limit
    if math.isclose(s, c * p, rel_tol=1e-12, abs_tol=1e-15):
        verdict = BOUNDARY
    else:
        verdict = FINITE if s > c * p else INFINITE
    return Prediction(verdict, "raabe", "finite if s > c p, infinite if s < c p",
                      {"s": s, "c*p": c * p})


@dataclass
class CriteriaReport:
    trichotomy: str
    drift_basis: str
    constants: dict[str, Any]
    tau_as_finite: dict[str, bool] = field(default_factory=dict)
    exp_tau: dict[str, dict] = field(default_factory=dict)
    exp_N: dict[str, dict] = field(default_factory=dict)
    exp_rho: dict[str, dict] = field(default_factory=dict)
    pow_N: dict[str, dict] = field(default_factory=dict)
    pow_rho: dict[str, dict] = field(default_factory=dict)
    sigma_pow: dict[str, dict] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _key(**kw: float) -> str:
    return ",".join(f"{k}={v:g}" for k, v in kw.items())


def _safe(fn, *args) -> dict:
    try:
        return fn(*args).to_dict()
    except (NotApplicable, PreconditionError, NoRootError) as exc:
        return {"verdict": "NotApplicable", "reason": str(exc)}


def build_report(law: JointLaw, a_values: Sequence[float] = (), x_values: Sequence[float] = (0.0,),
                 p_values: Sequence[float] = (), c: float | None = None) -> CriteriaReport:
    cls, basis = classify_trichotomy(law)
    R = laws.rate_R(law)
    constants: dict[str, Any] = {"R": R, "s": law.eta.s_limit}
    gammas = {}
    for a in a_values:
        try:
            gammas[f"{a:g}"] = laws.solve_gamma(law, a)
        except NoRootError:
            gammas[f"{a:g}"] = None
    constants["gamma"] = gammas
    rep = CriteriaReport(trichotomy=cls, drift_basis=basis, constants=constants)
    thresholds = {}
    for x in x_values:
        rep.tau_as_finite[_key(x=x)] = tau_as_finite(law, x)[0]
        for a in a_values:
            k = _key(a=a, x=x)
            rep.exp_tau[k] = _safe(exp_moment_tau, law, a, x)
            rep.exp_N[k] = _safe(exp_moment_N, law, a, x)
            rep.exp_rho[k] = _safe(exp_moment_rho, law, a, x)
            thr = rep.exp_N[k].get("constants", {}).get("threshold")
            if thr is not None:
                thresholds[_key(x=x)] = thr
        if c is not None:
            for p in p_values:
                rep.sigma_pow[_key(c=c, p=p, x=x)] = _safe(sigma_power_verdict, law, c, p, x)
    constants["a(x)"] = thresholds
    for p in p_values:
        rep.pow_N[_key(p=p)] = _safe(power_moment_N, law, p)
        rep.pow_rho[_key(p=p)] = _safe(power_moment_rho, law, p)
    return rep
