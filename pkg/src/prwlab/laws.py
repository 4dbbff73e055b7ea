"""Joint laws of the increment/perturbation pair (xi, eta).

A :class:`JointLaw` couples two :class:`Marginal` descriptors.  Every marginal
knows how to sample itself and exposes the analytic quantities the criteria
need: distribution function, atoms, moment generating function, truncated
means and a symbolic description of both tails.  Finiteness of integrals
such as ``E J+(eta^-)^q`` is decided from the tail description, never from
truncated numerics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np
from scipy import special, stats

from ._numerics import bisect_decreasing, golden_min, quad
from .errors import LawError, NoRootError, PreconditionError, UndefinedQuantity

__all__ = [
    "Tail",
    "Marginal",
    "Discrete",
    "Continuous",
    "Mixture",
    "JointLaw",
    "LawAnalytics",
    "make_marginal",
    "point",
    "two_point",
    "uniform",
    "exponential",
    "normal",
    "pareto",
    "lognormal",
    "mixture",
    "sample_pair",
    "a_plus",
    "a_minus",
    "j_plus",
    "j_minus",
    "expected_j_power",
    "expected_j_plus_power",
    "laplace_minimum",
    "rate_R",
    "solve_gamma",
    "analytics",
]

_TAIL_RANK = {"bounded": 0, "light": 1, "subexp": 2, "poly": 3}


@dataclass(frozen=True)
class Tail:
    """Symbolic tail class: ``bounded``, ``light`` (some exponential moment),
    ``subexp`` (all power moments, no exponential moment) or ``poly`` with
    ``P{X > y} ~ C y^-index``."""

    kind: str
    index: float = math.inf

    def __post_init__(self) -> None:
        if self.kind not in _TAIL_RANK:
            raise LawError(f"unknown tail kind {self.kind!r}")

    @property
    def heavy(self) -> bool:
        return self.kind in ("subexp", "poly")

    def power_moment_finite(self, q: float) -> bool:
        return self.kind != "poly" or q < self.index

    def _key(self) -> tuple[int, float]:
        return (_TAIL_RANK[self.kind], -self.index if self.kind == "poly" else 0.0)

    @staticmethod
    def heaviest(tails: Sequence["Tail"]) -> "Tail":
        return max(tails, key=Tail._key)


BOUNDED = Tail("bounded")
LIGHT = Tail("light")


class Marginal:
    """Univariate law of a real random variable."""

    family: str = "abstract"

    # -- sampling ----------------------------------------------------------
    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def tilted_sampler(self, theta: float) -> Callable[[np.random.Generator, int], np.ndarray]:
        """Sampler for the law with density proportional to ``exp(-theta x)``."""
        raise PreconditionError(f"{self.family}: exponential tilt not available")

    # -- distribution function --------------------------------------------
    def cdf(self, x: float) -> float:
        raise NotImplementedError

    def cdf_array(self, x: np.ndarray) -> np.ndarray:
        """Vectorised ``cdf``."""
        x = np.asarray(x, dtype=float)
        return np.array([self.cdf(float(v)) for v in x.ravel()]).reshape(x.shape)

    def cdf_left(self, x: float) -> float:
        """``P{X < x}``."""
        return self.cdf(x) - self.atom(x)

    def sf(self, x: float) -> float:
        return 1.0 - self.cdf(x)

    def atom(self, x: float) -> float:
        return 0.0

    def ppf(self, q: float) -> float:
        raise NotImplementedError

    @property
    def lower(self) -> float:
        raise NotImplementedError

    @property
    def upper(self) -> float:
        raise NotImplementedError

    # -- tails and moments -------------------------------------------------
    @property
    def right_tail(self) -> Tail:
        raise NotImplementedError

    @property
    def left_tail(self) -> Tail:
        raise NotImplementedError

    @property
    def s_limit(self) -> float:
        """``lim_{y->inf} y P{X > y}`` in ``[0, inf]``."""
        raise NotImplementedError

    def mgf(self, s: float) -> float:
        """``E exp(s X)``; ``inf`` when the expectation diverges."""
        raise NotImplementedError

    def laplace(self, t: float) -> float:
        return self.mgf(-t)

    def expect(self, f: Callable[[float], float], lo: float = -math.inf, hi: float = math.inf) -> float:
        """``E[f(X); lo < X < hi]``."""
        raise NotImplementedError

    def tail_prob(self, y: float, side: int) -> float:
        """``P{side * X > y}``."""
        return self.sf(y) if side > 0 else self.cdf_left(-y)

    def truncated_mean(self, x: float, side: int) -> float:
        """``E min((side X)^+, x) = int_0^x P{side X > y} dy``."""
        if x <= 0:
            return 0.0
        tail = lambda y: self.tail_prob(y, side)
        if x > 64.0:
            # a long finite range loses the mass near 0; subtract the tail instead
            mean = self.mean_part(side)
            if math.isfinite(mean):
                k = max([x] + self._kinks(side))
                return mean - quad(tail, x, k) - quad(tail, k, math.inf)
        return quad(tail, 0.0, x, points=self._kinks(side))

    def mean_part(self, side: int) -> float:
        """``E (side X)^+``, possibly ``inf``."""
        tail = self.right_tail if side > 0 else self.left_tail
        if tail.kind == "poly" and tail.index <= 1:
            return math.inf
        edge = self.upper if side > 0 else -self.lower
        if edge <= 0:
            return 0.0
        return quad(lambda y: self.tail_prob(y, side), 0.0, edge, points=self._kinks(side))

    @property
    def mean(self) -> float | None:
        """``E X`` or ``None`` when both halves are infinite."""
        pos, neg = self.mean_part(1), self.mean_part(-1)
        if math.isinf(pos) and math.isinf(neg):
            return None
        return pos - neg

    def _kinks(self, side: int) -> list[float]:
        return [abs(v) for v in (self.lower, self.upper) if math.isfinite(v)]

    # -- transforms --------------------------------------------------------
    def affine(self, slope: float, intercept: float) -> "Marginal":
        raise NotImplementedError

    def describe(self) -> dict[str, Any]:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.describe()})"


class Discrete(Marginal):
    family = "discrete"

    def __init__(self, values: Sequence[float], probs: Sequence[float]):
        v = np.asarray(values, dtype=float)
        p = np.asarray(probs, dtype=float)
        if v.ndim != 1 or v.shape != p.shape or v.size == 0:
            raise LawError("discrete law needs matching non-empty values and probs")
        if np.any(p < 0) or not math.isclose(p.sum(), 1.0, abs_tol=1e-12):
            raise LawError(f"probabilities must be nonnegative and sum to 1, got {p.tolist()}")
        if not np.all(np.isfinite(v)):
            raise LawError("discrete values must be finite")
        order = np.argsort(v, kind="stable")
        v, p = v[order], p[order]
        uniq, inv = np.unique(v, return_inverse=True)
        merged = np.zeros(uniq.size)
        np.add.at(merged, inv, p)
        keep = merged > 0
        self.values = uniq[keep]
        self.probs = merged[keep] / merged[keep].sum()
        self._cum = np.cumsum(self.probs)

    def sample(self, rng, n):
        if self.values.size == 1:
            return np.full(n, self.values[0])
        u = rng.random(n)
        idx = np.searchsorted(self._cum, u, side="right")
        return self.values[np.minimum(idx, self.values.size - 1)]

    def tilted_sampler(self, theta):
        w = np.log(self.probs) - theta * self.values
        tilted = Discrete(self.values, np.exp(w - special.logsumexp(w)))
        return tilted.sample

    def cdf(self, x):
        return float(self.probs[self.values <= x].sum())

    def cdf_array(self, x):
        cum = np.concatenate(([0.0], np.cumsum(self.probs)))
        return np.minimum(cum[np.searchsorted(self.values, np.asarray(x, dtype=float), side="right")], 1.0)

    def cdf_left(self, x):
        return float(self.probs[self.values < x].sum())

    def atom(self, x):
        return float(self.probs[self.values == x].sum())

    def ppf(self, q):
        idx = int(np.searchsorted(self._cum, q - 1e-15, side="left"))
        return float(self.values[min(idx, self.values.size - 1)])

    @property
    def lower(self):
        return float(self.values[0])

    @property
    def upper(self):
        return float(self.values[-1])

    right_tail = property(lambda self: BOUNDED)
    left_tail = property(lambda self: BOUNDED)
    s_limit = property(lambda self: 0.0)

    def mgf(self, s):
        if s == 0:
            return 1.0
        val = special.logsumexp(s * self.values, b=self.probs)
        return math.inf if val > 700 else math.exp(val)

    def expect(self, f, lo=-math.inf, hi=math.inf):
        m = (self.values > lo) & (self.values < hi)
        return float(sum(p * f(v) for v, p in zip(self.values[m], self.probs[m])))

    def truncated_mean(self, x, side):
        if x <= 0:
            return 0.0
        return float(np.sum(self.probs * np.minimum(np.maximum(side * self.values, 0.0), x)))

    def mean_part(self, side):
        return float(np.sum(self.probs * np.maximum(side * self.values, 0.0)))

    def affine(self, slope, intercept):
        return Discrete(slope * self.values + intercept, self.probs)

    def describe(self):
        if self.values.size == 1:
            return {"family": "point", "params": {"value": float(self.values[0])}}
        return {
            "family": "discrete",
            "params": {"values": self.values.tolist(), "probs": self.probs.tolist()},
        }


class _NegLogBeta:
    """Distribution of ``-log W`` for ``W ~ Beta(a, b)`` (scipy-like surface)."""

    def __init__(self, a: float, b: float):
        self.a, self.b = a, b
        self._beta = stats.beta(a, b)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, self._beta.sf(np.exp(-np.maximum(x, 0.0))), 0.0)

    def sf(self, x):
        return 1.0 - self.cdf(x)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, self._beta.pdf(np.exp(-np.maximum(x, 0))) * np.exp(-np.maximum(x, 0)), 0.0)

    def ppf(self, q):
        return -np.log(self._beta.isf(q))

    def isf(self, q):
        return -np.log(self._beta.ppf(q))


@dataclass(frozen=True)
class _BaseSpec:
    """Internal description of a standard variable ``Y``; ``X = shift + sign*scale*Y``."""

    dist: Any
    draw: Callable[[np.random.Generator, int], np.ndarray]
    support: tuple[float, float]
    right: Tail
    left: Tail
    mgf: Callable[[float], float] | None
    s_coef: float = 0.0  # lim y P{Y > y} when the right tail is poly with index 1


class Continuous(Marginal):
    """Absolutely continuous family realised as ``X = shift + sign*scale*Y``."""

    def __init__(self, family: str, params: dict[str, float], base: _BaseSpec,
                 shift: float = 0.0, sign: int = 1, scale: float = 1.0):
        if sign not in (1, -1):
            raise LawError("sign must be +1 or -1")
        if not scale > 0:
            raise LawError("scale must be positive")
        self.family = family
        self.params = dict(params)
        self._base = base
        self.shift = float(shift)
        self.sign = sign
        self.scale = float(scale)
        self._tilt = None

    # Y-coordinates of a point x
    def _y(self, x):
        return (x - self.shift) / (self.sign * self.scale)

    def sample(self, rng, n):
        return self.shift + self.sign * self.scale * self._base.draw(rng, n)

    def cdf(self, x):
        y = self._y(x)
        return float(self._base.dist.cdf(y) if self.sign > 0 else self._base.dist.sf(y))

    def sf(self, x):
        y = self._y(x)
        return float(self._base.dist.sf(y) if self.sign > 0 else self._base.dist.cdf(y))

    def cdf_array(self, x):
        y = self._y(np.asarray(x, dtype=float))
        return np.asarray(self._base.dist.cdf(y) if self.sign > 0 else self._base.dist.sf(y), dtype=float)

    def cdf_left(self, x):
        return self.cdf(x)

    def pdf(self, x):
        return float(self._base.dist.pdf(self._y(x))) / self.scale

    def ppf(self, q):
        y = self._base.dist.ppf(q) if self.sign > 0 else self._base.dist.isf(q)
        return float(self.shift + self.sign * self.scale * y)

    @property
    def lower(self):
        lo, hi = self._base.support
        return self.shift + self.scale * (lo if self.sign > 0 else -hi)

    @property
    def upper(self):
        lo, hi = self._base.support
        return self.shift + self.scale * (hi if self.sign > 0 else -lo)

    @property
    def right_tail(self):
        return self._base.right if self.sign > 0 else self._base.left

    @property
    def left_tail(self):
        return self._base.left if self.sign > 0 else self._base.right

    @property
    def s_limit(self):
        tail = self.right_tail
        if tail.kind != "poly" or tail.index > 1:
            return 0.0
        if tail.index < 1:
            return math.inf
        return self.scale * self._base.s_coef

    def _mgf_y(self, u: float) -> float:
        if u == 0:
            return 1.0
        if self._base.mgf is not None:
            return self._base.mgf(u)
        tail = self._base.right if u > 0 else self._base.left
        if tail.heavy:
            return math.inf
        lo, hi = self._base.support
        dist = self._base.dist
        return quad(lambda y: math.exp(u * y) * float(dist.pdf(y)), lo, hi)

    def mgf(self, s):
        if s == 0:
            return 1.0
        m = self._mgf_y(s * self.sign * self.scale)
        if math.isinf(m):
            return math.inf
        log_val = s * self.shift + math.log(m) if m > 0 else -math.inf
        return math.inf if log_val > 700 else math.exp(log_val)

    def expect(self, f, lo=-math.inf, hi=math.inf):
        a, b = max(lo, self.lower), min(hi, self.upper)
        if a >= b:
            return 0.0

        def integrand(x):
            d = self.pdf(x)
            return 0.0 if d == 0 else f(x) * d

        return quad(integrand, a, b)

    def tilted_sampler(self, theta):
        if theta == 0:
            return self.sample
        if not math.isfinite(self.mgf(-theta)):
            raise PreconditionError(f"{self.family}: E exp(-{theta} X) is infinite, cannot tilt")
        fam, p = self.family, self.params
        # tilt parameter seen by Y in X = shift + sign*scale*Y
        theta_y = theta * self.sign * self.scale
        shift, k = self.shift, self.sign * self.scale
        if fam == "normal":
            mu, sd = p["mean"] - theta_y * p["std"] ** 2, p["std"]
            return lambda rng, n: shift + k * rng.normal(mu, sd, n)
        if fam == "exponential":
            rate = p["rate"] + theta_y
            return lambda rng, n: shift + k * rng.exponential(1.0 / rate, n)
        lower = self.lower
        if not math.isfinite(lower):
            raise PreconditionError(f"{self.family}: no tilt sampler for unbounded lower support")

        def draw(rng, n):
            # rejection from the base law, acceptance exp(-theta (x - lower))
            out = np.empty(n)
            filled = 0
            while filled < n:
                need = n - filled
                x = self.sample(rng, max(2 * need, 16))
                keep = x[rng.random(x.size) < np.exp(-theta * (x - lower))][:need]
                out[filled:filled + keep.size] = keep
                filled += keep.size
            return out

        return draw

    def affine(self, slope, intercept):
        if slope == 0:
            return Discrete([intercept], [1.0])
        new = Continuous(
            self.family, self.params, self._base,
            shift=slope * self.shift + intercept,
            sign=self.sign * (1 if slope > 0 else -1),
            scale=self.scale * abs(slope),
        )
        return new

    def describe(self):
        d = {"family": self.family, "params": dict(self.params)}
        if (self.shift, self.sign, self.scale) != self._default_transform():
            d["transform"] = {"shift": self.shift, "sign": self.sign, "scale": self.scale}
        return d

    def _default_transform(self):
        p = self.params
        return (p.get("shift", 0.0), p.get("sign", 1), 1.0)


class Mixture(Marginal):
    family = "mixture"

    def __init__(self, components: Sequence[Marginal], weights: Sequence[float]):
        w = np.asarray(weights, dtype=float)
        if len(components) != w.size or w.size == 0:
            raise LawError("mixture needs one weight per component")
        if np.any(w < 0) or not math.isclose(w.sum(), 1.0, abs_tol=1e-12):
            raise LawError("mixture weights must be nonnegative and sum to 1")
        self.components = list(components)
        self.weights = w / w.sum()
        self._cum = np.cumsum(self.weights)

    def _sum(self, fn):
        total = 0.0
        for w, c in zip(self.weights, self.components):
            if w > 0:
                total += w * fn(c)
        return total

    def sample(self, rng, n):
        u = rng.random(n)
        idx = np.minimum(np.searchsorted(self._cum, u, side="right"), len(self.components) - 1)
        out = np.empty(n)
        for k, c in enumerate(self.components):
            m = idx == k
            if m.any():
                out[m] = c.sample(rng, int(m.sum()))
        return out

    def tilted_sampler(self, theta):
        lw = np.array([
            math.log(w) + math.log(c.mgf(-theta)) if w > 0 else -math.inf
            for w, c in zip(self.weights, self.components)
        ])
        if not np.all(np.isfinite(lw[self.weights > 0])):
            raise PreconditionError("mixture: a component has infinite tilt normaliser")
        cum = np.cumsum(np.exp(lw - special.logsumexp(lw)))
        samplers = [c.tilted_sampler(theta) for c in self.components]

        def draw(rng, n):
            idx = np.minimum(np.searchsorted(cum, rng.random(n), side="right"), len(samplers) - 1)
            out = np.empty(n)
            for k, s in enumerate(samplers):
                m = idx == k
                if m.any():
                    out[m] = s(rng, int(m.sum()))
            return out

        return draw

    def cdf(self, x):
        return self._sum(lambda c: c.cdf(x))

    def cdf_array(self, x):
        return sum(w * c.cdf_array(x) for c, w in zip(self.components, self.weights))

    def cdf_left(self, x):
        return self._sum(lambda c: c.cdf_left(x))

    def sf(self, x):
        return self._sum(lambda c: c.sf(x))

    def atom(self, x):
        return self._sum(lambda c: c.atom(x))

    def ppf(self, q):
        lo, hi = self.lower, self.upper
        lo = lo if math.isfinite(lo) else min(c.ppf(q) for c in self.components)
        hi = hi if math.isfinite(hi) else max(c.ppf(q) for c in self.components)
        # smallest x with cdf(x) >= q; cdf is nondecreasing
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.cdf(mid) >= q:
                hi = mid
            else:
                lo = mid
        return hi

    lower = property(lambda self: min(c.lower for c in self.components))
    upper = property(lambda self: max(c.upper for c in self.components))
    right_tail = property(lambda self: Tail.heaviest([c.right_tail for c, w in zip(self.components, self.weights) if w > 0]))
    left_tail = property(lambda self: Tail.heaviest([c.left_tail for c, w in zip(self.components, self.weights) if w > 0]))

    @property
    def s_limit(self):
        return self._sum(lambda c: c.s_limit)

    def mgf(self, s):
        return self._sum(lambda c: c.mgf(s))

    def expect(self, f, lo=-math.inf, hi=math.inf):
        return self._sum(lambda c: c.expect(f, lo, hi))

    def truncated_mean(self, x, side):
        return self._sum(lambda c: c.truncated_mean(x, side))

    def mean_part(self, side):
        return self._sum(lambda c: c.mean_part(side))

    def affine(self, slope, intercept):
        return Mixture([c.affine(slope, intercept) for c in self.components], self.weights)

    def describe(self):
        return {
            "family": "mixture",
            "params": {
                "components": [c.describe() for c in self.components],
                "weights": self.weights.tolist(),
            },
        }


# ---------------------------------------------------------------------------
# family constructors


def _check(cond: bool, msg: str) -> None:
    if not cond:
        raise LawError(msg)


def point(value: float) -> Discrete:
    return Discrete([value], [1.0])


def two_point(values: Sequence[float], probs: Sequence[float]) -> Discrete:
    _check(len(values) == 2 and len(probs) == 2, "two_point needs two values and two probs")
    return Discrete(values, probs)


def uniform(low: float, high: float) -> Continuous:
    _check(high > low, "uniform needs high > low")
    w = high - low

    def mgf(u):
        if abs(u * w) < 1e-8:
            return math.exp(u * low) * (1 + u * w / 2)
        return (math.exp(u * high) - math.exp(u * low)) / (u * w) if u * high < 700 else math.inf

    base = _BaseSpec(stats.uniform(loc=low, scale=w), lambda rng, n: rng.uniform(low, high, n),
                     (low, high), BOUNDED, BOUNDED, mgf)
    return Continuous("uniform", {"low": low, "high": high}, base)


def exponential(rate: float = 1.0, shift: float = 0.0, sign: int = 1) -> Continuous:
    _check(rate > 0, "exponential rate must be positive")

    def mgf(u):
        return rate / (rate - u) if u < rate else math.inf

    base = _BaseSpec(stats.expon(scale=1.0 / rate), lambda rng, n: rng.exponential(1.0 / rate, n),
                     (0.0, math.inf), LIGHT, BOUNDED, mgf)
    return Continuous("exponential", {"rate": rate, "shift": shift, "sign": sign}, base,
                      shift=shift, sign=sign)


def normal(mean: float = 0.0, std: float = 1.0) -> Continuous:
    _check(std > 0, "normal std must be positive")

    def mgf(u):
        val = u * mean + 0.5 * (u * std) ** 2
        return math.inf if val > 700 else math.exp(val)

    base = _BaseSpec(stats.norm(loc=mean, scale=std), lambda rng, n: rng.normal(mean, std, n),
                     (-math.inf, math.inf), LIGHT, LIGHT, mgf)
    return Continuous("normal", {"mean": mean, "std": std}, base)


def pareto(alpha: float, scale: float = 1.0, shift: float = 0.0, sign: int = 1) -> Continuous:
    """``X = shift + sign*Y`` with ``P{Y > y} = (scale/y)^alpha`` for ``y >= scale``."""
    _check(alpha > 0 and scale > 0, "pareto needs alpha > 0 and scale > 0")

    def draw(rng, n):
        return scale * (1.0 - rng.random(n)) ** (-1.0 / alpha)

    base = _BaseSpec(stats.pareto(b=alpha, scale=scale), draw, (scale, math.inf),
                     Tail("poly", alpha), BOUNDED, None, s_coef=scale)
    return Continuous("pareto", {"alpha": alpha, "scale": scale, "shift": shift, "sign": sign},
                      base, shift=shift, sign=sign)


def lognormal(mu: float = 0.0, sigma: float = 1.0, shift: float = 0.0, sign: int = 1) -> Continuous:
    _check(sigma > 0, "lognormal sigma must be positive")
    base = _BaseSpec(stats.lognorm(s=sigma, scale=math.exp(mu)),
                     lambda rng, n: rng.lognormal(mu, sigma, n), (0.0, math.inf),
                     Tail("subexp"), BOUNDED, None)
    return Continuous("lognormal", {"mu": mu, "sigma": sigma, "shift": shift, "sign": sign},
                      base, shift=shift, sign=sign)


def neg_log_beta(a: float = 1.0, b: float = 1.0) -> Continuous:
    """Law of ``-log W`` for ``W ~ Beta(a, b)``."""
    _check(a > 0 and b > 0, "beta parameters must be positive")
    lbeta = special.betaln(a, b)

    def mgf(u):
        # E W^-u = B(a-u, b)/B(a, b)
        return math.exp(special.betaln(a - u, b) - lbeta) if u < a else math.inf

    def draw(rng, n):
        return -np.log(rng.beta(a, b, n))

    base = _BaseSpec(_NegLogBeta(a, b), draw, (0.0, math.inf), LIGHT, BOUNDED, mgf)
    return Continuous("neg_log_beta", {"a": a, "b": b}, base)


def mixture(components: Sequence[Marginal], weights: Sequence[float]) -> Mixture:
    return Mixture(components, weights)


_FAMILIES: dict[str, Callable[..., Marginal]] = {
    "point": point,
    "two_point": two_point,
    "discrete": Discrete,
    "uniform": uniform,
    "exponential": exponential,
    "normal": normal,
    "pareto": pareto,
    "lognormal": lognormal,
    "neg_log_beta": neg_log_beta,
}


def make_marginal(desc: dict[str, Any]) -> Marginal:
    """Build a marginal from ``{"family": ..., "params": {...}}``."""
    family = desc.get("family")
    params = dict(desc.get("params", {}))
    if family == "mixture":
        comps = [make_marginal(c) for c in params.pop("components")]
        return Mixture(comps, params.pop("weights"))
    if family not in _FAMILIES:
        raise LawError(f"unknown family {family!r}; expected one of {sorted(_FAMILIES) + ['mixture']}")
    try:
        return _FAMILIES[family](**params)
    except TypeError as exc:
        raise LawError(f"bad parameters for {family!r}: {exc}") from None


# ---------------------------------------------------------------------------
# joint laws

_MAPS = {"identity": (1.0, 0.0), "negate": (-1.0, 0.0)}


@dataclass(frozen=True)
class Coupling:
    kind: str  # "independent" | "functional" | "bernoulli_sieve"
    slope: float = 1.0
    intercept: float = 0.0
    name: str = ""
    w_a: float = 1.0
    w_b: float = 1.0

    def describe(self) -> dict[str, Any]:
        if self.kind == "independent":
            return {"type": "independent"}
        if self.kind == "functional":
            return {"type": "functional", "map": self.name, "slope": self.slope, "intercept": self.intercept}
        return {"type": "bernoulli_sieve", "w": {"a": self.w_a, "b": self.w_b}}


class JointLaw:
    """Law of the generic pair ``(xi, eta)``; immutable after construction."""

    def __init__(self, xi: Marginal, eta: Marginal, coupling: Coupling | None = None):
        self.xi = xi
        self.eta = eta
        self.coupling = coupling or Coupling("independent")
        if self.xi.atom(0.0) >= 1.0 - 1e-15:
            raise LawError("standing assumption violated: P{xi=0} must be < 1")
        if self.eta.atom(0.0) >= 1.0 - 1e-15:
            raise LawError("standing assumption violated: P{eta=0} must be < 1")

    # -- constructors -------------------------------------------------------
    @classmethod
    def independent(cls, xi: Marginal, eta: Marginal) -> "JointLaw":
        return cls(xi, eta, Coupling("independent"))

    @classmethod
    def functional(cls, xi: Marginal, map_name: str = "affine", slope: float = 1.0,
                   intercept: float = 0.0) -> "JointLaw":
        """``eta = slope * xi + intercept``; ``map_name`` may be ``identity`` or ``negate``."""
        if map_name in _MAPS:
            slope, intercept = _MAPS[map_name]
        elif map_name != "affine":
            raise LawError(f"unknown functional map {map_name!r}")
        return cls(xi, xi.affine(slope, intercept),
                   Coupling("functional", slope=slope, intercept=intercept, name=map_name))

    @classmethod
    def bernoulli_sieve(cls, a: float = 1.0, b: float = 1.0) -> "JointLaw":
        """``(xi, eta) = (|log W|, |log(1-W)|)`` with ``W ~ Beta(a, b)``."""
        return cls(neg_log_beta(a, b), neg_log_beta(b, a), Coupling("bernoulli_sieve", w_a=a, w_b=b))

    # -- sampling -----------------------------------------------------------
    def sample(self, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
        c = self.coupling
        if c.kind == "independent":
            xi = self.xi.sample(rng, n)
            return xi, self.eta.sample(rng, n)
        if c.kind == "functional":
            xi = self.xi.sample(rng, n)
            return xi, c.slope * xi + c.intercept
        w = rng.beta(c.w_a, c.w_b, n)
        return -np.log(w), -np.log1p(-w)

    # -- joint probabilities ----------------------------------------------
    @property
    def independent_coupling(self) -> bool:
        return self.coupling.kind == "independent"

    @property
    def p_xi_neg(self) -> float:
        return self.xi.cdf_left(0.0)

    @property
    def p_xi_zero(self) -> float:
        return self.xi.atom(0.0)

    @property
    def p_xi_pos(self) -> float:
        return self.xi.sf(0.0)

    def joint_neg(self, x: float) -> float:
        """``P{xi < 0, eta <= x}``."""
        c = self.coupling
        if c.kind == "independent":
            return self.p_xi_neg * self.eta.cdf(x)
        if c.kind == "bernoulli_sieve":
            return 0.0
        if c.slope == 0:
            return self.p_xi_neg if c.intercept <= x else 0.0
        cut = (x - c.intercept) / c.slope
        if c.slope > 0:
            return self.xi.cdf(cut) if cut < 0 else self.p_xi_neg
        return max(self.p_xi_neg - self.xi.cdf_left(cut), 0.0) if cut < 0 else 0.0

    def joint_atom(self, x: float) -> float:
        """``P{xi = 0, eta <= x}``."""
        c = self.coupling
        if c.kind == "independent":
            return self.p_xi_zero * self.eta.cdf(x)
        if c.kind == "bernoulli_sieve":
            return 0.0
        return self.p_xi_zero if c.intercept <= x else 0.0

    def joint_atom_above(self, x: float) -> float:
        """``P{xi = 0, eta > x}``."""
        return self.p_xi_zero - self.joint_atom(x)

    def describe(self) -> dict[str, Any]:
        d = {"xi": self.xi.describe(), "coupling": self.coupling.describe()}
        if self.coupling.kind == "independent":
            d["eta"] = self.eta.describe()
        return d

    def __repr__(self) -> str:
        return f"JointLaw({self.describe()})"


# ---------------------------------------------------------------------------
# analytic operations


def sample_pair(law: JointLaw, rng: np.random.Generator) -> tuple[float, float]:
    xi, eta = law.sample(rng, 1)
    return float(xi[0]), float(eta[0])


def _nonneg(x: float) -> None:
    if x < 0:
        raise ValueError(f"argument must be nonnegative, got {x}")


def a_plus(law: JointLaw, x: float) -> float:
    """Truncated mean ``A+(x) = E min(xi^+, x)``."""
    _nonneg(x)
    return law.xi.truncated_mean(x, 1)


def a_minus(law: JointLaw, x: float) -> float:
    _nonneg(x)
    return law.xi.truncated_mean(x, -1)


def _j(law: JointLaw, x: float, side: int) -> float:
    _nonneg(x)
    p = law.p_xi_pos if side > 0 else law.p_xi_neg
    if p <= 0:
        raise UndefinedQuantity(f"J{'+' if side > 0 else '-'} undefined: P{{{'' if side > 0 else '-'}xi > 0}} = 0")
    if x == 0:
        return 1.0 / p
    return x / law.xi.truncated_mean(x, side)


def j_plus(law: JointLaw, x: float) -> float:
    """``J+(x) = x / A+(x)`` with ``J+(0) = 1/P{xi > 0}``."""
    return _j(law, x, 1)


def j_minus(law: JointLaw, x: float) -> float:
    return _j(law, x, -1)


def _j_growth(xi: Marginal, side: int) -> tuple[float, float]:
    """Growth of J_side(y) as ``y^k (log y)^l``; returns ``(k, l)``."""
    if math.isfinite(xi.mean_part(side)):
        return 1.0, 0.0
    tail = xi.right_tail if side > 0 else xi.left_tail
    if tail.index < 1:
        return tail.index, 0.0
    return 1.0, -1.0


def _variable(law: JointLaw, variable: str, x: float) -> tuple[Marginal, int, float]:
    """Map a variable name to ``(marginal, orientation, cut)`` with
    ``V = (orientation * (X - cut))^+``."""
    table = {
        "eta_minus": (law.eta, -1, 0.0),
        "xi_minus": (law.xi, -1, 0.0),
        "eta_plus": (law.eta, 1, 0.0),
        "xi_plus": (law.xi, 1, 0.0),
        "eta_minus_shifted": (law.eta, -1, x),
    }
    if variable not in table:
        raise ValueError(f"unknown variable {variable!r}; expected one of {sorted(table)}")
    return table[variable]


def expected_j_power(law: JointLaw, variable: str, power: float, side: int = 1, x: float = 0.0) -> float:
    """``E J_side(V)^power`` for ``V`` named by ``variable``; ``inf`` when divergent.

    Divergence is read off the tail classes: with ``J(y) ~ y^k (log y)^l`` and
    ``P{V > y} ~ y^-alpha`` the integral is finite iff ``k*power < alpha``
    (or equality with ``l*power < -1``).
    """
    if power < 1:
        raise ValueError("power must be >= 1")
    j0 = _j(law, 0.0, side)
    marg, orient, cut = _variable(law, variable, x)
    tail = marg.right_tail if orient > 0 else marg.left_tail
    # P{V > 0}
    p_pos = marg.sf(cut) if orient > 0 else marg.cdf_left(cut)
    if p_pos <= 0:
        return j0 ** power
    if tail.kind == "poly":
        k, l = _j_growth(law.xi, side)
        e = k * power
        if e > tail.index or (e == tail.index and l * power >= -1):
            return math.inf

    def integrand(v: float) -> float:
        return _j(law, orient * (v - cut), side) ** power

    if orient > 0:
        body = marg.expect(integrand, lo=cut)
    else:
        body = marg.expect(integrand, hi=cut)
    return j0 ** power * (1.0 - p_pos) + body


def expected_j_plus_power(law: JointLaw, variable: str, power: float, x: float = 0.0) -> float:
    return expected_j_power(law, variable, power, side=1, x=x)


def laplace_xi(law: JointLaw, t: float) -> float:
    if t < 0:
        raise ValueError("laplace transform argument must be nonnegative")
    return law.xi.laplace(t)


def laplace_minimum(law: JointLaw) -> tuple[float, float]:
    """``(t_min, inf_{t>=0} E exp(-t xi))``; ``t_min`` is ``inf`` when the
    infimum is only approached as ``t -> inf``."""
    xi = law.xi
    if law.p_xi_neg == 0:
        return math.inf, law.p_xi_zero
    if xi.left_tail.heavy:
        return 0.0, 1.0
    mean = xi.mean
    if mean is None or mean <= 0:
        return 0.0, 1.0
    phi = xi.laplace
    hi = 1.0
    for _ in range(200):
        v = phi(hi)
        if not math.isfinite(v) or v >= phi(hi / 2):
            break
        hi *= 2.0
    t, m = golden_min(phi, 0.0, hi, xtol=1e-13)
    return t, m


def rate_R(law: JointLaw) -> float:
    """``R = -log inf_{t >= 0} E exp(-t xi)`` (``inf`` when the infimum is 0)."""
    _, m = laplace_minimum(law)
    return math.inf if m <= 0 else -math.log(m)


def solve_gamma(law: JointLaw, a: float) -> float:
    """Smallest positive root of ``E exp(-g xi) = exp(-a)``."""
    if not a > 0:
        raise ValueError("a must be positive")
    t_min, m = laplace_minimum(law)
    target = math.exp(-a)
    if target < m * (1 - 1e-12):
        raise NoRootError(f"a={a} exceeds R={rate_R(law)}; no root")
    phi = law.xi.laplace
    if math.isinf(t_min):
        if target <= m:
            raise NoRootError(f"a={a} equals R={rate_R(law)}; the root escapes to infinity")
        hi = 1.0
        while phi(hi) > target:
            hi *= 2.0
    else:
        if target <= m * (1 + 1e-12):
            return t_min
        hi = t_min
    return bisect_decreasing(phi, target, 0.0, hi, xtol=1e-14)


def ruin_exponent(law: JointLaw) -> float:
    """Positive root of ``E exp(-t xi) = 1`` past the minimiser of the transform.

    ``P{inf_n S_n < -m}`` decays like ``exp(-t m)`` for this ``t``; it is
    ``inf`` for ``xi >= 0`` and 0 when no such root exists (heavy left tail or
    nonpositive drift).
    """
    if law.p_xi_neg == 0:
        return math.inf
    t_min, m = laplace_minimum(law)
    if t_min == 0 or m >= 1:
        return 0.0
    phi = law.xi.laplace
    hi = max(2 * t_min, 1.0)
    for _ in range(200):
        v = phi(hi)
        if not math.isfinite(v) or v >= 1:
            break
        hi *= 2.0
    if not math.isfinite(phi(hi)):
        # find where the transform stops being finite and check it crosses 1 first
        lo_f, hi_f = t_min, hi
        for _ in range(200):
            mid = 0.5 * (lo_f + hi_f)
            if math.isfinite(phi(mid)):
                lo_f = mid
            else:
                hi_f = mid
        if phi(lo_f) < 1:
            return 0.0
        hi = lo_f
    # phi increases on [t_min, hi]; bisect on -phi, which decreases
    return bisect_decreasing(lambda t: -phi(t), -1.0, t_min, hi, xtol=1e-12)


@dataclass(frozen=True)
class LawAnalytics:
    """Bundle of analytic quantities for one law (all callables are pure)."""

    p_xi_neg: float
    p_xi_zero: float
    a_plus: Callable[[float], float]
    a_minus: Callable[[float], float]
    j_plus: Callable[[float], float]
    j_minus: Callable[[float], float]
    laplace_xi: Callable[[float], float]
    joint_atom: Callable[[float], float]
    joint_neg: Callable[[float], float]


def analytics(law: JointLaw) -> LawAnalytics:
    return LawAnalytics(
        p_xi_neg=law.p_xi_neg,
        p_xi_zero=law.p_xi_zero,
        a_plus=lambda x: a_plus(law, x),
        a_minus=lambda x: a_minus(law, x),
        j_plus=lambda x: j_plus(law, x),
        j_minus=lambda x: j_minus(law, x),
        laplace_xi=lambda t: laplace_xi(law, t),
        joint_atom=law.joint_atom,
        joint_neg=law.joint_neg,
    )
