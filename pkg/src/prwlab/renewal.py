"""Renewal measures of the walk ``S``, their weighted versions, tilting and
the ladder duality.

Estimates are plain Monte Carlo averages over independent paths truncated at
``n_max`` steps; exponentially weighted sums are computed under a tilted
measure and accumulated in log space.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy import special

from . import laws, prw
from .criteria import WALK_UP, walk_regime
from ._numerics import safe_exp
from .errors import CouplingError, DivergenceError, NoRootError
from .laws import JointLaw
from .verdicts import DEFAULT_VERDICT, VerdictConfig, series_verdict

PLAIN = "PlainU"
LADDER = "LadderU_gt"


@dataclass(frozen=True)
class RenewalTable:
    kind: str
    grid: np.ndarray
    values: np.ndarray
    se: np.ndarray
    n_max: int
    n_paths: int
    verdicts: tuple[str, ...]
    extra: dict[str, Any] = field(default_factory=dict)

    def rows(self) -> list[dict[str, Any]]:
        return [
            {"y": float(y), "estimate": float(v), "se": float(s), "verdict": d}
            for y, v, s, d in zip(self.grid, self.values, self.se, self.verdicts)
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["y", "estimate", "se", "verdict"], lineterminator="\n")
        w.writeheader()
        for row in self.rows():
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
        return buf.getvalue()

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "n_max": self.n_max, "n_paths": self.n_paths,
                "rows": self.rows(), "extra": _jsonable(self.extra)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _grid(grid: Sequence[float]) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size == 0 or np.any(np.diff(g) <= 0):
        raise ValueError("grid must be a nonempty strictly increasing sequence")
    return g


def _checkpoints(n_max: int) -> tuple[int, int, int]:
    return max(n_max // 4, 1), max(n_max // 2, 1), n_max


class _Accumulator:
    """Per-path partial sums at the three checkpoints, for each grid point."""

    def __init__(self, m: int):
        self.chunks: list[np.ndarray] = []
        self.m = m

    def add(self, per_path: np.ndarray) -> None:  # shape (paths, 3, m)
        self.chunks.append(per_path)

    def finish(self):
        x = np.concatenate(self.chunks, axis=0)
        n = x.shape[0]
        mean = x.mean(axis=0)
        se = x.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros_like(mean)
        incr = x[:, 2, :] - x[:, 1, :]
        incr_se = incr.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros(self.m)
        return mean, se, incr_se


def _verdicts(mean, incr_se, cfg: VerdictConfig) -> tuple[str, ...]:
    return tuple(series_verdict(mean[:, j], cfg, noise=3 * incr_se[j]) for j in range(mean.shape[1]))


def _weighted_counts(s: np.ndarray, weights: np.ndarray, grid: np.ndarray,
                     mask: np.ndarray | None = None) -> np.ndarray:
    """``sum_{n <= k} w_n 1{S_n <= y}`` at the three checkpoints, per path."""
    n_max = s.shape[1] - 1
    cps = _checkpoints(n_max)
    out = np.empty((s.shape[0], 3, grid.size))
    for j, y in enumerate(grid):
        hits = (s <= y) * weights
        if mask is not None:
            hits = hits * mask
        cum = np.cumsum(hits, axis=1)
        out[:, :, j] = cum[:, list(cps)]
    return out


def estimate_renewal_measure(law: JointLaw, kind: str, grid: Sequence[float], n_paths: int,
                             n_max: int, seed: int = 0,
                             cfg: VerdictConfig = DEFAULT_VERDICT) -> RenewalTable:
    """``U(y) = sum_{n>=0} P{S_n <= y}`` or the ladder-height version.

    ``LadderU_gt`` counts the strict ascending ladder heights ``0 = H_0 <
    H_1 < ...`` that lie below ``y``.
    """
    g = _grid(grid)
    if kind not in (PLAIN, LADDER):
        raise ValueError(f"unknown renewal kind {kind!r}")
    if kind == PLAIN:
        regime, basis = walk_regime(law)
        if regime != WALK_UP:
            raise DivergenceError(f"U(y) is infinite unless S_n -> +inf ({basis})")
    weights = np.ones(n_max + 1)
    acc = _Accumulator(g.size)
    stuck = 0
    for start, count in prw.blocks(n_paths):
        xi, _ = prw.simulate_block(law, count, n_max, seed, start)
        s = prw.partial_sums(xi)
        mask = None
        if kind == LADDER:
            prev = np.maximum.accumulate(s, axis=1)
            mask = np.ones_like(s, dtype=bool)
            mask[:, 1:] = s[:, 1:] > prev[:, :-1]
        acc.add(_weighted_counts(s, weights, g, mask))
        stuck += int(np.count_nonzero(s[:, -1] <= g[-1]))
    mean, se, incr_se = acc.finish()
    extra = {"truncated_fraction": stuck / n_paths}
    if law.p_xi_pos > 0:
        extra["j_plus"] = [laws.j_plus(law, float(y)) for y in g]
    return RenewalTable(kind, g, mean[2], se[2], n_max, n_paths, _verdicts(mean, incr_se, cfg), extra)


def tilt_parameter(law: JointLaw, a: float) -> tuple[float, float]:
    """``(theta, a_theta)`` for sampling ``a``-weighted sums.

    ``theta = gamma(a)`` when it exists.  Past the critical rate, ``theta``
    sits where the transform is minimal (or, for ``xi >= 0``, slightly below
    the critical rate) so the tilted walk keeps visiting low levels and the
    divergence shows up in the partial sums.
    """
    try:
        g = laws.solve_gamma(law, a)
        return g, a
    except NoRootError:
        pass
    t_min, m = laws.laplace_minimum(law)
    if math.isinf(t_min):
        R = laws.rate_R(law)
        a_theta = R - min(0.05, R / 2)
        return laws.solve_gamma(law, a_theta), a_theta
    return t_min, -math.log(m)


def _sampler(law: JointLaw, theta: float):
    return None if theta == 0 else law.xi.tilted_sampler(theta)


def exp_renewal_V(law: JointLaw, a: float, grid: Sequence[float], n_paths: int, n_max: int,
                  seed: int = 0, cfg: VerdictConfig = DEFAULT_VERDICT) -> RenewalTable:
    """``V*_a(y) = sum_{n>=0} e^{an} P{S_n <= y}``.

    Each term is estimated as ``E_theta exp((a - a_theta) n + theta S_n) 1{S_n <= y}``
    under the tilted increment law.
    """
    if not a > 0:
        raise ValueError("a must be positive")
    g = _grid(grid)
    theta, a_theta = tilt_parameter(law, a)
    sampler = _sampler(law, theta)
    n = np.arange(n_max + 1)
    logs, cps = [], _checkpoints(n_max)
    for start, count in prw.blocks(n_paths):
        xi, _ = prw.simulate_block(law, count, n_max, seed, start, xi_sampler=sampler)
        s = prw.partial_sums(xi)
        lw = (a - a_theta) * n + theta * s
        out = np.empty((count, 3, g.size))
        for j, y in enumerate(g):
            lj = np.where(s <= y, lw, -np.inf)
            out[:, :, j] = np.stack([special.logsumexp(lj[:, :k + 1], axis=1) for k in cps], axis=1)
        logs.append(out)
    lp = np.concatenate(logs, axis=0)  # per-path log partial sums
    top = np.max(np.where(np.isfinite(lp), lp, -np.inf))
    top = 0.0 if not np.isfinite(top) else top
    scaled = np.exp(lp - top)
    mean_s = scaled.mean(axis=0)
    se_s = scaled.std(axis=0, ddof=1) / math.sqrt(n_paths)
    incr_se = (scaled[:, 2, :] - scaled[:, 1, :]).std(axis=0, ddof=1) / math.sqrt(n_paths)
    with np.errstate(over="ignore", divide="ignore"):
        log_mean = np.log(mean_s) + top
        mean = np.exp(log_mean)
        se = se_s * math.exp(top) if top < 700 else np.full_like(se_s, np.inf)
    # verdicts are scale invariant, so use the scaled partial sums
    verdicts = _verdicts(mean_s, incr_se, cfg)
    extra: dict[str, Any] = {"a": a, "theta": theta, "a_theta": a_theta,
                             "log_values": log_mean[2].tolist()}
    try:
        gamma = laws.solve_gamma(law, a)
    except NoRootError:
        gamma = None
    if gamma is not None:
        sc = np.exp(log_mean[2] - gamma * g)
        extra["gamma"] = gamma
        extra["scaled"] = sc.tolist()
        pos = sc[sc > 0]
        extra["band_ratio"] = float(pos.max() / pos.min()) if pos.size == sc.size else math.inf
    return RenewalTable(f"ExpV(a={a:g})", g, mean[2], se[2], n_max, n_paths, verdicts, extra)


def power_renewal_U(law: JointLaw, p: float, grid: Sequence[float], n_paths: int, n_max: int,
                    seed: int = 0, cfg: VerdictConfig = DEFAULT_VERDICT) -> RenewalTable:
    """``U_{p-1}(y) = sum_n n^(p-1) P{S_n <= y}``; the ``n = 0`` term is 1
    for ``p = 1`` and dropped otherwise."""
    if not p > 0:
        raise ValueError("p must be positive")
    g = _grid(grid)
    n = np.arange(n_max + 1, dtype=float)
    w = np.empty_like(n)
    w[1:] = n[1:] ** (p - 1)
    w[0] = 1.0 if p == 1 else 0.0
    acc = _Accumulator(g.size)
    for start, count in prw.blocks(n_paths):
        xi, _ = prw.simulate_block(law, count, n_max, seed, start)
        acc.add(_weighted_counts(prw.partial_sums(xi), w, g))
    mean, se, incr_se = acc.finish()
    extra: dict[str, Any] = {"p": p}
    if law.p_xi_pos > 0:
        jp = np.array([laws.j_plus(law, float(y)) for y in g]) ** p
        extra["j_plus_power"] = jp.tolist()
        extra["ratio_to_j_plus_power"] = (mean[2] / jp).tolist()
    return RenewalTable(f"PowerU(p-1={p - 1:g})", g, mean[2], se[2], n_max, n_paths,
                        _verdicts(mean, incr_se, cfg), extra)


# ---------------------------------------------------------------------------
# tilting

@dataclass(frozen=True)
class TiltedLaw:
    """Increment law reweighted by ``exp(-gamma x) e^a``; perturbations untouched."""

    base: JointLaw
    gamma: float
    a: float

    def sampler(self):
        return self.base.xi.tilted_sampler(self.gamma)

    def increment_mean(self) -> float:
        return math.exp(self.a) * self.base.xi.expect(lambda v: v * safe_exp(-self.gamma * v))

    def increment_var(self) -> float:
        m = self.increment_mean()
        return math.exp(self.a) * self.base.xi.expect(lambda v: (v - m) ** 2 * safe_exp(-self.gamma * v))


def tilt(law: JointLaw, a: float) -> TiltedLaw:
    if not law.independent_coupling:
        raise CouplingError("tilting needs independent (xi, eta); the perturbation would change law")
    return TiltedLaw(law, laws.solve_gamma(law, a), a)


@dataclass(frozen=True)
class Estimate:
    value: float
    se: float
    n_paths: int

    def agrees(self, other: "Estimate", k: float = 3.0) -> bool:
        return abs(self.value - other.value) <= k * math.hypot(self.se, other.se)


Event = Callable[[np.ndarray], np.ndarray]


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0


def tilted_estimate(tilted: TiltedLaw, event: Event, n: int, n_paths: int, seed: int = 0) -> Estimate:
    """Unbiased estimate of ``e^{an} P{event}``.

    ``event`` maps an array of paths ``(S_0..S_n)`` (one per row) to booleans.
    """
    vals = []
    for start, count in prw.blocks(n_paths):
        xi, _ = prw.simulate_block(tilted.base, count, n, seed, start, xi_sampler=tilted.sampler())
        s = prw.partial_sums(xi)
        vals.append(np.where(event(s), np.exp(tilted.gamma * s[:, n]), 0.0))
    return Estimate(*_mean_se(np.concatenate(vals)), n_paths)


def direct_estimate(law: JointLaw, a: float, event: Event, n: int, n_paths: int, seed: int = 0) -> Estimate:
    """Plain Monte Carlo of ``e^{an} P{event}``."""
    vals = []
    for start, count in prw.blocks(n_paths):
        xi, _ = prw.simulate_block(law, count, n, seed, start)
        vals.append(event(prw.partial_sums(xi)).astype(float))
    m, se = _mean_se(np.concatenate(vals))
    f = math.exp(a * n)
    return Estimate(m * f, se * f, n_paths)


# ---------------------------------------------------------------------------
# duality

@dataclass(frozen=True)
class DualityReport:
    interval: tuple[float, float]
    before_ladder: float
    descending_ladder: float
    before_ladder_se: float
    descending_ladder_se: float
    difference: float
    difference_se: float
    n_paths: int
    n_max: int

    @property
    def agree(self) -> bool:
        return abs(self.difference) <= 3 * self.difference_se + 1e-12

    def to_dict(self) -> dict[str, Any]:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["agree"] = self.agree
        return _jsonable(d)


def ladder_duality_check(law: JointLaw, interval: tuple[float, float], n_paths: int, n_max: int,
                         seed: int = 0, tilt_a: float | None = None) -> DualityReport:
    """Compare ``sum_n P{S_n in I, tau* > n}`` with ``sum_n P{S_{sigma*_n} in I}``
    on the same paths, ``I = (lo, hi]``.

    Both sides are truncated at ``n_max``; the identity holds term by term
    in ``n`` so the truncations match.  With ``tilt_a`` the paths are drawn
    under the tilted increment law.
    """
    lo, hi = interval
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ValueError("interval must be bounded with lo < hi")
    sampler = None if tilt_a is None else tilt(law, tilt_a).sampler()
    diffs, left, right = [], [], []
    for start, count in prw.blocks(n_paths):
        xi, _ = prw.simulate_block(law, count, n_max, seed, start, xi_sampler=sampler)
        s = prw.partial_sums(xi)
        inside = (s > lo) & (s <= hi)
        # tau* > n  iff  S_k <= 0 for all k <= n
        before = np.maximum.accumulate(s, axis=1) <= 0
        prev_min = np.minimum.accumulate(s, axis=1)
        desc = np.ones_like(s, dtype=bool)
        desc[:, 1:] = s[:, 1:] <= prev_min[:, :-1]
        l = np.count_nonzero(inside & before, axis=1).astype(float)
        r = np.count_nonzero(inside & desc, axis=1).astype(float)
        left.append(l)
        right.append(r)
        diffs.append(l - r)
    lm, ls = _mean_se(np.concatenate(left))
    rm, rs = _mean_se(np.concatenate(right))
    dm, ds = _mean_se(np.concatenate(diffs))
    return DualityReport((lo, hi), lm, rm, ls, rs, dm, ds, n_paths, n_max)
