"""Small numerical kernels: guarded quadrature, bisection, golden-section search."""

from __future__ import annotations

import math
import warnings
from typing import Callable, Sequence

from scipy import integrate

from .errors import AccuracyError

QUAD_ABS_TOL = 1e-10
QUAD_LIMIT = 10_000

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def quad(
    f: Callable[[float], float],
    a: float,
    b: float,
    points: Sequence[float] | None = None,
    epsabs: float = QUAD_ABS_TOL,
    epsrel: float = 1e-10,
) -> float:
    """Adaptive Gauss-Kronrod integral of ``f`` over ``[a, b]``.

    Raises :class:`AccuracyError` instead of returning a value whose error
    estimate exceeds ``max(100*epsabs, epsrel*|value|)``.
    """
    if a == b:
        return 0.0
    kw = {}
    if points is not None and math.isfinite(a) and math.isfinite(b):
        inner = sorted(p for p in points if a < p < b)
        if inner:
            kw["points"] = inner
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err, *_ = integrate.quad(
            f, a, b, epsabs=epsabs, epsrel=epsrel, limit=QUAD_LIMIT, full_output=1, **kw
        )
    if not math.isfinite(val) or err > max(100 * epsabs, 1e-7 * abs(val)):
        raise AccuracyError(f"quadrature on [{a}, {b}] failed: value={val!r}, error={err!r}")
    return val


def bisect_decreasing(
    f: Callable[[float], float], target: float, lo: float, hi: float, xtol: float = 1e-13
) -> float:
    """Root of ``f(x) = target`` for ``f`` nonincreasing on ``[lo, hi]``.

    Assumes ``f(lo) >= target >= f(hi)``.
    """
    for _ in range(400):
        if hi - lo <= xtol * max(1.0, abs(lo)):
            break
        mid = 0.5 * (lo + hi)
        if f(mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def golden_min(
    f: Callable[[float], float], lo: float, hi: float, xtol: float = 1e-12
) -> tuple[float, float]:
    """Minimise a unimodal ``f`` on ``[lo, hi]``; ``inf`` values are allowed.

    Returns ``(argmin, minimum)``; the endpoints are compared as well so a
    boundary minimum is not missed.
    """
    x1 = hi - _INVPHI * (hi - lo)
    x2 = lo + _INVPHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(500):
        if hi - lo <= xtol * max(1.0, abs(lo) + abs(hi)):
            break
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INVPHI * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INVPHI * (hi - lo)
            f2 = f(x2)
    best_x, best_f = (x1, f1) if f1 <= f2 else (x2, f2)
    for x in (lo, hi):
        fx = f(x)
        if fx < best_f:
            best_x, best_f = x, fx
    return best_x, best_f


def safe_exp(x: float) -> float:
    """``exp`` capped at ``exp(700)`` so integrands stay finite where the
    density has already underflowed."""
    return math.exp(min(x, 700.0))
