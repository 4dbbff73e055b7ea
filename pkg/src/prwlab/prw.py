"""Path simulation for perturbed random walks and the per-path functionals.

``T_n = S_{n-1} + eta_n`` with ``S_0 = 0``.  Every path owns a random stream
derived from ``(master_seed, path_index)``; draws are taken in fixed-size
chunks so the first ``n`` steps of a path do not depend on how far the path
is later extended.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence, TypeVar

import numpy as np

from .errors import PreconditionError
from .laws import JointLaw

EXACT = "Exact"
CENSORED = "Censored"

CHUNK = 256
DEFAULT_HORIZON = 10_000
DEFAULT_EPS = 1e-6

T = TypeVar("T")


def path_rng(master_seed: int, path_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(master_seed, spawn_key=(path_index,))))


class PathStream:
    """Lazily extended sequence of ``(xi_n, eta_n)`` for one path.

    ``xi_sampler`` replaces the increment law (used for exponential tilting);
    perturbations are then drawn independently from ``law.eta``.
    """

    def __init__(self, law: JointLaw, master_seed: int, path_index: int,
                 xi_sampler: Callable[[np.random.Generator, int], np.ndarray] | None = None):
        self.law = law
        self.master_seed = master_seed
        self.path_index = path_index
        self._rng = path_rng(master_seed, path_index)
        self._xi_sampler = xi_sampler
        self._xi: list[np.ndarray] = []
        self._eta: list[np.ndarray] = []
        self.length = 0

    def _draw_chunk(self) -> None:
        if self._xi_sampler is None:
            xi, eta = self.law.sample(self._rng, CHUNK)
        else:
            xi = self._xi_sampler(self._rng, CHUNK)
            eta = self.law.eta.sample(self._rng, CHUNK)
        self._xi.append(xi)
        self._eta.append(eta)
        self.length += CHUNK

    def steps(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """First ``n`` increments and perturbations."""
        while self.length < n:
            self._draw_chunk()
        if len(self._xi) > 1:
            self._xi = [np.concatenate(self._xi)]
            self._eta = [np.concatenate(self._eta)]
        return self._xi[0][:n], self._eta[0][:n]


@dataclass(frozen=True)
class PathBundle:
    """One simulated trajectory: ``s = (S_0..S_H)``, ``t = (T_1..T_H)``."""

    s: np.ndarray
    t: np.ndarray
    xi: np.ndarray
    eta: np.ndarray
    horizon: int
    master_seed: int | None = None
    path_index: int | None = None

    @classmethod
    def from_steps(cls, xi: Sequence[float], eta: Sequence[float], master_seed=None, path_index=None):
        xi = np.asarray(xi, dtype=float)
        eta = np.asarray(eta, dtype=float)
        s = np.concatenate(([0.0], np.cumsum(xi)))
        return cls(s=s, t=s[:-1] + eta, xi=xi, eta=eta, horizon=xi.size,
                   master_seed=master_seed, path_index=path_index)


@dataclass(frozen=True)
class Value:
    value: int
    status: str = EXACT

    @property
    def exact(self) -> bool:
        return self.status == EXACT


@dataclass(frozen=True)
class FunctionalSample:
    x_level: float
    tau: Value
    n_visits: Value
    rho: Value
    nu: Value
    sigma: Value | None = None


def simulate_path(law: JointLaw, horizon: int = DEFAULT_HORIZON, master_seed: int = 0,
                  path_index: int = 0) -> PathBundle:
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    xi, eta = PathStream(law, master_seed, path_index).steps(horizon)
    return PathBundle.from_steps(xi, eta, master_seed, path_index)


def first_passage(bundle: PathBundle, x: float) -> Value:
    """``tau(x) = inf{n: T_n > x}``; censored at the horizon."""
    hit = np.flatnonzero(bundle.t > x)
    if hit.size:
        return Value(int(hit[0]) + 1)
    return Value(bundle.horizon, CENSORED)


def first_exceedance(bundle: PathBundle, x: float) -> Value:
    """``nu(x) = inf{n: eta_n > x}``."""
    hit = np.flatnonzero(bundle.eta > x)
    if hit.size:
        return Value(int(hit[0]) + 1)
    return Value(bundle.horizon, CENSORED)


def eta_quantile(law: JointLaw, eps: float = DEFAULT_EPS) -> float:
    return law.eta.ppf(eps)


def certified(bundle: PathBundle, x: float, certify_margin: float, eta_q: float) -> bool:
    """No visit to ``(-inf, x]`` is expected after the horizon.

    Future perturbed values are ``S_{n-1} + eta_n`` with ``n - 1 >= H``; the
    path qualifies when the terminal level clears ``x - q_eta(eps)`` by more
    than ``certify_margin``.  The residual error is at most ``eps`` per future
    step plus the chance the walk later falls more than the margin below
    ``S_H``.
    """
    return bool(bundle.s[-1] - certify_margin > x - eta_q)


def visits_and_last_exit(bundle: PathBundle, x: float, certify_margin: float = 0.0,
                         eta_q: float = -math.inf) -> tuple[Value, Value]:
    """``N(x)`` and ``rho(x)`` over the horizon, Exact only when certified.

    ``eta_q`` is the lower ``eps``-quantile of ``eta``; pass
    ``eta_quantile(law)`` (the default ``-inf`` never certifies).
    """
    if certify_margin < 0:
        raise ValueError("certify_margin must be nonnegative")
    visits = np.flatnonzero(bundle.t <= x)
    n = int(visits.size)
    rho = int(visits[-1]) + 1 if n else 0
    status = EXACT if certified(bundle, x, certify_margin, eta_q) else CENSORED
    return Value(n, status), Value(rho, status)


def sigma_functional(bundle: PathBundle, x: float, c: float, law: JointLaw | None = None) -> Value:
    """``sigma(x) = inf{k: eta_k - (k-1) c > x}``."""
    if c < 0:
        raise ValueError("c must be nonnegative")
    if law is not None and law.xi.lower < -c:
        raise PreconditionError(f"sigma needs P{{xi >= -c}} = 1; xi reaches {law.xi.lower} < -{c}")
    k = np.arange(bundle.horizon)
    hit = np.flatnonzero(bundle.eta - k * c > x)
    if hit.size:
        return Value(int(hit[0]) + 1)
    return Value(bundle.horizon, CENSORED)


def ladder_epochs(bundle: PathBundle) -> tuple[np.ndarray, np.ndarray]:
    """Strict ascending and weak descending ladder indices within the horizon."""
    s = bundle.s
    prev_max = np.maximum.accumulate(s)[:-1]
    prev_min = np.minimum.accumulate(s)[:-1]
    ascending = np.flatnonzero(s[1:] > prev_max) + 1
    descending = np.flatnonzero(s[1:] <= prev_min) + 1
    return ascending, descending


def functionals(bundle: PathBundle, x: float, law: JointLaw, c: float | None = None,
                certify_margin: float = 0.0, eps: float = DEFAULT_EPS) -> FunctionalSample:
    n_visits, rho = visits_and_last_exit(bundle, x, certify_margin, eta_quantile(law, eps))
    return FunctionalSample(
        x_level=x,
        tau=first_passage(bundle, x),
        n_visits=n_visits,
        rho=rho,
        nu=first_exceedance(bundle, x),
        sigma=None if c is None else sigma_functional(bundle, x, c, law),
    )


def window_minima(bundle: PathBundle, window: int) -> np.ndarray:
    """Minimum of ``T_n`` over consecutive non-overlapping windows."""
    m = bundle.horizon // window
    return bundle.t[: m * window].reshape(m, window).min(axis=1)


def busy_servers(bundle: PathBundle, t: float) -> int:
    """``#{k >= 0: S_k <= t < S_k + eta_{k+1}}`` (infinite-server queue occupancy)."""
    s = bundle.s[:-1]
    return int(np.count_nonzero((s <= t) & (t < s + bundle.eta)))


def parallel_map(fn: Callable[[int], T], indices: Sequence[int], threads: int = 1) -> list[T]:
    """Apply ``fn`` to path indices; the result order is the index order
    whatever the thread count."""
    if threads <= 1:
        return [fn(i) for i in indices]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, indices))


def simulate_block(law: JointLaw, n_paths: int, horizon: int, master_seed: int = 0,
                   first_index: int = 0,
                   xi_sampler: Callable[[np.random.Generator, int], np.ndarray] | None = None,
                   ) -> tuple[np.ndarray, np.ndarray]:
    """``(xi, eta)`` arrays of shape ``(n_paths, horizon)``.

    Row ``i`` is path ``first_index + i`` and coincides with the steps of
    ``simulate_path`` for the same seed and index.
    """
    xi = np.empty((n_paths, horizon))
    eta = np.empty((n_paths, horizon))
    for i in range(n_paths):
        xi[i], eta[i] = PathStream(law, master_seed, first_index + i, xi_sampler).steps(horizon)
    return xi, eta


def partial_sums(xi: np.ndarray) -> np.ndarray:
    """Row-wise ``(S_0, ..., S_H)`` with ``S_0 = 0``."""
    s = np.zeros((xi.shape[0], xi.shape[1] + 1))
    np.cumsum(xi, axis=1, out=s[:, 1:])
    return s


def blocks(n_paths: int, size: int = 4096):
    """``(first_index, count)`` pairs covering ``range(n_paths)``."""
    for start in range(0, n_paths, size):
        yield start, min(size, n_paths - start)


def run_until(stream: PathStream, hit: Callable[[np.ndarray, np.ndarray], int], horizon: int
              ) -> tuple[np.ndarray, np.ndarray, Value]:
    """Extend a path until ``hit(xi, eta)`` returns a positive index.

    ``hit`` sees the first ``m`` steps and returns the 1-based stopping index
    or 0; the path doubles in length up to ``horizon``.  Returns the steps
    drawn and the stopping index (Censored at the horizon).
    """
    m = min(CHUNK, horizon)
    while True:
        xi, eta = stream.steps(m)
        k = hit(xi, eta)
        if k > 0:
            return xi[:k], eta[:k], Value(int(k))
        if m >= horizon:
            return xi, eta, Value(horizon, CENSORED)
        m = min(2 * m, horizon)


def ascending_ladder_hit(xi: np.ndarray, eta: np.ndarray) -> int:
    """``tau* = inf{n >= 1: S_n > 0}`` as a ``run_until`` predicate."""
    pos = np.flatnonzero(np.cumsum(xi) > 0)
    return int(pos[0]) + 1 if pos.size else 0


def passage_hit(x: float) -> Callable[[np.ndarray, np.ndarray], int]:
    """``tau(x) = inf{n: S_{n-1} + eta_n > x}`` as a ``run_until`` predicate."""
    def hit(xi, eta):
        s_prev = np.concatenate(([0.0], np.cumsum(xi[:-1])))
        pos = np.flatnonzero(s_prev + eta > x)
        return int(pos[0]) + 1 if pos.size else 0
    return hit
