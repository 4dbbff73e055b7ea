"""Acceptance gate: one test per criterion, each at its stated tolerance.

Every test records a single ``PASS``/``FAIL`` line; pytest prints them in an
"acceptance criteria" section of the terminal summary.
"""

import json
import math

import numpy as np
import pytest

from prwlab import cli, criteria, laws, mc, prw, renewal, shotnoise
from prwlab.laws import JointLaw
from prwlab.shotnoise import INDICATOR, MULTIPLICATIVE, ResponseProcess
from prwlab.verdicts import FINITE, INFINITE

from conftest import ACCEPTANCE_LINES

pytestmark = pytest.mark.acceptance


def report(number, name, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} [{number:2d}] {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def two_point(p_up=0.8):
    return JointLaw.independent(laws.two_point([-1.0, 1.0], [1 - p_up, p_up]), laws.exponential(1.0))


def gamma_quadratic(p_up, a):
    c = math.exp(-a)
    q = 1 - p_up
    return math.log((c - math.sqrt(c * c - 4 * p_up * q)) / (2 * q))


# 1 -------------------------------------------------------------------------

def test_01_closed_form_constants():
    normal = JointLaw.independent(laws.normal(1.0, 1.0), laws.exponential(1.0))
    got = {
        "R(two-point)": (laws.rate_R(two_point()), 0.2231436, 1e-7),
        "R(normal)": (laws.rate_R(normal), 0.5, 1e-8),
        "gamma(normal, 0.375)": (laws.solve_gamma(normal, 0.375), 0.5, 1e-8),
        "gamma(two-point, 0.1)": (laws.solve_gamma(two_point(), 0.1), 0.186647, 1e-5),
    }
    oracle = gamma_quadratic(0.8, 0.1)
    oracle_ok = abs(got["gamma(two-point, 0.1)"][0] - oracle) <= 1e-10
    bad = {k: v for k, v in got.items() if abs(v[0] - v[1]) > v[2]}
    detail = "; ".join(f"{k}={v[0]:.10g} (target {v[1]} +- {v[2]:g})" for k, v in got.items())
    detail += f"; quadratic oracle gamma={oracle:.10g} ({'matches' if oracle_ok else 'MISMATCH'})"
    ok = report(1, "closed-form constants", not bad and oracle_ok, detail)
    assert oracle_ok
    assert ok, f"outside tolerance: {sorted(bad)}"


# 2 -------------------------------------------------------------------------

def test_02_geometric_bound():
    law = JointLaw.independent(laws.exponential(1.0), laws.uniform(0.0, 1.0))
    d = mc.sample_functional(law, "tau", 0.5, 100_000, 64, seed=2)
    tau = d.values
    worst = -math.inf
    for n in range(1, 16):
        p = float(np.mean(tau > n))
        se = math.sqrt(p * (1 - p) / tau.size)
        worst = max(worst, p - (0.5 ** n + 3 * se))
    ok = report(2, "geometric bound P{tau>n} <= 0.5^n", worst <= 0 and not d.censored.any(),
                f"max excess over 0.5^n + 3SE for n=1..15 is {worst:.3g}; 1e5 paths")
    assert ok


# 3 -------------------------------------------------------------------------

def test_03_renewal_sandwich():
    law = JointLaw.independent(laws.exponential(1.0), laws.exponential(1.0))
    grid = [1.5, 2.0, 5.0, 10.0]
    tab = renewal.estimate_renewal_measure(law, "PlainU", grid, 20_000, 100, seed=3)
    parts, ok = [], True
    for y, u, se in zip(grid, tab.values, tab.se):
        j = laws.j_plus(law, y)
        in_ci = abs(u - (1 + y)) <= 1.96 * se
        sandwich = j <= u <= 2 * j
        ok &= in_ci and sandwich
        parts.append(f"y={y:g}: U={u:.4f}+-{1.96 * se:.4f} vs {1 + y:g}, J+={j:.4f}")
    assert report(3, "renewal sandwich J+ <= U <= 2J+", ok, "; ".join(parts))


# 4 -------------------------------------------------------------------------

def test_04_shot_noise_equals_visits():
    law = JointLaw.independent(laws.exponential(1.0), laws.normal(0.0, 1.0))
    levels = (-1.0, 0.0, 0.5, 2.0, 5.0)
    mismatches = 0
    for i in range(1000):
        b = prw.simulate_path(law, 200, master_seed=4, path_index=i)
        for x in levels:
            z = shotnoise.shot_noise_path(b, law, ResponseProcess(INDICATOR), x).z
            n, _ = prw.visits_and_last_exit(b, x)
            mismatches += z != n.value
    assert report(4, "Z(x) = N(x) path-wise", mismatches == 0,
                  f"{mismatches} mismatches over 1000 paths x 5 levels")


# 5 -------------------------------------------------------------------------

def test_05_first_moment_identity():
    law = JointLaw.independent(laws.exponential(1.0), laws.exponential(1.0))
    resp = ResponseProcess(MULTIPLICATIVE, "step")
    z = mc.shotnoise_draws(law, resp, 1.0, 100_000, 60, seed=5)
    zv = np.asarray(z.values, dtype=float)
    ez, ez_se = float(zv.mean()), float(zv.std(ddof=1) / math.sqrt(zv.size))
    s1 = shotnoise.integral_s_q(law, resp, 1.0, 1.0, 100_000, 60, seed=50)
    joint = math.hypot(ez_se, s1.se)
    ok = abs(ez - s1.value) <= 3 * joint
    assert report(5, "E Z(t) = s_1(t)", ok,
                  f"E Z(1)={ez:.4f}+-{ez_se:.4f}, s_1(1)={s1.value:.4f}+-{s1.se:.4f}, 3 joint SE={3 * joint:.4f}")


# 6 -------------------------------------------------------------------------

def test_06_exponential_threshold():
    law = two_point()
    x = 1.0
    counts = {}
    for a, want in ((0.15, FINITE), (0.30, INFINITE)):
        assert criteria.exp_moment_tau(law, a, x).verdict == want
        assert criteria.exp_moment_N(law, a, x).verdict == want
        hits = 0
        for rep in range(20):
            r = mc.verify_theorem(law, "exponential_tau", {"a": [a], "x": x},
                                  mc.Budget(n_paths=4000, horizon=2000, seed=600 + rep))
            hits += r.rows[0].empirical == want
        counts[a] = hits
    ok = counts[0.15] >= 18 and counts[0.30] >= 18
    assert report(6, "exponential-moment threshold at R", ok,
                  f"a=0.15 Finite in {counts[0.15]}/20, a=0.30 Infinite in {counts[0.30]}/20")


# 7 -------------------------------------------------------------------------

def test_07_oscillation_surprise():
    law = JointLaw.independent(laws.point(1.0), laws.pareto(0.5, sign=-1))
    cls, _ = criteria.classify_trichotomy(law)
    n_paths, horizon = 200, 100_000
    below = 0
    for i in range(n_paths):
        b = prw.simulate_path(law, horizon, master_seed=7, path_index=i)
        below += bool(np.any(prw.window_minima(b, 1000) < -1000.0))
    frac = below / n_paths
    ok = cls == criteria.OSC and frac >= 0.95
    assert report(7, "oscillation with S_n -> +inf", ok,
                  f"classifier={cls}; window minima below -1000 on {frac:.1%} of {n_paths} paths")


# 8 -------------------------------------------------------------------------

def test_08_sigma_tail_ratio():
    results = {}
    for s, want in ((0.5, INFINITE), (2.0, FINITE)):
        law = JointLaw.independent(laws.point(1.0), laws.pareto(1.0, scale=s))
        assert criteria.sigma_power_verdict(law, 1.0, 1.0).verdict == want
        verdicts = []
        for rep in range(20):
            r = mc.verify_theorem(law, "sigma_raabe", {"c": 1.0, "p": [1.0], "x": 10.0},
                                  mc.Budget(n_paths=4000, horizon=10_000, seed=800 + rep))
            verdicts.append(r.rows[0].empirical)
        results[s] = verdicts
    inf_ok = all(v == INFINITE for v in results[0.5])
    fin = results[2.0]
    fin_ok = fin.count(FINITE) + fin.count("Inconclusive") == 20 and fin.count("Inconclusive") <= 1
    assert report(8, "sigma(x) verdicts s vs cp", inf_ok and fin_ok,
                  f"s=0.5: {results[0.5].count(INFINITE)}/20 Infinite; s=2: {fin.count(FINITE)}/20 Finite, "
                  f"{fin.count('Inconclusive')} Inconclusive")


# 9 -------------------------------------------------------------------------

def test_09_exponential_renewal_band():
    grid = np.arange(2.0, 20.5, 1.0)
    tab = renewal.exp_renewal_V(two_point(), 0.1, grid, 5000, 400, seed=9)
    ratio = tab.extra["band_ratio"]
    ok = ratio < 10 and all(v == FINITE for v in tab.verdicts)
    assert report(9, "e^{-gamma y} V*_a(y) in a band", ok,
                  f"max/min over y in [2, 20] = {ratio:.3f}; gamma={tab.extra['gamma']:.6f}")


# 10 ------------------------------------------------------------------------

def test_10_duality():
    parts, ok = [], True
    for name, law in (("symmetric", two_point(0.5)),
                      ("normal(1,1)", JointLaw.independent(laws.normal(1.0, 1.0), laws.exponential(1.0)))):
        rep = renewal.ladder_duality_check(law, (-2.0, 0.0), 10_000, 400, seed=10)
        ok &= rep.agree
        parts.append(f"{name}: {rep.before_ladder:.4f} vs {rep.descending_ladder:.4f} "
                     f"(diff {rep.difference:.4f}, 3SE {3 * rep.difference_se:.4f})")
    assert report(10, "ladder duality on (-2, 0]", ok, "; ".join(parts))


# 11 ------------------------------------------------------------------------

def test_11_tilted_unbiased():
    rng = np.random.default_rng(11)
    agree, parts = 0, []
    for k in range(10):
        if rng.random() < 0.5:
            law = two_point(float(rng.uniform(0.6, 0.9)))
        else:
            law = JointLaw.independent(laws.normal(float(rng.uniform(0.3, 1.5)), 1.0), laws.exponential(1.0))
        a = float(rng.uniform(0.1, 0.7)) * laws.rate_R(law)
        n = int(rng.integers(4, 16))
        level = float(rng.uniform(-1.0, 2.0))
        event = lambda s, n=n, level=level: s[:, n] <= level
        t = renewal.tilted_estimate(renewal.tilt(law, a), event, n, 20_000, seed=1100 + k)
        d = renewal.direct_estimate(law, a, event, n, 20_000, seed=1200 + k)
        agree += t.agrees(d)
        parts.append(f"{t.value:.4g}/{d.value:.4g}")
    assert report(11, "tilted vs direct estimates", agree >= 9,
                  f"{agree}/10 within 3 joint SE (tilted/direct: {', '.join(parts)})")


# 12 ------------------------------------------------------------------------

def test_12_determinism(tmp_path):
    args = ["verify", "--law", "two-point", "--theorem", "exponential_tau", "--a", "0.15", "--x", "1",
            "--paths", "3000", "--horizon", "2000", "--seed", "12"]
    texts = []
    for run in ("a", "b"):
        assert cli.main([*args, "--out", str(tmp_path / run)]) == 0
        d = json.loads((tmp_path / run / "verify.json").read_text())
        d.pop("timestamp")
        texts.append(json.dumps(d, sort_keys=True))
    same_json = texts[0] == texts[1]
    same_csv = (tmp_path / "a/verify.csv").read_bytes() == (tmp_path / "b/verify.csv").read_bytes()
    assert report(12, "byte-identical reruns", same_json and same_csv,
                  f"JSON identical modulo timestamp: {same_json}; CSV identical: {same_csv}")

