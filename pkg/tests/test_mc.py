import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from prwlab import laws, mc
from prwlab.errors import InsufficientSamples
from prwlab.laws import JointLaw
from prwlab.verdicts import FINITE, INFINITE


SMALL = mc.Budget(n_paths=3000, horizon=2000, n_max=200, seed=0)


def test_constant_samples():
    est = mc.estimate_moment(np.full(1000, 3.0), mc.Power(2.0))
    assert est.point == pytest.approx(9.0)
    assert est.ci95[0] == pytest.approx(9.0) and est.ci95[1] == pytest.approx(9.0)
    assert est.verdict == FINITE


def test_insufficient_samples():
    with pytest.raises(InsufficientSamples):
        mc.estimate_moment(np.ones(999), mc.Power(1.0))


def test_exponential_kind_in_log_space():
    est = mc.estimate_moment(np.full(1000, 800.0), mc.Exponential(1.0))
    assert est.log_point == pytest.approx(800.0)
    assert est.point == math.inf


def test_weighted_estimate():
    v = np.ones(2000)
    est = mc.estimate_moment(v, mc.Power(1.0), log_weights=np.full(2000, math.log(0.5)))
    assert est.point == pytest.approx(0.5) and est.weighted


def test_tau_geometric_bound():
    law = JointLaw.independent(laws.exponential(1.0), laws.uniform(0.0, 1.0))
    d = mc.sample_functional(law, "tau", 0.5, 5000, 200, seed=1)
    assert not d.censored.any()
    for n in range(1, 10):
        p = np.mean(d.values > n)
        assert p <= 0.5 ** n + 3 * math.sqrt(p * (1 - p) / d.values.size) + 1e-12
    est = mc.estimate_moment(d, mc.Power(1.0))
    assert est.point <= 2.0 and est.verdict == FINITE


def test_tau_star_exponential_moments(two_point):
    d = mc.sample_functional(two_point, "tau_star", 0.0, 4000, 2000, seed=2, tilt_a=0.3)
    assert mc.estimate_moment(d, mc.Exponential(0.3)).verdict == INFINITE
    d = mc.sample_functional(two_point, "tau_star", 0.0, 4000, 2000, seed=2, tilt_a=0.1)
    assert mc.estimate_moment(d, mc.Exponential(0.1)).verdict == FINITE


def test_tilted_and_direct_N_agree(two_point):
    a = 0.05
    d1 = mc.sample_functional(two_point, "N", 1.0, 10000, 2000, seed=3, tilt_a=a)
    d2 = mc.sample_functional(two_point, "N", 1.0, 10000, 2000, seed=4)
    e1 = mc.estimate_moment(d1, mc.Exponential(a))
    e2 = mc.estimate_moment(d2, mc.Exponential(a))
    se = lambda e: (e.ci95[1] - e.ci95[0]) / 3.92
    assert abs(e1.point - e2.point) <= 3 * math.hypot(se(e1), se(e2))


def test_threads_do_not_change_draws(two_point):
    a = mc.sample_functional(two_point, "rho", 1.0, 500, 500, seed=5, threads=1)
    b = mc.sample_functional(two_point, "rho", 1.0, 500, 500, seed=5, threads=3)
    np.testing.assert_array_equal(a.values, b.values)


def test_default_margin(two_point):
    assert mc.default_margin(two_point, 1e-6) == pytest.approx(math.log(1e6) / math.log(4.0))
    up = JointLaw.independent(laws.exponential(1.0), laws.exponential(1.0))
    assert mc.default_margin(up) == 0.0


def test_verify_exponential_tau(two_point):
    rep = mc.verify_theorem(two_point, "exponential_tau", {"a": [0.1], "x": 1.0}, SMALL)
    assert [r.agree for r in rep.rows] == ["yes"]
    assert rep.rows[0].prediction == FINITE


def test_verify_finiteness_rho(two_point):
    rep = mc.verify_theorem(two_point, "finiteness_rho", {"x": 1.0}, SMALL)
    assert rep.rows[0].prediction == FINITE
    assert rep.rows[0].details["censor_rate"] < 1e-3


def test_verify_never_fails_on_inconclusive():
    xi = laws.mixture([laws.point(1.0), laws.pareto(1.5, sign=-1)], [0.9, 0.1])
    law = JointLaw.independent(xi, laws.exponential(1.0))
    rep = mc.verify_theorem(law, "power_N", {"p": [0.7], "x": 0.0}, mc.Budget(2000, 1000, 100))
    assert rep.rows[0].prediction == INFINITE
    assert rep.rows[0].agree in ("yes", "inconclusive")


def test_verify_unknown_theorem(two_point):
    with pytest.raises(ValueError):
        mc.verify_theorem(two_point, "nope")


def test_agreement():
    assert mc.agreement(FINITE, FINITE) == "yes"
    assert mc.agreement(FINITE, INFINITE) == "no"
    assert mc.agreement(FINITE, "Inconclusive") == "inconclusive"


@given(st.integers(0, 2 ** 32), st.floats(0.1, 3.0), st.floats(0.5, 2.0))
@settings(max_examples=15, deadline=None)
def test_ci_contains_point(seed, shape, p):
    vals = np.random.default_rng(seed).gamma(shape, size=1000)
    est = mc.estimate_moment(vals, mc.Power(p), n_boot=200)
    assert est.ci95[0] <= est.point <= est.ci95[1]
    again = mc.estimate_moment(vals.copy(), mc.Power(p), n_boot=200)
    assert again == est
