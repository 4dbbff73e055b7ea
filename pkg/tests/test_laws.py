import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from prwlab import laws
from prwlab.errors import LawError, NoRootError, UndefinedQuantity
from prwlab.laws import JointLaw

from conftest import two_point_law


def gamma_oracle_two_point(p_up, a):
    # p e^{-g} + q e^{g} = e^{-a} is a quadratic in u = e^g
    q = 1.0 - p_up
    c = math.exp(-a)
    u = (c - math.sqrt(c * c - 4 * q * p_up)) / (2 * q)
    return math.log(u)


def test_rate_R_two_point(two_point):
    assert laws.rate_R(two_point) == pytest.approx(-math.log(2 * math.sqrt(0.16)), abs=1e-10)


def test_rate_R_normal(normal_law):
    # inf_t exp(-t + t^2/2) = exp(-1/2)
    assert laws.rate_R(normal_law) == pytest.approx(0.5, abs=1e-10)


def test_laplace_minimum_location(two_point, normal_law):
    t, _ = laws.laplace_minimum(two_point)
    assert t == pytest.approx(math.log(2.0), abs=1e-8)
    t, m = laws.laplace_minimum(normal_law)
    assert t == pytest.approx(1.0, abs=1e-6)
    assert m == pytest.approx(math.exp(-0.5), abs=1e-12)


def test_solve_gamma_normal(normal_law):
    assert laws.solve_gamma(normal_law, 0.375) == pytest.approx(0.5, abs=1e-9)


@pytest.mark.parametrize("a", [0.01, 0.1, 0.2])
def test_solve_gamma_matches_quadratic(a):
    law = two_point_law()
    assert laws.solve_gamma(law, a) == pytest.approx(gamma_oracle_two_point(0.8, a), abs=1e-9)


def test_solve_gamma_beyond_R(two_point):
    with pytest.raises(NoRootError):
        laws.solve_gamma(two_point, 0.3)


def test_solve_gamma_nonneg_walk_has_root_for_every_a():
    # E e^{-g xi} = 1/(1+g) for Exp(1): root g = e^a - 1
    law = JointLaw.independent(laws.exponential(1.0), laws.exponential(1.0))
    assert laws.rate_R(law) == math.inf
    assert laws.solve_gamma(law, 2.0) == pytest.approx(math.e ** 2 - 1, rel=1e-8)


def test_ruin_exponent():
    assert laws.ruin_exponent(two_point_law()) == pytest.approx(math.log(4.0), abs=1e-9)
    law = JointLaw.independent(laws.normal(1.0, 1.0), laws.point(1.0))
    assert laws.ruin_exponent(law) == pytest.approx(2.0, abs=1e-9)


def test_zero_eta_rejected():
    with pytest.raises(LawError):
        JointLaw.independent(laws.point(1.0), laws.point(0.0))


def test_zero_xi_rejected():
    with pytest.raises(LawError):
        JointLaw.independent(laws.point(0.0), laws.exponential(1.0))


def test_j_plus_exponential():
    law = JointLaw.independent(laws.exponential(1.0), laws.exponential(1.0))
    for y in (0.5, 1.0, 5.0):
        assert laws.j_plus(law, y) == pytest.approx(y / (1 - math.exp(-y)), rel=1e-8)
    assert laws.j_plus(law, 0.0) == pytest.approx(1.0)


def test_j_minus_undefined_for_nonneg_xi():
    law = JointLaw.independent(laws.exponential(1.0), laws.exponential(1.0))
    with pytest.raises(UndefinedQuantity):
        laws.j_minus(law, 1.0)


def test_expected_j_power_heavy_tail_diverges():
    # J+ grows linearly; eta^- with tail index 1.5 has finite first but not 2nd power
    law = JointLaw.independent(laws.point(1.0), laws.pareto(1.5, sign=-1))
    assert math.isfinite(laws.expected_j_power(law, "eta_minus", 1.0))
    assert math.isinf(laws.expected_j_power(law, "eta_minus", 2.0))


def test_unknown_family():
    with pytest.raises(LawError):
        laws.make_marginal({"family": "cauchy"})
    with pytest.raises(LawError):
        laws.make_marginal({"family": "normal", "params": {"sd": 1}})


def test_sieve_marginals_are_exponential():
    law = JointLaw.bernoulli_sieve(1.0, 1.0)
    ys = np.array([0.1, 1.0, 3.0])
    np.testing.assert_allclose(law.xi.cdf_array(ys), 1 - np.exp(-ys), atol=1e-12)
    xi, eta = law.sample(np.random.default_rng(0), 1000)
    # e^{-xi} + e^{-eta} = W + (1 - W) = 1
    np.testing.assert_allclose(np.exp(-xi) + np.exp(-eta), 1.0, atol=1e-12)


def test_joint_probabilities(two_point):
    assert two_point.p_xi_neg == pytest.approx(0.2)
    assert two_point.p_xi_pos == pytest.approx(0.8)
    assert two_point.p_xi_zero == 0.0


@given(st.floats(-5, 5), st.floats(-3, 3))
@settings(max_examples=50, deadline=None)
def test_cdf_array_agrees_with_cdf(x, shift):
    for m in (laws.normal(shift, 1.0), laws.two_point([shift, shift + 1], [0.3, 0.7]),
              laws.exponential(1.0, shift=shift)):
        assert m.cdf_array(np.array([x]))[0] == pytest.approx(m.cdf(x), abs=1e-12)


@given(st.floats(0.55, 0.95), st.floats(0.0, 3.0), st.floats(0.0, 3.0))
@settings(max_examples=50, deadline=None)
def test_laplace_is_convex(p_up, t1, t2):
    law = two_point_law(p_up)
    phi = law.xi.laplace
    mid = phi((t1 + t2) / 2)
    assert mid <= (phi(t1) + phi(t2)) / 2 + 1e-12


@given(st.floats(0.55, 0.95), st.floats(0.01, 0.99))
@settings(max_examples=50, deadline=None)
def test_gamma_solves_equation(p_up, frac):
    law = two_point_law(p_up)
    a = frac * laws.rate_R(law)
    g = laws.solve_gamma(law, a)
    assert law.xi.laplace(g) == pytest.approx(math.exp(-a), rel=1e-8)
    assert g == pytest.approx(gamma_oracle_two_point(p_up, a), abs=1e-7)


@pytest.mark.parametrize("marg", [
    laws.exponential(1.0), laws.normal(1.0, 2.0), laws.uniform(-1.0, 3.0), laws.pareto(1.5, sign=-1),
    laws.lognormal(0.0, 1.0), laws.neg_log_beta(2.0, 0.5),
], ids=lambda m: m.describe()["family"])
def test_sampler_matches_cdf(marg):
    from scipy import stats
    x = marg.sample(np.random.default_rng(0), 100_000)
    assert stats.kstest(x, marg.cdf_array).pvalue > 0.01


def test_discrete_sampler_frequencies():
    m = laws.two_point([-1.0, 1.0], [0.2, 0.8])
    x = m.sample(np.random.default_rng(1), 100_000)
    assert abs(np.mean(x < 0) - 0.2) < 4 * np.sqrt(0.16 / 1e5)


@given(st.floats(0.01, 30), st.floats(0.01, 30))
@settings(max_examples=40, deadline=None)
def test_a_plus_and_j_plus_shape(x, y):
    law = JointLaw.independent(laws.mixture([laws.exponential(1.0), laws.pareto(1.5)], [0.5, 0.5]),
                               laws.exponential(1.0))
    lo, hi = sorted((x, y))
    assert laws.a_plus(law, lo) <= laws.a_plus(law, hi) + 1e-12
    assert laws.a_plus(law, hi) <= hi + 1e-12
    # concavity at the midpoint
    mid = laws.a_plus(law, (lo + hi) / 2)
    assert mid >= (laws.a_plus(law, lo) + laws.a_plus(law, hi)) / 2 - 1e-9
    assert laws.j_plus(law, lo) <= laws.j_plus(law, hi) + 1e-9
    assert laws.j_plus(law, x + y) <= laws.j_plus(law, x) + laws.j_plus(law, y) + 1e-9
