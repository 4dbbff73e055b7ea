import math

import pytest
from hypothesis import given, settings, strategies as st

from prwlab import criteria, laws
from prwlab.errors import NotApplicable, PreconditionError
from prwlab.laws import JointLaw
from prwlab.verdicts import BOUNDARY, FINITE, INFINITE

from conftest import two_point_law

R_TWO_POINT = -math.log(0.8)


def atom_law(p0, eta):
    return JointLaw.independent(laws.two_point([0.0, 1.0], [p0, 1 - p0]), eta)


def test_trichotomy_examples():
    up = JointLaw.independent(laws.exponential(1.0), laws.exponential(1.0))
    assert criteria.classify_trichotomy(up)[0] == criteria.POS_DIV
    heavy = JointLaw.independent(laws.point(1.0), laws.pareto(0.5, sign=-1))
    assert criteria.classify_trichotomy(heavy)[0] == criteria.OSC
    down = JointLaw.independent(laws.normal(-1.0, 1.0), laws.point(0.1))
    assert criteria.classify_trichotomy(down)[0] == criteria.NEG_DIV
    sym = two_point_law(0.5)
    assert criteria.classify_trichotomy(sym)[0] == criteria.OSC


def test_tau_as_finite():
    sep = JointLaw.independent(laws.normal(-1.0, 1.0), laws.exponential(1.0, shift=1.0))
    assert criteria.tau_as_finite(sep, 0.5)[0] is True
    mixed = JointLaw.independent(laws.normal(-1.0, 1.0), laws.normal(0.0, 1.0))
    assert criteria.tau_as_finite(mixed, 0.0)[0] is False
    assert criteria.tau_as_finite(two_point_law(), 3.0)[0] is True


def test_joint_neg_product():
    law = JointLaw.independent(laws.normal(-1.0, 1.0), laws.normal(0.0, 1.0))
    assert law.joint_neg(0.0) == pytest.approx(0.5 * 0.8413447460685429, rel=1e-9)


def test_exp_tau_atom_case():
    law = atom_law(0.3, laws.point(-1.0))
    assert criteria.exp_moment_tau(law, 1.0, 0.0).verdict == FINITE
    assert criteria.exp_moment_tau(law, 1.21, 0.0).verdict == INFINITE


def test_exp_tau_two_point_normal_eta():
    law = two_point_law(eta=laws.normal(0.0, 1.0))
    assert criteria.exp_moment_tau(law, 0.22, 0.0).verdict == FINITE
    assert criteria.exp_moment_tau(law, 0.23, 0.0).verdict == INFINITE


def test_exp_tau_positive_xi_always_finite():
    law = JointLaw.independent(laws.exponential(1.0), laws.normal(0.0, 1.0))
    assert criteria.exp_moment_tau(law, 50.0, 0.0).verdict == FINITE


def test_exp_N_cases():
    up = JointLaw.independent(laws.exponential(1.0), laws.exponential(1.0))
    pred = criteria.exp_moment_N(up, 10.0, 1.0)
    assert pred.verdict == FINITE and pred.constants["threshold"] == math.inf
    # atoms at 0 and 1 with prob 1/2, eta below x: a(x) = log 2
    pred = criteria.exp_moment_N(atom_law(0.5, laws.point(-1.0)), 0.5, 0.0)
    assert pred.constants["threshold"] == pytest.approx(math.log(2.0))
    assert criteria.exp_moment_N(atom_law(0.5, laws.point(-1.0)), 0.7, 0.0).verdict == INFINITE
    pred = criteria.exp_moment_N(two_point_law(), 0.2, 1.0)
    assert pred.verdict == FINITE and pred.constants["R"] == pytest.approx(R_TWO_POINT)
    assert criteria.exp_moment_N(two_point_law(), 0.25, 1.0).verdict == INFINITE


def test_exp_N_requires_posdiv():
    with pytest.raises(NotApplicable):
        criteria.exp_moment_N(two_point_law(0.5), 0.1, 0.0)


def test_exp_rho_examples():
    law = JointLaw.independent(laws.exponential(1.0), laws.exponential(1.0))
    pred = criteria.exp_moment_rho(law, 0.5, 1.0)
    assert pred.verdict == FINITE
    assert pred.constants["gamma"] == pytest.approx(math.exp(0.5) - 1, rel=1e-8)
    heavy = JointLaw.independent(laws.exponential(1.0), laws.pareto(1.5, sign=-1))
    assert criteria.exp_moment_rho(heavy, 0.01, 1.0).verdict == INFINITE
    never = JointLaw.independent(laws.exponential(1.0), laws.exponential(1.0, shift=5.0))
    assert criteria.exp_moment_rho(never, 3.0, 1.0).verdict == FINITE


def test_exp_rho_two_point():
    assert criteria.exp_moment_rho(two_point_law(), 0.1, 0.0).verdict == FINITE
    assert criteria.exp_moment_rho(two_point_law(), 0.3, 0.0).verdict == INFINITE


def test_power_moments():
    light = JointLaw.independent(laws.exponential(1.0), laws.exponential(1.0))
    assert criteria.power_moment_N(light, 5.0).verdict == FINITE
    # xi = 1 + (negative Pareto tail 1.5): J+ linear, so finite iff p + 1 < 1.5
    xi = laws.mixture([laws.point(1.0), laws.pareto(1.5, sign=-1)], [0.9, 0.1])
    law = JointLaw.independent(xi, laws.exponential(1.0))
    assert criteria.power_moment_N(law, 0.3).verdict == FINITE
    assert criteria.power_moment_N(law, 0.7).verdict == INFINITE
    law_eta = JointLaw.independent(laws.exponential(1.0), laws.pareto(1.5, sign=-1))
    assert criteria.power_moment_rho(law_eta, 0.3).verdict == FINITE
    assert criteria.power_moment_rho(law_eta, 0.7).verdict == INFINITE


def test_sigma_power_verdicts():
    one = laws.point(1.0)
    big = JointLaw.independent(one, laws.pareto(1.0, scale=2.0))
    small = JointLaw.independent(one, laws.pareto(1.0, scale=0.5))
    assert big.eta.s_limit == pytest.approx(2.0)
    assert criteria.sigma_power_verdict(big, 1.0, 1.0).verdict == FINITE
    assert criteria.sigma_power_verdict(small, 1.0, 1.0).verdict == INFINITE
    assert criteria.sigma_power_verdict(small, 0.5, 1.0).verdict == BOUNDARY
    geo = JointLaw.independent(one, laws.exponential(1.0))
    assert criteria.sigma_power_verdict(geo, 0.0, 3.0).verdict == FINITE


def test_sigma_needs_bounded_below_xi():
    law = JointLaw.independent(laws.normal(1.0, 1.0), laws.pareto(1.0))
    with pytest.raises(PreconditionError):
        criteria.sigma_power_verdict(law, 1.0, 1.0)


def test_report_serializes():
    rep = criteria.build_report(two_point_law(), [0.1, 0.3], [0.0, 1.0], [1.0])
    d = rep.to_dict()
    assert d["trichotomy"] == criteria.POS_DIV
    assert d["constants"]["R"] == pytest.approx(R_TWO_POINT)
    assert d["exp_N"]["a=0.1,x=0"]["verdict"] == FINITE
    assert d["exp_tau"]["a=0.3,x=1"]["verdict"] == INFINITE


@given(st.floats(0.55, 0.95), st.floats(0.01, 1.0), st.floats(0.01, 1.0), st.floats(-2, 2))
@settings(max_examples=60, deadline=None)
def test_monotone_in_a(p_up, a1, a2, x):
    law = two_point_law(p_up)
    lo, hi = sorted((a1, a2))
    for fn in (criteria.exp_moment_tau, criteria.exp_moment_N, criteria.exp_moment_rho):
        if fn(law, hi, x).verdict == FINITE:
            assert fn(law, lo, x).verdict == FINITE


@given(st.floats(0.55, 0.95), st.floats(0.01, 1.0), st.floats(0.01, 2))
@settings(max_examples=60, deadline=None)
def test_tau_and_N_share_threshold(p_up, a, x):
    # for x > 0 the tau criterion is in its R case, like N
    law = two_point_law(p_up)
    assert criteria.exp_moment_tau(law, a, x).verdict == criteria.exp_moment_N(law, a, x).verdict


@given(st.floats(0.55, 0.95), st.floats(0.01, 1.0), st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=60, deadline=None)
def test_rho_verdict_free_of_x(p_up, a, x1, x2):
    law = two_point_law(p_up)
    assert criteria.exp_moment_rho(law, a, x1).verdict == criteria.exp_moment_rho(law, a, x2).verdict


@given(st.floats(0.1, 3.0))
@settings(max_examples=8, deadline=None)
def test_pow_rho_implies_pow_N(p):
    for eta in (laws.exponential(1.0), laws.pareto(1.5, sign=-1), laws.pareto(3.0, sign=-1)):
        law = JointLaw.independent(laws.exponential(1.0), eta)
        if criteria.power_moment_rho(law, p).verdict == FINITE:
            assert criteria.power_moment_N(law, p).verdict == FINITE


@given(st.floats(0.01, 2.0), st.floats(0.1, 0.9))
@settings(max_examples=40, deadline=None)
def test_threshold_lower_bound(x, p0):
    # a(x) >= -log P{xi = 0}
    law = atom_law(p0, laws.exponential(1.0))
    thr = criteria.exp_moment_N(law, 0.01, x).constants["threshold"]
    assert thr >= -math.log(p0) - 1e-12
