import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from prwlab import laws, renewal
from prwlab.errors import CouplingError, DivergenceError
from prwlab.laws import JointLaw
from prwlab.verdicts import FINITE, INFINITE

from conftest import two_point_law


def test_plain_U_deterministic():
    law = JointLaw.independent(laws.point(1.0), laws.point(1.0))
    tab = renewal.estimate_renewal_measure(law, "PlainU", [0.0, 2.0, 3.5], 20, 50)
    np.testing.assert_allclose(tab.values, [1.0, 3.0, 4.0])
    assert all(v == FINITE for v in tab.verdicts)


def test_plain_U_exponential(exp_exp):
    # Poisson renewal function: U(y) = 1 + y
    tab = renewal.estimate_renewal_measure(exp_exp, "PlainU", [1.0, 2.0], 5000, 60, seed=2)
    for y, v, se in zip(tab.grid, tab.values, tab.se):
        assert abs(v - (1 + y)) <= 4 * se


def test_plain_U_needs_upward_drift():
    with pytest.raises(DivergenceError):
        renewal.estimate_renewal_measure(two_point_law(0.5), "PlainU", [1.0], 100, 10)


def test_ladder_U_for_positive_walk_equals_plain(exp_exp):
    a = renewal.estimate_renewal_measure(exp_exp, "PlainU", [1.0, 3.0], 1000, 50, seed=4)
    b = renewal.estimate_renewal_measure(exp_exp, "LadderU_gt", [1.0, 3.0], 1000, 50, seed=4)
    np.testing.assert_allclose(a.values, b.values)


def test_exp_V_deterministic():
    law = JointLaw.independent(laws.point(1.0), laws.point(1.0))
    tab = renewal.exp_renewal_V(law, 0.5, [3.0], 10, 50)
    assert tab.values[0] == pytest.approx(sum(math.exp(0.5 * n) for n in range(4)), rel=1e-9)


def test_exp_V_two_point_band():
    tab = renewal.exp_renewal_V(two_point_law(), 0.1, [2.0, 5.0, 10.0, 20.0], 2000, 400, seed=1)
    assert all(v == FINITE for v in tab.verdicts)
    assert tab.extra["band_ratio"] < 10
    assert renewal.exp_renewal_V(two_point_law(), 0.3, [2.0], 500, 400).verdicts[0] == INFINITE


def test_power_U_deterministic():
    law = JointLaw.independent(laws.point(1.0), laws.point(1.0))
    # sum_{n=1}^{3} n = 6
    tab = renewal.power_renewal_U(law, 2.0, [3.0], 10, 50)
    assert tab.values[0] == pytest.approx(6.0)


def test_table_serialization():
    law = JointLaw.independent(laws.point(1.0), laws.point(1.0))
    tab = renewal.estimate_renewal_measure(law, "PlainU", [1.0], 10, 10)
    assert tab.to_csv().splitlines()[0] == "y,estimate,se,verdict"
    assert '"kind": "PlainU"' in tab.to_json()


def test_tilted_law_moments(normal_law):
    t = renewal.tilt(normal_law, 0.375)
    assert t.gamma == pytest.approx(0.5)
    # N(1,1) tilted by e^{-0.5 x}: N(0.5, 1)
    assert t.increment_mean() == pytest.approx(0.5, abs=1e-8)
    assert t.increment_var() == pytest.approx(1.0, abs=1e-6)


def test_tilt_rejects_coupled_law():
    law = JointLaw.functional(laws.normal(1.0, 1.0), "identity")
    with pytest.raises(CouplingError):
        renewal.tilt(law, 0.1)


def test_tilted_matches_direct(two_point):
    event = lambda s: s[:, -1] <= 0
    t = renewal.tilted_estimate(renewal.tilt(two_point, 0.1), event, 10, 20000, seed=3)
    d = renewal.direct_estimate(two_point, 0.1, event, 10, 20000, seed=4)
    assert t.agrees(d)


def test_duality_deterministic():
    law = JointLaw.independent(laws.point(-1.0), laws.point(1.0))
    rep = renewal.ladder_duality_check(law, (-2.0, 0.0), 10, 20)
    assert rep.before_ladder == pytest.approx(2.0)  # S_0 = 0 and S_1 = -1 lie in (-2, 0]
    assert rep.agree


@pytest.mark.parametrize("law_name", ["symmetric", "normal_law"])
def test_duality_random(law_name, request):
    rep = renewal.ladder_duality_check(request.getfixturevalue(law_name), (-2.0, 0.0), 3000, 200, seed=9)
    assert rep.agree


@given(st.lists(st.floats(0.1, 5.0), min_size=2, max_size=6, unique=True))
@settings(max_examples=20, deadline=None)
def test_renewal_function_monotone(grid):
    law = JointLaw.independent(laws.exponential(1.0), laws.exponential(1.0))
    tab = renewal.estimate_renewal_measure(law, "PlainU", sorted(grid), 200, 40, seed=1)
    assert np.all(np.diff(tab.values) >= 0)
