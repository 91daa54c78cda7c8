import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fptwalk import increments as inc
from fptwalk.boundaries import make_boundary
from fptwalk.errors import InvalidArgument, OutOfDomain


def test_discrete_distribution_validation():
    with pytest.raises(InvalidArgument):
        inc.DiscreteDistribution([0.0, 1.0], [0.5, 0.6])
    with pytest.raises(InvalidArgument):
        inc.DiscreteDistribution([1.0, 0.0], [0.5, 0.5])
    with pytest.raises(InvalidArgument):
        inc.DiscreteDistribution([0.0, 1.0], [1.0, 0.0])
    law = inc.DiscreteDistribution.from_atoms([(1, 0.25), (-1, 0.5), (1, 0.25)])
    assert list(law.values) == [-1.0, 1.0]
    assert law.mean == 0 and law.second_moment == 1


def test_discrete_schedule_rejects_nonzero_mean():
    with pytest.raises(InvalidArgument):
        inc.DiscreteSchedule([[(-1, 0.4), (1, 0.6)]])


def test_ssrw_basic_quantities():
    s = inc.make_ssrw(100)
    assert s.lattice == 1.0
    assert s.cum_var(100) == 100
    assert s.b(25) == 5
    assert s.essup_at(3) == 1
    with pytest.raises(OutOfDomain):
        s.law_at(101)


def test_power_weighted_variance_closed_form():
    s = inc.make_power_weighted(1, 50)
    assert s.cum_var(50) == pytest.approx(50 * 51 * 101 / 6, rel=1e-14)
    assert s.law_at(7).essup == 7


def test_four_point_laws_are_centred_with_unit_variance():
    s = inc.make_four_point(500)
    for k in (2, 10, 499):
        law = s.law_at(k)
        assert abs(law.mean) < 1e-12
        assert law.second_moment == pytest.approx(1.0, abs=1e-12)
        p = 1 / (k * math.log(2 + k))
        assert law.probs[0] == pytest.approx(p / 2, rel=1e-12)
        assert law.values[0] == pytest.approx(-math.sqrt(k), rel=1e-12)
    assert s.lattice is None
    # at k = 1 both pairs of atoms sit at +-1
    assert list(s.law_at(1).values) == [-1.0, 1.0]


def test_four_point_vectorized_tails_match_laws():
    s = inc.make_four_point(300)
    ks = np.arange(1, 301)
    t = 0.5 * np.sqrt(ks)
    direct = [s.law_at(int(k)).neg_tail_mean(float(x)) for k, x in zip(ks, t)]
    np.testing.assert_allclose(s.neg_tail_mean(ks, t), direct, rtol=1e-12, atol=1e-15)
    direct2 = [s.law_at(int(k)).abs_tail_second_moment(2.0) for k in ks]
    np.testing.assert_allclose(s.abs_tail_second_moment(ks, 2.0), direct2, rtol=1e-12, atol=1e-15)


def test_truncated_pareto_closed_forms():
    law = inc.TruncatedPareto(10.0)
    assert law.second_moment == pytest.approx(2 * math.log(10))
    # E[-X; -X > t] = 1/t - 1/c for 1 <= t <= c
    assert law.neg_tail_mean(2.0) == pytest.approx(0.5 - 0.1)
    x = law.sample(400_000, np.random.default_rng(1))
    assert abs(x.mean()) < 0.02
    assert np.mean(x * x) == pytest.approx(2 * math.log(10), rel=0.03)
    nz = np.abs(x[x != 0])
    assert nz.min() >= 1 and nz.max() <= 10
    assert np.mean(x == 0) == pytest.approx(0.01, abs=0.001)  # atom at 0 of mass c^-2


def test_truncated_pareto_discretization_keeps_mean_and_mass():
    law = inc.TruncatedPareto(20.0).discretize(0.25)
    assert math.fsum(law.probs) == pytest.approx(1.0, abs=1e-12)
    assert abs(law.mean) < 1e-12
    assert law.second_moment == pytest.approx(2 * math.log(20), rel=0.02)
    with pytest.raises(InvalidArgument):
        inc.TruncatedPareto(1.2).discretize(5.0)


def test_truncated_pareto_schedule_levels():
    s = inc.make_truncated_pareto(1.0, 0.5, 100)
    c = math.sqrt(50) * math.log(52)
    assert s.sigma2_at(50) == pytest.approx(2 * math.log(c))
    approx = s.lattice_approximation()
    assert approx.lattice == 0.5 and abs(approx.law_at(50).mean) < 1e-12


def test_weibullian_guards():
    with pytest.raises(InvalidArgument):
        inc.make_weibullian(1.0, 10)
    s = inc.make_weibullian(0.5, 10_000)
    assert s.lattice is None
    assert s.log_cum_var(10_000) > 2 * 99  # dominated by the last weight e^{2*100}
    with pytest.raises(OutOfDomain):
        inc.make_weibullian(0.9, 100_000).law_at(100_000)


def test_sampling_matches_law(rng):
    s = inc.make_four_point(1000)
    x = s.sample(1000, 200_000, rng)
    assert abs(x.mean()) < 0.02
    assert np.mean(x * x) == pytest.approx(1.0, rel=0.05)


def test_feasibility_check():
    s = inc.make_ssrw(10)
    assert inc.feasibility_check(s, make_boundary("constant", {"x": 0.0}), 10)
    assert not inc.feasibility_check(s, make_boundary("custom", {"values": [0, 2, 5]}), 3)
    assert inc.feasibility_check(inc.make_truncated_pareto(1, 0.5, 10),
                                 make_boundary("constant", {"x": 1e9}), 10) is False


def test_snap_to_lattice_preserves_mean():
    law = inc.DiscreteDistribution.from_atoms([(-0.3, 0.5), (0.3, 0.5)])
    snapped = law.snap_to_lattice(0.25)
    assert abs(snapped.mean) < 1e-15
    assert snapped.second_moment <= law.second_moment + 0.25**2 / 4 + 1e-15


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.1, 20.0), min_size=1, max_size=40))
def test_cum_var_is_increasing_and_consistent(weights):
    s = inc.make_weighted_rademacher(weights)
    cv = s.cum_vars
    assert cv[0] == 0
    assert np.all(np.diff(cv) > 0)
    # differencing a running sum loses digits relative to the total
    np.testing.assert_allclose(np.diff(cv), np.square(weights), rtol=1e-12, atol=1e-14 * cv[-1])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(1, 9), min_size=1, max_size=20), st.floats(0.1, 30.0))
def test_rademacher_closed_forms_match_laws(weights, t):
    s = inc.make_weighted_rademacher(weights)
    ks = np.arange(1, len(weights) + 1)
    direct = [s.law_at(int(k)).neg_tail_mean(t) for k in ks]
    np.testing.assert_allclose(s.neg_tail_mean(ks, t), direct, rtol=1e-12, atol=0)
    assert s.lattice == math.gcd(*weights)
