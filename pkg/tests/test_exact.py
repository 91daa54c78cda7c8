from fractions import Fraction
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import enumerate_paths, random_instance
from fptwalk import increments as inc
from fptwalk.boundaries import make_boundary
from fptwalk.errors import (BudgetExceeded, IncompatibleLattice, PreconditionViolated,
                            UndefinedConditional)
from fptwalk.exact import (check_domination, check_martingale_identity, check_positive_part_bound, evolve,
                           evolve_free, evolve_rational, results_table, ssrw_survival_oracle,
                           submartingale_check)


def test_ssrw_oracle_small_values():
    assert ssrw_survival_oracle(1) == 0.25
    assert ssrw_survival_oracle(2) == 0.1875
    s = inc.make_ssrw(40)
    res = evolve(s, make_boundary("constant", {"x": 0.0}), 40)
    for m in range(1, 21):
        assert res.survival[2 * m - 1] == pytest.approx(ssrw_survival_oracle(m), abs=1e-15)
    np.testing.assert_allclose(res.ez_star, 0.5, atol=1e-15)


def test_matches_path_enumeration(rng):
    for _ in range(25):
        laws, g, sched, bnd = random_instance(rng, 7)
        res = evolve(sched, bnd, len(laws))
        for n, row in enumerate(enumerate_paths(laws, g), 1):
            assert res.survival[n - 1] == pytest.approx(float(row["survival"]), abs=1e-12)
            assert res.ez_star[n - 1] == pytest.approx(float(row["ez_star"]), abs=1e-12)
            assert res.absorbed_neg_s[n - 1] == pytest.approx(float(row["absorbed_neg_s"]), abs=1e-12)


def test_rational_mode_agrees_with_enumeration(rng):
    laws, g, _, _ = random_instance(rng, 6)
    rat = evolve_rational(laws, g, len(laws))
    for r, e in zip(rat, enumerate_paths(laws, g)):
        assert r["survival"] == e["survival"]
        assert r["ez_star"] == e["ez_star"]
        # optional stopping holds exactly in rational arithmetic
    gn = Fraction(g[-1])
    assert rat[-1]["ez_star"] == rat[-1]["absorbed_neg_s"] - gn * rat[-1]["survival"]


def test_identities_on_weighted_walk():
    s = inc.make_power_weighted(1, 150)
    b = make_boundary("constant", {"x": 0.0})
    res = evolve(s, b, 150)
    free = evolve_free(s, 150)
    for n in (1, 10, 75, 150):
        assert check_martingale_identity(res, b, n) < 1e-10
        assert check_domination(res, free, n)
        assert check_positive_part_bound(res, free, n)
    assert np.max(np.abs(res.survival + res.absorbed_mass - 1)) < 1e-10
    assert submartingale_check(res, b, 1)


def test_off_lattice_boundary_uses_floor():
    s = inc.make_ssrw(6)
    b1 = make_boundary("custom", {"values": [-0.5] * 6})
    b2 = make_boundary("custom", {"values": [-1.0] * 6})
    r1, r2 = evolve(s, b1, 6), evolve(s, b2, 6)
    np.testing.assert_array_equal(r1.survival, r2.survival)
    # Z* still measures distance to the original boundary
    np.testing.assert_allclose(r1.ez_star - r2.ez_star, -0.5 * r1.survival)


def test_infeasible_boundary_gives_zero_survival():
    s = inc.make_ssrw(3)
    res = evolve(s, make_boundary("custom", {"values": [0, 5, 0]}), 3)
    assert res.survival[1] == 0 and res.survival[2] == 0
    with pytest.raises(UndefinedConditional):
        check_domination(res, evolve_free(s, 3), 2)


def test_errors():
    with pytest.raises(IncompatibleLattice):
        evolve(inc.make_four_point(10), make_boundary("constant", {"x": 0.0}), 10)
    with pytest.raises(BudgetExceeded) as info:
        evolve(inc.make_ssrw(100), make_boundary("constant", {"x": -50.0}), 100, max_states=20)
    assert info.value.n_reached == 9  # width 2n+1 passes 20 at step 10
    grow = make_boundary("custom", {"values": [-5, -4, -3, -2]})
    res = evolve(inc.make_ssrw(4), grow, 4)
    with pytest.raises(PreconditionViolated):
        submartingale_check(res, grow, 1)


def test_keep_laws_options():
    s = inc.make_ssrw(10)
    b = make_boundary("constant", {"x": 0.0})
    assert set(evolve(s, b, 10, keep_laws="last").laws) == {10}
    assert evolve(s, b, 10, keep_laws=False).laws == {}
    res = evolve(s, b, 10, keep_laws=[3, 5])
    assert res.law(5).total_mass == pytest.approx(res.survival[4])
    with pytest.raises(KeyError):
        res.law(4)


def test_results_table_columns():
    s = inc.make_ssrw(20)
    b = make_boundary("constant", {"x": -1.0})
    rows = results_table(evolve(s, b, 20), b)
    assert list(rows[0]) == ["n", "B2", "survival", "ez_star", "absorbed_neg_s", "stopping_residual"]
    assert max(r["stopping_residual"] for r in rows) < 1e-12


@st.composite
def lattice_schedules(draw):
    n = draw(st.integers(1, 12))
    laws = []
    for _ in range(n):
        a = draw(st.integers(1, 4))
        b = draw(st.integers(1, 4))
        laws.append([(-a, b / (a + b)), (b, a / (a + b))])
    g = draw(st.lists(st.integers(-4, 0), min_size=n, max_size=n))
    return laws, g


@settings(max_examples=80, deadline=None)
@given(lattice_schedules())
def test_identity_properties(inst):
    laws, g = inst
    s = inc.DiscreteSchedule(laws)
    b = make_boundary("custom", {"values": g})
    n = len(laws)
    res = evolve(s, b, n)
    free = evolve_free(s, n)
    assert np.all(np.diff(res.survival) <= 1e-15)
    assert np.all(np.abs(res.survival + res.absorbed_mass - 1) < 1e-12)
    for k in range(1, n + 1):
        assert check_martingale_identity(res, b, k) < 1e-10
        if res.survival[k - 1] > 0:
            assert check_domination(res, free, k)
            assert check_positive_part_bound(res, free, k)
    if np.all(np.diff(g) <= 0):
        assert submartingale_check(res, b, 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 30), st.integers(-3, 0))
def test_shifting_boundary_down_never_lowers_survival(n, x):
    s = inc.make_ssrw(n)
    hi = evolve(s, make_boundary("constant", {"x": float(x)}), n).survival
    lo = evolve(s, make_boundary("constant", {"x": float(x - 1)}), n).survival
    assert np.all(lo >= hi - 1e-15)


def test_ssrw_ratio_approaches_constant():
    s = inc.make_ssrw(400)
    res = evolve(s, make_boundary("constant", {"x": 0.0}), 400, keep_laws=False)
    r = [math.sqrt(n) * res.survival[n - 1] / res.ez_star[n - 1] for n in (100, 200, 400)]
    gaps = [abs(x - math.sqrt(2 / math.pi)) for x in r]
    assert gaps[0] > gaps[1] > gaps[2]
