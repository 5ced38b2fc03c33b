from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rngccs.policy import (PolicyScenario, builtin_scenarios, get_scenario, lcfs_credit_tonnes,
                           q45_terms, rin_revenue, rng_sales)

BASE = PolicyScenario()
phys = st.floats(0, 1e6, allow_nan=False)


def test_builtin_prices():
    sc = builtin_scenarios()
    assert list(sc) == ["baseline", "no_rfs", "no_45q_threshold", "high_policy", "low_policy"]
    rows = {k: (s.lcfs_price, s.rin_price, s.q45_price, s.q45_threshold) for k, s in sc.items()}
    assert rows == {
        "baseline": (100, 0.25, 50, 100_000),
        "no_rfs": (100, 0, 50, 100_000),
        "no_45q_threshold": (100, 0.25, 50, 0),
        "high_policy": (200, 1.50, 50, 100_000),
        "low_policy": (20, 0, 50, 100_000),
    }
    # every non-price field is shared
    for s in sc.values():
        assert replace(s, name="x", lcfs_price=0, rin_price=0, q45_price=0, q45_threshold=0) == \
            replace(sc["baseline"], name="x", lcfs_price=0, rin_price=0, q45_price=0,
                    q45_threshold=0)


def test_get_scenario_names():
    assert get_scenario("High Policy").name == "high_policy"
    assert get_scenario("no-45q-threshold").q45_threshold == 0
    with pytest.raises(KeyError, match="baseline"):
        get_scenario("nonexistent")


def test_q45_terms():
    sc = builtin_scenarios()
    assert q45_terms(sc["baseline"]) == (50, 100_000)
    assert q45_terms(sc["no_45q_threshold"]) == (50, 0)


def test_lcfs_examples():
    assert lcfs_credit_tonnes(0, None, 0, 0, 0, BASE) == 0
    assert lcfs_credit_tonnes(0, None, 1000, 0, 0, BASE) == 1000
    assert lcfs_credit_tonnes(0, None, 0, 1000, 0, BASE) == pytest.approx(-0.1618, abs=1e-12)
    # fuel term: (93 - (-25)) g/MJ * 1000 GJ * 1000 MJ/GJ = 118 t
    assert lcfs_credit_tonnes(1000, "food_waste", 0, 0, 0, BASE) == pytest.approx(118.0)
    with pytest.raises(KeyError):
        lcfs_credit_tonnes(1, "sawdust", 0, 0, 0, BASE)
    with pytest.raises(ValueError):
        lcfs_credit_tonnes(-1, "food_waste", 0, 0, 0, BASE)


@given(phys, phys, phys, phys, phys, phys, phys, phys)
def test_lcfs_linear(e1, s1, tm1, c1, e2, s2, tm2, c2):
    f = lambda e, s, tm, c: lcfs_credit_tonnes(e, "manure", s, tm, c, BASE)  # noqa: E731
    assert f(e1 + e2, s1 + s2, tm1 + tm2, c1 + c2) == pytest.approx(
        f(e1, s1, tm1, c1) + f(e2, s2, tm2, c2), rel=1e-9, abs=1e-6)


@given(phys, phys)
def test_zero_emission_factors_remove_penalties(tm, cap):
    sc = replace(BASE, grid_ci=0.0, truck_ef=0.0)
    assert lcfs_credit_tonnes(10.0, "grease", 5.0, tm, cap, sc) == \
        lcfs_credit_tonnes(10.0, "grease", 5.0, 0, 0, sc)


def test_rin_examples():
    assert rin_revenue(0, BASE) == 0
    assert rin_revenue(81.24, BASE) == pytest.approx(250.0)
    assert rin_revenue(81.24, replace(BASE, rin_price=0.5)) == pytest.approx(500.0)
    assert rng_sales(10, BASE) == pytest.approx(35.0)


@given(st.floats(0, 1e6), st.floats(0, 1e5), st.floats(0, 1e6))
def test_revenue_dominance_under_fixed_flows(energy, seq, ton_miles):
    sc = builtin_scenarios()

    def revenue(s):
        credits = lcfs_credit_tonnes(energy, "food_waste", seq, ton_miles, seq, s)
        return rng_sales(energy, s) + rin_revenue(energy, s) + s.lcfs_price * credits \
            + s.q45_price * seq

    hi, base, lo = revenue(sc["high_policy"]), revenue(sc["baseline"]), revenue(sc["low_policy"])
    # dominance holds whenever the credit quantity is nonnegative
    if lcfs_credit_tonnes(energy, "food_waste", seq, ton_miles, seq, BASE) >= 0:
        assert hi >= base - 1e-6 * abs(base) >= lo - 1e-6 * abs(base) - 1e-6


def test_violations_and_warnings():
    assert BASE.violations() == []
    bad = replace(BASE, lcfs_price=-1, gge_energy_gj=0)
    assert {v.split(":")[0] for v in bad.violations()} == {"lcfs_price", "gge_energy_gj"}
    warm = replace(BASE, pathway_ci={**BASE.pathway_ci, "grease": 120.0})
    assert warm.unprofitable_pathways() == ["grease"]
