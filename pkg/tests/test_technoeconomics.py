import math
from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from builders import simple_instance
from rngccs.errors import MissingArcError
from rngccs.technoeconomics import (TechnoEconomicParams, arc_cost, biogas_from_feedstock,
                                    capital_recovery_factor, cost_coefficients, upgrade_split)

P = TechnoEconomicParams()
YIELDS = {"food_waste": 120.0, "manure": 30.0}
qty = st.floats(0, 1e7, allow_nan=False)


def crf_reference(r, n):
    # written out as an annuity sum, independent of the closed form
    return 1.0 / sum((1 + r) ** -k for k in range(1, n + 1))


def test_crf_anchor():
    assert capital_recovery_factor(0.10, 15) == pytest.approx(0.131474, abs=1e-6)
    assert capital_recovery_factor(0.10, 15) == pytest.approx(crf_reference(0.10, 15), rel=1e-12)
    assert 1e6 * capital_recovery_factor(0.10, 15) == pytest.approx(131_474, abs=1)


@given(st.floats(0.001, 0.5))
def test_crf_single_period(rate):
    assert capital_recovery_factor(rate, 1) == pytest.approx(1 + rate)


def test_crf_long_horizon_tends_to_rate():
    assert abs(capital_recovery_factor(0.10, 500) - 0.10) < 1e-6


@pytest.mark.parametrize("rate,years", [(0.0, 10), (-0.1, 10), (0.1, 0)])
def test_crf_preconditions(rate, years):
    with pytest.raises(ValueError):
        capital_recovery_factor(rate, years)


def test_biogas_examples():
    assert biogas_from_feedstock({}, YIELDS) == 0.0
    assert biogas_from_feedstock({"food_waste": 100}, YIELDS) == 12_000.0
    mix = {"food_waste": 100, "manure": 50}
    assert biogas_from_feedstock(mix, YIELDS) == (biogas_from_feedstock({"food_waste": 100}, YIELDS)
                                                   + biogas_from_feedstock({"manure": 50}, YIELDS))
    with pytest.raises(KeyError):
        biogas_from_feedstock({"sawdust": 1}, YIELDS)
    with pytest.raises(ValueError):
        biogas_from_feedstock({"manure": -1}, YIELDS)


@given(qty, qty, st.floats(0.1, 10))
def test_biogas_linear(a, b, lam):
    one = biogas_from_feedstock({"food_waste": a, "manure": b}, YIELDS)
    assert biogas_from_feedstock({"food_waste": lam * a, "manure": lam * b}, YIELDS) == \
        pytest.approx(lam * one, rel=1e-12, abs=1e-6)


def test_upgrade_split_examples():
    assert upgrade_split(0.0, 0.6, P) == (0.0, 0.0)
    gj, t = upgrade_split(1e6, 0.60, P)
    assert gj == pytest.approx(22_680.0, rel=1e-12)
    assert t == pytest.approx(697.68, rel=1e-12)
    assert round(t, 1) == 697.7
    assert upgrade_split(1e6, 1.0, P)[1] == 0.0


@given(qty, st.floats(0.01, 0.99), st.floats(0.1, 10))
def test_upgrade_split_homogeneous_and_conserving(gas, mf, lam):
    gj, t = upgrade_split(gas, mf, P)
    gj2, t2 = upgrade_split(lam * gas, mf, P)
    assert gj2 == pytest.approx(lam * gj, rel=1e-12, abs=1e-9)
    assert t2 == pytest.approx(lam * t, rel=1e-12, abs=1e-9)
    # CH4 volume + CO2 volume (before capture losses) recovers the biogas volume
    ch4_m3 = gj / P.ch4_lhv
    co2_m3 = t / (P.co2_density * P.capture_efficiency)
    assert ch4_m3 + co2_m3 == pytest.approx(gas, rel=1e-9, abs=1e-6)


def test_arc_cost_examples():
    assert arc_cost(4.0, 0.12, 20.0) == pytest.approx(6.40)
    assert arc_cost(4.0, 0.12, 0.0) == 4.0


def test_params_validation():
    assert TechnoEconomicParams().violations() == []
    bad = replace(P, discount_rate=1.5, capture_efficiency=0.0, upgrading_cost=-1.0)
    fields = {v.split(":")[0] for v in bad.violations()}
    assert {"discount_rate", "capture_efficiency", "upgrading_cost"} <= fields


def test_cost_coefficients_candidate_capex():
    inst = simple_instance(n_fac=1)
    cm = cost_coefficients(inst)
    fac = inst.facilities[0]
    crf = capital_recovery_factor(P.discount_rate, P.project_years)
    assert cm.facility_fixed["F0"] == pytest.approx(
        fac.fixed_cost + crf * P.digester_capex_per_capacity * fac.capacity)
    existing = simple_instance(n_fac=1)
    existing = replace(existing, facilities=(replace(fac, kind="existing_digester"),))
    assert cost_coefficients(existing).facility_fixed["F0"] == fac.fixed_cost


def test_cost_coefficients_arcs_and_signs():
    inst = simple_instance()
    cm = cost_coefficients(inst)
    miles = inst.dist_source_facility[("S0", "F0")]
    assert cm.feedstock_transport("S0", "F0") == pytest.approx(
        P.feedstock_transport_fixed + P.feedstock_transport_per_mile * miles)
    assert cm.co2_transport("F0", "K0") == pytest.approx(
        P.co2_truck_fixed + P.co2_truck_per_mile * inst.dist_facility_sink[("F0", "K0")])
    for value in cm.coefficients():
        assert math.isfinite(value) and value >= 0
    with pytest.raises(MissingArcError):
        cm.feedstock_transport("S0", "nowhere")
    with pytest.raises(MissingArcError):
        cm.co2_transport("F0", "nowhere")


def test_doubling_distances_doubles_only_variable_part():
    inst = simple_instance()
    doubled = replace(inst, dist_source_facility={k: 2 * v for k, v in
                                                  inst.dist_source_facility.items()})
    a, b = cost_coefficients(inst), cost_coefficients(doubled)
    for arc in inst.dist_source_facility:
        var = a.feedstock_transport(*arc) - P.feedstock_transport_fixed
        assert b.feedstock_transport(*arc) - P.feedstock_transport_fixed == pytest.approx(2 * var)
