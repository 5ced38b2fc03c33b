from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from builders import simple_instance, tiny_random_instance
from oracles import enumerate_milp
from rngccs.milp import build_model, compute_gap
from rngccs.policy import PolicyScenario, get_scenario
from rngccs.solver import SolverConfig, branch_and_bound, greedy_incumbent

EXACT = SolverConfig(gap_tolerance=0.0)
NOTHING_PAYS = PolicyScenario(name="zero", lcfs_price=0.0, rin_price=0.0, q45_price=0.0,
                              rng_price=0.0)


def _rel(a, b):
    return abs(a - b) / max(1.0, abs(b))


@pytest.mark.parametrize("seed", range(8))
@pytest.mark.parametrize("scenario", ["baseline", "no_45q_threshold"])
def test_exact_matches_enumeration(seed, scenario):
    model = build_model(tiny_random_instance(seed), get_scenario(scenario))
    best, _ = enumerate_milp(model)
    sol = branch_and_bound(model, EXACT)
    assert _rel(sol.objective, best) < 1e-7
    assert sol.gap <= 1e-9


@given(st.integers(100, 100_000))
@settings(max_examples=10)
def test_gap_tolerance_contract(seed):
    model = build_model(tiny_random_instance(seed), get_scenario("high_policy"))
    best, _ = enumerate_milp(model)
    sol = branch_and_bound(model, SolverConfig(gap_tolerance=0.10))
    assert sol.objective >= 0.9 * best - 1e-6 * max(1.0, abs(best))
    assert sol.bound >= best - 1e-6 * max(1.0, abs(best))
    assert sol.gap <= 0.10 + 1e-12


@pytest.mark.parametrize("branching", ["most_fractional", "pseudo_cost"])
@pytest.mark.parametrize("selection", ["best_bound", "depth_first_dive"])
def test_rules_agree_at_zero_gap(branching, selection):
    inst = tiny_random_instance(21)
    scen = get_scenario("high_policy")
    ref = branch_and_bound(build_model(inst, scen), EXACT).objective
    cfg = SolverConfig(gap_tolerance=0.0, branching=branching, node_selection=selection,
                       use_greedy=False)
    assert _rel(branch_and_bound(build_model(inst, scen), cfg).objective, ref) < 1e-7


def test_deterministic(demo):
    cfg = SolverConfig(gap_tolerance=0.0, seed=3)
    a = branch_and_bound(build_model(demo), cfg)
    b = branch_and_bound(build_model(demo), cfg)
    assert a.objective == b.objective
    assert np.array_equal(a.assignment, b.assignment)
    assert a.summary.nodes == b.summary.nodes
    assert a.summary.bound_trace == b.summary.bound_trace


def test_bound_trace_monotone_and_gap_arithmetic(demo):
    sol = branch_and_bound(build_model(demo, get_scenario("high_policy")), EXACT)
    trace = sol.summary.bound_trace
    assert trace
    assert all(b <= a for a, b in zip(trace, trace[1:]))
    assert trace[-1] == pytest.approx(sol.bound)
    expected = (sol.bound - sol.objective) / max(abs(sol.bound), 1e-9)
    assert abs(sol.gap - max(0.0, expected)) <= 1e-12


def test_compute_gap_definition():
    assert compute_gap(90.0, 100.0) == pytest.approx(0.10)
    assert compute_gap(-110.0, -100.0) == pytest.approx(0.10)
    assert compute_gap(0.0, 0.0) == 0.0
    assert compute_gap(5.0, 4.0) == 0.0


def test_greedy_never_beats_exact(demo):
    g = greedy_incumbent(demo)
    sol = branch_and_bound(build_model(demo), EXACT)
    assert g.objective <= sol.objective + 1e-6 * abs(sol.objective)
    assert g.objective >= 0.0


def test_nothing_profitable_gives_empty_network():
    inst = simple_instance(2)
    g = greedy_incumbent(inst, NOTHING_PAYS)
    assert g.objective == 0.0 and not any(g.facility_active.values())
    sol = branch_and_bound(build_model(inst, NOTHING_PAYS), EXACT)
    assert sol.objective == 0.0
    assert sol.total_ch4 == 0.0
    # the root LP is already integral
    assert sol.summary.nodes == 1
    assert sol.summary.status == "optimal"


def test_node_limit_reports_status():
    inst = tiny_random_instance(2)
    sol = branch_and_bound(build_model(inst, get_scenario("high_policy")),
                           SolverConfig(gap_tolerance=0.0, node_limit=1, use_greedy=False))
    assert sol.summary.nodes <= 1
    assert sol.summary.status in ("node_limit", "optimal", "gap_met")
    assert sol.objective <= sol.bound + 1e-9 * max(1.0, abs(sol.bound))


def test_warm_start_is_used_and_checked(demo):
    model = build_model(demo)
    exact = branch_and_bound(model, EXACT)
    cfg = SolverConfig(gap_tolerance=0.0, use_greedy=False)
    warm = branch_and_bound(model, cfg, warm_start=exact.assignment)
    assert warm.objective == pytest.approx(exact.objective)
    assert warm.summary.nodes <= branch_and_bound(model, cfg).summary.nodes
    # an infeasible warm start is ignored
    junk = np.full(model.n_vars, 1e9)
    assert branch_and_bound(model, cfg, warm_start=junk).objective == pytest.approx(
        exact.objective)


@pytest.mark.parametrize("kw", [dict(gap_tolerance=1.0), dict(gap_tolerance=-0.1),
                                dict(branching="strong"), dict(node_selection="bfs"),
                                dict(lp_feas_tol=0.0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SolverConfig(**kw)


def test_fixed_cost_drives_activation():
    inst = simple_instance(2)
    cheap = branch_and_bound(build_model(inst), EXACT)
    dear = replace(inst, facilities=tuple(replace(f, fixed_cost=1e9) for f in inst.facilities))
    sol = branch_and_bound(build_model(dear), EXACT)
    assert not any(sol.facility_active.values())
    assert cheap.objective >= sol.objective == 0.0
