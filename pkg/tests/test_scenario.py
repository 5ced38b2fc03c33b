import csv
import math
from dataclasses import replace

import pytest

from builders import simple_instance, tiny_random_instance
from rngccs.policy import PolicyScenario, get_scenario
from rngccs.scenario import (CSV_COLUMNS, SWEEP_PARAMETERS, SweepSpec, apply_sweep_value,
                             run_scenario, run_scenarios, run_sweep, write_metrics_csv)
from rngccs.solver import SolverConfig

EXACT = SolverConfig(gap_tolerance=0.0)


def _tol(x):
    return 1e-6 * max(1.0, abs(x))


@pytest.fixture(scope="module")
def demo_runs(demo):
    return {m.scenario: (m, sol) for m, sol in run_scenarios(demo, EXACT)}


def test_five_scenarios_in_order(demo_runs):
    assert list(demo_runs) == ["baseline", "no_rfs", "no_45q_threshold", "high_policy",
                               "low_policy"]


def test_policy_dominance(demo_runs):
    obj = {k: m.objective for k, (m, _) in demo_runs.items()}
    assert obj["high_policy"] >= obj["baseline"] - _tol(obj["baseline"])
    assert obj["baseline"] >= obj["low_policy"] - _tol(obj["low_policy"])
    assert obj["baseline"] >= obj["no_rfs"] - _tol(obj["no_rfs"])
    assert obj["no_45q_threshold"] >= obj["baseline"] - _tol(obj["baseline"])


def test_metrics_units(demo_runs):
    m, sol = demo_runs["baseline"]
    assert m.rng_pj == pytest.approx(sol.total_ch4 / 1e6)
    assert m.co2_mt == pytest.approx(sol.total_sequestered / 1e6)
    assert m.profit_per_gj == pytest.approx(sol.objective / sol.total_ch4)
    assert math.fsum(m.revenue_breakdown.values()) - math.fsum(m.cost_breakdown.values()) \
        == pytest.approx(m.profit_per_gj, rel=1e-9)


def test_lcfs_sweep_nondecreasing(demo):
    rows = run_sweep(demo, SweepSpec("lcfs_price", (0.0, 50.0, 100.0, 150.0, 200.0)), EXACT)
    assert [r.value for r in rows] == [0.0, 50.0, 100.0, 150.0, 200.0]
    rng = [r.rng_pj for r in rows]
    obj = [r.objective for r in rows]
    assert all(b >= a - _tol(a) for a, b in zip(obj, obj[1:]))
    assert rng[-1] >= rng[0]


def test_transport_sweep_nonincreasing(demo):
    rows = run_sweep(demo, SweepSpec("transport_cost_scale", (0.5, 1.0, 1.5, 2.0)), EXACT)
    obj = [r.objective for r in rows]
    assert all(b <= a + _tol(a) for a, b in zip(obj, obj[1:]))


def test_repeated_value_gives_identical_rows(demo):
    rows = run_sweep(demo, SweepSpec("rin_price", (1.0, 1.0)), EXACT)
    a, b = (r.row(timing=False) for r in rows)
    assert a == b


def test_sweep_spec_validation():
    with pytest.raises(ValueError):
        SweepSpec("lcfs_price", (2.0, 1.0))
    with pytest.raises(ValueError):
        SweepSpec("lcfs_price", ())
    with pytest.raises(ValueError):
        SweepSpec("diesel_price", (1.0,))


@pytest.mark.parametrize("parameter", SWEEP_PARAMETERS)
def test_apply_sweep_value_touches_one_thing(parameter):
    inst = simple_instance(2)
    base = PolicyScenario()
    new_inst, new_scen = apply_sweep_value(inst, base, parameter, 2.0)
    if parameter.endswith("_price"):
        assert new_inst is inst
        assert getattr(new_scen, parameter) == 2.0
        assert replace(new_scen, **{parameter: getattr(base, parameter)}) == base
    else:
        assert new_scen == base
        assert new_inst != inst


def test_zero_policy_floor():
    inst = tiny_random_instance(4)
    zero = PolicyScenario(name="zero", lcfs_price=0.0, rin_price=0.0, q45_price=0.0,
                          rng_price=0.0)
    m, sol = run_scenario(inst, zero, EXACT)
    assert m.objective == 0.0 and m.rng_pj == 0.0 and m.n_facilities == 0
    assert m.profit_per_gj is None
    assert m.row()["profit_per_gj"] == "NA"
    assert all(math.isnan(v) for v in m.revenue_breakdown.values())


def test_low_policy_can_build_nothing():
    m, _ = run_scenario(simple_instance(2), get_scenario("low_policy"), EXACT)
    assert m.n_facilities == 0
    assert m.profit_per_gj is None


def test_workers_keep_order(demo):
    cfg = SolverConfig(gap_tolerance=0.0)
    serial = run_scenarios(demo, cfg, names=["low_policy", "baseline"])
    parallel = run_scenarios(demo, cfg, names=["low_policy", "baseline"], workers=2)
    assert [m.scenario for m, _ in parallel] == ["low_policy", "baseline"]
    for (a, _), (b, _) in zip(serial, parallel):
        assert a.row(timing=False) == b.row(timing=False)


def test_parallel_sweep_matches_serial(demo):
    spec = SweepSpec("q45_price", (0.0, 85.0))
    serial = run_sweep(demo, spec, EXACT)
    parallel = run_sweep(demo, spec, EXACT, workers=2)
    assert [r.objective for r in serial] == pytest.approx([r.objective for r in parallel])


def test_metrics_csv(tmp_path, demo_runs):
    rows = [m for m, _ in demo_runs.values()]
    path = write_metrics_csv(rows, tmp_path / "s.csv", timing=False)
    with open(path, newline="") as fh:
        table = list(csv.DictReader(fh))
    assert tuple(table[0]) == CSV_COLUMNS
    assert len(table) == 5
    assert all(r["wall_seconds"] == "" for r in table)
    again = write_metrics_csv(rows, tmp_path / "t.csv", timing=False)
    assert path.read_bytes() == again.read_bytes()
