"""Policy scenario runs and one-at-a-time sensitivity sweeps."""
from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .domain import NetworkInstance
from .milp import COST_CATEGORIES, REVENUE_CATEGORIES, NetworkSolution, build_model
from .policy import PolicyScenario, builtin_scenarios
from .solver import SolverConfig, branch_and_bound

log = logging.getLogger(__name__)

SWEEP_PARAMETERS = ("biogas_yield_scale", "lcfs_price", "rin_price", "rng_price", "q45_price",
                    "transport_cost_scale")
PRICE_PARAMETERS = frozenset({"lcfs_price", "rin_price", "rng_price", "q45_price"})

CSV_COLUMNS = ("scenario", "parameter", "value", "lcfs_price", "rin_price", "q45_price",
               "q45_threshold", "rng_pj", "co2_mt", "n_facilities", "n_sinks", "profit_per_gj",
               "gap", "wall_seconds")


@dataclass
class RunMetrics:
    scenario: str
    rng_pj: float  # PJ CH4 per year
    co2_mt: float  # Mt CO2 sequestered per year
    n_facilities: int
    n_sinks: int
    profit_per_gj: float | None  # None when no RNG is produced
    revenue_breakdown: dict[str, float]  # $/GJ
    cost_breakdown: dict[str, float]  # $/GJ
    gap: float
    objective: float
    policy: PolicyScenario = field(default_factory=PolicyScenario, repr=False)
    parameter: str = ""
    value: float | None = None
    seconds: float = 0.0

    def row(self, *, timing: bool = True) -> dict:
        p = self.policy
        return {
            "scenario": self.scenario,
            "parameter": self.parameter,
            "value": "" if self.value is None else repr(float(self.value)),
            "lcfs_price": repr(p.lcfs_price),
            "rin_price": repr(p.rin_price),
            "q45_price": repr(p.q45_price),
            "q45_threshold": repr(p.q45_threshold),
            "rng_pj": f"{self.rng_pj:.6f}",
            "co2_mt": f"{self.co2_mt:.6f}",
            "n_facilities": str(self.n_facilities),
            "n_sinks": str(self.n_sinks),
            "profit_per_gj": "NA" if self.profit_per_gj is None else f"{self.profit_per_gj:.6f}",
            "gap": f"{self.gap:.6g}",
            "wall_seconds": f"{self.seconds:.3f}" if timing else "",
        }


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple[float, ...]
    base_scenario: PolicyScenario = field(default_factory=PolicyScenario)

    def __post_init__(self):
        if self.parameter not in SWEEP_PARAMETERS:
            raise ValueError(f"unknown sweep parameter {self.parameter!r}; "
                             f"choose one of {', '.join(SWEEP_PARAMETERS)}")
        if not self.values:
            raise ValueError("sweep needs at least one value")
        if any(b < a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("sweep values must be in nondecreasing order")


def metrics_from_solution(sol: NetworkSolution, policy: PolicyScenario, *,
                          seconds: float = 0.0) -> RunMetrics:
    energy = sol.total_ch4
    ledger = sol.breakdown
    if energy > 0:
        per = ledger.per_gj(energy)
        profit = sol.objective / energy
        rev = {k: per.revenue[k] for k in REVENUE_CATEGORIES}
        cost = {k: per.cost[k] for k in COST_CATEGORIES}
    else:
        profit = None
        rev = {k: math.nan for k in REVENUE_CATEGORIES}
        cost = {k: math.nan for k in COST_CATEGORIES}
    return RunMetrics(
        scenario=policy.name,
        rng_pj=energy / 1e6,
        co2_mt=sol.total_sequestered / 1e6,
        n_facilities=sum(sol.facility_active.values()),
        n_sinks=sum(sol.sink_active.values()),
        profit_per_gj=profit,
        revenue_breakdown=rev,
        cost_breakdown=cost,
        gap=sol.gap,
        objective=sol.objective,
        policy=policy,
        seconds=seconds,
    )


def run_scenario(instance: NetworkInstance, scenario: PolicyScenario,
                 config: SolverConfig | None = None, *, strict_mass_balance: bool = False,
                 warm_start=None) -> tuple[RunMetrics, NetworkSolution]:
    config = config or SolverConfig()
    start = time.perf_counter()
    model = build_model(instance, scenario, strict_mass_balance=strict_mass_balance)
    sol = branch_and_bound(model, config, warm_start=warm_start)
    metrics = metrics_from_solution(sol, scenario, seconds=time.perf_counter() - start)
    return metrics, sol


def run_scenarios(instance: NetworkInstance, config: SolverConfig | None = None, *,
                  names=None, strict_mass_balance: bool = False, workers: int = 1):
    """Solve the builtin policy scenarios; returns [(RunMetrics, NetworkSolution)]."""
    scenarios = builtin_scenarios(instance.scenario())
    if instance.policy_overrides:
        scenarios = {k: replace(s, **instance.policy_overrides) for k, s in scenarios.items()}
    keys = list(names or scenarios)
    jobs = [(instance, scenarios[k], config, strict_mass_balance) for k in keys]
    return _map(_solve_job, jobs, workers)


def _solve_job(args):
    instance, scenario, config, strict = args
    return run_scenario(instance, scenario, config, strict_mass_balance=strict)


def _map(fn, jobs, workers: int):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def apply_sweep_value(instance: NetworkInstance, base: PolicyScenario, parameter: str,
                      value: float) -> tuple[NetworkInstance, PolicyScenario]:
    """Instance and scenario with one parameter set, everything else held."""
    if parameter in PRICE_PARAMETERS:
        return instance, replace(base, **{parameter: float(value)})
    if parameter == "biogas_yield_scale":
        types = tuple(replace(t, biogas_yield=t.biogas_yield * value)
                      for t in instance.feedstock_types)
        return replace(instance, feedstock_types=types), base
    if parameter == "transport_cost_scale":
        p = instance.params
        params = replace(p, feedstock_transport_fixed=p.feedstock_transport_fixed * value,
                         feedstock_transport_per_mile=p.feedstock_transport_per_mile * value,
                         co2_truck_fixed=p.co2_truck_fixed * value,
                         co2_truck_per_mile=p.co2_truck_per_mile * value)
        return instance.with_params(params), base
    raise ValueError(f"unknown sweep parameter {parameter!r}")


def run_sweep(instance: NetworkInstance, sweep: SweepSpec, config: SolverConfig | None = None,
              *, strict_mass_balance: bool = False, workers: int = 1,
              return_solutions: bool = False):
    """One solve per sweep value, in the order given.

    Sequential runs pass the previous solution as a warm-start incumbent; the
    solver discards it when it is infeasible for the new setting.
    """
    config = config or SolverConfig()
    cells = [apply_sweep_value(instance, sweep.base_scenario, sweep.parameter, v)
             for v in sweep.values]
    if workers > 1:
        jobs = [(inst, sc, config, strict_mass_balance) for inst, sc in cells]
        results = _map(_solve_job, jobs, workers)
    else:
        results, prev = [], None
        for inst, sc in cells:
            metrics, sol = run_scenario(inst, sc, config, strict_mass_balance=strict_mass_balance,
                                        warm_start=prev)
            prev = sol.assignment
            results.append((metrics, sol))
    for (metrics, _), v in zip(results, sweep.values):
        metrics.parameter = sweep.parameter
        metrics.value = float(v)
    if return_solutions:
        return results
    return [m for m, _ in results]


def write_metrics_csv(rows: list[RunMetrics], path: str | Path, *, timing: bool = True) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for m in rows:
            w.writerow(m.row(timing=timing))
    tmp.replace(path)
    return path
