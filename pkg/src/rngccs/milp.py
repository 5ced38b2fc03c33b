"""Profit-maximizing MILP for the RNG + CCS supply chain.

Variables (keys in ``MilpModel.var_index``):

    ("y", j)        facility j active                       binary
    ("z", k)        sink k active                           binary
    ("q", j)        facility j eligible for 45Q             binary
    ("x", i, j, f)  wet tons of type f from source i to j   continuous
    ("b", j)        biogas at j (m3/yr)
    ("m", j)        CH4 energy at j (GJ/yr)
    ("c", j)        CO2 captured at j (t/yr)
    ("t", j, k)     CO2 trucked from j to k (t/yr)
    ("s", k)        CO2 sequestered at k (t/yr)
    ("r", j)        tonnes credited under 45Q for j (t/yr)

Captured CO2 may be vented (shipped <= captured) unless strict mass balance is
requested. 45Q eligibility is gated on CO2 captured, the credit is paid on
tonnes shipped by eligible facilities.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .domain import FIXED_GAS_KINDS, NetworkInstance
from .errors import InfeasibleAssignmentError, SolverError
from .policy import PolicyScenario, lcfs_credit_tonnes, rin_revenue, rng_sales
from .solver.simplex import EQ, GE, LE, LinearProgram
from .technoeconomics import (CostModel, biogas_from_feedstock, co2_per_biogas, ch4_per_biogas,
                              cost_coefficients, upgrade_split)

GAP_EPS = 1e-9

REVENUE_CATEGORIES = ("rng_sales", "rin", "lcfs", "q45")
COST_CATEGORIES = ("digester", "feedstock_transport", "upgrading", "capture_compression",
                   "co2_trucking", "sequestration")
# Two technology groups used in cost decompositions.
COST_GROUPS = {
    "digester": "biomass_processing",
    "feedstock_transport": "biomass_processing",
    "upgrading": "biomass_processing",
    "capture_compression": "ccs",
    "co2_trucking": "ccs",
    "sequestration": "ccs",
}


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str  # continuous | binary
    lower: float
    upper: float
    objective: float
    key: tuple


@dataclass(frozen=True)
class Constraint:
    name: str
    coeffs: dict[int, float]
    sense: str
    rhs: float
    key: tuple


@dataclass(eq=False)
class MilpModel:
    variables: list[Variable]
    constraints: list[Constraint]
    var_index: dict[tuple, int]
    instance: NetworkInstance
    scenario: PolicyScenario
    big_m: dict[str, float]
    strict_mass_balance: bool = False
    sense: str = "maximize"

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    def key_of(self, col: int) -> tuple:
        return self.variables[col].key

    @cached_property
    def binary_columns(self) -> np.ndarray:
        return np.array([i for i, v in enumerate(self.variables) if v.kind == "binary"], dtype=int)

    @cached_property
    def objective_vector(self) -> np.ndarray:
        return np.array([v.objective for v in self.variables], dtype=float)

    @cached_property
    def matrix(self) -> np.ndarray:
        A = np.zeros((len(self.constraints), self.n_vars))
        for r, con in enumerate(self.constraints):
            for col, a in con.coeffs.items():
                A[r, col] = a
        return A

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lb = np.array([v.lower for v in self.variables], dtype=float)
        ub = np.array([v.upper for v in self.variables], dtype=float)
        return lb, ub

    def to_lp(self, lb: np.ndarray | None = None, ub: np.ndarray | None = None) -> LinearProgram:
        """LP relaxation (binaries relaxed to [0, 1]) with optional bound overrides."""
        l0, u0 = self.bounds()
        return LinearProgram(
            self.objective_vector, self.matrix, [c.sense for c in self.constraints],
            np.array([c.rhs for c in self.constraints], dtype=float),
            l0 if lb is None else lb, u0 if ub is None else ub)

    def objective_value(self, x) -> float:
        return float(self.objective_vector @ np.asarray(x, dtype=float))

    def worst_violation(self, x, *, int_tol: float = 1e-6) -> tuple[str, float]:
        """Largest scaled violation over rows, bounds and integrality."""
        x = np.asarray(x, dtype=float)
        worst = ("", 0.0)
        for v, xv in zip(self.variables, x):
            scale = 1.0 + abs(xv)
            viol = max(v.lower - xv, xv - v.upper, 0.0) / scale
            if v.kind == "binary":
                viol = max(viol, abs(xv - round(xv)) if abs(xv - round(xv)) > int_tol else 0.0)
            if viol > worst[1]:
                worst = (f"bound:{v.name}", viol)
        if self.constraints:
            A = self.matrix
            lhs = A @ x
            mag = np.abs(A) @ np.abs(x)
            for r, con in enumerate(self.constraints):
                diff = lhs[r] - con.rhs
                if con.sense == LE:
                    viol = max(diff, 0.0)
                elif con.sense == GE:
                    viol = max(-diff, 0.0)
                else:
                    viol = abs(diff)
                viol /= 1.0 + abs(con.rhs) + mag[r]
                if viol > worst[1]:
                    worst = (con.name, viol)
        return worst


def _methane_yields(instance: NetworkInstance):
    """Per feedstock type: (m3 biogas, GJ CH4, t CO2 captured) per wet ton."""
    p = instance.params
    out = {}
    for t in instance.feedstock_types:
        out[t.id] = (t.biogas_yield,
                     t.biogas_yield * ch4_per_biogas(t.methane_fraction, p),
                     t.biogas_yield * co2_per_biogas(t.methane_fraction, p))
    return out


def big_m_bounds(instance: NetworkInstance) -> dict[str, float]:
    """Upper bound on CO2 captured at each facility (t/yr).

    Fills digester capacity with the reachable sources that capture the most CO2
    per wet ton (a fractional knapsack, i.e. the exact LP maximum of captured CO2
    for the facility in isolation), plus the on-site gas endowment.
    """
    p = instance.params
    per_wt = {t: v[2] for t, v in _methane_yields(instance).items()}
    reach: dict[str, list[tuple[float, float]]] = {f.id: [] for f in instance.facilities}
    for (i, j) in instance.dist_source_facility:
        src = instance.source_by_id[i]
        if j in reach:
            reach[j].append((per_wt[src.feedstock], src.supply))
    out = {}
    for fac in instance.facilities:
        room = fac.capacity
        total = 0.0
        for rate, supply in sorted(reach[fac.id], reverse=True):
            if room <= 0:
                break
            take = min(room, supply)
            total += rate * take
            room -= take
        total += fac.fixed_biogas * co2_per_biogas(p.fixed_gas_methane_fraction, p)
        out[fac.id] = total
    return out


def build_model(instance: NetworkInstance, scenario: PolicyScenario | None = None, *,
                strict_mass_balance: bool = False) -> MilpModel:
    scenario = scenario or instance.scenario()
    p = instance.params
    costs: CostModel = cost_coefficients(instance)
    per_wt = _methane_yields(instance)
    big_m = big_m_bounds(instance)
    lcfs = scenario.lcfs_price
    q45_price, threshold = scenario.q45_price, scenario.q45_threshold
    mf_fixed = p.fixed_gas_methane_fraction

    variables: list[Variable] = []
    index: dict[tuple, int] = {}

    def add(key, kind, obj, lo=0.0, hi=math.inf):
        name = f"{key[0]}[{','.join(key[1:])}]"
        index[key] = len(variables)
        variables.append(Variable(name, kind, lo, hi if kind != "binary" else 1.0, obj, key))

    fac_ids = [f.id for f in instance.facilities]
    sink_ids = [k.id for k in instance.sinks]
    fac_pos = {j: n for n, j in enumerate(fac_ids)}
    sink_pos = {k: n for n, k in enumerate(sink_ids)}
    src_pos = {s.id: n for n, s in enumerate(instance.sources)}
    arcs_sf = sorted(instance.dist_source_facility, key=lambda a: (src_pos[a[0]], fac_pos[a[1]]))
    arcs_fk = sorted(instance.dist_facility_sink, key=lambda a: (fac_pos[a[0]], sink_pos[a[1]]))

    energy_value = scenario.rng_price + rin_revenue(1.0, scenario) - costs.upgrading_per_gj \
        - costs.injection_per_gj
    capture_value = -costs.capture_per_t + lcfs * lcfs_credit_tonnes(0, None, 0, 0, 1.0, scenario)

    for fac in instance.facilities:
        obj = -costs.facility_fixed[fac.id]
        if fac.fixed_biogas > 0:
            gas_ch4, _ = upgrade_split(fac.fixed_biogas, mf_fixed, p)
            obj += lcfs * lcfs_credit_tonnes(gas_ch4, fac.kind, 0, 0, 0, scenario)
        add(("y", fac.id), "binary", obj)
    for k in instance.sinks:
        add(("z", k.id), "binary", -costs.sink_fixed[k.id])
    for j in fac_ids:
        add(("q", j), "binary", 0.0)
    for (i, j) in arcs_sf:
        f = instance.source_by_id[i].feedstock
        ch4_per_wt = per_wt[f][1]
        obj = (-costs.feedstock_transport(i, j) - costs.intake[j]
               + lcfs * lcfs_credit_tonnes(ch4_per_wt, f, 0, 0, 0, scenario))
        add(("x", i, j, f), "continuous", obj)
    for j in fac_ids:
        add(("b", j), "continuous", 0.0)
    for j in fac_ids:
        add(("m", j), "continuous", energy_value)
    for j in fac_ids:
        add(("c", j), "continuous", capture_value)
    for (j, k) in arcs_fk:
        miles = instance.dist_facility_sink[(j, k)]
        obj = -costs.co2_transport(j, k) + lcfs * lcfs_credit_tonnes(0, None, 1.0, miles, 0,
                                                                     scenario)
        add(("t", j, k), "continuous", obj)
    for k in instance.sinks:
        add(("s", k.id), "continuous", -costs.sink_unit[k.id])
    for j in fac_ids:
        add(("r", j), "continuous", q45_price)

    constraints: list[Constraint] = []

    def row(key, terms, sense, rhs):
        coeffs: dict[int, float] = {}
        for vkey, a in terms:
            col = index[vkey]
            coeffs[col] = coeffs.get(col, 0.0) + a
        name = f"{key[0]}[{','.join(key[1:])}]"
        constraints.append(Constraint(name, coeffs, sense, float(rhs), key))

    by_source: dict[str, list[tuple]] = {}
    into: dict[str, list[tuple]] = {j: [] for j in fac_ids}
    for (i, j) in arcs_sf:
        f = instance.source_by_id[i].feedstock
        by_source.setdefault(i, []).append(("x", i, j, f))
        into[j].append(("x", i, j, f))
    ship_from: dict[str, list[tuple]] = {j: [] for j in fac_ids}
    ship_to: dict[str, list[tuple]] = {k: [] for k in sink_ids}
    for (j, k) in arcs_fk:
        ship_from[j].append(("t", j, k))
        ship_to[k].append(("t", j, k))

    # C1 supply
    for src in instance.sources:
        if src.id in by_source:
            row(("supply", src.id), [(v, 1.0) for v in by_source[src.id]], LE, src.supply)
    for fac in instance.facilities:
        j = fac.id
        # C2 capacity
        if into[j]:
            row(("capacity", j), [(v, 1.0) for v in into[j]] + [(("y", j), -fac.capacity)],
                LE, 0.0)
        # C3 biogas definition
        row(("biogas", j), [(("b", j), 1.0)]
            + [(v, -per_wt[v[3]][0]) for v in into[j]]
            + [(("y", j), -fac.fixed_biogas)], EQ, 0.0)
        # C4 upgrading split, CH4 and CO2 streams (per-type methane fractions)
        row(("ch4", j), [(("m", j), 1.0)]
            + [(v, -per_wt[v[3]][1]) for v in into[j]]
            + [(("y", j), -fac.fixed_biogas * ch4_per_biogas(mf_fixed, p))], EQ, 0.0)
        row(("co2", j), [(("c", j), 1.0)]
            + [(v, -per_wt[v[3]][2]) for v in into[j]]
            + [(("y", j), -fac.fixed_biogas * co2_per_biogas(mf_fixed, p))], EQ, 0.0)
        # C5 routing (C9 when strict)
        if ship_from[j] or strict_mass_balance:
            row(("route", j), [(v, 1.0) for v in ship_from[j]] + [(("c", j), -1.0)],
                EQ if strict_mass_balance else LE, 0.0)
    for k in instance.sinks:
        # C6 sink balance, C7 sink capacity
        row(("sink_balance", k.id), [(("s", k.id), 1.0)] + [(v, -1.0) for v in ship_to[k.id]],
            EQ, 0.0)
        row(("sink_capacity", k.id), [(("s", k.id), 1.0), (("z", k.id), -k.capacity)], LE, 0.0)
    for j in fac_ids:
        # C8 45Q threshold, attribution and big-M link
        row(("q45_threshold", j), [(("q", j), threshold), (("c", j), -1.0)], LE, 0.0)
        row(("q45_shipped", j), [(("r", j), 1.0)] + [(v, -1.0) for v in ship_from[j]], LE, 0.0)
        row(("q45_bigm", j), [(("r", j), 1.0), (("q", j), -big_m[j])], LE, 0.0)

    return MilpModel(variables, constraints, index, instance, scenario, big_m,
                     strict_mass_balance)


# ---------------------------------------------------------------------------
# Solutions
# ---------------------------------------------------------------------------

@dataclass
class Ledger:
    revenue: dict[str, float]
    cost: dict[str, float]

    @property
    def total_revenue(self) -> float:
        return math.fsum(self.revenue.values())

    @property
    def total_cost(self) -> float:
        return math.fsum(self.cost.values())

    @property
    def profit(self) -> float:
        return self.total_revenue - self.total_cost

    def group_costs(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for cat, v in self.cost.items():
            g = COST_GROUPS[cat]
            out[g] = out.get(g, 0.0) + v
        return out

    def per_gj(self, energy_gj: float) -> "Ledger":
        return Ledger({k: v / energy_gj for k, v in self.revenue.items()},
                      {k: v / energy_gj for k, v in self.cost.items()})


@dataclass
class SolveSummary:
    status: str  # optimal | gap_met | node_limit | time_limit
    nodes: int
    lp_iterations: int
    gap_tolerance: float
    incumbent_updates: int = 0
    bound_trace: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"status": self.status, "nodes": self.nodes, "lp_iterations": self.lp_iterations,
                "gap_tolerance": self.gap_tolerance, "incumbent_updates": self.incumbent_updates}


@dataclass
class NetworkSolution:
    facility_active: dict[str, bool]
    sink_active: dict[str, bool]
    feedstock_flow: dict[tuple[str, str, str], float]
    biogas: dict[str, float]
    ch4: dict[str, float]
    co2_captured: dict[str, float]
    co2_shipped: dict[tuple[str, str], float]
    co2_sequestered: dict[str, float]
    q45_eligible: dict[str, bool]
    q45_credited: dict[str, float]
    objective: float
    bound: float
    gap: float
    breakdown: Ledger
    scenario: str = ""
    summary: SolveSummary | None = None
    assignment: np.ndarray | None = field(default=None, repr=False)

    @property
    def total_ch4(self) -> float:
        return math.fsum(self.ch4.values())

    @property
    def total_sequestered(self) -> float:
        return math.fsum(self.co2_sequestered.values())


def compute_gap(objective: float, bound: float) -> float:
    return max(0.0, (bound - objective) / max(abs(bound), GAP_EPS))


def compute_ledger(instance: NetworkInstance, scenario: PolicyScenario,
                   facility_active, sink_active, feedstock_flow, ch4, co2_captured,
                   co2_shipped, co2_sequestered, q45_credited) -> Ledger:
    """Revenue and cost by category, recomputed from physical flows."""
    p = instance.params
    costs = cost_coefficients(instance)
    yields = {t.id: t.biogas_yield for t in instance.feedstock_types}
    mf = {t.id: t.methane_fraction for t in instance.feedstock_types}
    fuel_by_fac: dict[str, dict[str, float]] = {j: {} for j in facility_active}
    digester = feedstock_transport = 0.0
    for (i, j, f), wt in sorted(feedstock_flow.items()):
        digester += costs.intake[j] * wt
        feedstock_transport += costs.feedstock_transport(i, j) * wt
        mix = fuel_by_fac[j]
        mix[f] = mix.get(f, 0.0) + wt
    digester += math.fsum(costs.facility_fixed[j] for j, on in facility_active.items() if on)

    lcfs_t = 0.0
    for fac in instance.facilities:
        j = fac.id
        for f, wt in sorted(fuel_by_fac.get(j, {}).items()):
            gj, _ = upgrade_split(biogas_from_feedstock({f: wt}, yields), mf[f], p)
            lcfs_t += lcfs_credit_tonnes(gj, f, 0, 0, 0, scenario)
        if facility_active.get(j) and fac.kind in FIXED_GAS_KINDS and fac.fixed_biogas > 0:
            gj, _ = upgrade_split(fac.fixed_biogas, p.fixed_gas_methane_fraction, p)
            lcfs_t += lcfs_credit_tonnes(gj, fac.kind, 0, 0, 0, scenario)
        shipped = [(k, t) for (jj, k), t in co2_shipped.items() if jj == j]
        tonnes = math.fsum(t for _, t in shipped)
        ton_miles = math.fsum(t * instance.dist_facility_sink[(j, k)] for k, t in shipped)
        lcfs_t += lcfs_credit_tonnes(0, None, tonnes, ton_miles, co2_captured.get(j, 0.0),
                                     scenario)

    energy = math.fsum(ch4.values())
    revenue = {
        "rng_sales": rng_sales(energy, scenario),
        "rin": rin_revenue(energy, scenario),
        "lcfs": scenario.lcfs_price * lcfs_t,
        "q45": scenario.q45_price * math.fsum(q45_credited.values()),
    }
    cost = {
        "digester": digester,
        "feedstock_transport": feedstock_transport,
        "upgrading": (costs.upgrading_per_gj + costs.injection_per_gj) * energy,
        "capture_compression": costs.capture_per_t * math.fsum(co2_captured.values()),
        "co2_trucking": math.fsum(costs.co2_transport(j, k) * t
                                  for (j, k), t in sorted(co2_shipped.items())),
        "sequestration": math.fsum(costs.sink_fixed[k] for k, on in sink_active.items() if on)
        + math.fsum(costs.sink_unit[k] * s for k, s in co2_sequestered.items()),
    }
    return Ledger(revenue, cost)


def solution_ledger(instance: NetworkInstance, scenario: PolicyScenario,
                    sol: NetworkSolution) -> Ledger:
    return compute_ledger(instance, scenario, sol.facility_active, sol.sink_active,
                          sol.feedstock_flow, sol.ch4, sol.co2_captured, sol.co2_shipped,
                          sol.co2_sequestered, sol.q45_credited)


def extract_solution(model: MilpModel, raw, *, bound: float | None = None,
                     summary: SolveSummary | None = None, feas_tol: float = 1e-6,
                     int_tol: float = 1e-6, zero_tol: float = 1e-7) -> NetworkSolution:
    """Map a raw column assignment to a NetworkSolution.

    Raises InfeasibleAssignmentError naming the worst row when the assignment
    violates the model beyond ``feas_tol`` (scaled by row magnitude).
    """
    x = np.asarray(raw, dtype=float).copy()
    if x.shape != (model.n_vars,):
        raise ValueError(f"assignment has {x.size} entries, model has {model.n_vars} columns")
    name, viol = model.worst_violation(x, int_tol=int_tol)
    if viol > feas_tol:
        raise InfeasibleAssignmentError(name, viol)
    objective = model.objective_value(x)
    bins = model.binary_columns
    x[bins] = np.round(x[bins])
    x[np.abs(x) < zero_tol] = 0.0
    x = np.maximum(x, 0.0)

    inst = model.instance
    val = lambda key: float(x[model.var_index[key]])  # noqa: E731
    fac_ids = [f.id for f in inst.facilities]
    sink_ids = [k.id for k in inst.sinks]
    flows = {}
    shipped = {}
    for key, col in model.var_index.items():
        if key[0] == "x" and x[col] > 0:
            flows[(key[1], key[2], key[3])] = float(x[col])
        elif key[0] == "t" and x[col] > 0:
            shipped[(key[1], key[2])] = float(x[col])
    sol = NetworkSolution(
        facility_active={j: val(("y", j)) > 0.5 for j in fac_ids},
        sink_active={k: val(("z", k)) > 0.5 for k in sink_ids},
        feedstock_flow=flows,
        biogas={j: val(("b", j)) for j in fac_ids},
        ch4={j: val(("m", j)) for j in fac_ids},
        co2_captured={j: val(("c", j)) for j in fac_ids},
        co2_shipped=shipped,
        co2_sequestered={k: val(("s", k)) for k in sink_ids},
        q45_eligible={j: val(("q", j)) > 0.5 for j in fac_ids},
        q45_credited={j: val(("r", j)) for j in fac_ids},
        objective=objective,
        bound=objective if bound is None else bound,
        gap=0.0,
        breakdown=Ledger({}, {}),
        scenario=model.scenario.name,
        summary=summary,
        assignment=x,
    )
    sol.gap = compute_gap(sol.objective, sol.bound)
    sol.breakdown = solution_ledger(inst, model.scenario, sol)
    scale = max(1.0, abs(objective), sol.breakdown.total_revenue, sol.breakdown.total_cost)
    if abs(sol.breakdown.profit - objective) > 1e-6 * scale:
        raise SolverError(
            f"ledger profit {sol.breakdown.profit:.6f} disagrees with model objective "
            f"{objective:.6f}")
    return sol


def check_solution(instance: NetworkInstance, sol: NetworkSolution,
                   scenario: PolicyScenario | None = None, *, strict_mass_balance: bool = False,
                   tol: float = 1e-6) -> list[str]:
    """Independent feasibility check recomputed from the instance data.

    Returns human-readable problems; empty when every physical rule holds.
    """
    scenario = scenario or instance.scenario()
    p = instance.params
    problems = []
    close = lambda a, b: abs(a - b) <= tol * (1.0 + abs(a) + abs(b))  # noqa: E731
    le = lambda a, b: a <= b + tol * (1.0 + abs(a) + abs(b))  # noqa: E731
    types = instance.type_by_id

    for name, mapping in (("feedstock_flow", sol.feedstock_flow), ("biogas", sol.biogas),
                          ("ch4", sol.ch4), ("co2_captured", sol.co2_captured),
                          ("co2_shipped", sol.co2_shipped),
                          ("co2_sequestered", sol.co2_sequestered),
                          ("q45_credited", sol.q45_credited)):
        for key, v in mapping.items():
            if v < -tol:
                problems.append(f"{name}{key}: negative value {v}")

    out_of: dict[str, float] = {}
    intake: dict[str, float] = {}
    biogas_in: dict[str, float] = {}
    ch4_in: dict[str, float] = {}
    co2_in: dict[str, float] = {}
    for (i, j, f), wt in sol.feedstock_flow.items():
        if (i, j) not in instance.dist_source_facility:
            problems.append(f"feedstock_flow{(i, j, f)}: arc not in distance matrix")
        src = instance.source_by_id.get(i)
        if src is None or src.feedstock != f:
            problems.append(f"feedstock_flow{(i, j, f)}: source does not supply {f}")
        out_of[i] = out_of.get(i, 0.0) + wt
        intake[j] = intake.get(j, 0.0) + wt
        ft = types[f]
        gas = wt * ft.biogas_yield
        gj, co2 = upgrade_split(gas, ft.methane_fraction, p)
        biogas_in[j] = biogas_in.get(j, 0.0) + gas
        ch4_in[j] = ch4_in.get(j, 0.0) + gj
        co2_in[j] = co2_in.get(j, 0.0) + co2
    for i, total in out_of.items():
        if not le(total, instance.source_by_id[i].supply):
            problems.append(f"source {i}: shipped {total} exceeds supply")

    shipped_from: dict[str, float] = {}
    into_sink: dict[str, float] = {}
    for (j, k), t in sol.co2_shipped.items():
        if (j, k) not in instance.dist_facility_sink:
            problems.append(f"co2_shipped{(j, k)}: arc not in distance matrix")
        shipped_from[j] = shipped_from.get(j, 0.0) + t
        into_sink[k] = into_sink.get(k, 0.0) + t

    threshold = scenario.q45_threshold
    for fac in instance.facilities:
        j = fac.id
        on = sol.facility_active[j]
        if not le(intake.get(j, 0.0), fac.capacity * on):
            problems.append(f"facility {j}: intake {intake.get(j, 0.0)} exceeds capacity*active")
        gas0 = fac.fixed_biogas * on
        gj0, co20 = upgrade_split(gas0, p.fixed_gas_methane_fraction, p)
        if not close(sol.biogas[j], biogas_in.get(j, 0.0) + gas0):
            problems.append(f"facility {j}: biogas {sol.biogas[j]} != feedstock yield")
        if not close(sol.ch4[j], ch4_in.get(j, 0.0) + gj0):
            problems.append(f"facility {j}: CH4 {sol.ch4[j]} inconsistent with biogas split")
        if not close(sol.co2_captured[j], co2_in.get(j, 0.0) + co20):
            problems.append(f"facility {j}: CO2 {sol.co2_captured[j]} inconsistent with split")
        ship = shipped_from.get(j, 0.0)
        if strict_mass_balance:
            if not close(ship, sol.co2_captured[j]):
                problems.append(f"facility {j}: shipped {ship} != captured (strict balance)")
        elif not le(ship, sol.co2_captured[j]):
            problems.append(f"facility {j}: shipped {ship} exceeds captured")
        r = sol.q45_credited[j]
        if not le(r, ship):
            problems.append(f"facility {j}: 45Q credited {r} exceeds shipped {ship}")
        if r > tol and not sol.q45_eligible[j]:
            problems.append(f"facility {j}: 45Q credited without eligibility")
        if sol.q45_eligible[j] and not le(threshold, sol.co2_captured[j]):
            problems.append(f"facility {j}: eligible but capture below 45Q threshold")

    for k in instance.sinks:
        s = sol.co2_sequestered[k.id]
        if not close(s, into_sink.get(k.id, 0.0)):
            problems.append(f"sink {k.id}: sequestered {s} != shipped in")
        if not le(s, k.capacity * sol.sink_active[k.id]):
            problems.append(f"sink {k.id}: sequestered {s} exceeds capacity*active")
    return problems


# ---------------------------------------------------------------------------
# LP-format export
# ---------------------------------------------------------------------------

_LP_BAD = re.compile(r"[^A-Za-z0-9_.]")


def lp_names(model: MilpModel) -> list[str]:
    """LP-format-safe, unique column names."""
    names, seen = [], set()
    for col, v in enumerate(model.variables):
        base = _LP_BAD.sub("_", "_".join(v.key))
        name = base if base not in seen else f"{base}_c{col}"
        seen.add(name)
        names.append(name)
    return names


def _terms(coeffs, names) -> list[str]:
    out = []
    for col, a in coeffs:
        if a == 0:
            continue
        sign = "-" if a < 0 else "+"
        out.append(f"{sign} {abs(a):.17g} {names[col]}")
    return out


def _wrap(head: str, terms: list[str], tail: str = "") -> list[str]:
    lines, cur = [], head
    for t in terms:
        if len(cur) + len(t) + 1 > 200:
            lines.append(cur)
            cur = "   "
        cur += " " + t
    lines.append(cur + tail)
    return lines


def write_lp(model: MilpModel) -> str:
    """Export in the common CPLEX LP text layout."""
    names = lp_names(model)
    rnames = []
    seen = set()
    for r, con in enumerate(model.constraints):
        base = _LP_BAD.sub("_", "_".join(con.key))
        nm = base if base not in seen else f"{base}_r{r}"
        seen.add(nm)
        rnames.append(nm)
    lines = [f"\\ model for instance {model.instance.name or 'unnamed'}, "
             f"scenario {model.scenario.name}", "Maximize"]
    obj = _terms(((c, v.objective) for c, v in enumerate(model.variables)), names)
    if not obj and names:
        obj = [f"+ 0 {names[0]}"]
    lines += _wrap(" obj:", obj)
    lines.append("Subject To")
    for nm, con in zip(rnames, model.constraints):
        terms = _terms(sorted(con.coeffs.items()), names)
        if not terms:
            continue
        lines += _wrap(f" {nm}:", terms, f" {con.sense} {con.rhs:.17g}")
    lines.append("Bounds")
    for nm, v in zip(names, model.variables):
        if v.kind == "binary":
            continue
        lo = "-inf" if v.lower == -math.inf else f"{v.lower:.17g}"
        hi = "+inf" if v.upper == math.inf else f"{v.upper:.17g}"
        lines.append(f" {lo} <= {nm} <= {hi}")
    bins = [nm for nm, v in zip(names, model.variables) if v.kind == "binary"]
    if bins:
        lines.append("Binaries")
        for i in range(0, len(bins), 8):
            lines.append(" " + " ".join(bins[i:i + 8]))
    lines.append("End")
    return "\n".join(lines) + "\n"
