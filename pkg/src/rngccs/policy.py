"""Policy instruments: LCFS credits, RFS RINs, the 45Q sequestration credit, RNG sales."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

log = logging.getLogger(__name__)

G_PER_T = 1e6
MJ_PER_GJ = 1000.0

# ILLUSTRATIVE lifecycle carbon intensities (gCO2e/MJ). Keys are feedstock type
# ids plus the two fixed-gas facility kinds.
DEFAULT_PATHWAY_CI = {
    "food_waste": -25.0,
    "green_waste": 10.0,
    "grease": 15.0,
    "crop_residue": 20.0,
    "manure": -280.0,
    "landfill_gas": 45.0,
    "wastewater": 25.0,
}


@dataclass(frozen=True)
class PolicyScenario:
    name: str = "baseline"
    lcfs_price: float = 100.0  # $ per tCO2 abated
    rin_price: float = 0.25  # $ per GGE
    q45_price: float = 50.0  # $ per tCO2 sequestered
    q45_threshold: float = 100_000.0  # tCO2 captured per facility-year
    rng_price: float = 3.5  # $ per GJ
    benchmark_ci: float = 93.0  # gCO2e/MJ
    pathway_ci: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_PATHWAY_CI))
    grid_ci: float = 226.0  # gCO2e/kWh
    capture_electricity: float = 120.0  # kWh per tCO2 captured+compressed
    truck_ef: float = 161.8  # gCO2 per ton-mile
    gge_energy_gj: float = 0.08124

    def violations(self) -> list[str]:
        out = []
        for name in ("lcfs_price", "rin_price", "q45_price", "rng_price", "q45_threshold",
                     "grid_ci", "capture_electricity", "truck_ef"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                out.append(f"{name}: must be finite and >= 0")
        if not self.gge_energy_gj > 0:
            out.append("gge_energy_gj: must be > 0")
        for key, ci in self.pathway_ci.items():
            if not math.isfinite(ci):
                out.append(f"pathway_ci.{key}: must be finite")
        return out

    def unprofitable_pathways(self) -> list[str]:
        """Pathways whose CI is not below the benchmark (earn no CI credit)."""
        return sorted(k for k, ci in self.pathway_ci.items() if ci >= self.benchmark_ci)


# Builtin price settings, in display order.
_SCENARIO_PRICES = {
    "baseline": ("Baseline", dict(lcfs_price=100.0, rin_price=0.25, q45_price=50.0,
                                  q45_threshold=100_000.0)),
    "no_rfs": ("No RFS", dict(lcfs_price=100.0, rin_price=0.0, q45_price=50.0,
                              q45_threshold=100_000.0)),
    "no_45q_threshold": ("No 45Q Threshold", dict(lcfs_price=100.0, rin_price=0.25,
                                                  q45_price=50.0, q45_threshold=0.0)),
    "high_policy": ("High Policy", dict(lcfs_price=200.0, rin_price=1.50, q45_price=50.0,
                                        q45_threshold=100_000.0)),
    "low_policy": ("Low Policy", dict(lcfs_price=20.0, rin_price=0.0, q45_price=50.0,
                                      q45_threshold=100_000.0)),
}

SCENARIO_LABELS = {key: label for key, (label, _) in _SCENARIO_PRICES.items()}


def builtin_scenarios(base: PolicyScenario | None = None) -> dict[str, PolicyScenario]:
    """The five policy scenarios, sharing every non-price field with ``base``."""
    base = base or PolicyScenario()
    return {key: replace(base, name=key, **prices) for key, (_, prices) in _SCENARIO_PRICES.items()}


def normalize_scenario_name(name: str) -> str:
    return name.strip().lower().replace("-", "_").replace(" ", "_")


def get_scenario(name: str, base: PolicyScenario | None = None) -> PolicyScenario:
    scenarios = builtin_scenarios(base)
    key = normalize_scenario_name(name)
    if key not in scenarios:
        raise KeyError(f"unknown scenario {name!r}; choose one of: {', '.join(scenarios)}")
    return scenarios[key]


def lcfs_credit_tonnes(ch4_energy: float, feedstock: str | None, co2_sequestered: float,
                       co2_truck_ton_miles: float, co2_capture_t: float,
                       scenario: PolicyScenario) -> float:
    """LCFS abatement credits (tCO2e) for one facility's annual activity.

    The fuel term credits the CI reduction of the delivered methane against the
    benchmark; sequestered CO2 earns credits one-for-one, net of grid emissions
    from capture/compression and truck emissions from CO2 transport.
    ``feedstock`` may be None only when ``ch4_energy`` is zero.
    """
    for v in (ch4_energy, co2_sequestered, co2_truck_ton_miles, co2_capture_t):
        if v < 0:
            raise ValueError("physical arguments must be >= 0")
    fuel = 0.0
    if ch4_energy:
        if feedstock not in scenario.pathway_ci:
            raise KeyError(f"no carbon-intensity pathway for {feedstock!r}")
        delta = scenario.benchmark_ci - scenario.pathway_ci[feedstock]
        fuel = delta * ch4_energy * MJ_PER_GJ / G_PER_T
    penalty = (scenario.grid_ci * scenario.capture_electricity * co2_capture_t
               + scenario.truck_ef * co2_truck_ton_miles) / G_PER_T
    return fuel + co2_sequestered - penalty


def rin_revenue(ch4_energy: float, scenario: PolicyScenario) -> float:
    """RIN revenue ($/yr); one RIN per gallon gasoline equivalent."""
    if ch4_energy < 0:
        raise ValueError("ch4_energy must be >= 0")
    return scenario.rin_price * ch4_energy / scenario.gge_energy_gj


def q45_terms(scenario: PolicyScenario) -> tuple[float, float]:
    return scenario.q45_price, scenario.q45_threshold


def rng_sales(ch4_energy: float, scenario: PolicyScenario) -> float:
    return scenario.rng_price * ch4_energy
