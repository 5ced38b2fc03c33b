"""Physical conversions and cost coefficients.

Biogas is split into a methane stream (sold as RNG) and a CO2 stream (captured
from the upgrading off-gas). Energy accounting gives biogas CO2 zero heating
value, so upgrading conserves methane energy exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import TYPE_CHECKING, Mapping

from .errors import MissingArcError

if TYPE_CHECKING:
    from .domain import NetworkInstance


@dataclass(frozen=True)
class TechnoEconomicParams:
    discount_rate: float = 0.10
    project_years: int = 15
    ch4_lhv: float = 0.0378  # GJ per m3 CH4
    co2_density: float = 0.001836  # t per m3 CO2
    capture_efficiency: float = 0.95
    fixed_gas_methane_fraction: float = 0.60  # landfill / wastewater biogas
    # ILLUSTRATIVE cost defaults (not measured data)
    digester_capex_per_capacity: float = 150.0  # $ per (wt/yr) of intake capacity
    upgrading_cost: float = 2.0  # $ per GJ biogas processed
    rng_injection_cost: float = 0.40  # $ per GJ CH4
    capture_compression_cost: float = 9.0  # $ per tCO2
    feedstock_transport_fixed: float = 5.0  # $ per wt
    feedstock_transport_per_mile: float = 0.30  # $ per wt-mile
    co2_truck_fixed: float = 4.0  # $ per tCO2
    co2_truck_per_mile: float = 0.12  # $ per tCO2-mile

    def violations(self) -> list[str]:
        out = []
        if not 0 < self.discount_rate < 1:
            out.append("discount_rate: must lie in (0, 1)")
        if self.project_years < 1:
            out.append("project_years: must be >= 1")
        if not 0 < self.capture_efficiency <= 1:
            out.append("capture_efficiency: must lie in (0, 1]")
        if not 0 < self.fixed_gas_methane_fraction < 1:
            out.append("fixed_gas_methane_fraction: must lie in (0, 1)")
        for f in fields(self):
            v = getattr(self, f.name)
            if not math.isfinite(v) or v < 0:
                out.append(f"{f.name}: must be finite and >= 0")
        return out


def capital_recovery_factor(rate: float, years: int) -> float:
    """Annual payment per dollar of capital over ``years`` at ``rate``."""
    if rate <= 0:
        raise ValueError("rate must be > 0")
    if years < 1:
        raise ValueError("years must be >= 1")
    g = (1.0 + rate) ** years
    return rate * g / (g - 1.0)


def biogas_from_feedstock(mix: Mapping[str, float], yields: Mapping[str, float]) -> float:
    """Biogas volume (m3) from wet tons per feedstock type.

    ``yields`` maps feedstock type id to m3 biogas per wet ton.
    """
    total = 0.0
    for ftype, wet_tons in mix.items():
        if ftype not in yields:
            raise KeyError(f"unknown feedstock type {ftype!r}")
        if wet_tons < 0:
            raise ValueError(f"negative quantity for {ftype!r}")
        total += wet_tons * yields[ftype]
    return total


def upgrade_split(biogas: float, methane_fraction: float,
                  params: TechnoEconomicParams) -> tuple[float, float]:
    """Return (CH4 energy in GJ, captured CO2 in t) for a biogas volume in m3."""
    if biogas < 0:
        raise ValueError("biogas must be >= 0")
    ch4_energy = biogas * methane_fraction * params.ch4_lhv
    co2_captured = (biogas * (1.0 - methane_fraction) * params.co2_density
                    * params.capture_efficiency)
    return ch4_energy, co2_captured


def ch4_per_biogas(methane_fraction: float, params: TechnoEconomicParams) -> float:
    """GJ CH4 per m3 biogas."""
    return methane_fraction * params.ch4_lhv


def co2_per_biogas(methane_fraction: float, params: TechnoEconomicParams) -> float:
    """Captured tCO2 per m3 biogas."""
    return (1.0 - methane_fraction) * params.co2_density * params.capture_efficiency


def arc_cost(fixed: float, per_mile: float, miles: float) -> float:
    return fixed + per_mile * miles


@dataclass(frozen=True)
class CostModel:
    """Linear and fixed cost coefficients keyed by entity ids.

    facility_fixed applies to facility activation ($/yr), intake to wet tons
    received ($/wt), feedstock_arc to wet tons moved along a source->facility
    arc ($/wt), co2_arc to tonnes trucked along a facility->sink arc ($/t).
    """
    facility_fixed: dict[str, float]
    intake: dict[str, float]
    feedstock_arc: dict[tuple[str, str], float]
    upgrading_per_gj: float
    injection_per_gj: float
    capture_per_t: float
    co2_arc: dict[tuple[str, str], float]
    sink_fixed: dict[str, float]
    sink_unit: dict[str, float]
    digester_capital: dict[str, float] = field(default_factory=dict)

    def feedstock_transport(self, source: str, facility: str) -> float:
        try:
            return self.feedstock_arc[(source, facility)]
        except KeyError:
            raise MissingArcError(f"no distance for feedstock arc {source}->{facility}") from None

    def co2_transport(self, facility: str, sink: str) -> float:
        try:
            return self.co2_arc[(facility, sink)]
        except KeyError:
            raise MissingArcError(f"no distance for CO2 arc {facility}->{sink}") from None

    def coefficients(self):
        """Iterate over every scalar coefficient (for sanity checks)."""
        yield from self.facility_fixed.values()
        yield from self.intake.values()
        yield from self.feedstock_arc.values()
        yield self.upgrading_per_gj
        yield self.injection_per_gj
        yield self.capture_per_t
        yield from self.co2_arc.values()
        yield from self.sink_fixed.values()
        yield from self.sink_unit.values()


def cost_coefficients(instance: NetworkInstance) -> CostModel:
    p = instance.params
    crf = capital_recovery_factor(p.discount_rate, p.project_years)
    facility_fixed, intake, capital = {}, {}, {}
    for fac in instance.facilities:
        cap = 0.0
        if fac.kind == "candidate_digester":
            cap = crf * p.digester_capex_per_capacity * fac.capacity
        capital[fac.id] = cap
        facility_fixed[fac.id] = fac.fixed_cost + cap
        intake[fac.id] = fac.variable_processing_cost
    feedstock_arc = {
        key: arc_cost(p.feedstock_transport_fixed, p.feedstock_transport_per_mile, miles)
        for key, miles in instance.dist_source_facility.items()
    }
    co2_arc = {
        key: arc_cost(p.co2_truck_fixed, p.co2_truck_per_mile, miles)
        for key, miles in instance.dist_facility_sink.items()
    }
    return CostModel(
        facility_fixed=facility_fixed,
        intake=intake,
        feedstock_arc=feedstock_arc,
        upgrading_per_gj=p.upgrading_cost,
        injection_per_gj=p.rng_injection_cost,
        capture_per_t=p.capture_compression_cost,
        co2_arc=co2_arc,
        sink_fixed={k.id: k.fixed_cost for k in instance.sinks},
        sink_unit={k.id: k.unit_cost for k in instance.sinks},
        digester_capital=capital,
    )
