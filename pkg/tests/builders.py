"""Small hand-built instances shared by several test modules."""
from __future__ import annotations

import numpy as np

from rngccs.domain import (DEFAULT_YIELDS, FacilitySite, FeedstockSource, FeedstockType,
                           NetworkInstance, SequestrationSite, SyntheticSpec, generate_synthetic)
from rngccs.technoeconomics import TechnoEconomicParams

P = TechnoEconomicParams()
# t CO2 captured per m3 of 60/40 biogas under default constants
CO2_PER_M3 = 0.4 * P.co2_density * P.capture_efficiency


def types():
    return tuple(FeedstockType(t, y, 0.60) for t, y in DEFAULT_YIELDS.items())


def make_instance(sources, facilities, sinks, dist_sf, dist_fk, **kw):
    return NetworkInstance(tuple(sources), tuple(facilities), tuple(sinks), types(),
                           dict(dist_sf), dict(dist_fk), **kw)


def simple_instance(n_fac=2, **kw):
    """3 food-waste sources, n_fac candidate digesters, 1 sink."""
    sources = [FeedstockSource(f"S{i}", (35.0 + 0.01 * i, -120.0), "food_waste", 20_000.0)
               for i in range(3)]
    facs = [FacilitySite(f"F{j}", (35.0, -120.1 - 0.01 * j), "candidate_digester", 40_000.0,
                         0.0, 50_000.0, 4.0) for j in range(n_fac)]
    sinks = [SequestrationSite("K0", (35.2, -120.2), 500_000.0, 20_000.0, 1.35)]
    dist_sf = {(s.id, f.id): 5.0 + i + 2 * j for i, s in enumerate(sources)
               for j, f in enumerate(facs)}
    dist_fk = {(f.id, "K0"): 12.0 + j for j, f in enumerate(facs)}
    return make_instance(sources, facs, sinks, dist_sf, dist_fk, **kw)


def threshold_instance(max_capture_t: float = 90_000.0, miles: float = 10.0):
    """One landfill-gas site whose capture is fixed at ``max_capture_t`` t/yr, one sink."""
    gas = max_capture_t / CO2_PER_M3
    fac = FacilitySite("LF", (35.0, -120.0), "landfill_gas", 0.0, gas, 100_000.0, 0.0)
    sink = SequestrationSite("K", (35.1, -120.0), 1e6, 10_000.0, 1.35)
    return make_instance([], [fac], [sink], {}, {("LF", "K"): miles}, name="threshold")


def tiny_random_instance(seed: int) -> NetworkInstance:
    """Random synthetic instance with <= 6 facilities, <= 3 sinks, <= 10 sources."""
    rng = np.random.default_rng(seed)
    spec = SyntheticSpec(n_sources=int(rng.integers(3, 11)), n_facilities=int(rng.integers(2, 5)),
                         n_sinks=int(rng.integers(1, 4)), large_landfill=bool(rng.random() < 0.5),
                         supply_scale=float(rng.uniform(0.5, 2.0)), cluster_radius=8.0,
                         bbox=(35.0, -120.5, 35.6, -119.8))
    return generate_synthetic(seed, spec, name=f"tiny-{seed}")
