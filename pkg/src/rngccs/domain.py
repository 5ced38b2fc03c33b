"""Core data model, instance bundles and the synthetic instance generator.

An instance bundle is a directory (or .zip archive) of UTF-8 CSV files plus a
flat ``params.toml`` holding techno-economic and policy parameters::

    feedstock_types.csv  id, biogas_yield, methane_fraction
    sources.csv          id, lat, lon, feedstock, supply
    facilities.csv       id, lat, lon, kind, capacity, fixed_biogas, fixed_cost,
                         variable_processing_cost
    sinks.csv            id, lat, lon, capacity, fixed_cost, unit_cost
    dist_sf.csv          source_id, facility_id, miles
    dist_fk.csv          facility_id, sink_id, miles
    params.toml          [network] [technoeconomics] [policy] [policy.pathway_ci]
                         [policy.overrides]
"""
from __future__ import annotations

import csv
import io
import math
import random
import zipfile
from dataclasses import asdict, dataclass, field, fields, replace
from functools import cached_property
from pathlib import Path
from typing import Iterable

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import routing
from .errors import InstanceError
from .policy import PolicyScenario, get_scenario
from .technoeconomics import TechnoEconomicParams

FEEDSTOCK_TYPES = ("food_waste", "green_waste", "grease", "crop_residue", "manure")
MSW_TYPES = frozenset({"food_waste", "green_waste", "grease"})
FACILITY_KINDS = ("existing_digester", "candidate_digester", "landfill_gas", "wastewater")
DIGESTER_KINDS = frozenset({"existing_digester", "candidate_digester"})
FIXED_GAS_KINDS = frozenset({"landfill_gas", "wastewater"})

# ILLUSTRATIVE biogas yields, m3 per wet ton.
DEFAULT_YIELDS = {
    "food_waste": 120.0,
    "green_waste": 60.0,
    "grease": 250.0,
    "crop_residue": 170.0,
    "manure": 30.0,
}


class DanglingReferenceError(InstanceError):
    pass


class RadiusViolationError(InstanceError):
    pass


@dataclass(frozen=True)
class FeedstockType:
    id: str
    biogas_yield: float  # m3 biogas per wet ton
    methane_fraction: float = 0.60


@dataclass(frozen=True)
class FeedstockSource:
    id: str
    location: tuple[float, float]  # (lat, lon)
    feedstock: str
    supply: float  # wet tons per year


@dataclass(frozen=True)
class FacilitySite:
    id: str
    location: tuple[float, float]
    kind: str
    capacity: float = 0.0  # wet tons intake per year
    fixed_biogas: float = 0.0  # m3 biogas per year available on site
    fixed_cost: float = 0.0  # $/yr on activation (digester capital added for candidates)
    variable_processing_cost: float = 0.0  # $ per wet ton intake

    @property
    def is_digester(self) -> bool:
        return self.kind in DIGESTER_KINDS


@dataclass(frozen=True)
class SequestrationSite:
    id: str
    location: tuple[float, float]
    capacity: float  # tCO2 per year
    fixed_cost: float = 0.0  # $/yr
    unit_cost: float = 1.35  # $ per tCO2


@dataclass(frozen=True)
class NetworkInstance:
    sources: tuple[FeedstockSource, ...]
    facilities: tuple[FacilitySite, ...]
    sinks: tuple[SequestrationSite, ...]
    feedstock_types: tuple[FeedstockType, ...]
    dist_source_facility: dict[tuple[str, str], float]
    dist_facility_sink: dict[tuple[str, str], float]
    params: TechnoEconomicParams = field(default_factory=TechnoEconomicParams)
    policy: PolicyScenario = field(default_factory=PolicyScenario)
    policy_overrides: dict[str, float] = field(default_factory=dict)
    transport_radius: float = 50.0
    bbox: tuple[float, float, float, float] | None = None  # lat_min, lon_min, lat_max, lon_max
    name: str = ""

    @cached_property
    def source_by_id(self) -> dict[str, FeedstockSource]:
        return {s.id: s for s in self.sources}

    @cached_property
    def facility_by_id(self) -> dict[str, FacilitySite]:
        return {f.id: f for f in self.facilities}

    @cached_property
    def sink_by_id(self) -> dict[str, SequestrationSite]:
        return {k.id: k for k in self.sinks}

    @cached_property
    def type_by_id(self) -> dict[str, FeedstockType]:
        return {t.id: t for t in self.feedstock_types}

    def scenario(self, name: str | None = None) -> PolicyScenario:
        """Effective policy: a builtin scenario (or the bundle's own) plus overrides."""
        base = self.policy if name is None else get_scenario(name, self.policy)
        if self.policy_overrides:
            base = replace(base, **self.policy_overrides)
        return base

    def with_policy(self, policy: PolicyScenario) -> "NetworkInstance":
        return replace(self, policy=policy, policy_overrides={})

    def with_params(self, params: TechnoEconomicParams) -> "NetworkInstance":
        return replace(self, params=params)


@dataclass(frozen=True)
class Violation:
    entity: str
    field: str
    rule: str

    def __str__(self):
        return f"{self.entity}.{self.field}: {self.rule}"


def _in_bbox(loc, bbox) -> bool:
    lat, lon = loc
    return bbox[0] <= lat <= bbox[2] and bbox[1] <= lon <= bbox[3]


def validate(instance: NetworkInstance) -> list[Violation]:
    """Check every data-model invariant; an empty list means the instance is valid."""
    out: list[Violation] = []
    add = lambda e, f, r: out.append(Violation(e, f, r))  # noqa: E731

    def check_unique(items, kind):
        seen = set()
        for it in items:
            if it.id in seen:
                add(f"{kind}:{it.id}", "id", "duplicate id")
            seen.add(it.id)

    def check_location(ent, kind):
        lat, lon = ent.location
        if not (-90 <= lat <= 90 and -180 <= lon <= 180):
            add(f"{kind}:{ent.id}", "location", "coordinate out of range")
        elif instance.bbox is not None and not _in_bbox(ent.location, instance.bbox):
            add(f"{kind}:{ent.id}", "location", "outside instance bounding box")

    for kind, items in (("feedstock_type", instance.feedstock_types), ("source", instance.sources),
                        ("facility", instance.facilities), ("sink", instance.sinks)):
        check_unique(items, kind)

    for t in instance.feedstock_types:
        if t.id not in FEEDSTOCK_TYPES:
            add(f"feedstock_type:{t.id}", "id", f"must be one of {', '.join(FEEDSTOCK_TYPES)}")
        if not t.biogas_yield > 0:
            add(f"feedstock_type:{t.id}", "biogas_yield", "must be > 0")
        if not 0 < t.methane_fraction < 1:
            add(f"feedstock_type:{t.id}", "methane_fraction", "must lie in (0, 1)")

    types = instance.type_by_id
    for s in instance.sources:
        if not (math.isfinite(s.supply) and s.supply >= 0):
            add(f"source:{s.id}", "supply", "must be >= 0")
        if s.feedstock not in types:
            add(f"source:{s.id}", "feedstock", f"unknown feedstock type {s.feedstock!r}")
        check_location(s, "source")

    for f in instance.facilities:
        ent = f"facility:{f.id}"
        if f.kind not in FACILITY_KINDS:
            add(ent, "kind", f"must be one of {', '.join(FACILITY_KINDS)}")
        elif f.kind in FIXED_GAS_KINDS:
            if f.capacity != 0:
                add(ent, "capacity", f"must be 0 for kind {f.kind}")
            if not f.fixed_biogas >= 0:
                add(ent, "fixed_biogas", "must be >= 0")
        else:
            if f.fixed_biogas != 0:
                add(ent, "fixed_biogas", f"must be 0 for kind {f.kind}")
            if not f.capacity > 0:
                add(ent, "capacity", f"must be > 0 for kind {f.kind}")
        for name in ("fixed_cost", "variable_processing_cost", "capacity", "fixed_biogas"):
            v = getattr(f, name)
            if not math.isfinite(v) or (v < 0 and name in ("fixed_cost", "variable_processing_cost")):
                add(ent, name, "must be finite and >= 0")
        check_location(f, "facility")

    for k in instance.sinks:
        ent = f"sink:{k.id}"
        if not k.capacity > 0:
            add(ent, "capacity", "must be > 0")
        if not k.fixed_cost >= 0:
            add(ent, "fixed_cost", "must be >= 0")
        if not k.unit_cost >= 0:
            add(ent, "unit_cost", "must be >= 0")
        check_location(k, "sink")

    radius = instance.transport_radius
    for name, matrix, left, right in (
            ("dist_sf", instance.dist_source_facility, instance.source_by_id, instance.facility_by_id),
            ("dist_fk", instance.dist_facility_sink, instance.facility_by_id, instance.sink_by_id)):
        for (a, b), miles in sorted(matrix.items()):
            ent = f"{name}:{a}->{b}"
            if a not in left:
                add(ent, "from", f"dangling reference {a!r}")
            if b not in right:
                add(ent, "to", f"dangling reference {b!r}")
            if not (math.isfinite(miles) and miles >= 0):
                add(ent, "miles", "must be finite and >= 0")
            elif miles > radius:
                add(ent, "miles", f"exceeds transport radius {radius:g}")

    for msg in instance.params.violations():
        add("technoeconomics", *msg.split(": ", 1))
    policy = instance.scenario()
    for msg in policy.violations():
        add("policy", *msg.split(": ", 1))
    needed = {s.feedstock for s in instance.sources} | {
        f.kind for f in instance.facilities if f.kind in FIXED_GAS_KINDS}
    for key in sorted(needed - set(policy.pathway_ci)):
        add("policy", f"pathway_ci.{key}", "missing carbon-intensity pathway")
    if not radius > 0:
        add("network", "transport_radius", "must be > 0")
    return out


# ---------------------------------------------------------------------------
# Bundle I/O
# ---------------------------------------------------------------------------

_COLUMNS = {
    "feedstock_types.csv": ("id", "biogas_yield", "methane_fraction"),
    "sources.csv": ("id", "lat", "lon", "feedstock", "supply"),
    "facilities.csv": ("id", "lat", "lon", "kind", "capacity", "fixed_biogas", "fixed_cost",
                       "variable_processing_cost"),
    "sinks.csv": ("id", "lat", "lon", "capacity", "fixed_cost", "unit_cost"),
    "dist_sf.csv": ("source_id", "facility_id", "miles"),
    "dist_fk.csv": ("facility_id", "sink_id", "miles"),
}
PARAMS_FILE = "params.toml"
_TEXT_FIELDS = {"id", "feedstock", "kind", "source_id", "facility_id", "sink_id"}

PARAMS_HEADER = """\
# Instance parameters. Cost coefficients, carbon intensities and prices not
# fixed by the policy scenarios are ILLUSTRATIVE defaults; recalibrate them
# before drawing quantitative conclusions.
"""


class _BundleReader:
    def __init__(self, path: Path):
        self.path = path
        self._zip = zipfile.ZipFile(path) if path.is_file() else None

    def read(self, name: str) -> str:
        try:
            if self._zip is not None:
                return self._zip.read(name).decode("utf-8")
            return (self.path / name).read_text(encoding="utf-8")
        except (KeyError, FileNotFoundError):
            raise InstanceError(f"{self.path}: missing bundle file {name}") from None


def _read_table(reader: _BundleReader, name: str) -> list[dict]:
    text = reader.read(name)
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise InstanceError(f"{name}: missing header row")
    header = [h.strip() for h in rows[0]]
    expected = _COLUMNS[name]
    unknown = [h for h in header if h not in expected]
    if unknown:
        raise InstanceError(f"{name}: unknown column(s) {', '.join(unknown)}")
    missing = [h for h in expected if h not in header]
    if missing:
        raise InstanceError(f"{name}: missing column(s) {', '.join(missing)}")
    records = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise InstanceError(f"{name}:{lineno}: expected {len(header)} fields, got {len(row)}")
        rec = {}
        label = row[0].strip()
        for col, raw in zip(header, row):
            raw = raw.strip()
            if col in _TEXT_FIELDS:
                if not raw:
                    raise InstanceError(f"{name}: record {label!r} field {col!r} is empty")
                rec[col] = raw
            else:
                try:
                    rec[col] = float(raw)
                except ValueError:
                    raise InstanceError(
                        f"{name}: record {label!r} field {col!r}: not a decimal number: {raw!r}"
                    ) from None
        records.append(rec)
    return records


def _dataclass_from(cls, data: dict, section: str, nested: Iterable[str] = ()):
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise InstanceError(f"{PARAMS_FILE} [{section}]: unknown key(s) {', '.join(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if key in nested:
            kwargs[key] = {k: float(v) for k, v in value.items()}
        elif key == "name":
            kwargs[key] = str(value)
        elif key == "project_years":
            kwargs[key] = int(value)
        else:
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise InstanceError(f"{PARAMS_FILE} [{section}]: {key} must be a number")
            kwargs[key] = float(value)
    return cls(**kwargs)


def _parse_params(text: str) -> dict:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise InstanceError(f"{PARAMS_FILE}: {exc}") from None
    unknown = sorted(set(doc) - {"network", "technoeconomics", "policy"})
    if unknown:
        raise InstanceError(f"{PARAMS_FILE}: unknown section(s) {', '.join(unknown)}")
    network = dict(doc.get("network", {}))
    policy_doc = dict(doc.get("policy", {}))
    overrides = policy_doc.pop("overrides", {})
    base_ci = dict(PolicyScenario().pathway_ci)
    base_ci.update(policy_doc.get("pathway_ci", {}))
    policy_doc["pathway_ci"] = base_ci
    out = {
        "params": _dataclass_from(TechnoEconomicParams, doc.get("technoeconomics", {}),
                                  "technoeconomics"),
        "policy": _dataclass_from(PolicyScenario, policy_doc, "policy", nested=("pathway_ci",)),
    }
    known_policy = {f.name for f in fields(PolicyScenario)} - {"name", "pathway_ci"}
    bad = sorted(set(overrides) - known_policy)
    if bad:
        raise InstanceError(f"{PARAMS_FILE} [policy.overrides]: unknown key(s) {', '.join(bad)}")
    out["policy_overrides"] = {k: float(v) for k, v in overrides.items()}
    bad = sorted(set(network) - {"name", "transport_radius", "bbox"})
    if bad:
        raise InstanceError(f"{PARAMS_FILE} [network]: unknown key(s) {', '.join(bad)}")
    out["name"] = str(network.get("name", ""))
    out["transport_radius"] = float(network.get("transport_radius", 50.0))
    if "bbox" in network:
        bbox = tuple(float(v) for v in network["bbox"])
        if len(bbox) != 4:
            raise InstanceError(f"{PARAMS_FILE} [network]: bbox needs 4 numbers")
        out["bbox"] = bbox
    return out


def read_instance(path: str | Path) -> NetworkInstance:
    """Parse a bundle without the cross-record checks in :func:`validate`."""
    path = Path(path)
    if not path.exists():
        raise InstanceError(f"{path}: no such bundle")
    reader = _BundleReader(path)
    types = tuple(FeedstockType(r["id"], r["biogas_yield"], r["methane_fraction"])
                  for r in _read_table(reader, "feedstock_types.csv"))
    sources = tuple(FeedstockSource(r["id"], (r["lat"], r["lon"]), r["feedstock"], r["supply"])
                    for r in _read_table(reader, "sources.csv"))
    facilities = tuple(
        FacilitySite(r["id"], (r["lat"], r["lon"]), r["kind"], r["capacity"], r["fixed_biogas"],
                     r["fixed_cost"], r["variable_processing_cost"])
        for r in _read_table(reader, "facilities.csv"))
    sinks = tuple(SequestrationSite(r["id"], (r["lat"], r["lon"]), r["capacity"],
                                    r["fixed_cost"], r["unit_cost"])
                  for r in _read_table(reader, "sinks.csv"))
    dist_sf = {}
    for r in _read_table(reader, "dist_sf.csv"):
        key = (r["source_id"], r["facility_id"])
        if key in dist_sf:
            raise InstanceError(f"dist_sf.csv: duplicate arc {key[0]}->{key[1]}")
        dist_sf[key] = r["miles"]
    dist_fk = {}
    for r in _read_table(reader, "dist_fk.csv"):
        key = (r["facility_id"], r["sink_id"])
        if key in dist_fk:
            raise InstanceError(f"dist_fk.csv: duplicate arc {key[0]}->{key[1]}")
        dist_fk[key] = r["miles"]
    instance = NetworkInstance(sources, facilities, sinks, types, dist_sf, dist_fk,
                               **_parse_params(reader.read(PARAMS_FILE)))
    return instance


def load_instance(path: str | Path) -> NetworkInstance:
    """Read and validate an instance bundle; raises InstanceError on any problem."""
    instance = read_instance(path)
    raise_on_violations(instance)
    return instance


def raise_on_violations(instance: NetworkInstance) -> None:
    problems = validate(instance)
    if not problems:
        return
    msg = "; ".join(str(v) for v in problems[:10])
    if len(problems) > 10:
        msg += f"; ... ({len(problems)} violations)"
    if any("dangling" in v.rule or "unknown feedstock" in v.rule for v in problems):
        raise DanglingReferenceError(msg)
    if any("transport radius" in v.rule for v in problems):
        raise RadiusViolationError(msg)
    raise InstanceError(msg)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _table_text(name: str, rows: Iterable[tuple]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_COLUMNS[name])
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _toml_value(v) -> str:
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, (tuple, list)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    return repr(float(v))


def params_text(instance: NetworkInstance) -> str:
    lines = [PARAMS_HEADER, "[network]", f"name = {_toml_value(instance.name)}",
             f"transport_radius = {_toml_value(float(instance.transport_radius))}"]
    if instance.bbox is not None:
        lines.append(f"bbox = {_toml_value([float(v) for v in instance.bbox])}")
    lines += ["", "[technoeconomics]"]
    for key, value in asdict(instance.params).items():
        lines.append(f"{key} = {_toml_value(value)}")
    lines += ["", "[policy]"]
    policy = asdict(instance.policy)
    ci = policy.pop("pathway_ci")
    for key, value in policy.items():
        lines.append(f"{key} = {_toml_value(value)}")
    lines += ["", "[policy.pathway_ci]"]
    for key in sorted(ci):
        lines.append(f"{key} = {_toml_value(float(ci[key]))}")
    if instance.policy_overrides:
        lines += ["", "[policy.overrides]"]
        for key in sorted(instance.policy_overrides):
            lines.append(f"{key} = {_toml_value(float(instance.policy_overrides[key]))}")
    return "\n".join(lines) + "\n"


def bundle_files(instance: NetworkInstance) -> dict[str, str]:
    """Serialize an instance to {file name: text}."""
    return {
        "feedstock_types.csv": _table_text(
            "feedstock_types.csv",
            ((t.id, t.biogas_yield, t.methane_fraction) for t in instance.feedstock_types)),
        "sources.csv": _table_text(
            "sources.csv",
            ((s.id, *s.location, s.feedstock, s.supply) for s in instance.sources)),
        "facilities.csv": _table_text(
            "facilities.csv",
            ((f.id, *f.location, f.kind, f.capacity, f.fixed_biogas, f.fixed_cost,
              f.variable_processing_cost) for f in instance.facilities)),
        "sinks.csv": _table_text(
            "sinks.csv",
            ((k.id, *k.location, k.capacity, k.fixed_cost, k.unit_cost) for k in instance.sinks)),
        "dist_sf.csv": _table_text(
            "dist_sf.csv", ((a, b, m) for (a, b), m in sorted(instance.dist_source_facility.items()))),
        "dist_fk.csv": _table_text(
            "dist_fk.csv", ((a, b, m) for (a, b), m in sorted(instance.dist_facility_sink.items()))),
        PARAMS_FILE: params_text(instance),
    }


def write_instance(instance: NetworkInstance, path: str | Path) -> Path:
    """Write a bundle directory, or a zip archive when ``path`` ends in .zip."""
    path = Path(path)
    files = bundle_files(instance)
    if path.suffix == ".zip":
        path.parent.mkdir(parents=True, exist_ok=True)
        with zipfile.ZipFile(path, "w", zipfile.ZIP_DEFLATED) as zf:
            for name in sorted(files):
                info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
                info.compress_type = zipfile.ZIP_DEFLATED
                zf.writestr(info, files[name])
        return path
    path.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (path / name).write_text(text, encoding="utf-8", newline="")
    return path


DEMO_PATH = Path(__file__).parent / "data" / "demo"


def resolve_path(ref: str | Path) -> Path:
    return DEMO_PATH if str(ref) == "demo" else Path(ref)


def resolve_instance(ref: str | Path) -> NetworkInstance:
    """Load a bundle; the name ``demo`` selects the packaged demo instance."""
    return load_instance(resolve_path(ref))


# ---------------------------------------------------------------------------
# Synthetic generator
# ---------------------------------------------------------------------------

MILES_PER_DEG_LAT = 69.0
PIPELINE_BUFFER_MILES = 5.0 / 1.609344
MIN_TOWN_POPULATION = 10_000

# wet tons per year, before supply_scale
_SUPPLY_RANGES = {
    "food_waste": (15_000.0, 60_000.0),
    "green_waste": (20_000.0, 90_000.0),
    "grease": (2_000.0, 10_000.0),
    "crop_residue": (15_000.0, 60_000.0),
    "manure": (80_000.0, 300_000.0),
}


@dataclass(frozen=True)
class SyntheticSpec:
    n_sources: int = 24
    n_facilities: int = 8
    n_sinks: int = 3
    bbox: tuple[float, float, float, float] = (35.0, -121.0, 36.6, -119.0)
    supply_scale: float = 1.0
    urban_cluster_count: int = 3
    cluster_radius: float = 12.0  # miles
    msw_share: float = 0.6
    landfill_share: float = 0.25
    wastewater_share: float = 0.125
    existing_share: float = 0.25
    large_landfill: bool = True  # one landfill big enough to clear the 45Q threshold
    require_sequestration: bool = True
    circuity_factor: float = 1.3
    transport_radius: float = 50.0


def _miles_to_deg(lat: float) -> tuple[float, float]:
    return 1.0 / MILES_PER_DEG_LAT, 1.0 / (MILES_PER_DEG_LAT * math.cos(math.radians(lat)))


def _offset(center, rng: random.Random, max_miles: float, bbox):
    dlat, dlon = _miles_to_deg(center[0])
    for _ in range(200):
        r = max_miles * math.sqrt(rng.random())
        theta = 2 * math.pi * rng.random()
        p = (center[0] + r * math.sin(theta) * dlat, center[1] + r * math.cos(theta) * dlon)
        if _in_bbox(p, bbox):
            return p
    return center


def _uniform_point(rng: random.Random, bbox):
    return (rng.uniform(bbox[0], bbox[2]), rng.uniform(bbox[1], bbox[3]))


def _segment_miles(p, a, b) -> float:
    """Distance from p to segment ab, equirectangular approximation."""
    dlat, dlon = _miles_to_deg(p[0])
    to_xy = lambda q: ((q[1] - p[1]) / dlon, (q[0] - p[0]) / dlat)  # noqa: E731
    ax, ay = to_xy(a)
    bx, by = to_xy(b)
    vx, vy = bx - ax, by - ay
    denom = vx * vx + vy * vy
    t = 0.0 if denom == 0 else max(0.0, min(1.0, -(ax * vx + ay * vy) / denom))
    return math.hypot(ax + t * vx, ay + t * vy)


def _pipeline_distance(p, pipeline) -> float:
    if len(pipeline) == 1:
        return routing.haversine(p, pipeline[0])
    return min(_segment_miles(p, a, b) for a, b in zip(pipeline, pipeline[1:]))


def _candidate_site(rng: random.Random, centroids, pipeline, spec: SyntheticSpec):
    """Town-sized location near the gas network, sampled the way sites are screened:
    population above the town threshold and within the pipeline buffer."""
    for _ in range(500):
        center = centroids[rng.randrange(len(centroids))]
        p = _offset(center, rng, 2 * spec.cluster_radius, spec.bbox)
        population = rng.lognormvariate(math.log(25_000), 0.8)
        if population > MIN_TOWN_POPULATION and _pipeline_distance(p, pipeline) < PIPELINE_BUFFER_MILES:
            return p
    return centroids[rng.randrange(len(centroids))]


def _r(x: float, nd: int = 4) -> float:
    return round(x, nd)


def generate_synthetic(seed: int, spec: SyntheticSpec | None = None, *,
                       params: TechnoEconomicParams | None = None,
                       policy: PolicyScenario | None = None,
                       name: str = "") -> NetworkInstance:
    """Deterministic synthetic instance with urban feedstock clusters.

    MSW-type sources (food waste, green waste, grease) are drawn within
    ``cluster_radius`` of a few urban centroids; crop residue and manure are
    spread over the whole box. Sequestration sites avoid urban areas.
    """
    spec = spec or SyntheticSpec()
    if spec.n_sinks == 0 and spec.require_sequestration:
        raise ValueError("infeasible spec: sequestration required but n_sinks == 0")
    if min(spec.n_sources, spec.n_facilities, spec.n_sinks) < 0:
        raise ValueError("entity counts must be >= 0")
    if spec.urban_cluster_count < 1:
        raise ValueError("urban_cluster_count must be >= 1")
    rng = random.Random(seed)
    bbox = spec.bbox
    lat_pad = (bbox[2] - bbox[0]) * 0.15
    lon_pad = (bbox[3] - bbox[1]) * 0.15
    inner = (bbox[0] + lat_pad, bbox[1] + lon_pad, bbox[2] - lat_pad, bbox[3] - lon_pad)
    centroids = [_uniform_point(rng, inner) for _ in range(spec.urban_cluster_count)]
    pipeline = sorted(centroids, key=lambda c: c[1])

    types = tuple(FeedstockType(t, DEFAULT_YIELDS[t], 0.60) for t in FEEDSTOCK_TYPES)

    sources = []
    for i in range(spec.n_sources):
        if rng.random() < spec.msw_share:
            ftype = rng.choice(sorted(MSW_TYPES))
            center = centroids[rng.randrange(len(centroids))]
            loc = _offset(center, rng, spec.cluster_radius, bbox)
        else:
            ftype = rng.choice(["crop_residue", "manure"])
            loc = _uniform_point(rng, bbox)
        lo, hi = _SUPPLY_RANGES[ftype]
        supply = _r(rng.uniform(lo, hi) * spec.supply_scale, 1)
        sources.append(FeedstockSource(f"S{i + 1:02d}", (_r(loc[0]), _r(loc[1])), ftype, supply))

    n = spec.n_facilities
    n_lfg = round(spec.landfill_share * n)
    n_ww = round(spec.wastewater_share * n)
    n_exist = round(spec.existing_share * n)
    if n > 0 and n_lfg + n_ww >= n:
        n_ww = max(0, n - n_lfg - 1)
        n_lfg = min(n_lfg, n - 1)
    n_cand = max(0, n - n_lfg - n_ww - n_exist)
    kinds = (["landfill_gas"] * n_lfg + ["wastewater"] * n_ww
             + ["existing_digester"] * n_exist + ["candidate_digester"] * n_cand)[:n]

    facilities = []
    scale = spec.supply_scale
    for j, kind in enumerate(kinds):
        fid = f"F{j + 1:02d}"
        if kind == "landfill_gas":
            center = centroids[rng.randrange(len(centroids))]
            loc = _offset(center, rng, spec.cluster_radius, bbox)
            if spec.large_landfill and j == 0:
                gas = rng.uniform(150e6, 190e6)
            else:
                gas = rng.uniform(15e6, 60e6)
            fac = FacilitySite(fid, loc, kind, 0.0, _r(gas * scale, 0),
                               _r(rng.uniform(0.4e6, 0.9e6) * scale, 0), 0.0)
        elif kind == "wastewater":
            center = centroids[rng.randrange(len(centroids))]
            loc = _offset(center, rng, spec.cluster_radius, bbox)
            fac = FacilitySite(fid, loc, kind, 0.0, _r(rng.uniform(3e6, 10e6) * scale, 0),
                               _r(rng.uniform(0.1e6, 0.25e6) * scale, 0), 0.0)
        elif kind == "existing_digester":
            if rng.random() < 0.5:
                loc = _offset(centroids[rng.randrange(len(centroids))], rng,
                              spec.cluster_radius, bbox)
            else:
                loc = _uniform_point(rng, bbox)
            fac = FacilitySite(fid, loc, kind, _r(rng.uniform(60e3, 160e3) * scale, 0), 0.0,
                               _r(rng.uniform(0.25e6, 0.5e6) * scale, 0),
                               _r(rng.uniform(3.0, 5.0), 3))
        else:
            loc = _candidate_site(rng, centroids, pipeline, spec)
            fac = FacilitySite(fid, loc, kind, _r(rng.uniform(80e3, 200e3) * scale, 0), 0.0,
                               _r(rng.uniform(0.3e6, 0.6e6) * scale, 0),
                               _r(rng.uniform(3.0, 5.0), 3))
        facilities.append(replace(fac, location=(_r(fac.location[0]), _r(fac.location[1]))))

    sinks = []
    keep_out = 1.5 * spec.cluster_radius
    for k in range(spec.n_sinks):
        best, best_d = None, -1.0
        for _ in range(200):
            p = _uniform_point(rng, inner)
            d = min(routing.haversine(p, c) for c in centroids)
            if d >= keep_out:
                best = p
                break
            if d > best_d:
                best, best_d = p, d
        sinks.append(SequestrationSite(
            f"K{k + 1:02d}", (_r(best[0]), _r(best[1])),
            _r(rng.uniform(0.3e6, 1.5e6) * scale, 0),
            _r(rng.uniform(0.15e6, 0.4e6) * scale, 0), 1.35))

    provider = routing.DistanceProvider(circuity_factor=spec.circuity_factor)
    dist_sf, dist_fk = routing.build_matrices(sources, facilities, sinks, provider,
                                              spec.transport_radius)
    dist_sf = {k: _r(v, 6) for k, v in dist_sf.items()}
    dist_fk = {k: _r(v, 6) for k, v in dist_fk.items()}
    return NetworkInstance(
        tuple(sources), tuple(facilities), tuple(sinks), types, dist_sf, dist_fk,
        params=params or TechnoEconomicParams(), policy=policy or PolicyScenario(),
        transport_radius=spec.transport_radius, bbox=tuple(bbox),
        name=name or f"synthetic-{seed}")


def cluster_centroids(seed: int, spec: SyntheticSpec) -> list[tuple[float, float]]:
    """The urban centroids used by generate_synthetic for the same seed/spec."""
    rng = random.Random(seed)
    bbox = spec.bbox
    lat_pad = (bbox[2] - bbox[0]) * 0.15
    lon_pad = (bbox[3] - bbox[1]) * 0.15
    inner = (bbox[0] + lat_pad, bbox[1] + lon_pad, bbox[2] - lat_pad, bbox[3] - lon_pad)
    return [_uniform_point(rng, inner) for _ in range(spec.urban_cluster_count)]
