"""Report files for a solved network: CSV tables, GeoJSON and SVG figures.

Every writer produces bytes that depend only on its inputs (no timestamps,
fixed float formatting), and files are moved into place atomically.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from xml.sax.saxutils import escape

from .domain import NetworkInstance
from .errors import ReportError
from .milp import (COST_CATEGORIES, COST_GROUPS, REVENUE_CATEGORIES, Ledger, NetworkSolution,
                   SolveSummary, check_solution, compute_gap)
from .policy import PolicyScenario

SOLUTION_FILE = "solution.json"

CATEGORY_COLORS = {
    "rng_sales": "#4c72b0", "rin": "#55a868", "lcfs": "#8172b2", "q45": "#64b5cd",
    "digester": "#dd8452", "feedstock_transport": "#c44e52", "upgrading": "#937860",
    "capture_compression": "#8c8c8c", "co2_trucking": "#ccb974", "sequestration": "#da8bc3",
}
KIND_COLORS = {"source": "#55a868", "facility": "#dd8452", "sink": "#4c72b0"}


def _atomic_write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8", newline="")
    tmp.replace(path)
    return path


# ---------------------------------------------------------------------------
# Solution serialization
# ---------------------------------------------------------------------------

def solution_to_dict(sol: NetworkSolution, *, provenance: dict | None = None) -> dict:
    out = {
        "scenario": sol.scenario,
        "objective": sol.objective,
        "bound": sol.bound,
        "gap": sol.gap,
        "facilities": [
            {"id": j, "active": sol.facility_active[j], "biogas_m3": sol.biogas[j],
             "ch4_gj": sol.ch4[j], "co2_captured_t": sol.co2_captured[j],
             "q45_eligible": sol.q45_eligible[j], "q45_credited_t": sol.q45_credited[j]}
            for j in sorted(sol.facility_active)],
        "sinks": [
            {"id": k, "active": sol.sink_active[k], "sequestered_t": sol.co2_sequestered[k]}
            for k in sorted(sol.sink_active)],
        "feedstock_flows": [
            {"source": i, "facility": j, "feedstock": f, "wet_tons": v}
            for (i, j, f), v in sorted(sol.feedstock_flow.items())],
        "co2_flows": [
            {"facility": j, "sink": k, "tonnes": v} for (j, k), v in sorted(sol.co2_shipped.items())],
        "ledger": {"revenue": dict(sol.breakdown.revenue), "cost": dict(sol.breakdown.cost)},
        "summary": sol.summary.to_dict() if sol.summary else None,
    }
    if provenance is not None:
        out["provenance"] = provenance
    return out


def solution_from_dict(data: dict) -> NetworkSolution:
    try:
        facs = data["facilities"]
        sinks = data["sinks"]
        summary = data.get("summary")
        sol = NetworkSolution(
            facility_active={r["id"]: bool(r["active"]) for r in facs},
            sink_active={r["id"]: bool(r["active"]) for r in sinks},
            feedstock_flow={(r["source"], r["facility"], r["feedstock"]): float(r["wet_tons"])
                            for r in data["feedstock_flows"]},
            biogas={r["id"]: float(r["biogas_m3"]) for r in facs},
            ch4={r["id"]: float(r["ch4_gj"]) for r in facs},
            co2_captured={r["id"]: float(r["co2_captured_t"]) for r in facs},
            co2_shipped={(r["facility"], r["sink"]): float(r["tonnes"]) for r in data["co2_flows"]},
            co2_sequestered={r["id"]: float(r["sequestered_t"]) for r in sinks},
            q45_eligible={r["id"]: bool(r["q45_eligible"]) for r in facs},
            q45_credited={r["id"]: float(r["q45_credited_t"]) for r in facs},
            objective=float(data["objective"]),
            bound=float(data["bound"]),
            gap=compute_gap(float(data["objective"]), float(data["bound"])),
            breakdown=Ledger(dict(data["ledger"]["revenue"]), dict(data["ledger"]["cost"])),
            scenario=data.get("scenario", ""),
            summary=SolveSummary(**{k: summary[k] for k in
                                    ("status", "nodes", "lp_iterations", "gap_tolerance",
                                     "incumbent_updates")}) if summary else None,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ReportError(f"malformed solution file: {exc!r}") from exc
    return sol


def save_solution(sol: NetworkSolution, path: str | Path, *, provenance: dict | None = None):
    text = json.dumps(solution_to_dict(sol, provenance=provenance), indent=1) + "\n"
    return _atomic_write(Path(path), text)


def load_solution(path: str | Path) -> NetworkSolution:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ReportError(f"{path}: {exc}") from exc
    return solution_from_dict(data)


def provenance(instance: NetworkInstance, scenario: PolicyScenario, config=None) -> dict:
    """Parameters that produced a run, with a stable hash over all of them."""
    body = {
        "instance": instance.name,
        "scenario": asdict(scenario),
        "technoeconomics": asdict(instance.params),
        "solver": asdict(config) if config is not None else None,
    }
    digest = hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()
    return {**body, "config_hash": digest}


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------

def solution_csv(sol: NetworkSolution) -> str:
    """Long-format table: one row per (record, from, to, feedstock, field)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["record", "from", "to", "feedstock", "field", "value"])
    for j in sorted(sol.facility_active):
        w.writerow(["facility", j, "", "", "active", int(sol.facility_active[j])])
        w.writerow(["facility", j, "", "", "biogas_m3", repr(sol.biogas[j])])
        w.writerow(["facility", j, "", "", "ch4_gj", repr(sol.ch4[j])])
        w.writerow(["facility", j, "", "", "co2_captured_t", repr(sol.co2_captured[j])])
        w.writerow(["facility", j, "", "", "q45_eligible", int(sol.q45_eligible[j])])
        w.writerow(["facility", j, "", "", "q45_credited_t", repr(sol.q45_credited[j])])
    for k in sorted(sol.sink_active):
        w.writerow(["sink", k, "", "", "active", int(sol.sink_active[k])])
        w.writerow(["sink", k, "", "", "sequestered_t", repr(sol.co2_sequestered[k])])
    for (i, j, f), v in sorted(sol.feedstock_flow.items()):
        w.writerow(["feedstock_flow", i, j, f, "wet_tons", repr(v)])
    for (j, k), v in sorted(sol.co2_shipped.items()):
        w.writerow(["co2_flow", j, k, "", "tonnes", repr(v)])
    return buf.getvalue()


def ledger_csv(sol: NetworkSolution) -> str:
    energy = sol.total_ch4
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "category", "group", "usd_per_year", "usd_per_gj"])
    for cat in REVENUE_CATEGORIES:
        v = sol.breakdown.revenue[cat]
        w.writerow(["revenue", cat, "revenue", repr(v), _per(v, energy)])
    for cat in COST_CATEGORIES:
        v = sol.breakdown.cost[cat]
        w.writerow(["cost", cat, COST_GROUPS[cat], repr(v), _per(v, energy)])
    return buf.getvalue()


def _per(v: float, energy: float) -> str:
    return repr(v / energy) if energy > 0 else "NA"


def read_ledger_csv(path: str | Path) -> Ledger:
    revenue, cost = {}, {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            target = revenue if row["kind"] == "revenue" else cost
            target[row["category"]] = float(row["usd_per_year"])
    return Ledger(revenue, cost)


# ---------------------------------------------------------------------------
# GeoJSON
# ---------------------------------------------------------------------------

def _pt(loc):
    return [loc[1], loc[0]]  # GeoJSON order is lon, lat


def network_geojson(instance: NetworkInstance, sol: NetworkSolution) -> dict:
    shipped_from: dict[str, float] = {}
    for (i, _, _), v in sol.feedstock_flow.items():
        shipped_from[i] = shipped_from.get(i, 0.0) + v
    feats = []
    for s in instance.sources:
        feats.append({"type": "Feature", "geometry": {"type": "Point", "coordinates": _pt(s.location)},
                      "properties": {"kind": "source", "id": s.id, "feedstock": s.feedstock,
                                     "supply_wet_tons": s.supply,
                                     "shipped_wet_tons": shipped_from.get(s.id, 0.0)}})
    for f in instance.facilities:
        feats.append({"type": "Feature", "geometry": {"type": "Point", "coordinates": _pt(f.location)},
                      "properties": {"kind": "facility", "id": f.id, "facility_kind": f.kind,
                                     "active": sol.facility_active[f.id],
                                     "ch4_gj": sol.ch4[f.id],
                                     "co2_captured_t": sol.co2_captured[f.id],
                                     "q45_eligible": sol.q45_eligible[f.id],
                                     "q45_credited_t": sol.q45_credited[f.id]}})
    for k in instance.sinks:
        feats.append({"type": "Feature", "geometry": {"type": "Point", "coordinates": _pt(k.location)},
                      "properties": {"kind": "sink", "id": k.id, "active": sol.sink_active[k.id],
                                     "capacity_t": k.capacity,
                                     "sequestered_t": sol.co2_sequestered[k.id]}})
    src, fac, snk = instance.source_by_id, instance.facility_by_id, instance.sink_by_id
    for (i, j, f), v in sorted(sol.feedstock_flow.items()):
        if v <= 0:
            continue
        feats.append({"type": "Feature",
                      "geometry": {"type": "LineString",
                                   "coordinates": [_pt(src[i].location), _pt(fac[j].location)]},
                      "properties": {"kind": "feedstock_flow", "from": i, "to": j, "feedstock": f,
                                     "wet_tons": v,
                                     "miles": instance.dist_source_facility[(i, j)]}})
    for (j, k), v in sorted(sol.co2_shipped.items()):
        if v <= 0:
            continue
        feats.append({"type": "Feature",
                      "geometry": {"type": "LineString",
                                   "coordinates": [_pt(fac[j].location), _pt(snk[k].location)]},
                      "properties": {"kind": "co2_flow", "from": j, "to": k, "tonnes": v,
                                     "miles": instance.dist_facility_sink[(j, k)]}})
    return {"type": "FeatureCollection", "features": feats}


# ---------------------------------------------------------------------------
# SVG
# ---------------------------------------------------------------------------

def _f(v: float) -> str:
    return f"{v:.2f}"


def _svg(width: int, height: int, body: list[str]) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">')
    return "\n".join([head, f'<rect width="{width}" height="{height}" fill="white"/>', *body,
                      "</svg>"]) + "\n"


def map_svg(instance: NetworkInstance, sol: NetworkSolution, *, width: int = 640) -> str:
    """Equirectangular map of sites and positive flows."""
    pts = [e.location for e in (*instance.sources, *instance.facilities, *instance.sinks)]
    if instance.bbox is not None:
        lat0, lon0, lat1, lon1 = instance.bbox
    else:
        lat0, lat1 = min(p[0] for p in pts), max(p[0] for p in pts)
        lon0, lon1 = min(p[1] for p in pts), max(p[1] for p in pts)
    pad = 0.05 * max(lat1 - lat0, lon1 - lon0, 1e-3)
    lat0, lat1, lon0, lon1 = lat0 - pad, lat1 + pad, lon0 - pad, lon1 + pad
    kx = math.cos(math.radians(0.5 * (lat0 + lat1)))
    scale = (width - 20) / ((lon1 - lon0) * kx)
    height = int(round((lat1 - lat0) * scale)) + 60

    def xy(loc):
        return 10 + (loc[1] - lon0) * kx * scale, 10 + (lat1 - loc[0]) * scale

    body = []
    src, fac, snk = instance.source_by_id, instance.facility_by_id, instance.sink_by_id
    fmax = max(sol.feedstock_flow.values(), default=1.0) or 1.0
    for (i, j, _), v in sorted(sol.feedstock_flow.items()):
        if v <= 0:
            continue
        (x1, y1), (x2, y2) = xy(src[i].location), xy(fac[j].location)
        body.append(f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" '
                    f'stroke="{KIND_COLORS["source"]}" stroke-opacity="0.6" '
                    f'stroke-width="{_f(0.5 + 3 * math.sqrt(v / fmax))}"/>')
    cmax = max(sol.co2_shipped.values(), default=1.0) or 1.0
    for (j, k), v in sorted(sol.co2_shipped.items()):
        if v <= 0:
            continue
        (x1, y1), (x2, y2) = xy(fac[j].location), xy(snk[k].location)
        body.append(f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" '
                    f'stroke="{KIND_COLORS["sink"]}" stroke-dasharray="4 2" '
                    f'stroke-width="{_f(0.5 + 3 * math.sqrt(v / cmax))}"/>')
    for s in instance.sources:
        x, y = xy(s.location)
        body.append(f'<circle cx="{_f(x)}" cy="{_f(y)}" r="2.5" fill="{KIND_COLORS["source"]}">'
                    f'<title>{escape(s.id)} {escape(s.feedstock)}</title></circle>')
    for f in instance.facilities:
        x, y = xy(f.location)
        on = sol.facility_active[f.id]
        fill = KIND_COLORS["facility"] if on else "none"
        body.append(f'<rect x="{_f(x - 5)}" y="{_f(y - 5)}" width="10" height="10" fill="{fill}" '
                    f'stroke="{KIND_COLORS["facility"]}" stroke-width="1.5">'
                    f'<title>{escape(f.id)} {escape(f.kind)}</title></rect>')
        if sol.q45_eligible[f.id]:
            body.append(f'<text x="{_f(x + 7)}" y="{_f(y + 4)}">45Q</text>')
    for k in instance.sinks:
        x, y = xy(k.location)
        on = sol.sink_active[k.id]
        fill = KIND_COLORS["sink"] if on else "none"
        body.append(f'<polygon points="{_f(x)},{_f(y - 7)} {_f(x - 6)},{_f(y + 5)} '
                    f'{_f(x + 6)},{_f(y + 5)}" fill="{fill}" stroke="{KIND_COLORS["sink"]}" '
                    f'stroke-width="1.5"><title>{escape(k.id)}</title></polygon>')
    ly = height - 30
    for n, (label, color) in enumerate((("feedstock source", KIND_COLORS["source"]),
                                        ("facility (hollow = idle)", KIND_COLORS["facility"]),
                                        ("sequestration site", KIND_COLORS["sink"]))):
        lx = 10 + 200 * n
        body.append(f'<rect x="{lx}" y="{ly}" width="10" height="10" fill="{color}"/>')
        body.append(f'<text x="{lx + 14}" y="{ly + 9}">{escape(label)}</text>')
    return _svg(width, height, body)


def bars_svg(runs: list[tuple[str, Ledger, float]], *, width: int | None = None,
             height: int = 360, title: str = "Revenue and cost per GJ") -> str:
    """Stacked revenue and cost bars in $/GJ for each (label, ledger, energy_gj)."""
    per = [(label, led.per_gj(e) if e > 0 else None) for label, led, e in runs]
    top = 1.0
    for _, led in per:
        if led is not None:
            top = max(top, led.total_revenue, led.total_cost)
    top = _nice(top)
    group_w = 90
    width = width or 80 + group_w * max(len(per), 1) + 170
    x0, y0, plot_h = 60, 30, height - 80
    sy = plot_h / top
    body = [f'<text x="{x0}" y="18" font-size="13">{escape(title)}</text>']
    for tick in _ticks(top):
        y = y0 + plot_h - tick * sy
        body.append(f'<line x1="{x0}" y1="{_f(y)}" x2="{x0 + group_w * len(per)}" y2="{_f(y)}" '
                    f'stroke="#dddddd"/>')
        body.append(f'<text x="{x0 - 4}" y="{_f(y + 4)}" text-anchor="end">{tick:g}</text>')
    for n, (label, led) in enumerate(per):
        gx = x0 + group_w * n + 10
        if led is not None:
            for off, cats, values in ((0, REVENUE_CATEGORIES, led.revenue),
                                      (36, COST_CATEGORIES, led.cost)):
                base = y0 + plot_h
                for cat in cats:
                    h = max(values.get(cat, 0.0), 0.0) * sy
                    if h <= 0:
                        continue
                    base -= h
                    body.append(f'<rect x="{gx + off}" y="{_f(base)}" width="32" height="{_f(h)}" '
                                f'fill="{CATEGORY_COLORS[cat]}"><title>{cat} '
                                f'{values[cat]:.2f} $/GJ</title></rect>')
        body.append(f'<text x="{gx + 34}" y="{y0 + plot_h + 14}" text-anchor="middle">'
                    f'{escape(label)}</text>')
    body.append(f'<line x1="{x0}" y1="{y0 + plot_h}" x2="{x0 + group_w * len(per)}" '
                f'y2="{y0 + plot_h}" stroke="black"/>')
    body.append(f'<text x="12" y="{y0 + plot_h / 2}" transform="rotate(-90 12 {y0 + plot_h / 2})" '
                f'text-anchor="middle">$/GJ (left bar revenue, right bar cost)</text>')
    lx = x0 + group_w * len(per) + 20
    for n, cat in enumerate((*REVENUE_CATEGORIES, *COST_CATEGORIES)):
        ly = y0 + 16 * n
        body.append(f'<rect x="{lx}" y="{ly}" width="10" height="10" fill="{CATEGORY_COLORS[cat]}"/>')
        body.append(f'<text x="{lx + 14}" y="{ly + 9}">{cat}</text>')
    return _svg(width, height, body)


def line_chart_svg(series: dict[str, list[tuple[float, float]]], *, title: str, xlabel: str,
                   ylabel: str, width: int = 560, height: int = 360) -> str:
    """Plain line chart, one polyline per series; NaN points are skipped."""
    pts = [(x, y) for s in series.values() for x, y in s if math.isfinite(y)]
    if not pts:
        pts = [(0.0, 0.0), (1.0, 1.0)]
    xmin, xmax = min(p[0] for p in pts), max(p[0] for p in pts)
    ymin, ymax = min(0.0, min(p[1] for p in pts)), max(p[1] for p in pts)
    if xmax == xmin:
        xmax = xmin + 1.0
    if ymax == ymin:
        ymax = ymin + 1.0
    x0, y0, pw, ph = 60, 30, width - 200, height - 80
    sx, sy = pw / (xmax - xmin), ph / (ymax - ymin)

    def xy(x, y):
        return x0 + (x - xmin) * sx, y0 + ph - (y - ymin) * sy

    palette = list(CATEGORY_COLORS.values())
    body = [f'<text x="{x0}" y="18" font-size="13">{escape(title)}</text>',
            f'<rect x="{x0}" y="{y0}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
            f'<text x="{x0 + pw / 2}" y="{height - 12}" text-anchor="middle">{escape(xlabel)}</text>',
            f'<text x="14" y="{y0 + ph / 2}" transform="rotate(-90 14 {y0 + ph / 2})" '
            f'text-anchor="middle">{escape(ylabel)}</text>',
            f'<text x="{x0 - 4}" y="{y0 + ph + 4}" text-anchor="end">{ymin:.3g}</text>',
            f'<text x="{x0 - 4}" y="{y0 + 4}" text-anchor="end">{ymax:.3g}</text>',
            f'<text x="{x0}" y="{y0 + ph + 14}" text-anchor="middle">{xmin:.3g}</text>',
            f'<text x="{x0 + pw}" y="{y0 + ph + 14}" text-anchor="middle">{xmax:.3g}</text>']
    for n, (name, s) in enumerate(series.items()):
        color = palette[n % len(palette)]
        coords = " ".join(f"{_f(a)},{_f(b)}" for a, b in (xy(x, y) for x, y in s
                                                           if math.isfinite(y)))
        if coords:
            body.append(f'<polyline points="{coords}" fill="none" stroke="{color}" '
                        f'stroke-width="1.8"/>')
        ly = y0 + 16 * n
        body.append(f'<rect x="{x0 + pw + 12}" y="{ly}" width="10" height="10" fill="{color}"/>')
        body.append(f'<text x="{x0 + pw + 26}" y="{ly + 9}">{escape(name)}</text>')
    return _svg(width, height, body)


def _nice(v: float) -> float:
    exp = 10 ** math.floor(math.log10(v))
    for m in (1, 2, 2.5, 5, 10):
        if m * exp >= v:
            return m * exp
    return 10 * exp


def _ticks(top: float) -> list[float]:
    return [top * n / 5 for n in range(6)]


# ---------------------------------------------------------------------------
# Bundle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReportPaths:
    solution_csv: Path
    ledger_csv: Path
    geojson: Path
    map_svg: Path
    bars_svg: Path


def emit_reports(instance: NetworkInstance, sol: NetworkSolution, outdir: str | Path, *,
                 scenario: PolicyScenario | None = None,
                 strict_mass_balance: bool = False) -> ReportPaths:
    """Write the report bundle for a solution that passes the feasibility check."""
    ids = ({f.id for f in instance.facilities}, {k.id for k in instance.sinks},
           {s.id for s in instance.sources})
    missing = (set(sol.facility_active) ^ ids[0]) | (set(sol.sink_active) ^ ids[1])
    missing |= {i for (i, _, _) in sol.feedstock_flow if i not in ids[2]}
    if missing:
        raise ReportError(f"solution does not match instance; unknown or missing ids: "
                          f"{', '.join(sorted(missing))}")
    problems = check_solution(instance, sol, scenario, strict_mass_balance=strict_mass_balance)
    if problems:
        raise ReportError("solution fails the feasibility check: " + "; ".join(problems[:5]))
    out = Path(outdir)
    label = sol.scenario or "solution"
    return ReportPaths(
        solution_csv=_atomic_write(out / "solution.csv", solution_csv(sol)),
        ledger_csv=_atomic_write(out / "ledger.csv", ledger_csv(sol)),
        geojson=_atomic_write(out / "network.geojson",
                              json.dumps(network_geojson(instance, sol), indent=1) + "\n"),
        map_svg=_atomic_write(out / "map.svg", map_svg(instance, sol)),
        bars_svg=_atomic_write(out / "bars.svg",
                               bars_svg([(label, sol.breakdown, sol.total_ch4)])),
    )


def write_text(path: str | Path, text: str) -> Path:
    return _atomic_write(Path(path), text)
