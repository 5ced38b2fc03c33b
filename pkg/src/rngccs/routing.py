"""Distance matrices between sources, facilities and sequestration sites.

Three providers: great-circle distance times a road circuity factor (default),
shortest paths on a user-supplied road graph, or a precomputed matrix (e.g.
exported from a routing engine). Arcs longer than the transport radius are
dropped, so an absent entry means the arc is forbidden.
"""
from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import RoutingError

EARTH_RADIUS_MILES = 3958.7613
MODES = ("precomputed", "great_circle_circuity", "road_graph")


def haversine(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Great-circle distance in statute miles between (lat, lon) points in degrees."""
    lat1, lon1 = map(math.radians, a)
    lat2, lon2 = map(math.radians, b)
    h = (math.sin((lat2 - lat1) / 2) ** 2
         + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2)
    return 2 * EARTH_RADIUS_MILES * math.asin(min(1.0, math.sqrt(h)))


@dataclass(frozen=True)
class RoadGraph:
    nodes: dict[str, tuple[float, float]]
    adjacency: dict[str, tuple[tuple[str, float], ...]]

    @classmethod
    def from_edges(cls, nodes: dict[str, tuple[float, float]],
                   edges: Iterable[tuple[str, str, float, bool]]) -> "RoadGraph":
        adj: dict[str, list[tuple[str, float]]] = {n: [] for n in nodes}
        for u, v, miles, directed in edges:
            if u not in adj or v not in adj:
                raise RoutingError(f"edge {u}->{v} references an unknown node")
            if not miles > 0:
                raise RoutingError(f"edge {u}->{v} must have positive length, got {miles}")
            adj[u].append((v, float(miles)))
            if not directed:
                adj[v].append((u, float(miles)))
        return cls(dict(nodes), {n: tuple(out) for n, out in adj.items()})

    def nearest_node(self, point: tuple[float, float]) -> tuple[str, float]:
        if not self.nodes:
            raise RoutingError("road graph has no nodes")
        best = min(self.nodes, key=lambda n: (haversine(point, self.nodes[n]), n))
        return best, haversine(point, self.nodes[best])


def load_road_graph(directory: str | Path) -> RoadGraph:
    """Read ``nodes.csv`` (id, lat, lon) and ``edges.csv`` (from, to, miles, directed)."""
    directory = Path(directory)
    with open(directory / "nodes.csv", newline="", encoding="utf-8") as fh:
        nodes = {r["id"]: (float(r["lat"]), float(r["lon"])) for r in csv.DictReader(fh)}
    edges = []
    with open(directory / "edges.csv", newline="", encoding="utf-8") as fh:
        for r in csv.DictReader(fh):
            directed = r["directed"].strip().lower() in ("1", "true", "yes")
            edges.append((r["from"], r["to"], float(r["miles"]), directed))
    return RoadGraph.from_edges(nodes, edges)


def shortest_paths_from(graph: RoadGraph, source: str) -> dict[str, float]:
    """Dijkstra from ``source``; unreachable nodes are absent from the result."""
    if source not in graph.adjacency:
        raise RoutingError(f"unknown node {source!r}")
    dist = {source: 0.0}
    heap = [(0.0, source)]
    done = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v, w in graph.adjacency[u]:
            nd = d + w
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def shortest_path(graph: RoadGraph, source: str, target: str) -> float | None:
    """Shortest-path length in miles, or None when ``target`` is unreachable."""
    if target not in graph.adjacency:
        raise RoutingError(f"unknown node {target!r}")
    return shortest_paths_from(graph, source).get(target)


@dataclass(frozen=True)
class DistanceProvider:
    mode: str = "great_circle_circuity"
    circuity_factor: float = 1.3
    graph: RoadGraph | None = None
    precomputed_sf: dict[tuple[str, str], float] = field(default_factory=dict)
    precomputed_fk: dict[tuple[str, str], float] = field(default_factory=dict)
    snap_tolerance: float = 1.0  # miles

    def __post_init__(self):
        if self.mode not in MODES:
            raise RoutingError(f"unknown provider mode {self.mode!r}")
        if self.circuity_factor < 1:
            raise RoutingError("circuity_factor must be >= 1")
        if self.mode == "road_graph" and self.graph is None:
            raise RoutingError("road_graph mode needs a graph")


def _locate(entity):
    return entity.id, tuple(entity.location)


def _pairwise(provider: DistanceProvider, origins: Sequence, targets: Sequence,
              precomputed: dict[tuple[str, str], float], radius: float):
    out = {}
    if provider.mode == "precomputed":
        ids_o = {e.id for e in origins}
        ids_t = {e.id for e in targets}
        for (a, b), miles in precomputed.items():
            if a in ids_o and b in ids_t and miles <= radius:
                out[(a, b)] = float(miles)
        return out

    if provider.mode == "great_circle_circuity":
        for o in origins:
            oid, op = _locate(o)
            for t in targets:
                tid, tp = _locate(t)
                miles = haversine(op, tp) * provider.circuity_factor
                if miles <= radius:
                    out[(oid, tid)] = miles
        return out

    graph = provider.graph

    def snap(entity):
        node, offset = graph.nearest_node(tuple(entity.location))
        if offset > provider.snap_tolerance:
            raise RoutingError(
                f"{entity.id} is {offset:.3f} mi from the nearest road node "
                f"(tolerance {provider.snap_tolerance})")
        return node, offset

    snapped_t = [(t.id, *snap(t)) for t in targets]
    for o in origins:
        onode, ooff = snap(o)
        tree = shortest_paths_from(graph, onode)
        for tid, tnode, toff in snapped_t:
            if tnode not in tree:
                continue
            miles = ooff + tree[tnode] + toff
            if miles <= radius:
                out[(o.id, tid)] = miles
    return out


def build_matrices(sources: Sequence, facilities: Sequence, sinks: Sequence,
                   provider: DistanceProvider | None = None, radius: float = 50.0):
    """Return (source->facility, facility->sink) sparse distance dicts in miles.

    Facilities with zero intake capacity (landfill gas, wastewater) receive no
    feedstock arcs.
    """
    if not radius > 0:
        raise RoutingError("radius must be > 0")
    provider = provider or DistanceProvider()
    receivers = [f for f in facilities if getattr(f, "capacity", 1.0) > 0]
    dist_sf = _pairwise(provider, sources, receivers, provider.precomputed_sf, radius)
    dist_fk = _pairwise(provider, facilities, sinks, provider.precomputed_fk, radius)
    return dist_sf, dist_fk
