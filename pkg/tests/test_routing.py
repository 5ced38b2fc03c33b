import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import bellman_ford, shortest_by_enumeration
from rngccs.domain import FacilitySite, FeedstockSource, SequestrationSite
from rngccs.errors import RoutingError
from rngccs.routing import (EARTH_RADIUS_MILES, DistanceProvider, RoadGraph, build_matrices,
                            haversine, load_road_graph, shortest_path, shortest_paths_from)

MILE_DEG = 180.0 / (math.pi * EARTH_RADIUS_MILES)  # degrees of latitude per mile


def point_pair(miles):
    return (35.0, -120.0), (35.0 + miles * MILE_DEG, -120.0)


def src(i, loc):
    return FeedstockSource(i, loc, "food_waste", 1.0)


def fac(i, loc, cap=1.0):
    return FacilitySite(i, loc, "candidate_digester", cap)


def random_graph(seed, n=50, p=0.08, directed=False):
    rng = random.Random(seed)
    nodes = {f"n{i}": (35.0 + rng.random(), -120.0 + rng.random()) for i in range(n)}
    edges = []
    for u in nodes:
        for v in nodes:
            if u < v and rng.random() < p:
                edges.append((u, v, round(rng.uniform(0.5, 20.0), 3), directed))
    return nodes, edges


def directed_edges(edges):
    for u, v, w, d in edges:
        yield u, v, w
        if not d:
            yield v, u, w


def test_circuity_entry_and_cutoff():
    a, b = point_pair(10.0)
    sf, _ = build_matrices([src("S", a)], [fac("F", b)], [], DistanceProvider(), 50.0)
    assert sf[("S", "F")] == pytest.approx(13.0, rel=1e-9)
    a, b = point_pair(45.0)
    sf, _ = build_matrices([src("S", a)], [fac("F", b)], [], DistanceProvider(), 50.0)
    assert sf == {}


def test_path_graph_distance():
    nodes = {f"v{i}": (35.0 + i * MILE_DEG, -120.0) for i in range(4)}
    edges = [(f"v{i}", f"v{i + 1}", 1.0, False) for i in range(3)]
    g = RoadGraph.from_edges(nodes, edges)
    prov = DistanceProvider(mode="road_graph", graph=g)
    sf, _ = build_matrices([src("S", nodes["v0"])], [fac("F", nodes["v3"])], [], prov, 50.0)
    assert sf[("S", "F")] == pytest.approx(3.0, abs=1e-9)
    assert shortest_by_enumeration(nodes, directed_edges(edges), "v0", "v3") == 3.0


def test_shortest_path_edge_cases():
    nodes = {"a": (35, -120), "b": (35.1, -120), "c": (36, -121)}
    g = RoadGraph.from_edges(nodes, [("a", "b", 2.0, False)])
    assert shortest_path(g, "a", "a") == 0.0
    assert shortest_path(g, "a", "c") is None
    with pytest.raises(RoutingError):
        shortest_path(g, "a", "zzz")
    with pytest.raises(RoutingError):
        shortest_path(g, "zzz", "a")
    with pytest.raises(RoutingError):
        RoadGraph.from_edges(nodes, [("a", "b", 0.0, False)])


def test_directed_edges_not_symmetric():
    nodes = {"a": (35, -120), "b": (35.1, -120)}
    g = RoadGraph.from_edges(nodes, [("a", "b", 2.0, True)])
    assert shortest_path(g, "a", "b") == 2.0
    assert shortest_path(g, "b", "a") is None


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("directed", [False, True])
def test_dijkstra_matches_bellman_ford(seed, directed):
    nodes, edges = random_graph(seed, directed=directed)
    g = RoadGraph.from_edges(nodes, edges)
    ref = bellman_ford(nodes, directed_edges(edges), "n0")
    got = shortest_paths_from(g, "n0")
    for v in nodes:
        if math.isinf(ref[v]):
            assert v not in got
        else:
            assert got[v] == pytest.approx(ref[v], rel=1e-12)


def test_dijkstra_matches_enumeration_small():
    nodes, edges = random_graph(11, n=9, p=0.35)
    g = RoadGraph.from_edges(nodes, edges)
    for t in nodes:
        ref = shortest_by_enumeration(nodes, directed_edges(edges), "n0", t)
        got = shortest_path(g, "n0", t)
        assert (got is None and math.isinf(ref)) or got == pytest.approx(ref)


@given(st.integers(0, 10_000))
def test_triangle_inequality(seed):
    nodes, edges = random_graph(seed, n=15, p=0.25)
    g = RoadGraph.from_edges(nodes, edges)
    d = {u: shortest_paths_from(g, u) for u in nodes}
    for u in nodes:
        for v in d[u]:
            for w in d[v]:
                assert w in d[u]
                assert d[u][w] <= d[u][v] + d[v][w] + 1e-9


@given(st.integers(0, 10_000), st.floats(5, 80), st.floats(0.1, 1.0))
def test_radius_monotone(seed, radius, shrink):
    rng = random.Random(seed)
    pts = lambda n: [(35 + rng.random(), -120 + rng.random()) for _ in range(n)]  # noqa: E731
    sources = [src(f"S{i}", p) for i, p in enumerate(pts(6))]
    facs = [fac(f"F{i}", p) for i, p in enumerate(pts(4))]
    sinks = [SequestrationSite(f"K{i}", p, 1.0) for i, p in enumerate(pts(2))]
    big = build_matrices(sources, facs, sinks, radius=radius)
    small = build_matrices(sources, facs, sinks, radius=radius * shrink)
    for b, s in zip(big, small):
        assert set(s) <= set(b)
        assert all(s[k] == b[k] for k in s)
        assert all(v <= radius * shrink for v in s.values())


@given(st.floats(30, 40), st.floats(-125, -115), st.floats(30, 40), st.floats(-125, -115))
def test_circuity_one_is_haversine(la, lo, lb, lob):
    prov = DistanceProvider(circuity_factor=1.0)
    sf, _ = build_matrices([src("S", (la, lo))], [fac("F", (lb, lob))], [], prov, 1e6)
    assert sf[("S", "F")] == pytest.approx(haversine((la, lo), (lb, lob)), rel=1e-9, abs=1e-12)


def test_zero_capacity_facility_gets_no_feedstock_arcs():
    a, b = point_pair(5.0)
    lfg = FacilitySite("L", b, "landfill_gas", 0.0, 1e6)
    sf, fk = build_matrices([src("S", a)], [lfg], [SequestrationSite("K", a, 1.0)])
    assert sf == {} and ("L", "K") in fk


def test_snap_tolerance_error():
    g = RoadGraph.from_edges({"a": (35, -120), "b": (35.01, -120)}, [("a", "b", 1.0, False)])
    prov = DistanceProvider(mode="road_graph", graph=g, snap_tolerance=1.0)
    with pytest.raises(RoutingError, match="S"):
        build_matrices([src("S", (36.0, -120.0))], [fac("F", (35.0, -120.0))], [], prov)


def test_precomputed_mode_applies_radius():
    prov = DistanceProvider(mode="precomputed", precomputed_sf={("S", "F"): 30.0, ("S", "G"): 70.0})
    sf, _ = build_matrices([src("S", (35, -120))], [fac("F", (35, -120)), fac("G", (35, -120))],
                           [], prov, 50.0)
    assert sf == {("S", "F"): 30.0}


def test_provider_validation():
    with pytest.raises(RoutingError):
        DistanceProvider(circuity_factor=0.9)
    with pytest.raises(RoutingError):
        DistanceProvider(mode="road_graph")
    with pytest.raises(RoutingError):
        DistanceProvider(mode="teleport")
    with pytest.raises(RoutingError):
        build_matrices([], [], [], radius=0)


def test_load_road_graph(tmp_path):
    (tmp_path / "nodes.csv").write_text("id,lat,lon\na,35,-120\nb,35.1,-120\nc,35.2,-120\n")
    (tmp_path / "edges.csv").write_text("from,to,miles,directed\na,b,2.5,0\nb,c,1.5,true\n")
    g = load_road_graph(tmp_path)
    assert shortest_path(g, "a", "c") == 4.0
    assert shortest_path(g, "c", "a") is None
