import io
from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from giohms.cover import Cover
from giohms.errors import ConfigError, DomainError
from giohms.graph import Graph
from giohms.merge import merge_all
from giohms.ohms import OHMSNetwork, build_ohms, label_universe, write_ohms
from giohms.seeding import seed_all

from conftest import random_graph


def within_hops(g, v, r):
    seen = {v: 0}
    q = deque([v])
    while q:
        u = q.popleft()
        if seen[u] == r:
            continue
        for x in g.neighbors(u):
            if x not in seen:
                seen[x] = seen[u] + 1
                q.append(x)
    return set(seen)


def brute_candidates(g, com, v, r):
    ball = within_hops(g, v, r)
    return {cid for cid, members in com.items() if ball & set(members)}


def toy_network():
    # seven-vertex social network, vertices A..G as 0..6
    edges = [(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (3, 5), (4, 5), (5, 6), (3, 6), (4, 6)]
    return Graph.from_edges(edges)


def test_toy_network_every_vertex_gets_hidden_and_observed():
    g = toy_network()
    com = merge_all(seed_all(g))
    net = build_ohms(g, com)
    assert net.hidden_vertices == g.vertices
    for v in g.vertices:
        assert sum(net.observed(v).values()) == pytest.approx(1.0, abs=1e-9)
    assert net.uncovered.size == 0


def test_single_and_double_membership():
    g = Graph.from_edges([(0, 1), (1, 2), (2, 3)])
    com = Cover({0: [0, 1, 2], 1: [2, 3]})
    net = build_ohms(g, com, hop_radius=1)
    assert net.observed(0) == {0: 1.0}
    assert net.observed(2) == {0: 0.5, 1: 0.5}
    assert net.candidates(0) == (0,)       # label 1 is two hops away
    assert net.candidates(1) == (0, 1)
    assert build_ohms(g, com, hop_radius=2).candidates(0) == (0, 1)


def test_uncovered_vertices_are_excluded():
    g = Graph.from_edges([(0, 1), (1, 2), (2, 3)], vertices=[9])
    net = build_ohms(g, Cover([[0, 1]]))
    assert net.hidden_vertices == (0, 1)
    assert net.uncovered.tolist() == [2, 3, 9]
    assert net.edges() == [(0, 1)]


def test_errors():
    g = Graph.from_edges([(0, 1)])
    with pytest.raises(DomainError):
        build_ohms(g, Cover([[0, 5]]))
    with pytest.raises(ConfigError):
        build_ohms(g, Cover([[0, 1]]), hop_radius=0)
    net = build_ohms(g, Cover([[0, 1]]))
    with pytest.raises(DomainError):
        net.observed(7)


def test_label_universe_examples():
    g = Graph.from_edges([(0, 1), (2, 3), (4, 5)])
    assert label_universe(build_ohms(g, Cover([[0, 1]]))) == (0,)
    three = build_ohms(g, Cover([[0, 1], [2, 3], [4, 5]]))
    assert len(label_universe(three)) == 3
    assert all(len(three.candidates(v)) == 1 for v in g.vertices)


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("radius", [1, 2, 3])
def test_random_instances_against_bfs(seed, radius):
    g = random_graph(40, 0.08, seed)
    com = merge_all(seed_all(g))
    net = build_ohms(g, com, radius)
    assert set(net.hidden_vertices) == set(com.vertices())
    gedges = set(g.edges())
    assert set(net.edges()) <= gedges
    union = set()
    for v in net.hidden_vertices:
        cands = set(net.candidates(v))
        assert cands == brute_candidates(g, com, v, radius)
        obs = net.observed(v)
        assert set(obs) <= cands
        assert set(obs) == {cid for cid, m in com.items() if v in m}
        assert sum(obs.values()) == pytest.approx(1.0, abs=1e-9)
        union |= cands
    assert label_universe(net) == tuple(sorted(union))
    assert net.dimension == net.num_hidden + net.num_edges


def test_deterministic():
    g = random_graph(60, 0.06, 3)
    com = merge_all(seed_all(g))
    a, b = build_ohms(g, com), build_ohms(g, com)
    for name in ("hidden", "edge_src", "edge_dst", "obs_lab", "obs_wt", "cand_ptr", "cand_lab"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_from_dicts_validation():
    net = OHMSNetwork.from_dicts({1: {5: 1.0}, 2: {5: 0.5, 6: 0.5}}, {1: [5, 6]}, [(1, 2)])
    assert net.candidates(1) == (5, 6)
    assert net.candidates(2) == (5, 6)
    assert net.neighbors(1) == (2,)
    assert net.state_space_size() == 4
    with pytest.raises(DomainError):
        OHMSNetwork.from_dicts({1: {5: 0.7}})
    with pytest.raises(DomainError):
        OHMSNetwork.from_dicts({1: {5: 1.0}}, edges=[(1, 3)])


def test_write_ohms():
    net = OHMSNetwork.from_dicts({1: {5: 1.0}, 2: {5: 0.5, 6: 0.5}}, {1: [5, 6]}, [(1, 2)])
    buf = io.StringIO()
    write_ohms(net, buf)
    assert buf.getvalue() == "1 | 5:1 | 5 6\n2 | 5:0.5,6:0.5 | 5 6\n"


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 14), st.integers(0, 14)), min_size=1, max_size=40),
       st.integers(1, 3))
def test_observed_subset_of_candidates(edges, radius):
    g = Graph.from_edges(edges)
    net = build_ohms(g, merge_all(seed_all(g)), radius)
    for v in net.hidden_vertices:
        assert set(net.observed(v)) <= set(net.candidates(v))
