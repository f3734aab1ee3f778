import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from giohms.cover import Cover
from giohms.errors import ConfigError
from giohms.synth import PlantedConfig, _intra_mask, planted_for_size, planted_overlap


def test_two_disjoint_cliques():
    g, truth = planted_overlap(PlantedConfig(2, 20, 0, 1.0, 0.0))
    assert g.num_vertices == 40
    assert g.num_edges == 2 * 190
    assert truth == Cover([range(20), range(20, 40)])


def test_two_cliques_sharing_a_vertex():
    g, truth = planted_overlap(PlantedConfig(2, 10, 1, 1.0, 0.0))
    assert g.num_vertices == 19
    assert g.num_edges == 2 * 45
    assert truth == Cover([range(10), range(9, 19)])
    assert g.degree(9) == 18


def test_intra_edge_count_within_three_sigma():
    cfg = PlantedConfig(3, 30, 3, 0.9, 0.01, rng_seed=7)
    g, truth = planted_overlap(cfg)
    mean, sd = 0.9 * 435, math.sqrt(435 * 0.9 * 0.1)
    assert mean == pytest.approx(391.5)
    for block in truth:
        members = set(block)
        inside = sum(1 for u, v in g.edges() if u in members and v in members)
        assert abs(inside - mean) <= 3 * sd


def test_inter_edges_only_between_blocks():
    cfg = PlantedConfig(4, 15, 2, 0.0, 0.0)
    g, _ = planted_overlap(cfg)
    assert g.num_edges == 0
    cfg = PlantedConfig(4, 15, 2, 0.3, 0.3, rng_seed=1)
    g, truth = planted_overlap(cfg)
    blocks = [set(b) for b in truth]
    n = cfg.num_vertices
    inter_pairs = sum(1 for u, v in itertools.combinations(range(n), 2)
                      if not any(u in b and v in b for b in blocks))
    inter = sum(1 for u, v in g.edges() if not any(u in b and v in b for b in blocks))
    sd = math.sqrt(inter_pairs * 0.3 * 0.7)
    assert abs(inter - 0.3 * inter_pairs) <= 4 * sd


def test_intra_mask_matches_blocks():
    cfg = PlantedConfig(5, 7, 3, 0.5, 0.1)
    blocks = [set(b) for b in cfg.blocks()]
    n = cfg.num_vertices
    i, j = np.triu_indices(n, k=1)
    want = np.array([any(a in b and c in b for b in blocks) for a, c in zip(i, j)])
    assert np.array_equal(_intra_mask(cfg, i, j), want)


def test_deterministic_and_seeded():
    cfg = PlantedConfig(3, 12, 2, 0.5, 0.05, rng_seed=3)
    assert planted_overlap(cfg) == planted_overlap(cfg)
    other = PlantedConfig(3, 12, 2, 0.5, 0.05, rng_seed=4)
    assert planted_overlap(cfg)[0] != planted_overlap(other)[0]


@pytest.mark.parametrize("kwargs", [
    dict(num_communities=0), dict(community_size=1), dict(overlap_vertices=20),
    dict(p_in=1.5), dict(p_in=0.1, p_out=0.2), dict(overlap_vertices=-1),
])
def test_config_errors(kwargs):
    with pytest.raises(ConfigError):
        PlantedConfig(**kwargs)


def test_planted_for_size():
    cfg = planted_for_size(10_000, 100, 0, 27.8, 0.0005, rng_seed=1)
    assert cfg.num_vertices == 10_000
    expected_degree = cfg.p_in * 99 + cfg.p_out * (cfg.num_vertices - 100)
    assert expected_degree == pytest.approx(27.8)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(2, 12), st.data())
def test_graph_and_truth_invariants(k, size, data):
    overlap = data.draw(st.integers(0, size - 1))
    p_in = data.draw(st.floats(0.0, 1.0))
    p_out = data.draw(st.floats(0.0, p_in))
    cfg = PlantedConfig(k, size, overlap, p_in, p_out, data.draw(st.integers(0, 2**32)))
    g, truth = planted_overlap(cfg)
    assert g.vertices == tuple(range(cfg.num_vertices))
    assert set(truth.vertices()) == set(g.vertices)
    assert len(truth) == k
    for u, v in g.edges():
        assert u < v
