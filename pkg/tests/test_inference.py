import io
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from giohms._rng import SplitMix64
from giohms.cover import Cover
from giohms.errors import CapacityError, ConfigError, DomainError
from giohms.inference import (EnergyParams, InferenceConfig, MarginalTable, binary_cost,
                              demc_propose, energy, exact_marginals, extract_communities,
                              full_conditional, gibbs_sweep, run_inference, unary_cost)
from giohms.ohms import OHMSNetwork

from conftest import random_ohms

SIGMOID1 = 1.0 / (1.0 + math.exp(-1.0))


def isolated(obs, cands):
    return OHMSNetwork.from_dicts({0: obs}, {0: cands})


def naive_energy(net, h, w):
    total = 0.0
    for v in net.hidden_vertices:
        total += w.w_unary[v] * (1.0 - net.observed(v).get(h[v], 0.0))
    for u in net.hidden_vertices:
        for v in net.hidden_vertices:
            if u < v and (u, v) in w.w_binary and h[u] != h[v]:
                total += w.w_binary[(u, v)]
    return total


def brute_marginals(net, w):
    verts = net.hidden_vertices
    z = 0.0
    acc = {(v, l): 0.0 for v in verts for l in net.candidates(v)}
    for combo in itertools.product(*(net.candidates(v) for v in verts)):
        h = dict(zip(verts, combo))
        p = math.exp(-naive_energy(net, h, w))
        z += p
        for v in verts:
            acc[(v, h[v])] += p
    return {k: x / z for k, x in acc.items()}


# -- costs and energy ------------------------------------------------------------

def test_unary_cost_examples():
    assert unary_cost({1: 1.0}, 1, 3) == 0
    assert unary_cost({1: 1.0}, 2, 3) == 3
    assert unary_cost({1: 0.5, 2: 0.5}, 1, 2) == pytest.approx(1.0)


def test_binary_cost_examples():
    assert binary_cost(1, 1, 5) == 0
    assert binary_cost(1, 2, 5) == 5
    assert binary_cost(1, 2, 0.25) == 0.25


def test_energy_examples():
    net = OHMSNetwork.from_dicts({0: {7: 1.0}, 1: {7: 1.0}, 2: {7: 1.0}},
                                 edges=[(0, 1), (1, 2)])
    w = EnergyParams.constant(net)
    assert energy(net, {0: 7, 1: 7, 2: 7}, w) == 0
    pair = OHMSNetwork.from_dicts({0: {1: 1.0}, 1: {1: 1.0}}, {1: [1, 2]}, [(0, 1)])
    assert energy(pair, {0: 1, 1: 2}, EnergyParams.constant(pair)) == pytest.approx(2.0)


def test_energy_errors():
    net = OHMSNetwork.from_dicts({0: {1: 1.0}, 1: {1: 1.0}}, edges=[(0, 1)])
    w = EnergyParams.constant(net)
    with pytest.raises(DomainError):
        energy(net, {0: 1}, w)
    with pytest.raises(DomainError):
        energy(net, {0: 1, 1: 9}, w)


@pytest.mark.parametrize("seed", range(10))
def test_energy_matches_naive_resummation(seed):
    net = random_ohms(seed, max_vertices=6, labels=4, edge_p=0.5)
    rng = np.random.default_rng(seed)
    w = EnergyParams.from_vector(net, rng.uniform(0.1, 3.0, net.dimension))
    h = {v: int(rng.choice(net.candidates(v))) for v in net.hidden_vertices}
    e = energy(net, h, w)
    assert e == pytest.approx(naive_energy(net, h, w), abs=1e-12)
    assert e >= 0


def test_energy_zero_iff_concordant_and_fully_observed():
    net = OHMSNetwork.from_dicts({0: {1: 1.0}, 1: {1: 0.5, 2: 0.5}}, edges=[(0, 1)])
    w = EnergyParams.constant(net)
    assert energy(net, {0: 1, 1: 1}, w) > 0  # half observed weight still costs


def test_energy_params_validation():
    with pytest.raises(DomainError):
        EnergyParams({0: 0.0}, {})
    net = OHMSNetwork.from_dicts({0: {1: 1.0}, 1: {1: 1.0}}, edges=[(0, 1)])
    vec = np.array([0.5, 2.0, 3.0])
    assert np.array_equal(EnergyParams.from_vector(net, vec).to_vector(net), vec)
    assert EnergyParams.constant(net).dimension == net.dimension == 3


# -- Gibbs -------------------------------------------------------------------------

def test_full_conditional_isolated_examples():
    net = isolated({1: 1.0}, [1, 2])
    fc = full_conditional(net, {0: 1}, EnergyParams.constant(net), 0)
    assert fc[1] == pytest.approx(SIGMOID1, abs=1e-12)
    assert fc[1] == pytest.approx(0.7311, abs=1e-4)
    sym = isolated({1: 0.5, 2: 0.5}, [1, 2])
    fc = full_conditional(sym, {0: 1}, EnergyParams.constant(sym), 0)
    assert fc[1] == pytest.approx(0.5) and fc[2] == pytest.approx(0.5)


@pytest.mark.parametrize("seed", range(8))
def test_full_conditional_sums_to_one(seed):
    net = random_ohms(seed)
    rng = np.random.default_rng(seed)
    w = EnergyParams.from_vector(net, rng.uniform(0.1, 3.0, net.dimension))
    h = {v: int(rng.choice(net.candidates(v))) for v in net.hidden_vertices}
    for v in net.hidden_vertices:
        assert sum(full_conditional(net, h, w, v).values()) == pytest.approx(1.0, abs=1e-9)


def test_single_candidate_never_moves(backend):
    net = OHMSNetwork.from_dicts({0: {3: 1.0}, 1: {4: 1.0}}, edges=[(0, 1)])
    h = {0: 3, 1: 4}
    rng = SplitMix64(1)
    for _ in range(50):
        h = gibbs_sweep(net, h, EnergyParams.constant(net), rng, backend=backend)
        assert h == {0: 3, 1: 4}


def test_gibbs_sweep_keeps_labels_admissible(backend):
    net = random_ohms(3, labels=6)
    h = {v: net.candidates(v)[0] for v in net.hidden_vertices}
    rng = SplitMix64(5)
    for _ in range(30):
        h = gibbs_sweep(net, h, EnergyParams.constant(net), rng, backend=backend)
        assert all(h[v] in net.candidates(v) for v in net.hidden_vertices)


def test_gibbs_sweep_int_seed_is_reproducible(backend):
    net = random_ohms(4)
    h = {v: net.candidates(v)[0] for v in net.hidden_vertices}
    w = EnergyParams.constant(net)
    assert gibbs_sweep(net, h, w, 9, backend) == gibbs_sweep(net, h, w, 9, backend)


def test_grouped_kernel_samples_full_conditional(backend):
    # centre vertex with many background candidates plus observed and neighbor labels;
    # neighbors are clamped so every sweep is a fresh draw for the centre
    cands = list(range(10))
    observed = {0: {2: 0.7, 5: 0.3}, 1: {3: 1.0}, 2: {3: 1.0}, 3: {8: 1.0}}
    net = OHMSNetwork.from_dicts(observed, {0: cands}, [(0, 1), (0, 2), (0, 3)])
    w = EnergyParams.from_vector(net, np.array([1.5, 1, 1, 1, 0.4, 0.9, 0.6]))
    h = {0: 0, 1: 3, 2: 3, 3: 8}
    want = full_conditional(net, h, w, 0)
    rng = SplitMix64(2024)
    draws = 40000
    counts = dict.fromkeys(cands, 0)
    for _ in range(draws):
        counts[gibbs_sweep(net, h, w, rng, backend)[0]] += 1
    for lab in cands:
        p = want[lab]
        sd = math.sqrt(p * (1 - p) / draws)
        assert abs(counts[lab] / draws - p) <= 5 * sd + 1e-9, lab


# -- DEMC --------------------------------------------------------------------------

def _population(vals):
    return [EnergyParams({0: math.exp(a), 1: math.exp(b)}, {}) for a, b in vals]


def test_demc_gamma_zero_returns_current():
    pop = _population([(0.1, 0.2), (0.5, -0.3), (1.0, 0.0), (-0.4, 0.7)])
    cfg = InferenceConfig()
    out = demc_propose(pop, 1, cfg, np.random.default_rng(0), gamma=0.0, jitter=0.0)
    assert out.w_unary == pytest.approx(pop[1].w_unary)


def test_demc_equal_donors_returns_current():
    pop = _population([(0.0, 0.0), (0.3, 0.3), (0.3, 0.3)])
    out = demc_propose(pop, 0, InferenceConfig(), np.random.default_rng(1), jitter=0.0)
    assert out.w_unary == pytest.approx(pop[0].w_unary)


def test_demc_gamma_one_example():
    pop = _population([(0.0, 0.0), (1.0, 1.0), (0.5, 0.5)])
    cfg = InferenceConfig(gamma=1.0, jitter=1e-12)
    for s in range(10):
        out = demc_propose(pop, 0, cfg, np.random.default_rng(s), jitter=0.0)
        logs = sorted(math.log(x) for x in out.w_unary.values())
        # r1 = 1, r2 = 2 gives +0.5; the reverse draw gives -0.5
        assert logs[0] == pytest.approx(logs[1])
        assert abs(logs[0]) == pytest.approx(0.5)


def test_demc_jitter_bounds():
    pop = _population([(0.0, 0.0)] * 4)
    out = demc_propose(pop, 2, InferenceConfig(jitter=0.01), np.random.default_rng(3))
    for x in out.w_unary.values():
        assert abs(math.log(x)) <= 0.01


def test_demc_population_too_small():
    with pytest.raises(DomainError):
        demc_propose(_population([(0, 0), (1, 1)]), 0, InferenceConfig(), np.random.default_rng())


# -- run_inference and exact marginals ------------------------------------------------

def test_config_validation():
    with pytest.raises(ConfigError):
        InferenceConfig(chains=3)
    with pytest.raises(ConfigError):
        InferenceConfig(samples_per_chain=100, burn_in=100)
    with pytest.raises(ConfigError):
        InferenceConfig(thin=0)
    with pytest.raises(ConfigError):
        InferenceConfig(jitter=0.0)
    assert InferenceConfig(chains=8).gamma_for(8) == pytest.approx(2.38 / 4)


def test_single_candidate_marginal_is_one(backend):
    net = isolated({4: 1.0}, [4])
    m = run_inference(net, InferenceConfig(samples_per_chain=200, burn_in=50), backend=backend)
    assert m[(0, 4)] == 1.0


def test_isolated_vertex_converges_to_closed_form(backend):
    net = isolated({1: 1.0}, [1, 2])
    cfg = InferenceConfig(chains=8, samples_per_chain=6000, burn_in=1000, thin=2,
                          sample_weights=False, rng_seed=17)
    m = run_inference(net, cfg, backend=backend)
    assert m.samples == 20000
    assert abs(m[(0, 1)] - SIGMOID1) <= 0.02


def test_exact_marginals_examples():
    net = isolated({1: 1.0}, [1, 2])
    assert exact_marginals(net)[(0, 1)] == pytest.approx(SIGMOID1, abs=1e-12)
    tiny = EnergyParams.from_vector(net, np.array([1e-12]))
    assert exact_marginals(net, tiny)[(0, 1)] == pytest.approx(0.5, abs=1e-9)
    chain = OHMSNetwork.from_dicts({0: {1: 0.5, 2: 0.5}, 1: {1: 0.5, 2: 0.5}}, edges=[(0, 1)])
    m = exact_marginals(chain)
    for v in (0, 1):
        assert m[(v, 1)] == pytest.approx(m[(v, 2)], abs=1e-12)


@pytest.mark.parametrize("seed", range(15))
def test_exact_marginals_match_brute_force(seed):
    net = random_ohms(seed, max_vertices=6)
    rng = np.random.default_rng(seed + 100)
    w = EnergyParams.from_vector(net, rng.uniform(0.2, 2.5, net.dimension))
    m = exact_marginals(net, w)
    for (v, lab), p in brute_marginals(net, w).items():
        assert m[(v, lab)] == pytest.approx(p, abs=1e-12)
    for v in net.hidden_vertices:
        assert sum(m.distribution(v).values()) == pytest.approx(1.0, abs=1e-9)


def test_exact_marginals_chunking_consistent():
    net = random_ohms(21, max_vertices=10)
    assert exact_marginals(net).max_abs_diff(exact_marginals(net, chunk=7)) < 1e-12


def test_exact_marginals_capacity():
    obs = {v: {0: 1.0} for v in range(15)}
    net = OHMSNetwork.from_dicts(obs, {v: [0, 1, 2, 3] for v in range(15)})
    with pytest.raises(CapacityError):
        exact_marginals(net)


@pytest.mark.parametrize("seed", range(4))
def test_exact_marginals_continuous_in_w(seed):
    net = random_ohms(seed + 40, max_vertices=6)
    rng = np.random.default_rng(seed)
    base = rng.uniform(0.3, 2.0, net.dimension)
    m0 = exact_marginals(net, EnergyParams.from_vector(net, base))
    for eps in (1e-2, 1e-3, 1e-4):
        dw = rng.uniform(-eps, eps, net.dimension)
        m1 = exact_marginals(net, EnergyParams.from_vector(net, base + dw))
        assert m0.max_abs_diff(m1) <= 10 * np.max(np.abs(dw))


@pytest.mark.parametrize("seed", range(3))
def test_run_inference_close_to_exact(seed, backend):
    net = random_ohms(seed + 7)
    cfg = InferenceConfig(samples_per_chain=3000, burn_in=500, sample_weights=False, rng_seed=seed)
    m = run_inference(net, cfg, backend=backend)
    assert m.max_abs_diff(exact_marginals(net)) <= 0.05
    for v in net.hidden_vertices:
        assert sum(m.distribution(v).values()) == pytest.approx(1.0, abs=1e-6)


def test_error_shrinks_with_samples():
    net = random_ohms(12)
    exact = exact_marginals(net)
    errs = []
    for samples in (300, 12000):
        cfg = InferenceConfig(samples_per_chain=samples, burn_in=100, sample_weights=False)
        errs.append(run_inference(net, cfg).max_abs_diff(exact))
    assert errs[1] < errs[0]


def test_run_inference_thread_invariant():
    net = random_ohms(5)
    cfg = InferenceConfig(samples_per_chain=400, burn_in=100, rng_seed=3)
    a = run_inference(net, cfg, threads=1)
    b = run_inference(net, cfg, threads=4)
    assert np.array_equal(a.probs, b.probs)


def test_run_inference_deterministic_and_seed_sensitive():
    net = random_ohms(6)
    cfg = InferenceConfig(samples_per_chain=300, burn_in=50, rng_seed=1)
    assert np.array_equal(run_inference(net, cfg).probs, run_inference(net, cfg).probs)
    other = InferenceConfig(samples_per_chain=300, burn_in=50, rng_seed=2)
    assert not np.array_equal(run_inference(net, cfg).probs, run_inference(net, other).probs)


def test_backends_bitwise_equal():
    from giohms import _kernels
    if len(_kernels.available()) < 2:
        pytest.skip("compiled kernels not built")
    net = random_ohms(8)
    cfg = InferenceConfig(samples_per_chain=500, burn_in=100, rng_seed=4)
    a = run_inference(net, cfg, backend="python")
    b = run_inference(net, cfg, backend="cython")
    assert np.array_equal(a.probs, b.probs)


def test_run_inference_empty_network():
    with pytest.raises(DomainError):
        run_inference(OHMSNetwork.from_dicts({}))


# -- marginal table and extraction ----------------------------------------------------

def test_extract_examples():
    m = MarginalTable.from_dict({0: {1: 0.9, 2: 0.1}})
    assert extract_communities(m, 0.8) == Cover({1: [0]})
    m = MarginalTable.from_dict({0: {1: 0.5, 2: 0.5}, 1: {1: 1.0}})
    assert extract_communities(m, 0.8) == Cover({1: [0, 1], 2: [0]})
    m = MarginalTable.from_dict({0: {1: 1 / 3, 2: 1 / 3, 3: 1 / 3}, 1: {1: 1.0}, 2: {2: 1.0}})
    assert extract_communities(m, 1.0) == Cover({1: [0, 1], 2: [0, 2], 3: [0]})


def test_extract_duplicate_member_sets_keep_smaller_label():
    # v sits in both labels with identical membership: one community survives
    m = MarginalTable.from_dict({0: {1: 0.5, 2: 0.5}})
    assert extract_communities(m, 0.8) == Cover({1: [0]})
    assert extract_communities(m, 0.8).ids == (1,)


def test_extract_threshold_validation():
    with pytest.raises(ConfigError):
        extract_communities(MarginalTable.from_dict({0: {1: 1.0}}), 0.0)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(st.floats(0.01, 1.0), min_size=1, max_size=4), min_size=1, max_size=8),
       st.floats(0.05, 1.0))
def test_extract_properties(rows, p):
    table = {}
    for v, row in enumerate(rows):
        z = sum(row)
        table[v] = {lab: x / z for lab, x in enumerate(row)}
    cover = extract_communities(MarginalTable.from_dict(table), p)
    covered = set(cover.vertices())
    for v, dist in table.items():
        # every vertex belongs to the community of its argmax label, unless that
        # community duplicates a smaller label's member set
        assert v in covered
    if p == 1.0 and all(len(set(r)) == len(r) for r in rows):
        seen = set()
        for c in cover:
            assert not (seen & set(c))
            seen |= set(c)


def test_marginal_csv():
    m = MarginalTable.from_dict({2: {5: 0.25, 7: 0.75, 9: 0.0}, 1: {3: 1.0}})
    buf = io.StringIO()
    m.write_csv(buf)
    assert buf.getvalue() == ("vertex,label,probability\n1,3,1.000000\n"
                              "2,5,0.250000\n2,7,0.750000\n")


@pytest.mark.parametrize("seed", range(10))
def test_init_starts_at_observation(seed):
    from giohms.inference import _compiled, _init_positions

    net = random_ohms(seed + 300, labels=4, max_candidates=4)
    comp = _compiled(net)
    observers = {}
    for i in range(comp.n):
        for lab in net.obs_lab[net.obs_ptr[i]:net.obs_ptr[i + 1]].tolist():
            observers[lab] = observers.get(lab, 0) + 1
    pos = _init_positions(comp, 3)
    assert (pos == pos[0]).all()
    for i in range(comp.n):
        o0, o1 = net.obs_ptr[i], net.obs_ptr[i + 1]
        obs = dict(zip(net.obs_lab[o0:o1].tolist(), net.obs_wt[o0:o1].tolist()))
        want = min(obs, key=lambda l: (-obs[l], -observers[l], l))
        assert comp.cand_lab[comp.cand_ptr[i] + pos[0, i]] == want
