"""Bayesian MRF inference on an observed-hidden network.

The energy of an assignment ``h`` under weights ``w`` is

    sum_v  w_v * (1 - observed_v(h_v))  +  sum_(u,v)  w_uv * [h_u != h_v]

Hidden labels are resampled by single-site Gibbs sweeps; the weight vector
is sampled by differential-evolution MCMC in log space, with a half-normal
prior on every weight.  Marginals are label frequencies pooled over chains.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence, TextIO

import numpy as np

from . import _kernels
from ._rng import SplitMix64, derive_seed
from .cover import Cover
from .errors import CapacityError, ConfigError, DomainError
from .ohms import OHMSNetwork

log = logging.getLogger(__name__)

Assignment = dict

EXACT_LIMIT = 10**7


@dataclass
class EnergyParams:
    """Positive weights: one per hidden vertex, one per edge ``(u, v)`` with ``u < v``."""

    w_unary: dict = field(default_factory=dict)
    w_binary: dict = field(default_factory=dict)

    def __post_init__(self):
        for w in list(self.w_unary.values()) + list(self.w_binary.values()):
            if not w > 0:
                raise DomainError("energy weights must be positive")

    @classmethod
    def constant(cls, net: OHMSNetwork, value: float = 1.0) -> EnergyParams:
        return cls.from_vector(net, np.full(net.dimension, float(value)))

    @classmethod
    def from_vector(cls, net: OHMSNetwork, vec) -> EnergyParams:
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (net.dimension,):
            raise DomainError(f"weight vector must have length {net.dimension}")
        n = net.num_hidden
        return cls(dict(zip(net.hidden_vertices, vec[:n].tolist())),
                   dict(zip(net.edges(), vec[n:].tolist())))

    def to_vector(self, net: OHMSNetwork) -> np.ndarray:
        try:
            unary = [self.w_unary[v] for v in net.hidden_vertices]
            binary = [self.w_binary[e] for e in net.edges()]
        except KeyError as exc:
            raise DomainError(f"no weight for {exc.args[0]}") from None
        return np.asarray(unary + binary, dtype=np.float64)

    @property
    def dimension(self) -> int:
        return len(self.w_unary) + len(self.w_binary)


@dataclass(frozen=True)
class InferenceConfig:
    chains: int = 8
    samples_per_chain: int = 5000
    burn_in: int = 1000
    thin: int = 2
    gamma: float | None = None  # None: 2.38 / sqrt(2 d)
    jitter: float = 1e-4
    w_prior_scale: float = 1.0
    rng_seed: int = 0
    sample_weights: bool = True
    init_spread: float = 0.0  # sd of the initial log-weight scatter across chains

    def __post_init__(self):
        if self.chains < 4:
            raise ConfigError("chains must be >= 4")
        if self.samples_per_chain < 1:
            raise ConfigError("samples_per_chain must be positive")
        if not 0 <= self.burn_in < self.samples_per_chain:
            raise ConfigError("burn_in must satisfy 0 <= burn_in < samples_per_chain")
        if self.thin < 1:
            raise ConfigError("thin must be positive")
        if self.gamma is not None and not self.gamma > 0:
            raise ConfigError("gamma must be positive")
        if not self.jitter > 0:
            raise ConfigError("jitter must be positive")
        if not self.w_prior_scale > 0:
            raise ConfigError("w_prior_scale must be positive")
        if self.init_spread < 0:
            raise ConfigError("init_spread must be non-negative")

    @property
    def retained_per_chain(self) -> int:
        return len(range(self.burn_in, self.samples_per_chain, self.thin))

    def gamma_for(self, d: int) -> float:
        return self.gamma if self.gamma is not None else 2.38 / math.sqrt(2 * max(d, 1))


# -- energy ----------------------------------------------------------------

def unary_cost(observed: Mapping[int, float], label: int, w: float) -> float:
    return w * (1.0 - observed.get(label, 0.0))


def binary_cost(li: int, lj: int, w: float) -> float:
    return 0.0 if li == lj else w


def energy(net: OHMSNetwork, h: Mapping[int, int], w: EnergyParams) -> float:
    total = 0.0
    for v in net.hidden_vertices:
        if v not in h:
            raise DomainError(f"hidden vertex {v} is unassigned")
        if h[v] not in net.candidates(v):
            raise DomainError(f"label {h[v]} is not a candidate of {v}")
        total += unary_cost(net.observed(v), h[v], w.w_unary[v])
    for u, v in net.edges():
        total += binary_cost(h[u], h[v], w.w_binary[(u, v)])
    return total


def full_conditional(net: OHMSNetwork, h: Mapping[int, int], w: EnergyParams, v: int) -> dict:
    """``P(h_v = l | rest)`` for every candidate ``l`` of ``v``."""
    obs = net.observed(v)
    nbr_terms = [(h[u], w.w_binary[(min(u, v), max(u, v))]) for u in net.neighbors(v)]
    energies = {}
    for lab in net.candidates(v):
        e = unary_cost(obs, lab, w.w_unary[v])
        for hu, wuv in nbr_terms:
            e += binary_cost(lab, hu, wuv)
        energies[lab] = e
    e_min = min(energies.values())
    weights = {lab: math.exp(e_min - e) for lab, e in energies.items()}
    z = sum(weights.values())
    return {lab: q / z for lab, q in weights.items()}


# -- compiled form -----------------------------------------------------------

class _Compiled:
    """Kernel-ready arrays derived from an OHMSNetwork (neighbor CSR with edge ids,
    observed labels as candidate positions)."""

    def __init__(self, net: OHMSNetwork):
        n, m = net.num_hidden, net.num_edges
        self.n, self.m = n, m
        rows = np.concatenate([net.edge_src, net.edge_dst])
        cols = np.concatenate([net.edge_dst, net.edge_src])
        eid = np.concatenate([np.arange(m), np.arange(m)]).astype(np.int64)
        order = np.lexsort((cols, rows))
        self.nbr_idx = np.ascontiguousarray(cols[order], dtype=np.int64)
        self.nbr_edge = np.ascontiguousarray(eid[order])
        self.nbr_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n), out=self.nbr_ptr[1:])
        self.cand_ptr = np.ascontiguousarray(net.cand_ptr)
        self.cand_lab = np.ascontiguousarray(net.cand_lab)
        self.obs_ptr = np.ascontiguousarray(net.obs_ptr)
        self.obs_wt = np.ascontiguousarray(net.obs_wt)
        obs_pos = np.empty(net.obs_lab.size, dtype=np.int64)
        for i in range(n):
            c0, c1 = self.cand_ptr[i], self.cand_ptr[i + 1]
            o0, o1 = self.obs_ptr[i], self.obs_ptr[i + 1]
            obs_pos[o0:o1] = np.searchsorted(self.cand_lab[c0:c1], net.obs_lab[o0:o1])
        self.obs_pos = obs_pos
        self.cand_obs = np.zeros(self.cand_lab.size)
        owner = np.repeat(np.arange(n), np.diff(self.obs_ptr))
        self.cand_obs[self.cand_ptr[owner] + obs_pos] = self.obs_wt
        self.edge_src = net.edge_src
        self.edge_dst = net.edge_dst
        self.ncand = np.diff(self.cand_ptr)
        self.base = self.cand_ptr[:-1]

    def kernel(self, backend=None):
        kern = _kernels.get(backend)
        return kern.GibbsKernel(self.nbr_ptr, self.nbr_idx, self.nbr_edge, self.cand_ptr,
                                self.cand_lab, self.obs_ptr, self.obs_pos, self.obs_wt)

    def positions(self, net: OHMSNetwork, h: Mapping[int, int]) -> np.ndarray:
        pos = np.empty(self.n, dtype=np.int32)
        for i, v in enumerate(net.hidden_vertices):
            if v not in h:
                raise DomainError(f"hidden vertex {v} is unassigned")
            c0, c1 = self.cand_ptr[i], self.cand_ptr[i + 1]
            k = int(np.searchsorted(self.cand_lab[c0:c1], h[v]))
            if k >= c1 - c0 or self.cand_lab[c0 + k] != h[v]:
                raise DomainError(f"label {h[v]} is not a candidate of {v}")
            pos[i] = k
        return pos

    def labels(self, pos: np.ndarray) -> np.ndarray:
        return self.cand_lab[self.base + pos]

    def costs(self, pos: np.ndarray) -> np.ndarray:
        """Per-weight cost terms; energy is ``costs(pos) @ w``."""
        lab = self.labels(pos)
        unary = 1.0 - self.cand_obs[self.base + pos]
        binary = (lab[self.edge_src] != lab[self.edge_dst]).astype(np.float64)
        return np.concatenate([unary, binary])


def _compiled(net: OHMSNetwork) -> _Compiled:
    comp = getattr(net, "_compiled_cache", None)
    if comp is None:
        comp = _Compiled(net)
        net._compiled_cache = comp
    return comp


def gibbs_sweep(net: OHMSNetwork, h: Mapping[int, int], w: EnergyParams, rng,
                backend=None) -> Assignment:
    """One Gibbs sweep over the hidden vertices in id order.

    Each vertex is redrawn from its full conditional (see
    :func:`full_conditional`); vertices with a single candidate stay put.
    ``rng`` is a :class:`giohms._rng.SplitMix64` (advanced in place) or an
    integer seed.
    """
    comp = _compiled(net)
    if not isinstance(rng, SplitMix64):
        rng = SplitMix64(int(rng))
    pos = comp.positions(net, h)
    vec = w.to_vector(net)
    state = np.array([rng.state], dtype=np.uint64)
    comp.kernel(backend).sweep(vec[:comp.n].copy(), vec[comp.n:].copy(), pos, state)
    rng.state = int(state[0])
    return dict(zip(net.hidden_vertices, comp.labels(pos).tolist()))


# -- weight sampling -----------------------------------------------------------

def _demc_proposal(logw: np.ndarray, c: int, pool: Sequence[int], gamma: float, jitter: float,
                   rng: np.random.Generator) -> np.ndarray:
    choices = [k for k in pool if k != c]
    if len(choices) < 2:
        raise DomainError("differential evolution needs two other population members")
    r1, r2 = rng.choice(choices, size=2, replace=False)
    noise = rng.uniform(-jitter, jitter, size=logw.shape[1]) if jitter > 0 else 0.0
    return logw[c] + gamma * (logw[r1] - logw[r2]) + noise


def demc_propose(population: Sequence[EnergyParams], chain_index: int, cfg: InferenceConfig,
                 rng: np.random.Generator, net: OHMSNetwork | None = None,
                 gamma: float | None = None, jitter: float | None = None) -> EnergyParams:
    """Differential-evolution proposal in log-weight space.

    ``log w' = log w_c + gamma * (log w_r1 - log w_r2) + e`` with ``r1 != r2``
    drawn uniformly from the other members and ``e`` uniform in
    ``[-jitter, jitter]`` per coordinate.  ``gamma``/``jitter`` default to the
    config values.
    """
    if len(population) < 3:
        raise DomainError("population must have at least 3 members")
    if net is not None:
        vecs = np.stack([p.to_vector(net) for p in population])
    else:
        keys_u = sorted(population[0].w_unary)
        keys_b = sorted(population[0].w_binary)
        vecs = np.asarray([[p.w_unary[k] for k in keys_u] + [p.w_binary[k] for k in keys_b]
                           for p in population], dtype=np.float64)
    g = cfg.gamma_for(vecs.shape[1]) if gamma is None else gamma
    j = cfg.jitter if jitter is None else jitter
    prop = np.exp(_demc_proposal(np.log(vecs), chain_index, range(len(population)), g, j, rng))
    if net is not None:
        return EnergyParams.from_vector(net, prop)
    nu = len(keys_u)
    return EnergyParams(dict(zip(keys_u, prop[:nu].tolist())),
                        dict(zip(keys_b, prop[nu:].tolist())))


def _log_target(u: np.ndarray, costs: np.ndarray, scale: float) -> float:
    # half-normal prior on w = exp(u), plus the log-Jacobian sum(u)
    w = np.exp(u)
    return float(np.sum(u - 0.5 * (w / scale) ** 2) - costs @ w)


# -- marginals -----------------------------------------------------------------

class MarginalTable:
    """Per-vertex label probabilities over each vertex's candidate set."""

    def __init__(self, hidden, cand_ptr, cand_lab, probs, samples: int = 0):
        self.hidden = np.asarray(hidden, dtype=np.int64)
        self.cand_ptr = np.asarray(cand_ptr, dtype=np.int64)
        self.cand_lab = np.asarray(cand_lab, dtype=np.int64)
        self.probs = np.asarray(probs, dtype=np.float64)
        self.samples = samples
        self._index = {v: i for i, v in enumerate(self.hidden.tolist())}

    @classmethod
    def from_dict(cls, table: Mapping[int, Mapping[int, float]]) -> MarginalTable:
        hidden = sorted(table)
        ptr, labs, probs = [0], [], []
        for v in hidden:
            for lab in sorted(table[v]):
                labs.append(lab)
                probs.append(float(table[v][lab]))
            ptr.append(len(labs))
        return cls(hidden, ptr, labs, probs)

    @property
    def vertices(self) -> tuple[int, ...]:
        return tuple(self.hidden.tolist())

    def distribution(self, v: int) -> dict[int, float]:
        i = self._index[v]
        a, b = self.cand_ptr[i], self.cand_ptr[i + 1]
        return dict(zip(self.cand_lab[a:b].tolist(), self.probs[a:b].tolist()))

    def __getitem__(self, key) -> float:
        v, lab = key
        return self.distribution(v).get(lab, 0.0)

    def to_dict(self) -> dict[int, dict[int, float]]:
        return {v: self.distribution(v) for v in self.vertices}

    def max_abs_diff(self, other: MarginalTable) -> float:
        if not (np.array_equal(self.hidden, other.hidden)
                and np.array_equal(self.cand_lab, other.cand_lab)):
            raise DomainError("marginal tables have different supports")
        return float(np.max(np.abs(self.probs - other.probs), initial=0.0))

    def write_csv(self, stream: TextIO) -> None:
        """``vertex,label,probability`` rows sorted by (vertex, label); zero rows omitted."""
        stream.write("vertex,label,probability\n")
        owner = np.repeat(self.hidden, np.diff(self.cand_ptr))
        for v, lab, p in zip(owner.tolist(), self.cand_lab.tolist(), self.probs.tolist()):
            if p > 0:
                stream.write(f"{v},{lab},{p:.6f}\n")

    def __repr__(self):
        return f"MarginalTable(vertices={self.hidden.size}, samples={self.samples})"


def _init_positions(comp: _Compiled, chains: int, kernel=None, wu=None, wb=None,
                    max_icm: int = 100) -> np.ndarray:
    """Per-chain starting labels at a local minimum of the energy.

    Each hidden label starts at its observation: the observed label of largest
    weight, ties going to the label observed by more vertices (the larger
    community), then to the smaller label.  Iterated conditional modes
    (``kernel.icm_sweep`` under the chain's weights ``wu[c]``, ``wb[c]``) then
    descends to a nearby local minimum.

    Starting from random draws of the observed distributions leaves chains in
    a fragmented state that Gibbs sweeps do not escape when vertices observe
    many small communities.  Starting from a neighborhood-majority guess lets
    ICM collapse dense graphs into a single label.
    """
    n = comp.n
    owner = np.repeat(np.arange(n), np.diff(comp.obs_ptr))
    obs_lab = comp.cand_lab[comp.cand_ptr[owner] + comp.obs_pos]
    _, col, size = np.unique(obs_lab, return_inverse=True, return_counts=True)
    order = np.lexsort((obs_lab, -size[col], -comp.obs_wt, owner))
    first = order[comp.obs_ptr[:-1]]  # best entry of each vertex's block
    out = np.empty((chains, n), dtype=np.int32)
    out[:] = comp.obs_pos[first]
    if kernel is not None:
        for c in range(chains):
            for _ in range(max_icm):
                if kernel.icm_sweep(wu[c], wb[c], out[c]) == 0:
                    break
    return out


def run_inference(net: OHMSNetwork, cfg: InferenceConfig = InferenceConfig(),
                  weights: EnergyParams | None = None, threads: int = 1,
                  backend=None) -> MarginalTable:
    """Sample hidden labels and weights; return pooled label frequencies.

    Each iteration performs one Gibbs sweep per chain, then (if
    ``cfg.sample_weights``) one DEMC Metropolis step per chain on the
    log-weights.  Chains are updated in two halves, each half proposing from
    differences within the other half.  The target density over weights is
    the half-normal prior times ``exp(-energy)`` of the chain's current
    labels.  With ``sample_weights=False`` the weights stay at ``weights``
    (default: all ones).

    The result depends only on ``net``, ``cfg`` and ``weights``; ``threads``
    only controls how chains' sweeps are scheduled.
    """
    if net.num_hidden == 0:
        raise DomainError("cannot run inference on an empty network")
    comp = _compiled(net)
    kernel = comp.kernel(backend)
    n, d, C = comp.n, net.dimension, cfg.chains
    rng = np.random.default_rng(derive_seed(cfg.rng_seed, 0xD3))

    base = np.log(weights.to_vector(net)) if weights is not None else np.zeros(d)
    logw = np.tile(base, (C, 1))
    if cfg.sample_weights and cfg.init_spread > 0:
        logw += cfg.init_spread * rng.standard_normal((C, d))
    w = np.exp(logw)
    wu = [np.ascontiguousarray(w[c, :n]) for c in range(C)]
    wb = [np.ascontiguousarray(w[c, n:]) for c in range(C)]

    pos = _init_positions(comp, C, kernel, wu, wb)
    states = [np.array([derive_seed(cfg.rng_seed, 0x61, c)], dtype=np.uint64) for c in range(C)]
    counts = np.zeros(comp.cand_lab.size, dtype=np.int64)
    gamma = cfg.gamma_for(d)
    halves = (list(range(C // 2)), list(range(C // 2, C)))
    accepted = proposed = 0
    retained = 0

    def sweep(c):
        kernel.sweep(wu[c], wb[c], pos[c], states[c])

    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for it in range(cfg.samples_per_chain):
            if pool is not None:
                list(pool.map(sweep, range(C)))
            else:
                for c in range(C):
                    sweep(c)
            if cfg.sample_weights:
                for half, other in (halves, halves[::-1]):
                    for c in half:
                        costs = comp.costs(pos[c])
                        prop = _demc_proposal(logw, c, other, gamma, cfg.jitter, rng)
                        delta = (_log_target(prop, costs, cfg.w_prior_scale)
                                 - _log_target(logw[c], costs, cfg.w_prior_scale))
                        proposed += 1
                        if math.log(rng.random()) < delta:
                            accepted += 1
                            logw[c] = prop
                            w[c] = np.exp(prop)
                            wu[c][:] = w[c, :n]
                            wb[c][:] = w[c, n:]
            if it >= cfg.burn_in and (it - cfg.burn_in) % cfg.thin == 0:
                for c in range(C):
                    counts[comp.base + pos[c]] += 1
                retained += C
    finally:
        if pool is not None:
            pool.shutdown()
    if proposed:
        log.debug("DEMC acceptance %.3f over %d proposals, final log-weight spread %.3f",
                  accepted / proposed, proposed, float(np.mean(np.std(logw, axis=0))))
    return MarginalTable(net.hidden, comp.cand_ptr, comp.cand_lab, counts / retained, retained)


def exact_marginals(net: OHMSNetwork, w: EnergyParams | None = None,
                    chunk: int = 1 << 18) -> MarginalTable:
    """Exact Boltzmann marginals by enumerating every candidate assignment.

    Raises
    ------
    CapacityError
        If the product of candidate-set sizes exceeds ``10**7``.
    """
    size = net.state_space_size()
    if size > EXACT_LIMIT:
        raise CapacityError(f"state space of {size} assignments exceeds {EXACT_LIMIT}")
    vec = w.to_vector(net) if w is not None else np.ones(net.dimension)
    n = net.num_hidden
    ncand = np.diff(net.cand_ptr)
    # per-vertex unary cost table over candidate slots
    unary_tab = []
    for i in range(n):
        cands = net.cand_lab[net.cand_ptr[i]:net.cand_ptr[i + 1]]
        obs = dict(zip(net.obs_lab[net.obs_ptr[i]:net.obs_ptr[i + 1]].tolist(),
                       net.obs_wt[net.obs_ptr[i]:net.obs_ptr[i + 1]].tolist()))
        unary_tab.append(np.array([vec[i] * (1.0 - obs.get(c, 0.0)) for c in cands.tolist()]))
    radix = np.ones(n, dtype=np.int64)
    for i in range(n - 2, -1, -1):
        radix[i] = radix[i + 1] * ncand[i + 1]

    energies = []
    for start in range(0, size, chunk):
        states = np.arange(start, min(size, start + chunk), dtype=np.int64)
        digits = (states[:, None] // radix[None, :]) % ncand[None, :]
        e = np.zeros(states.size)
        labs = np.empty_like(digits)
        for i in range(n):
            e += unary_tab[i][digits[:, i]]
            labs[:, i] = net.cand_lab[net.cand_ptr[i] + digits[:, i]]
        for k in range(net.num_edges):
            a, b = net.edge_src[k], net.edge_dst[k]
            e += vec[n + k] * (labs[:, a] != labs[:, b])
        energies.append(e)
    e = np.concatenate(energies)
    weight = np.exp(e.min() - e)
    weight /= weight.sum()
    probs = np.zeros(net.cand_lab.size)
    for start in range(0, size, chunk):
        states = np.arange(start, min(size, start + chunk), dtype=np.int64)
        digits = (states[:, None] // radix[None, :]) % ncand[None, :]
        wchunk = weight[start:start + states.size]
        for i in range(n):
            probs[net.cand_ptr[i]:net.cand_ptr[i + 1]] += np.bincount(
                digits[:, i], weights=wchunk, minlength=ncand[i])
    return MarginalTable(net.hidden, net.cand_ptr, net.cand_lab, probs, samples=0)


def extract_communities(m: MarginalTable, p: float = 0.8) -> Cover:
    """Vertex ``v`` joins community ``l`` iff ``m(v, l) >= p * max_l' m(v, l')``.

    Communities are keyed by label; a label whose member set repeats that of
    a smaller label is dropped.
    """
    if not 0.0 < p <= 1.0:
        raise ConfigError("p must lie in (0, 1]")
    groups: dict[int, list[int]] = {}
    owner = np.repeat(np.arange(m.hidden.size), np.diff(m.cand_ptr))
    top = np.zeros(m.hidden.size)
    np.maximum.at(top, owner, m.probs)
    keep = (m.probs >= p * top[owner]) & (m.probs > 0)
    for i, lab in zip(owner[keep].tolist(), m.cand_lab[keep].tolist()):
        groups.setdefault(lab, []).append(int(m.hidden[i]))
    out, seen = {}, set()
    for lab in sorted(groups):
        key = tuple(sorted(groups[lab]))
        if key not in seen:
            seen.add(key)
            out[lab] = key
    return Cover(out)
