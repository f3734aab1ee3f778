"""Local seed discovery: label propagation on every ego-minus-ego network."""

from __future__ import annotations

from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._rng import MASK64, derive_seed
from .cover import Cover
from .errors import ConfigError
from .graph import Graph, ego_minus_ego


@dataclass(frozen=True)
class SeedConfig:
    max_iterations: int = 100
    rng_seed: int = 0

    def __post_init__(self):
        if int(self.max_iterations) < 1:
            raise ConfigError("max_iterations must be >= 1")


def label_propagation(g: Graph, cfg: SeedConfig = SeedConfig(), backend=None) -> dict[int, int]:
    """Asynchronous plurality label propagation.

    Every vertex starts with its own id as label.  Each sweep visits the
    vertices in a freshly shuffled order (derived from ``cfg.rng_seed`` and
    the sweep number) and sets each vertex to the most frequent label among
    its neighbors, smallest label on ties.  Stops after a sweep with no
    change or after ``cfg.max_iterations`` sweeps.

    Returns
    -------
    dict
        vertex id -> label, where a label is the id of the vertex it came from.
    """
    kern = _kernels.get(backend)
    labels = np.empty(g.num_vertices, dtype=np.int64)
    if g.num_vertices:
        kern.lp_csr(g.indptr, g.indices, int(cfg.max_iterations), cfg.rng_seed & MASK64, labels)
    return dict(zip(g.vertices, g.ids[labels].tolist()))


def _group(members: Sequence[int], labels: Sequence[int]) -> list[list[int]]:
    groups: dict[int, list[int]] = {}
    for v, lab in zip(members, labels):
        groups.setdefault(lab, []).append(v)
    return sorted(groups.values())


def local_seed(g: Graph, v: int, cfg: SeedConfig = SeedConfig(), backend=None) -> Cover:
    """Local communities of ``v``: propagate labels on its ego-minus-ego
    network, group by final label, then add ``v`` back to every group."""
    eme = ego_minus_ego(g, v)
    if eme.num_vertices == 0:
        return Cover([(v,)])
    sub = SeedConfig(cfg.max_iterations, derive_seed(cfg.rng_seed, v))
    labels = label_propagation(eme, sub, backend=backend)
    return Cover([c + [v] for c in _group(eme.vertices, [labels[u] for u in eme.vertices])])


class SeedTable(Sequence):
    """Array-backed result of :func:`seed_all`.

    Behaves as a sequence of ``(vertex, Cover)`` pairs sorted by vertex id.
    Communities are materialized on access; ``comm[indptr[i] + k]`` is the
    local community index of the k-th neighbor of the i-th vertex.
    """

    def __init__(self, g: Graph, comm: np.ndarray):
        self.graph = g
        self.comm = comm

    def __len__(self) -> int:
        return self.graph.num_vertices

    def communities(self, i: int) -> list[tuple[int, ...]]:
        """Local communities of the i-th vertex (ego included), smallest member first."""
        g = self.graph
        v = int(g.ids[i])
        a, b = g.indptr[i], g.indptr[i + 1]
        if a == b:
            return [(v,)]
        nbrs = g.ids[g.indices[a:b]].tolist()
        out = []
        for c in _group(nbrs, self.comm[a:b].tolist()):
            c.append(v)
            c.sort()
            out.append(tuple(c))
        return out

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[k] for k in range(*i.indices(len(self)))]
        if i < 0:
            i += len(self)
        if not 0 <= i < len(self):
            raise IndexError(i)
        return int(self.graph.ids[i]), Cover(self.communities(i))

    def iter_communities(self):
        """Yield ``(vertex, community)`` in merge order without building Cover objects."""
        for i, v in enumerate(self.graph.ids.tolist()):
            for c in self.communities(i):
                yield v, c

    def __eq__(self, other):
        if isinstance(other, SeedTable):
            return self.graph == other.graph and np.array_equal(self.comm, other.comm)
        if isinstance(other, Sequence):
            return len(self) == len(other) and all(a == b for a, b in zip(self, other))
        return NotImplemented


def _chunks(n: int, threads: int) -> list[np.ndarray]:
    if n == 0:
        return []
    pieces = max(1, min(n, threads * 8))
    return [c for c in np.array_split(np.arange(n, dtype=np.int64), pieces) if c.size]


def seed_all(g: Graph, cfg: SeedConfig = SeedConfig(), threads: int = 1, backend=None) -> SeedTable:
    """Run :func:`local_seed` for every vertex, spread over ``threads`` workers.

    The result is sorted by vertex id and does not depend on ``threads``.
    """
    kern = _kernels.get(backend)
    comm = np.zeros(g.indices.size, dtype=np.int64)
    seed = cfg.rng_seed & MASK64
    max_it = int(cfg.max_iterations)

    def work(egos):
        kern.seed_egos(g.indptr, g.indices, g.ids, egos, max_it, seed, comm)

    chunks = _chunks(g.num_vertices, threads)
    if threads <= 1 or len(chunks) <= 1:
        for c in chunks:
            work(c)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, chunks))
    return SeedTable(g, comm)
