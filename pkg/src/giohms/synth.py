"""Planted-overlap benchmark graphs: a chain of blocks where neighboring blocks share vertices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._rng import derive_seed
from .cover import Cover
from .errors import ConfigError
from .graph import Graph


@dataclass(frozen=True)
class PlantedConfig:
    num_communities: int = 4
    community_size: int = 20
    overlap_vertices: int = 0
    p_in: float = 0.5
    p_out: float = 0.01
    rng_seed: int = 0

    def __post_init__(self):
        if self.num_communities < 1:
            raise ConfigError("num_communities must be >= 1")
        if self.community_size < 2:
            raise ConfigError("community_size must be >= 2")
        if not 0 <= self.overlap_vertices < self.community_size:
            raise ConfigError("overlap_vertices must lie in [0, community_size)")
        if not (0.0 <= self.p_in <= 1.0 and 0.0 <= self.p_out <= 1.0):
            raise ConfigError("edge probabilities must lie in [0, 1]")
        if self.p_out > self.p_in:
            raise ConfigError("p_out must not exceed p_in")

    @property
    def num_vertices(self) -> int:
        k, s, o = self.num_communities, self.community_size, self.overlap_vertices
        return k * s - (k - 1) * o

    def blocks(self) -> list[range]:
        stride = self.community_size - self.overlap_vertices
        return [range(b * stride, b * stride + self.community_size)
                for b in range(self.num_communities)]


def _intra_mask(cfg: PlantedConfig, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    """True where vertices i and j share a block (blocks are contiguous id ranges)."""
    stride = cfg.community_size - cfg.overlap_vertices
    # last block containing i and first block containing j (i < j)
    last_i = np.minimum(i // stride, cfg.num_communities - 1)
    first_j = np.maximum(0, -(-(j - cfg.community_size + 1) // stride))
    return first_j <= last_i


def planted_overlap(cfg: PlantedConfig) -> tuple[Graph, Cover]:
    """Generate the graph and its ground-truth cover.

    Vertex pairs sharing a block are joined with probability ``p_in``, all
    other pairs with ``p_out``.  Blocks ``b`` and ``b + 1`` share
    ``overlap_vertices`` vertices.  Output is a pure function of ``cfg``.
    """
    rng = np.random.default_rng(derive_seed(cfg.rng_seed, 0x5E))
    n = cfg.num_vertices
    src, dst = [], []
    seen_pairs = 0
    # intra-block pairs, each pair assigned to the first block containing it
    for b, block in enumerate(cfg.blocks()):
        lo = block.start
        i, j = np.triu_indices(cfg.community_size, k=1)
        i, j = i + lo, j + lo
        if b > 0 and cfg.overlap_vertices:
            prev_end = lo + cfg.overlap_vertices
            fresh = ~((i < prev_end) & (j < prev_end))
            i, j = i[fresh], j[fresh]
        hit = rng.random(i.size) < cfg.p_in
        src.append(i[hit])
        dst.append(j[hit])
        seen_pairs += i.size
    intra_pairs = seen_pairs
    inter_pairs = n * (n - 1) // 2 - intra_pairs
    if cfg.p_out > 0 and inter_pairs > 0:
        want = int(rng.binomial(inter_pairs, cfg.p_out))
        chosen: set[tuple[int, int]] = set()
        while len(chosen) < want:
            m = 2 * (want - len(chosen)) + 16
            a = rng.integers(0, n, size=m)
            b = rng.integers(0, n, size=m)
            i, j = np.minimum(a, b), np.maximum(a, b)
            ok = (i != j) & ~_intra_mask(cfg, i, j)
            for pair in zip(i[ok].tolist(), j[ok].tolist()):
                if len(chosen) >= want:
                    break
                chosen.add(pair)
        if chosen:
            pairs = np.array(sorted(chosen), dtype=np.int64)
            src.append(pairs[:, 0])
            dst.append(pairs[:, 1])
    s = np.concatenate(src) if src else np.empty(0, np.int64)
    t = np.concatenate(dst) if dst else np.empty(0, np.int64)
    g = Graph._from_arrays(s.astype(np.int64), t.astype(np.int64), np.arange(n, dtype=np.int64))
    return g, Cover([list(b) for b in cfg.blocks()])


def planted_for_size(num_vertices: int, community_size: int, overlap: int, mean_degree: float,
                     p_out: float, rng_seed: int = 0) -> PlantedConfig:
    """Pick a block count and ``p_in`` that hit a vertex count and mean degree."""
    stride = community_size - overlap
    k = max(1, round((num_vertices - overlap) / stride))
    cfg = PlantedConfig(k, community_size, overlap, 1.0, 0.0, rng_seed)
    n = cfg.num_vertices
    out_deg = p_out * (n - community_size)
    p_in = min(1.0, max(p_out, (mean_degree - out_deg) / (community_size - 1)))
    return PlantedConfig(k, community_size, overlap, p_in, p_out, rng_seed)
