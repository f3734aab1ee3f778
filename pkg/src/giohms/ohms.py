"""Observed-hidden merged seeded network: one hidden variable per covered vertex,
each attached to an observed seed-label distribution."""

from __future__ import annotations

from typing import Mapping, Sequence, TextIO

import numpy as np
import scipy.sparse as sp

from .cover import Cover
from .errors import ConfigError, DomainError
from .graph import Graph


class OHMSNetwork:
    """Array-backed observed-hidden network.

    Hidden vertices are kept sorted; per-vertex observed distributions and
    candidate label sets are CSR segments (``obs_ptr``/``obs_lab``/``obs_wt``
    and ``cand_ptr``/``cand_lab``), each sorted by label.  Edges are pairs of
    dense hidden indices ``(edge_src[e], edge_dst[e])`` with ``src < dst``.
    """

    def __init__(self, hidden, edge_src, edge_dst, obs_ptr, obs_lab, obs_wt, cand_ptr, cand_lab,
                 uncovered=()):
        self.hidden = np.asarray(hidden, dtype=np.int64)
        self.edge_src = np.asarray(edge_src, dtype=np.int64)
        self.edge_dst = np.asarray(edge_dst, dtype=np.int64)
        self.obs_ptr = np.asarray(obs_ptr, dtype=np.int64)
        self.obs_lab = np.asarray(obs_lab, dtype=np.int64)
        self.obs_wt = np.asarray(obs_wt, dtype=np.float64)
        self.cand_ptr = np.asarray(cand_ptr, dtype=np.int64)
        self.cand_lab = np.asarray(cand_lab, dtype=np.int64)
        self.uncovered = np.asarray(uncovered, dtype=np.int64)
        self._index = {v: i for i, v in enumerate(self.hidden.tolist())}
        self._check()

    def _check(self):
        n = self.hidden.size
        if np.any(np.diff(self.hidden) <= 0):
            raise DomainError("hidden vertices must be strictly increasing")
        if self.obs_ptr.size != n + 1 or self.cand_ptr.size != n + 1:
            raise DomainError("observed/candidate tables must cover every hidden vertex")
        if np.any(np.diff(self.obs_ptr) < 1) and n:
            raise DomainError("every hidden vertex needs an observed distribution")
        if np.any(self.edge_src >= self.edge_dst):
            raise DomainError("edges must satisfy src < dst")
        sums = np.add.reduceat(self.obs_wt, self.obs_ptr[:-1]) if n else np.empty(0)
        if np.any(np.abs(sums - 1.0) > 1e-9):
            raise DomainError("observed distributions must sum to 1")
        for i in range(n):
            cands = self.cand_lab[self.cand_ptr[i]:self.cand_ptr[i + 1]]
            obs = self.obs_lab[self.obs_ptr[i]:self.obs_ptr[i + 1]]
            if np.any(np.diff(cands) <= 0) or np.any(np.diff(obs) <= 0):
                raise DomainError("labels must be sorted and unique per vertex")
            if not np.all(np.isin(obs, cands, assume_unique=True)):
                raise DomainError(f"observed labels of {self.hidden[i]} are not all candidates")

    @classmethod
    def from_dicts(cls, observed: Mapping[int, Mapping[int, float]],
                   candidates: Mapping[int, Sequence[int]] | None = None,
                   edges: Sequence[tuple[int, int]] = ()) -> OHMSNetwork:
        """Build from plain mappings; candidates default to the observed labels."""
        hidden = sorted(observed)
        index = {v: i for i, v in enumerate(hidden)}
        obs_ptr, obs_lab, obs_wt, cand_ptr, cand_lab = [0], [], [], [0], []
        for v in hidden:
            dist = observed[v]
            for lab in sorted(dist):
                if dist[lab] > 0:
                    obs_lab.append(lab)
                    obs_wt.append(float(dist[lab]))
            obs_ptr.append(len(obs_lab))
            cands = set(candidates[v]) if candidates is not None and v in candidates else set()
            cands.update(lab for lab in dist if dist[lab] > 0)
            cand_lab.extend(sorted(cands))
            cand_ptr.append(len(cand_lab))
        pairs = set()
        for u, v in edges:
            if u == v:
                continue
            try:
                a, b = index[u], index[v]
            except KeyError:
                raise DomainError(f"edge ({u}, {v}) touches a vertex with no observation") from None
            pairs.add((min(a, b), max(a, b)))
        pairs = sorted(pairs)
        src = [a for a, _ in pairs]
        dst = [b for _, b in pairs]
        return cls(hidden, src, dst, obs_ptr, obs_lab, obs_wt, cand_ptr, cand_lab)

    # -- accessors ---------------------------------------------------------

    @property
    def hidden_vertices(self) -> tuple[int, ...]:
        return tuple(self.hidden.tolist())

    @property
    def num_hidden(self) -> int:
        return int(self.hidden.size)

    @property
    def num_edges(self) -> int:
        return int(self.edge_src.size)

    @property
    def dimension(self) -> int:
        """Number of free weights: one per hidden vertex plus one per edge."""
        return self.num_hidden + self.num_edges

    def index_of(self, v: int) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise DomainError(f"{v} is not a hidden vertex") from None

    def observed(self, v: int) -> dict[int, float]:
        i = self.index_of(v)
        a, b = self.obs_ptr[i], self.obs_ptr[i + 1]
        return dict(zip(self.obs_lab[a:b].tolist(), self.obs_wt[a:b].tolist()))

    def candidates(self, v: int) -> tuple[int, ...]:
        i = self.index_of(v)
        return tuple(self.cand_lab[self.cand_ptr[i]:self.cand_ptr[i + 1]].tolist())

    def edges(self) -> list[tuple[int, int]]:
        return list(zip(self.hidden[self.edge_src].tolist(), self.hidden[self.edge_dst].tolist()))

    def neighbors(self, v: int) -> tuple[int, ...]:
        i = self.index_of(v)
        nb = np.concatenate([self.edge_dst[self.edge_src == i], self.edge_src[self.edge_dst == i]])
        return tuple(self.hidden[np.sort(nb)].tolist())

    def state_space_size(self) -> int:
        sizes = np.diff(self.cand_ptr)
        total = 1
        for s in sizes.tolist():
            total *= s
        return total

    def __repr__(self):
        return (f"OHMSNetwork(hidden={self.num_hidden}, edges={self.num_edges}, "
                f"labels={label_universe(self).__len__()})")


def build_ohms(g: Graph, com: Cover, hop_radius: int = 2) -> OHMSNetwork:
    """Attach an observed seed-label distribution to every covered vertex.

    Hidden vertices are the members of ``com``.  A vertex in k communities
    observes each of their ids with weight 1/k.  Its candidate labels are all
    community ids observed anywhere within ``hop_radius`` hops in ``g``.
    Edges of ``g`` between hidden vertices are kept; uncovered vertices are
    recorded in ``uncovered``.
    """
    if int(hop_radius) < 1:
        raise ConfigError("hop_radius must be a positive integer")
    n = g.num_vertices
    label_ids = np.asarray(sorted(com.ids), dtype=np.int64)
    rows, cols = [], []
    for j, cid in enumerate(label_ids.tolist()):
        members = com.members(cid)
        for v in members:
            if v not in g:
                raise DomainError(f"community {cid} references vertex {v} absent from the graph")
        rows.extend(g.index_of(v) for v in members)
        cols.extend([j] * len(members))
    member = sp.csr_matrix(
        (np.ones(len(rows), dtype=bool), (rows, cols)), shape=(n, label_ids.size), dtype=bool
    )
    covered = np.diff(member.indptr) > 0
    hidden_idx = np.flatnonzero(covered)

    obs = member[hidden_idx]
    obs.sort_indices()
    k = np.diff(obs.indptr)
    obs_wt = np.repeat(1.0 / np.maximum(k, 1), k)

    step = sp.csr_matrix(
        (np.ones(g.indices.size, dtype=bool), g.indices, g.indptr), shape=(n, n)
    ) + sp.identity(n, dtype=bool, format="csr")
    reach = member
    for _ in range(int(hop_radius)):
        reach = (step @ reach).astype(bool)
    cand = sp.csr_matrix(reach[hidden_idx])
    cand.sort_indices()

    local = np.full(n, -1, dtype=np.int64)
    local[hidden_idx] = np.arange(hidden_idx.size)
    src = np.repeat(np.arange(n), np.diff(g.indptr))
    dst = g.indices
    keep = (src < dst) & covered[src] & covered[dst]
    return OHMSNetwork(
        g.ids[hidden_idx],
        local[src[keep]],
        local[dst[keep]],
        obs.indptr.astype(np.int64),
        label_ids[obs.indices],
        obs_wt,
        cand.indptr.astype(np.int64),
        label_ids[cand.indices],
        uncovered=g.ids[~covered],
    )


def label_universe(net: OHMSNetwork) -> tuple[int, ...]:
    return tuple(np.unique(net.cand_lab).tolist())


def write_ohms(net: OHMSNetwork, stream: TextIO) -> None:
    """Debug dump: ``v | label:weight,... | candidate candidate ...`` per hidden vertex."""
    for i, v in enumerate(net.hidden.tolist()):
        a, b = net.obs_ptr[i], net.obs_ptr[i + 1]
        obs = ",".join(f"{lab}:{w:.6g}" for lab, w in
                       zip(net.obs_lab[a:b].tolist(), net.obs_wt[a:b].tolist()))
        cands = " ".join(map(str, net.cand_lab[net.cand_ptr[i]:net.cand_ptr[i + 1]].tolist()))
        stream.write(f"{v} | {obs} | {cands}\n")
