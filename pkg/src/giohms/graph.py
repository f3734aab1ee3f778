"""Undirected simple graphs, SNAP edge-list ingestion and ego-minus-ego extraction."""

from __future__ import annotations

from typing import Iterable, Iterator, TextIO

import numpy as np

from .errors import DomainError, ParseError


class Graph:
    """Immutable undirected simple graph over arbitrary non-negative vertex ids.

    Adjacency is stored in CSR form over a dense reindexing of the sorted
    vertex ids, so ``indptr``/``indices`` can be handed to the compiled kernels
    directly.  Neighbor lists are sorted ascending.
    """

    __slots__ = ("ids", "indptr", "indices", "_index")

    def __init__(self, ids: np.ndarray, indptr: np.ndarray, indices: np.ndarray):
        self.ids = ids
        self.indptr = indptr
        self.indices = indices
        self._index = {int(v): i for i, v in enumerate(ids.tolist())}
        for arr in (ids, indptr, indices):
            arr.setflags(write=False)

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[int, int]], vertices: Iterable[int] = ()) -> Graph:
        """Build a graph from an edge iterable; loops are dropped, duplicates merged."""
        pairs = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        extra = np.fromiter(vertices, dtype=np.int64)
        return cls._from_arrays(pairs[:, 0], pairs[:, 1], extra)

    @classmethod
    def _from_arrays(cls, src: np.ndarray, dst: np.ndarray, extra: np.ndarray) -> Graph:
        if (src.size and min(src.min(), dst.min()) < 0) or (extra.size and extra.min() < 0):
            raise DomainError("vertex ids must be non-negative")
        ids = np.unique(np.concatenate([src, dst, extra]))
        keep = src != dst
        a = np.searchsorted(ids, src[keep])
        b = np.searchsorted(ids, dst[keep])
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        n = ids.size
        code = np.unique(lo * max(n, 1) + hi)
        lo, hi = code // max(n, 1), code % max(n, 1)
        rows = np.concatenate([lo, hi])
        cols = np.concatenate([hi, lo])
        order = np.lexsort((cols, rows))
        rows, cols = rows[order], cols[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
        return cls(ids, indptr, cols.astype(np.int64))

    @property
    def vertices(self) -> tuple[int, ...]:
        return tuple(self.ids.tolist())

    @property
    def num_vertices(self) -> int:
        return int(self.ids.size)

    @property
    def num_edges(self) -> int:
        return int(self.indices.size // 2)

    def __contains__(self, v) -> bool:
        return v in self._index

    def __len__(self) -> int:
        return self.num_vertices

    def index_of(self, v: int) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise DomainError(f"vertex {v} is not in the graph") from None

    def neighbors(self, v: int) -> tuple[int, ...]:
        i = self.index_of(v)
        return tuple(self.ids[self.indices[self.indptr[i]:self.indptr[i + 1]]].tolist())

    def degree(self, v: int) -> int:
        i = self.index_of(v)
        return int(self.indptr[i + 1] - self.indptr[i])

    def has_edge(self, u: int, v: int) -> bool:
        if u not in self._index or v not in self._index:
            return False
        i, j = self._index[u], self._index[v]
        row = self.indices[self.indptr[i]:self.indptr[i + 1]]
        k = np.searchsorted(row, j)
        return bool(k < row.size and row[k] == j)

    def edges(self) -> Iterator[tuple[int, int]]:
        """Yield each edge once as ``(u, v)`` with ``u < v``, in sorted order."""
        ids = self.ids.tolist()
        indptr = self.indptr.tolist()
        indices = self.indices.tolist()
        for i in range(len(ids)):
            for j in indices[indptr[i]:indptr[i + 1]]:
                if j > i:
                    yield ids[i], ids[j]

    def adjacency(self) -> dict[int, tuple[int, ...]]:
        return {v: self.neighbors(v) for v in self.vertices}

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            np.array_equal(self.ids, other.ids)
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )

    def __hash__(self):
        return hash((self.ids.tobytes(), self.indices.tobytes()))

    def __repr__(self) -> str:
        return f"Graph(|V|={self.num_vertices}, |E|={self.num_edges})"


def parse_edge_list(stream: Iterable[str]) -> Graph:
    """Read a SNAP-style edge list.

    Lines starting with ``#`` and blank lines are skipped; every other line
    must hold exactly two integer ids.  Edges are symmetrized and deduplicated,
    self-loops are dropped but their endpoint is kept as a vertex.

    Raises
    ------
    ParseError
        On a non-integer token or a line that does not have two fields.
    """
    src: list[int] = []
    dst: list[int] = []
    for lineno, line in enumerate(stream, start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split()
        if len(parts) != 2:
            raise ParseError(f"expected 2 vertex ids, got {len(parts)} fields", lineno)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"non-integer vertex id in {s!r}", lineno) from None
        if u < 0 or v < 0:
            raise ParseError(f"negative vertex id in {s!r}", lineno)
        src.append(u)
        dst.append(v)
    return Graph._from_arrays(
        np.asarray(src, dtype=np.int64), np.asarray(dst, dtype=np.int64), np.empty(0, np.int64)
    )


def read_edge_list(path) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return parse_edge_list(fh)


def write_edge_list(g: Graph, stream: TextIO) -> None:
    """Serialize ``g`` so that :func:`parse_edge_list` reproduces it.

    Isolated vertices are written as self-loop lines, which the parser turns
    back into edgeless vertices.
    """
    deg = np.diff(g.indptr)
    isolated = set(g.ids[deg == 0].tolist())
    for v in g.vertices:
        if v in isolated:
            stream.write(f"{v}\t{v}\n")
    for u, v in g.edges():
        stream.write(f"{u}\t{v}\n")


def induced_subgraph(g: Graph, s: Iterable[int]) -> Graph:
    """Subgraph on exactly the vertex set ``s`` with every edge of ``g`` inside it."""
    members = sorted(set(s))
    idx = np.asarray([g.index_of(v) for v in members], dtype=np.int64)
    n = g.num_vertices
    local = np.full(n, -1, dtype=np.int64)
    local[idx] = np.arange(idx.size)
    counts = np.diff(g.indptr)[idx]
    rows = np.repeat(np.arange(idx.size), counts)
    cols = (
        np.concatenate([g.indices[g.indptr[i]:g.indptr[i + 1]] for i in idx])
        if idx.size
        else np.empty(0, np.int64)
    )
    cols = local[cols]
    keep = cols >= 0
    rows, cols = rows[keep], cols[keep]
    indptr = np.zeros(idx.size + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=idx.size), out=indptr[1:])
    return Graph(np.asarray(members, dtype=np.int64), indptr, cols.astype(np.int64))


def ego_minus_ego(g: Graph, v: int) -> Graph:
    """Induced subgraph on the neighbors of ``v``; ``v`` itself is excluded."""
    return induced_subgraph(g, g.neighbors(v))
