"""Fold local seed communities into one global seeded cover."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable

from .cover import Cover
from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class MergeConfig:
    epsilon: float = 0.1
    cascade: bool = False

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError(f"epsilon must lie in [0, 1], got {self.epsilon}")


def absent_fraction(a: Iterable[int], b: Iterable[int]) -> float:
    """Fraction of the smaller community's members missing from the larger one."""
    sa, sb = set(a), set(b)
    if not sa or not sb:
        raise DomainError("absent_fraction needs two non-empty communities")
    if len(sa) < len(sb) or (len(sa) == len(sb) and sorted(sa) <= sorted(sb)):
        small, large = sa, sb
    else:
        small, large = sb, sa
    return len(small - large) / len(small)


class _Merger:
    """Mutable cover with an inverted vertex index for fast first-match lookup."""

    def __init__(self, cfg: MergeConfig, cover: Cover | None = None):
        self.eps = cfg.epsilon
        self.cascade = cfg.cascade
        self.members: dict[int, set[int]] = {}
        self.by_key: dict[frozenset, int] = {}
        self.inv: dict[int, set[int]] = {}
        self.next_id = 0
        if cover is not None:
            for cid, c in cover.items():
                self._insert(cid, set(c))
            self.next_id = max(cover.ids, default=-1) + 1

    def _insert(self, cid, members):
        self.members[cid] = members
        self.by_key[frozenset(members)] = cid
        for v in members:
            self.inv.setdefault(v, set()).add(cid)

    def _remove(self, cid):
        members = self.members.pop(cid)
        del self.by_key[frozenset(members)]
        for v in members:
            self.inv[v].discard(cid)

    def _first_match(self, c: set[int], skip=None):
        if self.eps >= 1.0:
            ids = sorted(self.members)
            counts = None
        else:
            # a qualifying community must share at least one member with c
            counts = Counter()
            for v in c:
                counts.update(self.inv.get(v, ()))
            ids = sorted(counts)
        for cid in ids:
            if cid == skip:
                continue
            other = self.members[cid]
            inter = counts[cid] if counts is not None else len(c & other)
            small = min(len(c), len(other))
            if (small - inter) / small <= self.eps:
                return cid
        return None

    def _grow(self, cid, c):
        merged = self.members[cid] | c
        if len(merged) == len(self.members[cid]):
            return cid
        dup = self.by_key.get(frozenset(merged))
        if dup is not None:
            # union reproduced an existing community: keep the older id
            keep, drop = min(cid, dup), max(cid, dup)
            self._remove(drop)
            if keep == cid:
                self._remove(cid)
                self._insert(cid, merged)
            return keep
        self._remove(cid)
        self._insert(cid, merged)
        return cid

    def add(self, community: Iterable[int]) -> None:
        c = set(community)
        if not c:
            raise DomainError("cannot merge an empty community")
        if frozenset(c) in self.by_key:
            return
        cid = self._first_match(c)
        if cid is None:
            self._insert(self.next_id, c)
            self.next_id += 1
            return
        cid = self._grow(cid, c)
        while self.cascade:
            grown = self.members[cid]
            other = self._first_match(grown, skip=cid)
            if other is None:
                break
            keep, drop = min(cid, other), max(cid, other)
            absorbed = self.members[drop]
            self._remove(drop)
            cid = self._grow(keep, absorbed)

    def cover(self) -> Cover:
        return Cover({cid: sorted(m) for cid, m in sorted(self.members.items())})


def merge_into(com: Cover, c: Iterable[int], cfg: MergeConfig = MergeConfig()) -> Cover:
    """Merge ``c`` into the first community (ascending id) within ``cfg.epsilon``.

    The first community ``e`` with ``absent_fraction(c, e) <= epsilon`` is
    replaced by ``e | c`` and keeps its id; otherwise ``c`` is appended under
    a fresh id.  A ``c`` already present is absorbed without change.
    """
    m = _Merger(cfg, com)
    m.add(c)
    return m.cover()


def merge_all(seeds, cfg: MergeConfig = MergeConfig()) -> Cover:
    """Fold every local community through :func:`merge_into`.

    ``seeds`` is the sorted output of :func:`giohms.seeding.seed_all` (or any
    sequence of ``(vertex, Cover)`` pairs); communities are consumed in
    vertex order, then local community order.
    """
    m = _Merger(cfg)
    if hasattr(seeds, "iter_communities"):
        for _, c in seeds.iter_communities():
            m.add(c)
    else:
        for _, cover in seeds:
            for c in cover:
                m.add(c)
    return m.cover()
