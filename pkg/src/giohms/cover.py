"""Covers: collections of possibly overlapping communities, plus their file format."""

from __future__ import annotations

from typing import Iterable, Iterator, Mapping, TextIO

from .errors import DomainError, ParseError

Community = tuple[int, ...]


class Cover:
    """Ordered set of communities, each a sorted tuple of vertex ids with a stable id.

    Iteration yields communities in ascending community-id order.  Equality
    ignores ids and compares the collection of member sets.
    """

    __slots__ = ("_members",)

    def __init__(self, communities: Iterable[Iterable[int]] | Mapping[int, Iterable[int]] = ()):
        if isinstance(communities, Mapping):
            items = sorted(communities.items())
        else:
            items = list(enumerate(communities))
        members: dict[int, Community] = {}
        seen: set[Community] = set()
        for cid, comm in items:
            c = tuple(sorted(set(comm)))
            if not c:
                raise DomainError(f"community {cid} is empty")
            if c in seen:
                raise DomainError(f"community {cid} duplicates an earlier community")
            seen.add(c)
            members[int(cid)] = c
        self._members = members

    @classmethod
    def from_unique(cls, communities: Iterable[Iterable[int]]) -> Cover:
        """Build a cover, silently dropping empty and repeated communities."""
        out, seen = [], set()
        for comm in communities:
            c = tuple(sorted(set(comm)))
            if c and c not in seen:
                seen.add(c)
                out.append(c)
        return cls(out)

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(self._members)

    def members(self, cid: int) -> Community:
        return self._members[cid]

    def items(self):
        return self._members.items()

    def __iter__(self) -> Iterator[Community]:
        return iter(self._members.values())

    def __len__(self) -> int:
        return len(self._members)

    def __bool__(self) -> bool:
        return bool(self._members)

    def as_sets(self) -> frozenset[frozenset[int]]:
        return frozenset(frozenset(c) for c in self)

    def vertices(self) -> set[int]:
        out: set[int] = set()
        for c in self:
            out.update(c)
        return out

    def canonical(self) -> list[Community]:
        """Communities sorted lexicographically; the on-disk order."""
        return sorted(self._members.values())

    def __eq__(self, other) -> bool:
        if not isinstance(other, Cover):
            return NotImplemented
        return self.as_sets() == other.as_sets()

    def __hash__(self):
        return hash(self.as_sets())

    def __repr__(self) -> str:
        body = ", ".join("{" + ",".join(map(str, c)) + "}" for c in self.canonical()[:6])
        more = ", ..." if len(self) > 6 else ""
        return f"Cover([{body}{more}])"


def format_cover(cover: Iterable[Iterable[int]]) -> str:
    lines = sorted(tuple(sorted(set(c))) for c in cover)
    return "".join(" ".join(map(str, c)) + "\n" for c in lines)


def write_cover(cover: Iterable[Iterable[int]], path_or_stream) -> None:
    """Write one community per line, members ascending, lines sorted."""
    text = format_cover(cover)
    if hasattr(path_or_stream, "write"):
        path_or_stream.write(text)
    else:
        with open(path_or_stream, "w", encoding="utf-8") as fh:
            fh.write(text)


def parse_cover(stream: Iterable[str]) -> Cover:
    """Parse the SNAP ``cmty`` format: whitespace-separated ids, one community per line.

    Blank and ``#`` lines are skipped.  Repeated communities are collapsed,
    since several SNAP ground-truth files list the same community twice.
    """
    comms: list[Community] = []
    for lineno, line in enumerate(stream, start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        try:
            ids = [int(t) for t in s.split()]
        except ValueError:
            raise ParseError(f"non-integer vertex id in {s!r}", lineno) from None
        if min(ids) < 0:
            raise ParseError("negative vertex id", lineno)
        comms.append(tuple(ids))
    return Cover.from_unique(comms)


def read_cover(path_or_stream) -> Cover:
    if hasattr(path_or_stream, "read"):
        return parse_cover(path_or_stream)
    with open(path_or_stream, encoding="utf-8") as fh:
        return parse_cover(fh)
