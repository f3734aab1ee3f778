"""Cover similarity: overlapping NMI (max-normalized) and symmetric best-match F1."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from .errors import DomainError


@dataclass(frozen=True)
class MetricReport:
    onmi: float
    avg_f1: float
    detected_count: int
    truth_count: int

    def to_json(self) -> str:
        return json.dumps(asdict(self)) + "\n"

    def to_tsv(self) -> str:
        return f"{self.onmi:.9f}\t{self.avg_f1:.9f}\t{self.detected_count}\t{self.truth_count}\n"


def _communities(cover: Iterable[Iterable[int]], what: str) -> list[np.ndarray]:
    comms = [np.unique(np.fromiter(c, dtype=np.int64)) for c in cover]
    if not comms:
        raise DomainError(f"{what} cover is empty")
    if any(c.size == 0 for c in comms):
        raise DomainError(f"{what} cover contains an empty community")
    return comms


def _membership(comms: list[np.ndarray], universe: np.ndarray) -> sp.csc_matrix:
    rows = np.concatenate(comms)
    pos = np.searchsorted(universe, rows)
    if np.any(pos >= universe.size) or np.any(universe[np.minimum(pos, universe.size - 1)] != rows):
        raise DomainError("cover member lies outside the universe")
    cols = np.repeat(np.arange(len(comms)), [c.size for c in comms])
    return sp.csc_matrix((np.ones(rows.size), (pos, cols)), shape=(universe.size, len(comms)))


def _h(count, n):
    p = np.asarray(count, dtype=np.float64) / n
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -p * np.log2(p)
    return np.where(p > 0, out, 0.0)


def _conditional_entropy(sx, sy, inter_rows, n, block=4096):
    """Sum over X communities of ``min_l H(X_k | Y_l)`` under the validity constraint."""
    hx = _h(sx, n) + _h(n - sx, n)
    total = 0.0
    sy = sy[None, :]
    for start in range(0, sx.size, block):
        d = inter_rows[start:start + block].toarray()
        x = sx[start:start + block, None]
        c = x - d
        b = sy - d
        a = n - x - b
        ha, hb, hc, hd = _h(a, n), _h(b, n), _h(c, n), _h(d, n)
        ok = ha + hd >= hb + hc
        cond = ha + hb + hc + hd - _h(b + d, n) - _h(a + c, n)
        cond = np.where(ok, cond, np.inf)
        best = np.minimum(cond.min(axis=1), hx[start:start + block])
        total += float(best.sum())
    return total, float(hx.sum())


def onmi(x: Iterable[Iterable[int]], y: Iterable[Iterable[int]],
         universe: Iterable[int] | None = None) -> float:
    """Overlapping normalized mutual information, ``I(X:Y) / max(H(X), H(Y))``.

    Communities are binary membership variables over ``universe`` (default:
    union of both covers).  ``H(X_k | Y_l)`` counts only when
    ``h(a) + h(d) >= h(b) + h(c)`` on the 2x2 contingency table, otherwise
    ``H(X_k)`` is used; each community takes its best match in the other cover.
    Entropies are in bits.
    """
    cx = _communities(x, "first")
    cy = _communities(y, "second")
    if universe is None:
        uni = np.unique(np.concatenate(cx + cy))
    else:
        uni = np.unique(np.fromiter(universe, dtype=np.int64))
    n = uni.size
    mx = _membership(cx, uni)
    my = _membership(cy, uni)
    inter = (mx.T @ my).tocsr()
    sx = np.asarray(mx.sum(axis=0)).ravel()
    sy = np.asarray(my.sum(axis=0)).ravel()
    hxy, hx = _conditional_entropy(sx, sy, inter, n)
    hyx, hy = _conditional_entropy(sy, sx, inter.T.tocsr(), n)
    denom = max(hx, hy)
    if denom <= 0:
        same = {tuple(c) for c in cx} == {tuple(c) for c in cy}
        return 1.0 if same else 0.0
    mutual = 0.5 * ((hx - hxy) + (hy - hyx))
    return float(min(1.0, max(0.0, mutual / denom)))


def avg_f1(detected: Iterable[Iterable[int]], truth: Iterable[Iterable[int]]) -> float:
    """Mean of the two directed best-match F1 averages."""
    cd = _communities(detected, "detected")
    ct = _communities(truth, "truth")
    uni = np.unique(np.concatenate(cd + ct))
    md = _membership(cd, uni)
    mt = _membership(ct, uni)
    inter = (md.T @ mt).tocoo()
    sd = np.asarray(md.sum(axis=0)).ravel()
    st = np.asarray(mt.sum(axis=0)).ravel()
    f1 = 2.0 * inter.data / (sd[inter.row] + st[inter.col])
    best_d = np.zeros(len(cd))
    best_t = np.zeros(len(ct))
    np.maximum.at(best_d, inter.row, f1)
    np.maximum.at(best_t, inter.col, f1)
    return float(0.5 * (best_d.mean() + best_t.mean()))


def evaluate(detected, truth, universe=None) -> MetricReport:
    detected = list(detected)
    truth = list(truth)
    return MetricReport(
        onmi=onmi(detected, truth, universe),
        avg_f1=avg_f1(detected, truth),
        detected_count=len(detected),
        truth_count=len(truth),
    )
