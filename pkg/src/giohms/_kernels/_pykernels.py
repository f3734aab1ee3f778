"""Pure-Python reference kernels.

Every function here has a twin in ``_ckernels.pyx`` performing the same
floating-point operations in the same order, so both backends produce
identical output for identical input.
"""

from __future__ import annotations

from bisect import bisect_left
from math import exp

from .._rng import SplitMix64, derive

NAME = "python"


def _lp_core(adj, max_iter, key, labels):
    n = len(adj)
    sweeps = 0
    for t in range(max_iter):
        sweeps = t + 1
        order = list(range(n))
        rng = SplitMix64(derive(key, t))
        for i in range(n - 1, 0, -1):
            j = rng.below(i + 1)
            order[i], order[j] = order[j], order[i]
        changed = False
        for x in order:
            nb = adj[x]
            if not nb:
                continue
            counts = {}
            for y in nb:
                lab = labels[y]
                counts[lab] = counts.get(lab, 0) + 1
            best, best_count = -1, 0
            for lab, c in counts.items():
                if c > best_count or (c == best_count and lab < best):
                    best, best_count = lab, c
            if best != labels[x]:
                labels[x] = best
                changed = True
        if not changed:
            break
    return sweeps


def _canonical(labels):
    seen = {}
    return [seen.setdefault(lab, len(seen)) for lab in labels]


def lp_csr(indptr, indices, max_iter, key, labels):
    """Label propagation on a CSR graph; writes final labels into ``labels``.

    Returns the number of sweeps performed.
    """
    ptr = indptr.tolist()
    idx = indices.tolist()
    n = len(ptr) - 1
    adj = [idx[ptr[i]:ptr[i + 1]] for i in range(n)]
    lab = list(range(n))
    sweeps = _lp_core(adj, max_iter, key, lab)
    labels[:] = lab
    return sweeps


def seed_egos(indptr, indices, ids, egos, max_iter, seed, out):
    """For each ego, label-propagate its ego-minus-ego network.

    ``out[indptr[e] + k]`` receives the canonical community index of the k-th
    neighbor of ego ``e``; communities are numbered by smallest member.
    """
    ptr = indptr.tolist()
    idx = indices.tolist()
    id_list = ids.tolist()
    marker = {}
    for e in egos.tolist():
        nbrs = idx[ptr[e]:ptr[e + 1]]
        if not nbrs:
            continue
        marker.clear()
        for k, u in enumerate(nbrs):
            marker[u] = k
        adj = [[marker[w] for w in idx[ptr[u]:ptr[u + 1]] if w in marker] for u in nbrs]
        lab = list(range(len(nbrs)))
        _lp_core(adj, max_iter, derive(seed, id_list[e]), lab)
        out[ptr[e]:ptr[e + 1]] = _canonical(lab)


class GibbsKernel:
    """Single-site Gibbs sweeps over a compiled observed-hidden network.

    State ``h[v]`` is a position into v's sorted candidate list.  Labels that
    are neither observed at v nor held by a neighbor share one energy value,
    so they are sampled as a single group and then resolved uniformly by
    rejection.  The sampled distribution does not depend on the order in
    which specials are walked; both backends use discovery order.
    """

    def __init__(self, nbr_ptr, nbr_idx, nbr_edge, cand_ptr, cand_lab, obs_ptr, obs_pos, obs_wt):
        self.nbr_ptr = nbr_ptr.tolist()
        self.nbr_idx = nbr_idx.tolist()
        self.nbr_edge = nbr_edge.tolist()
        self.cand_ptr = cand_ptr.tolist()
        self.cand_lab = cand_lab.tolist()
        self.obs_ptr = obs_ptr.tolist()
        self.obs_pos = obs_pos.tolist()
        self.obs_wt = obs_wt.tolist()
        self.n = len(self.cand_ptr) - 1

    def sweep(self, w_unary, w_binary, h, rng_state):
        nbr_ptr, nbr_idx, nbr_edge = self.nbr_ptr, self.nbr_idx, self.nbr_edge
        cand_ptr, cand_lab = self.cand_ptr, self.cand_lab
        obs_ptr, obs_pos, obs_wt = self.obs_ptr, self.obs_pos, self.obs_wt
        wu = w_unary.tolist()
        wb = w_binary.tolist()
        hl = h.tolist()
        rng = SplitMix64(int(rng_state[0]))
        for v in range(self.n):
            c0, c1 = cand_ptr[v], cand_ptr[v + 1]
            ncand = c1 - c0
            if ncand == 1:
                continue
            # special candidates: pos -> [agree, observed weight]
            spec = {}
            for k in range(obs_ptr[v], obs_ptr[v + 1]):
                spec[obs_pos[k]] = [0.0, obs_wt[k]]
            total_w = 0.0
            for k in range(nbr_ptr[v], nbr_ptr[v + 1]):
                u = nbr_idx[k]
                w = wb[nbr_edge[k]]
                total_w += w
                lab = cand_lab[cand_ptr[u] + hl[u]]
                p = bisect_left(cand_lab, lab, c0, c1)
                if p < c1 and cand_lab[p] == lab:
                    p -= c0
                    s = spec.get(p)
                    if s is None:
                        spec[p] = s = [0.0, 0.0]
                    s[0] += w
            wv = wu[v]
            positions = list(spec)  # discovery order: observed, then neighbors
            energies = [wv * (1.0 - spec[p][1]) + (total_w - spec[p][0]) for p in positions]
            nbg = ncand - len(positions)
            e_bg = wv + total_w
            e_min = min(energies)
            if nbg > 0 and e_bg < e_min:
                e_min = e_bg
            probs = [exp(e_min - e) for e in energies]
            total = 0.0
            for q in probs:
                total += q
            p_bg = 0.0
            if nbg > 0:
                p_bg = nbg * exp(e_min - e_bg)
                total += p_bg
            u = rng.uniform() * total
            acc = 0.0
            chosen = -1
            for i, q in enumerate(probs):
                acc += q
                if u < acc:
                    chosen = positions[i]
                    break
            if chosen < 0:
                if nbg > 0:
                    # uniform over non-special positions by rejection
                    pos = rng.below(ncand)
                    while pos in spec:
                        pos = rng.below(ncand)
                    chosen = pos
                else:
                    chosen = positions[-1]
            hl[v] = chosen
        h[:] = hl
        rng_state[0] = rng.state

    def icm_sweep(self, w_unary, w_binary, h):
        """Move every vertex (id order) to a minimum-energy label given its
        neighbors; keep the current label on ties, else take the smallest
        position.  Returns the number of vertices that changed."""
        nbr_ptr, nbr_idx, nbr_edge = self.nbr_ptr, self.nbr_idx, self.nbr_edge
        cand_ptr, cand_lab = self.cand_ptr, self.cand_lab
        obs_ptr, obs_pos, obs_wt = self.obs_ptr, self.obs_pos, self.obs_wt
        wu = w_unary.tolist()
        wb = w_binary.tolist()
        hl = h.tolist()
        changed = 0
        for v in range(self.n):
            c0, c1 = cand_ptr[v], cand_ptr[v + 1]
            if c1 - c0 == 1:
                continue
            spec = {}
            for k in range(obs_ptr[v], obs_ptr[v + 1]):
                spec[obs_pos[k]] = [0.0, obs_wt[k]]
            for k in range(nbr_ptr[v], nbr_ptr[v + 1]):
                u = nbr_idx[k]
                lab = cand_lab[cand_ptr[u] + hl[u]]
                p = bisect_left(cand_lab, lab, c0, c1)
                if p < c1 and cand_lab[p] == lab:
                    p -= c0
                    s = spec.get(p)
                    if s is None:
                        spec[p] = s = [0.0, 0.0]
                    s[0] += wb[nbr_edge[k]]
            # total neighbor weight is common to every label and drops out
            wv = wu[v]
            cur = hl[v]
            best = cur
            cs = spec.get(cur)
            best_e = wv * (1.0 - cs[1]) - cs[0] if cs is not None else wv
            for p, (agree, ow) in spec.items():
                e = wv * (1.0 - ow) - agree
                if e < best_e or (e == best_e and best != cur and p < best):
                    best, best_e = p, e
            if best != cur:
                hl[v] = best
                changed += 1
        h[:] = hl
        return changed

