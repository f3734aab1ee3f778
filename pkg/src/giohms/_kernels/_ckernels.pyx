# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; mirrors _pykernels.py operation for operation.

All loops run without the GIL so callers can spread work over threads.
"""

from libc.stdint cimport int32_t, int64_t, uint64_t
from libc.stdlib cimport malloc, free, realloc
from libc.math cimport exp
from libc.string cimport memset

import numpy as np

NAME = "cython"

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double INV53 = 1.0 / 9007199254740992.0


cdef inline uint64_t fmix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t derive(uint64_t key, uint64_t x) noexcept nogil:
    return fmix64((key ^ fmix64(x + GOLDEN)) + GOLDEN)


cdef inline uint64_t next_u64(uint64_t* state) noexcept nogil:
    state[0] = state[0] + GOLDEN
    return fmix64(state[0])


cdef inline double next_uniform(uint64_t* state) noexcept nogil:
    return <double>(next_u64(state) >> 11) * INV53


cdef int64_t lp_core(int64_t n, const int64_t* ptr, const int64_t* adj, int64_t max_iter,
                     uint64_t key, int64_t* labels, int64_t* order, int64_t* counts,
                     int64_t* touched) noexcept nogil:
    cdef int64_t t, i, j, k, x, lab, best, best_count, c, ntouch, tmp
    cdef int64_t sweeps = 0
    cdef uint64_t state
    cdef bint changed
    for i in range(n):
        labels[i] = i
        counts[i] = 0
    for t in range(max_iter):
        sweeps = t + 1
        for i in range(n):
            order[i] = i
        state = derive(key, <uint64_t>t)
        i = n - 1
        while i > 0:
            j = <int64_t>(next_u64(&state) % <uint64_t>(i + 1))
            tmp = order[i]
            order[i] = order[j]
            order[j] = tmp
            i -= 1
        changed = False
        for i in range(n):
            x = order[i]
            if ptr[x] == ptr[x + 1]:
                continue
            ntouch = 0
            for k in range(ptr[x], ptr[x + 1]):
                lab = labels[adj[k]]
                if counts[lab] == 0:
                    touched[ntouch] = lab
                    ntouch += 1
                counts[lab] += 1
            best = -1
            best_count = 0
            for k in range(ntouch):
                lab = touched[k]
                c = counts[lab]
                if c > best_count or (c == best_count and lab < best):
                    best = lab
                    best_count = c
                counts[lab] = 0
            if best != labels[x]:
                labels[x] = best
                changed = True
        if not changed:
            break
    return sweeps


cdef void canonical(int64_t n, int64_t* labels, int64_t* remap) noexcept nogil:
    cdef int64_t i, nxt = 0
    for i in range(n):
        remap[i] = -1
    for i in range(n):
        if remap[labels[i]] < 0:
            remap[labels[i]] = nxt
            nxt += 1
        labels[i] = remap[labels[i]]


def lp_csr(const int64_t[::1] indptr, const int64_t[::1] indices, int64_t max_iter,
           uint64_t key, int64_t[::1] labels):
    cdef int64_t n = indptr.shape[0] - 1
    cdef int64_t sweeps = 0
    if n <= 0:
        return 0
    cdef int64_t* order = <int64_t*>malloc(n * sizeof(int64_t))
    cdef int64_t* counts = <int64_t*>malloc(n * sizeof(int64_t))
    cdef int64_t* touched = <int64_t*>malloc(n * sizeof(int64_t))
    if order == NULL or counts == NULL or touched == NULL:
        free(order); free(counts); free(touched)
        raise MemoryError()
    with nogil:
        sweeps = lp_core(n, &indptr[0], &indices[0] if indices.shape[0] else NULL,
                         max_iter, key, &labels[0], order, counts, touched)
    free(order); free(counts); free(touched)
    return sweeps


def seed_egos(const int64_t[::1] indptr, const int64_t[::1] indices, const int64_t[::1] ids,
              const int64_t[::1] egos, int64_t max_iter, uint64_t seed, int64_t[::1] out):
    cdef int64_t n = indptr.shape[0] - 1
    cdef int64_t maxdeg = 0
    cdef int64_t i
    for i in range(n):
        if indptr[i + 1] - indptr[i] > maxdeg:
            maxdeg = indptr[i + 1] - indptr[i]
    if n == 0 or maxdeg == 0 or egos.shape[0] == 0:
        return
    cdef int64_t* marker = <int64_t*>malloc(n * sizeof(int64_t))
    cdef int64_t* lptr = <int64_t*>malloc((maxdeg + 1) * sizeof(int64_t))
    cdef int64_t* labels = <int64_t*>malloc(maxdeg * sizeof(int64_t))
    cdef int64_t* order = <int64_t*>malloc(maxdeg * sizeof(int64_t))
    cdef int64_t* counts = <int64_t*>malloc(maxdeg * sizeof(int64_t))
    cdef int64_t* touched = <int64_t*>malloc(maxdeg * sizeof(int64_t))
    cdef int64_t cap = maxdeg * 4 + 16
    cdef int64_t* ladj = <int64_t*>malloc(cap * sizeof(int64_t))
    if (marker == NULL or lptr == NULL or labels == NULL or order == NULL
            or counts == NULL or touched == NULL or ladj == NULL):
        free(marker); free(lptr); free(labels); free(order); free(counts); free(touched); free(ladj)
        raise MemoryError()
    cdef int64_t* grown
    cdef int64_t ei, e, k, u, w, m, deg, q
    cdef bint oom = False
    with nogil:
        for i in range(n):
            marker[i] = -1
        for ei in range(egos.shape[0]):
            e = egos[ei]
            deg = indptr[e + 1] - indptr[e]
            if deg == 0:
                continue
            for k in range(deg):
                marker[indices[indptr[e] + k]] = k
            m = 0
            lptr[0] = 0
            for k in range(deg):
                u = indices[indptr[e] + k]
                for q in range(indptr[u], indptr[u + 1]):
                    w = indices[q]
                    if marker[w] >= 0:
                        if m == cap:
                            cap *= 2
                            grown = <int64_t*>realloc(ladj, cap * sizeof(int64_t))
                            if grown == NULL:
                                oom = True
                                break
                            ladj = grown
                        ladj[m] = marker[w]
                        m += 1
                if oom:
                    break
                lptr[k + 1] = m
            if oom:
                break
            lp_core(deg, lptr, ladj, max_iter, derive(seed, <uint64_t>ids[e]),
                    labels, order, counts, touched)
            canonical(deg, labels, counts)
            for k in range(deg):
                out[indptr[e] + k] = labels[k]
                marker[indices[indptr[e] + k]] = -1
    free(marker); free(lptr); free(labels); free(order); free(counts); free(touched); free(ladj)
    if oom:
        raise MemoryError()


cdef inline int64_t find_label(const int64_t* a, int64_t lo, int64_t hi,
                               int64_t lab) noexcept nogil:
    """Index of ``lab`` in the sorted ``a[lo:hi]``, or -1.

    A few interpolation probes (labels are near-uniform integers) narrow the
    range before plain bisection.
    """
    cdef int64_t mid, a_lo, a_hi, step
    cdef int64_t end = hi
    for step in range(4):
        if hi - lo <= 16:
            break
        a_lo = a[lo]
        a_hi = a[hi - 1]
        if lab < a_lo or lab > a_hi:
            return -1
        if a_hi == a_lo:
            break
        mid = lo + (lab - a_lo) * (hi - 1 - lo) // (a_hi - a_lo)
        if a[mid] < lab:
            lo = mid + 1
        elif a[mid] > lab:
            hi = mid
        else:
            return mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] < lab:
            lo = mid + 1
        else:
            hi = mid
    if lo < end and a[lo] == lab:
        return lo
    return -1


cdef struct Buffers:
    int64_t* slot      # candidate position -> special index, or -1
    int64_t* lslot     # label -> special index, -2 if known absent, -1 unknown
    int64_t* miss
    int64_t* sp_pos
    int64_t* sp_lab
    double* sp_agree
    double* sp_obs
    double* sp_p
    int64_t* cur       # current label of every vertex


cdef void free_buffers(Buffers* b) noexcept:
    free(b.slot); free(b.lslot); free(b.miss); free(b.sp_pos); free(b.sp_lab)
    free(b.sp_agree); free(b.sp_obs); free(b.sp_p); free(b.cur)


cdef int64_t LSLOT_LIMIT = 1 << 27   # label table entries
cdef int64_t BITSET_LIMIT = 1 << 28  # membership bitset bytes


cdef class GibbsKernel:
    """Gibbs and ICM sweeps over hidden labels stored as candidate positions.

    When labels are small non-negative integers the kernel keeps a per-vertex
    candidate bitset and a label -> special-index table, so a neighbor's label
    is tested for membership with one bit lookup and a candidate position is
    only searched for when that label is chosen.  Otherwise every neighbor
    label is located by search.  Both modes visit and draw identically.
    """
    cdef const int64_t[::1] nbr_ptr
    cdef const int64_t[::1] nbr_idx
    cdef const int64_t[::1] nbr_edge
    cdef const int64_t[::1] cand_ptr
    cdef const int64_t[::1] cand_lab
    cdef const int64_t[::1] obs_ptr
    cdef const int64_t[::1] obs_pos
    cdef const double[::1] obs_wt
    cdef int64_t[::1] obs_lab
    cdef uint64_t[::1] member
    cdef readonly int64_t n
    cdef int64_t max_cand
    cdef int64_t max_spec
    cdef int64_t max_deg
    cdef int64_t nlab
    cdef int64_t words
    cdef readonly bint fast

    def __init__(self, nbr_ptr, nbr_idx, nbr_edge, cand_ptr, cand_lab, obs_ptr, obs_pos, obs_wt):
        self.nbr_ptr = nbr_ptr
        self.nbr_idx = nbr_idx
        self.nbr_edge = nbr_edge
        self.cand_ptr = cand_ptr
        self.cand_lab = cand_lab
        self.obs_ptr = obs_ptr
        self.obs_pos = obs_pos
        self.obs_wt = obs_wt
        self.n = cand_ptr.shape[0] - 1
        cdef int64_t v, s, d, k, lab, lo = 0, hi = -1
        self.max_cand = 1
        self.max_spec = 1
        self.max_deg = 1
        for v in range(self.n):
            if cand_ptr[v + 1] - cand_ptr[v] > self.max_cand:
                self.max_cand = cand_ptr[v + 1] - cand_ptr[v]
            d = nbr_ptr[v + 1] - nbr_ptr[v]
            s = d + (obs_ptr[v + 1] - obs_ptr[v])
            if s > self.max_spec:
                self.max_spec = s
            if d > self.max_deg:
                self.max_deg = d
        # observed labels stored contiguously; reading them through cand_lab
        # costs a cache miss per entry on large candidate sets
        self.obs_lab = np.empty(self.obs_pos.shape[0], dtype=np.int64)
        for v in range(self.n):
            for s in range(obs_ptr[v], obs_ptr[v + 1]):
                self.obs_lab[s] = self.cand_lab[self.cand_ptr[v] + self.obs_pos[s]]
        for k in range(self.cand_lab.shape[0]):
            if self.cand_lab[k] < lo:
                lo = self.cand_lab[k]
            if self.cand_lab[k] > hi:
                hi = self.cand_lab[k]
        self.nlab = hi + 1
        self.words = (self.nlab + 63) >> 6
        self.fast = (lo >= 0 and self.nlab < LSLOT_LIMIT
                     and self.n * self.words * 8 <= BITSET_LIMIT)
        if not self.fast:
            self.nlab = 0
            self.words = 0
            self.member = np.zeros(1, dtype=np.uint64)
            return
        self.member = np.zeros(max(self.n * self.words, 1), dtype=np.uint64)
        for v in range(self.n):
            for k in range(self.cand_ptr[v], self.cand_ptr[v + 1]):
                lab = self.cand_lab[k]
                self.member[v * self.words + (lab >> 6)] |= (<uint64_t>1) << (lab & 63)

    cdef int _alloc(self, Buffers* b) noexcept:
        cdef int64_t i
        b.slot = <int64_t*>malloc(self.max_cand * sizeof(int64_t))
        b.lslot = <int64_t*>malloc(max(self.nlab, 1) * sizeof(int64_t))
        b.miss = <int64_t*>malloc(self.max_deg * sizeof(int64_t))
        b.sp_pos = <int64_t*>malloc(self.max_spec * sizeof(int64_t))
        b.sp_lab = <int64_t*>malloc(self.max_spec * sizeof(int64_t))
        b.sp_agree = <double*>malloc(self.max_spec * sizeof(double))
        b.sp_obs = <double*>malloc(self.max_spec * sizeof(double))
        b.sp_p = <double*>malloc(self.max_spec * sizeof(double))
        b.cur = <int64_t*>malloc(max(self.n, 1) * sizeof(int64_t))
        if (b.slot == NULL or b.lslot == NULL or b.miss == NULL or b.sp_pos == NULL
                or b.sp_lab == NULL or b.sp_agree == NULL or b.sp_obs == NULL
                or b.sp_p == NULL or b.cur == NULL):
            return -1
        for i in range(self.max_cand):
            b.slot[i] = -1
        for i in range(self.nlab):
            b.lslot[i] = -1
        return 0

    cdef void _init_cur(self, Buffers* b, const int32_t* h) noexcept:
        cdef int64_t i
        for i in range(self.n):
            b.cur[i] = self.cand_lab[self.cand_ptr[i] + h[i]]

    cdef inline int64_t _special(self, Buffers* b, int64_t pos, int64_t lab) noexcept nogil:
        # special index of the candidate at position pos (label lab), or < 0
        if self.fast:
            return b.lslot[lab]
        return b.slot[pos]

    cdef int64_t _collect(self, int64_t v, const double* wb, Buffers* b,
                          double* total_out) noexcept nogil:
        # gather v's special labels in discovery order: observed first, then
        # neighbor labels that are candidates of v; returns their count.
        # Fast mode leaves sp_pos = -1 for labels found through neighbors.
        cdef int64_t k, u, p, s, lab, nspec = 0, nmiss = 0
        cdef int64_t c0 = self.cand_ptr[v]
        cdef int64_t c1 = self.cand_ptr[v + 1]
        cdef const int64_t* labs = &self.cand_lab[0]
        cdef const uint64_t* row
        cdef bint fast = self.fast
        cdef double w, total_w = 0.0
        if fast:
            row = &self.member[v * self.words]
        for k in range(self.obs_ptr[v], self.obs_ptr[v + 1]):
            p = self.obs_pos[k]
            lab = self.obs_lab[k]
            if fast:
                b.lslot[lab] = nspec
            else:
                b.slot[p] = nspec
            b.sp_pos[nspec] = p
            b.sp_lab[nspec] = lab
            b.sp_agree[nspec] = 0.0
            b.sp_obs[nspec] = self.obs_wt[k]
            nspec += 1
        for k in range(self.nbr_ptr[v], self.nbr_ptr[v + 1]):
            u = self.nbr_idx[k]
            w = wb[self.nbr_edge[k]]
            total_w += w
            lab = b.cur[u]
            if fast:
                s = b.lslot[lab]
                if s >= 0:
                    b.sp_agree[s] += w
                elif s == -1:
                    if (row[lab >> 6] >> (lab & 63)) & 1:
                        b.lslot[lab] = nspec
                        b.sp_pos[nspec] = -1
                        b.sp_lab[nspec] = lab
                        b.sp_agree[nspec] = w
                        b.sp_obs[nspec] = 0.0
                        nspec += 1
                    else:
                        b.lslot[lab] = -2
                        b.miss[nmiss] = lab
                        nmiss += 1
                continue
            p = find_label(labs, c0, c1, lab)
            if p < 0:
                continue
            p -= c0
            if b.slot[p] < 0:
                b.slot[p] = nspec
                b.sp_pos[nspec] = p
                b.sp_lab[nspec] = lab
                b.sp_agree[nspec] = 0.0
                b.sp_obs[nspec] = 0.0
                nspec += 1
            b.sp_agree[b.slot[p]] += w
        for k in range(nmiss):
            b.lslot[b.miss[k]] = -1
        total_out[0] = total_w
        return nspec

    cdef void _release(self, int64_t nspec, Buffers* b) noexcept nogil:
        cdef int64_t i
        for i in range(nspec):
            if self.fast:
                b.lslot[b.sp_lab[i]] = -1
            else:
                b.slot[b.sp_pos[i]] = -1

    cdef inline int64_t _position(self, int64_t v, Buffers* b, int64_t i) noexcept nogil:
        # candidate position of special i, searched for on demand
        if b.sp_pos[i] < 0:
            b.sp_pos[i] = find_label(&self.cand_lab[0], self.cand_ptr[v],
                                     self.cand_ptr[v + 1], b.sp_lab[i]) - self.cand_ptr[v]
        return b.sp_pos[i]

    def sweep(self, const double[::1] w_unary, const double[::1] w_binary,
              int32_t[::1] h, uint64_t[::1] rng_state):
        cdef Buffers b
        memset(&b, 0, sizeof(Buffers))
        if self._alloc(&b) < 0:
            free_buffers(&b)
            raise MemoryError()
        self._init_cur(&b, &h[0])
        with nogil:
            self._sweep(&w_unary[0], &w_binary[0] if w_binary.shape[0] else NULL, &h[0],
                        &rng_state[0], &b)
        free_buffers(&b)

    cdef void _sweep(self, const double* wu, const double* wb, int32_t* h, uint64_t* state,
                     Buffers* b) noexcept nogil:
        cdef int64_t v, c0, ncand, nspec, nbg, i, pos, chosen
        cdef double total_w, wv, e_min, e_bg, total, p_bg, r, acc, last_in, last_out
        cdef double* sp_p = b.sp_p
        cdef const int64_t* labs = &self.cand_lab[0]
        for v in range(self.n):
            c0 = self.cand_ptr[v]
            ncand = self.cand_ptr[v + 1] - c0
            if ncand == 1:
                continue
            nspec = self._collect(v, wb, b, &total_w)
            wv = wu[v]
            for i in range(nspec):
                sp_p[i] = wv * (1.0 - b.sp_obs[i]) + (total_w - b.sp_agree[i])
            e_min = sp_p[0]
            for i in range(1, nspec):
                if sp_p[i] < e_min:
                    e_min = sp_p[i]
            nbg = ncand - nspec
            e_bg = wv + total_w
            if nbg > 0 and e_bg < e_min:
                e_min = e_bg
            total = 0.0
            # uniform observations give runs of equal energies; reuse the exp
            last_in = 1.0
            last_out = exp(e_min - 1.0)
            for i in range(nspec):
                if sp_p[i] != last_in:
                    last_in = sp_p[i]
                    last_out = exp(e_min - last_in)
                sp_p[i] = last_out
                total += last_out
            p_bg = 0.0
            if nbg > 0:
                p_bg = <double>nbg * exp(e_min - e_bg)
                total += p_bg
            r = next_uniform(state) * total
            acc = 0.0
            chosen = -1
            for i in range(nspec):
                acc += sp_p[i]
                if r < acc:
                    chosen = i
                    break
            if chosen < 0 and nbg == 0:
                chosen = nspec - 1
            if chosen >= 0:
                if b.sp_lab[chosen] == b.cur[v]:
                    pos = h[v]
                else:
                    pos = self._position(v, b, chosen)
                    b.cur[v] = b.sp_lab[chosen]
            else:
                # uniform over non-special positions by rejection
                pos = <int64_t>(next_u64(state) % <uint64_t>ncand)
                while self._special(b, pos, labs[c0 + pos]) >= 0:
                    pos = <int64_t>(next_u64(state) % <uint64_t>ncand)
                b.cur[v] = labs[c0 + pos]
            self._release(nspec, b)
            h[v] = <int32_t>pos

    def icm_sweep(self, const double[::1] w_unary, const double[::1] w_binary, int32_t[::1] h):
        """Move every vertex to a minimum-energy label given its neighbors.

        Ties keep the current label, else take the smallest position.
        Returns the number of vertices that changed.
        """
        cdef Buffers b
        cdef int64_t changed
        memset(&b, 0, sizeof(Buffers))
        if self._alloc(&b) < 0:
            free_buffers(&b)
            raise MemoryError()
        self._init_cur(&b, &h[0])
        with nogil:
            changed = self._icm(&w_unary[0], &w_binary[0] if w_binary.shape[0] else NULL,
                                &h[0], &b)
        free_buffers(&b)
        return changed

    cdef int64_t _icm(self, const double* wu, const double* wb, int32_t* h,
                      Buffers* b) noexcept nogil:
        # candidate lists are sorted, so comparing labels compares positions
        cdef int64_t v, nspec, i, s, best, cur_lab
        cdef int64_t changed = 0
        cdef double wv, e, best_e, total_w
        for v in range(self.n):
            if self.cand_ptr[v + 1] - self.cand_ptr[v] == 1:
                continue
            nspec = self._collect(v, wb, b, &total_w)
            # total neighbor weight is common to every label and drops out
            wv = wu[v]
            cur_lab = b.cur[v]
            best = -1
            s = self._special(b, h[v], cur_lab)
            if s >= 0:
                best_e = wv * (1.0 - b.sp_obs[s]) - b.sp_agree[s]
            else:
                best_e = wv
            for i in range(nspec):
                e = wv * (1.0 - b.sp_obs[i]) - b.sp_agree[i]
                if e < best_e or (e == best_e and best >= 0 and b.sp_lab[i] < b.sp_lab[best]):
                    best = i
                    best_e = e
            if best >= 0 and b.sp_lab[best] != cur_lab:
                h[v] = <int32_t>self._position(v, b, best)
                b.cur[v] = b.sp_lab[best]
                changed += 1
            self._release(nspec, b)
        return changed
