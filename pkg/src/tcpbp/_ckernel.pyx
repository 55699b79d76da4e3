# Compiled twin of _pykernel.py. Keep the two in lock-step.
from libc.stdlib cimport malloc, free

import numpy as np

NAME = "cython"

DEF MAX_EXACT = 64


cdef void _select(const long long[:, ::1] U, const long long[:, ::1] V,
                  const double[::1] K, const long long[::1] src,
                  const long long[::1] dst, const unsigned char[:, ::1] adm,
                  const double[::1] fkey, long long[::1] flows, double[::1] diffs) noexcept nogil:
    cdef Py_ssize_t L = src.shape[0], S = fkey.shape[0]
    cdef Py_ssize_t l, s, i, j
    cdef long long bs
    cdef double best, d, k, u
    for l in range(L):
        i = src[l]
        j = dst[l]
        k = K[i]
        best = 0.0
        bs = -1
        for s in range(S):
            if not adm[l, s] or U[i, s] <= 0:
                continue
            u = <double>U[i, s]
            d = (k if k > u else u) - <double>V[j, s]
            if bs < 0 or d > best or (d == best and fkey[s] < fkey[bs]):
                best = d
                bs = s
        flows[l] = bs
        diffs[l] = best if bs >= 0 else 0.0


def select_flows(U, V, K, src, dst, adm, flow_key):
    cdef Py_ssize_t L = src.shape[0]
    flows = np.empty(L, dtype=np.int64)
    diffs = np.empty(L, dtype=np.float64)
    _select(U, V, K, src, dst, adm, flow_key, flows, diffs)
    return flows.tolist(), diffs.tolist()


cdef struct Search:
    int n
    int *cand
    double *w
    double *suffix
    long long *src
    long long *dst
    char *used
    int *cur
    int ncur
    int *best
    int nbest
    double best_w


cdef void _dfs(Search *st, int k, double cur_w) noexcept nogil:
    cdef int l, m
    cdef long long a, b
    if cur_w + st.suffix[k] <= st.best_w:
        return
    if k == st.n:
        st.best_w = cur_w
        for m in range(st.ncur):
            st.best[m] = st.cur[m]
        st.nbest = st.ncur
        return
    l = st.cand[k]
    a = st.src[l]
    b = st.dst[l]
    if not st.used[a] and not st.used[b]:
        st.used[a] = 1
        st.used[b] = 1
        st.cur[st.ncur] = l
        st.ncur += 1
        _dfs(st, k + 1, cur_w + st.w[k])
        st.ncur -= 1
        st.used[a] = 0
        st.used[b] = 0
    _dfs(st, k + 1, cur_w)


cdef inline bint _before_key(double ka, int la, double kb, int lb) noexcept nogil:
    return ka < kb or (ka == kb and la < lb)


cdef inline bint _before_greedy(double wa, double ka, int la,
                                double wb, double kb, int lb) noexcept nogil:
    if wa != wb:
        return wa > wb
    return _before_key(ka, la, kb, lb)


cdef tuple _activate(long long[::1] src, long long[::1] dst, double[::1] weight,
                     const unsigned char[::1] on, const double[::1] lkey,
                     int n_nodes, int exact_limit):
    cdef Py_ssize_t L = src.shape[0]
    cdef int n_on = 0, n = 0, l, k, m, c
    cdef int *cand = <int *> malloc(max(L, 1) * sizeof(int))
    cdef char *used = <char *> malloc(max(n_nodes, 1) * sizeof(char))
    cdef double *w
    cdef double *suffix
    cdef int *cur
    cdef int *best
    cdef Search st
    cdef list chosen = []
    cdef bint exact
    for m in range(n_nodes):
        used[m] = 0
    for l in range(L):
        if on[l]:
            n_on += 1
            if weight[l] > 0.0:
                cand[n] = l
                n += 1
    exact = n_on <= exact_limit and n <= MAX_EXACT
    try:
        if not exact:
            # insertion sort by (-weight, key, id)
            for k in range(1, n):
                c = cand[k]
                m = k - 1
                while m >= 0 and _before_greedy(weight[c], lkey[c], c,
                                                weight[cand[m]], lkey[cand[m]], cand[m]):
                    cand[m + 1] = cand[m]
                    m -= 1
                cand[m + 1] = c
            for k in range(n):
                l = cand[k]
                if not used[src[l]] and not used[dst[l]]:
                    used[src[l]] = 1
                    used[dst[l]] = 1
                    chosen.append(l)
        else:
            for k in range(1, n):
                c = cand[k]
                m = k - 1
                while m >= 0 and _before_key(lkey[c], c, lkey[cand[m]], cand[m]):
                    cand[m + 1] = cand[m]
                    m -= 1
                cand[m + 1] = c
            w = <double *> malloc((n + 1) * sizeof(double))
            suffix = <double *> malloc((n + 1) * sizeof(double))
            cur = <int *> malloc((n + 1) * sizeof(int))
            best = <int *> malloc((n + 1) * sizeof(int))
            try:
                for k in range(n):
                    w[k] = weight[cand[k]]
                suffix[n] = 0.0
                for k in range(n - 1, -1, -1):
                    suffix[k] = suffix[k + 1] + w[k]
                st.n = n
                st.cand = cand
                st.w = w
                st.suffix = suffix
                st.src = &src[0]
                st.dst = &dst[0]
                st.used = used
                st.cur = cur
                st.ncur = 0
                st.best = best
                st.nbest = 0
                st.best_w = 0.0
                _dfs(&st, 0, 0.0)
                for k in range(st.nbest):
                    chosen.append(best[k])
            finally:
                free(w)
                free(suffix)
                free(cur)
                free(best)
    finally:
        free(cand)
        free(used)
    chosen.sort()
    return chosen, exact


def activate(src, dst, weight, on, link_key, n_nodes, exact_limit):
    """Max-weight node-exclusive activation; returns (sorted link ids, exact?)."""
    return _activate(
        np.ascontiguousarray(src, dtype=np.int64),
        np.ascontiguousarray(dst, dtype=np.int64),
        np.ascontiguousarray(weight, dtype=np.float64),
        np.ascontiguousarray(on, dtype=np.uint8),
        np.ascontiguousarray(link_key, dtype=np.float64),
        n_nodes, exact_limit,
    )


def decide(U, V, K, src, dst, rate, on, adm, flow_key, link_key, int n_nodes, int exact_limit):
    cdef Py_ssize_t L = src.shape[0], l
    flows = np.empty(L, dtype=np.int64)
    diffs = np.empty(L, dtype=np.float64)
    weight = np.empty(L, dtype=np.float64)
    cdef long long[::1] fv = flows
    cdef double[::1] dv = diffs
    cdef double[::1] wv = weight
    cdef const double[::1] rv = rate
    _select(U, V, K, src, dst, adm, flow_key, fv, dv)
    for l in range(L):
        wv[l] = dv[l] * rv[l] if fv[l] >= 0 and dv[l] > 0.0 else 0.0
    active, exact = _activate(src, dst, wv, on, link_key, n_nodes, exact_limit)
    return flows.tolist(), diffs.tolist(), active, exact


cdef class Decider:
    """``decide`` with the per-scenario arrays bound once."""
    cdef const long long[::1] src_v
    cdef const long long[::1] dst_v
    cdef long long[::1] src_m
    cdef long long[::1] dst_m
    cdef const double[::1] K
    cdef const unsigned char[:, ::1] adm
    cdef int n_nodes, exact_limit
    cdef object flows, diffs, weight
    cdef long long[::1] fv
    cdef double[::1] dv, wv

    cdef const double[:, ::1] rank
    cdef bint ranked
    cdef object keys
    cdef double[::1] kv

    def __init__(self, K, src, dst, adm, int n_nodes, int exact_limit, rank=None):
        src = np.array(src, dtype=np.int64)
        dst = np.array(dst, dtype=np.int64)
        self.src_v = src
        self.dst_v = dst
        self.src_m = src
        self.dst_m = dst
        self.K = np.ascontiguousarray(K, dtype=np.float64)
        self.adm = np.ascontiguousarray(adm, dtype=np.uint8)
        self.n_nodes = n_nodes
        self.exact_limit = exact_limit
        L = src.shape[0]
        self.flows = np.empty(L, dtype=np.int64)
        self.diffs = np.empty(L, dtype=np.float64)
        self.weight = np.empty(L, dtype=np.float64)
        self.fv = self.flows
        self.dv = self.diffs
        self.wv = self.weight
        self.ranked = rank is not None
        if self.ranked:
            self.rank = np.ascontiguousarray(rank, dtype=np.float64)
        self.keys = np.empty(L, dtype=np.float64)
        self.kv = self.keys

    def decide(self, U, V, rate, on, flow_key, link_key):
        cdef const double[::1] rv = rate
        cdef const double[::1] lk = link_key
        cdef Py_ssize_t l
        _select(U, V, self.K, self.src_v, self.dst_v, self.adm, flow_key, self.fv, self.dv)
        for l in range(self.fv.shape[0]):
            self.wv[l] = self.dv[l] * rv[l] if self.fv[l] >= 0 and self.dv[l] > 0.0 else 0.0
            self.kv[l] = lk[l]
            if self.ranked and self.fv[l] >= 0:
                self.kv[l] += self.rank[l, self.fv[l]]
        active, exact = _activate(self.src_m, self.dst_m, self.wv, on, self.kv,
                                  self.n_nodes, self.exact_limit)
        return self.flows.tolist(), self.diffs.tolist(), active, exact
