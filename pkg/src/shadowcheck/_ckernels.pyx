# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t, uint64_t

cnp.import_array()


cdef inline int _popcount(uint64_t v) noexcept nogil:
    cdef int c = 0
    while v:
        v &= v - 1
        c += 1
    return c


def compositions(int64_t total, int64_t parts):
    if parts < 1 or total < 0:
        raise ValueError("need parts >= 1 and total >= 0")
    from math import comb
    cdef int64_t count = comb(total + parts - 1, parts - 1)
    out = np.zeros((count, parts), dtype=np.int64)
    cdef int64_t[:, ::1] o = out
    cdef int64_t[::1] cur = np.zeros(parts, dtype=np.int64)
    cdef int64_t row = 0, k, last, i, tail
    cur[parts - 1] = total
    with nogil:
        while True:
            for k in range(parts):
                o[row, k] = cur[k]
            row += 1
            if row == count:
                break
            last = parts - 1
            while cur[last] == 0:
                last -= 1
            i = last - 1
            tail = cur[last] - 1
            cur[i] += 1
            for k in range(i + 1, parts):
                cur[k] = 0
            cur[parts - 1] = tail
    return out


def local_values(bases, outcomes, cnp.ndarray table):
    cdef int64_t[:, ::1] b = np.ascontiguousarray(bases, dtype=np.int64)
    cdef int64_t[:, ::1] o = np.ascontiguousarray(outcomes, dtype=np.int64)
    cdef double complex[:, :, ::1] t = np.ascontiguousarray(table, dtype=np.complex128)
    cdef Py_ssize_t nrec = b.shape[0], nsite = b.shape[1], l, s
    out = np.empty(nrec, dtype=np.complex128)
    cdef double complex[::1] res = out
    cdef double complex acc
    with nogil:
        for l in range(nrec):
            acc = 1.0
            for s in range(nsite):
                acc = acc * t[s, b[l, s], o[l, s]]
                if acc == 0:
                    break
            res[l] = acc
    return out


def pauli_apply(vec, uint64_t xmask, uint64_t zmask):
    cdef double complex[::1] v = np.ascontiguousarray(vec, dtype=np.complex128)
    cdef Py_ssize_t n = v.shape[0], j
    out = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] r = out
    cdef double complex phase
    cdef int k = _popcount(xmask & zmask) % 4
    if k == 0:
        phase = 1
    elif k == 1:
        phase = 1j
    elif k == 2:
        phase = -1
    else:
        phase = -1j
    with nogil:
        for j in range(n):
            if _popcount(<uint64_t>j & zmask) & 1:
                r[<uint64_t>j ^ xmask] = -phase * v[j]
            else:
                r[<uint64_t>j ^ xmask] = phase * v[j]
    return out


def frontier_mask(prev_keys, cand_keys):
    cdef int64_t[::1] p = np.ascontiguousarray(prev_keys, dtype=np.int64)
    cdef int64_t[::1] c = np.ascontiguousarray(cand_keys, dtype=np.int64)
    cdef Py_ssize_t np_ = p.shape[0], nc = c.shape[0], i, lo, hi, mid
    cdef int64_t kmin, kmax, span
    out = np.zeros(nc, dtype=np.bool_)
    cdef cnp.npy_bool[::1] m = out
    if np_ == 0 or nc == 0:
        return out
    kmin = p[0]
    kmax = p[np_ - 1]
    span = kmax - kmin + 1
    cdef cnp.npy_bool[::1] table
    if span <= 8 * (np_ + nc) + 1024:
        # dense keys: direct lookup table
        table_arr = np.zeros(span, dtype=np.bool_)
        table = table_arr
        with nogil:
            for i in range(np_):
                table[p[i] - kmin] = 1
            for i in range(nc):
                if kmin <= c[i] <= kmax and table[c[i] - kmin]:
                    m[i] = 1
        return out
    with nogil:
        for i in range(nc):
            lo = 0
            hi = np_
            while lo < hi:
                mid = (lo + hi) >> 1
                if p[mid] < c[i]:
                    lo = mid + 1
                else:
                    hi = mid
            if lo < np_ and p[lo] == c[i]:
                m[i] = 1
    return out


def bucket_match(left, right):
    cdef int64_t[::1] a = np.ascontiguousarray(left, dtype=np.int64)
    cdef int64_t[::1] b = np.ascontiguousarray(right, dtype=np.int64)
    if a.shape[0] != b.shape[0]:
        return None
    cdef Py_ssize_t n = a.shape[0], i
    if n == 0:
        return np.empty(0, dtype=np.int64)
    cdef int64_t lo = min(np.min(a), np.min(b)), hi = max(np.max(a), np.max(b))
    cdef Py_ssize_t nl = hi - lo + 1
    cdef int64_t[::1] start = np.zeros(nl + 1, dtype=np.int64)
    cdef int64_t[::1] order = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] fill = np.zeros(nl, dtype=np.int64)
    perm_arr = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] perm = perm_arr
    cdef int64_t lab, pos
    for i in range(n):
        start[b[i] - lo + 1] += 1
    for i in range(nl):
        start[i + 1] += start[i]
    for i in range(n):
        lab = b[i] - lo
        order[start[lab] + fill[lab]] = i
        fill[lab] += 1
    for i in range(nl):
        fill[i] = 0
    for i in range(n):
        lab = a[i] - lo
        if lab < 0 or lab >= nl:
            return None
        pos = start[lab] + fill[lab]
        if pos >= start[lab + 1]:
            return None
        perm[i] = order[pos]
        fill[lab] += 1
    return perm_arr


def alias_table(weights):
    """Walker alias table ``(prob, alias)``; same construction as the fallback."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w = np.ascontiguousarray(weights, dtype=np.float64).ravel()
    cdef Py_ssize_t n = w.shape[0]
    if n == 0:
        raise ValueError("weights must have a positive sum")
    cdef double total = w.sum()
    if not total > 0:
        raise ValueError("weights must have a positive sum")
    cdef cnp.ndarray[cnp.float64_t, ndim=1] scaled = w * (n / total)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] prob = np.ones(n, dtype=np.float64)
    cdef cnp.ndarray[int64_t, ndim=1] alias = np.arange(n, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] small = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] large = np.empty(n, dtype=np.int64)
    cdef Py_ssize_t ns = 0, nl = 0, i
    cdef int64_t s, g
    for i in range(n):
        if scaled[i] < 1.0:
            small[ns] = i
            ns += 1
    for i in range(n):
        if scaled[i] >= 1.0:
            large[nl] = i
            nl += 1
    while ns > 0 and nl > 0:
        ns -= 1
        s = small[ns]
        g = large[nl - 1]
        prob[s] = scaled[s]
        alias[s] = g
        scaled[g] = (scaled[g] + scaled[s]) - 1.0
        if scaled[g] < 1.0:
            nl -= 1
            small[ns] = g
            ns += 1
    return prob, alias
