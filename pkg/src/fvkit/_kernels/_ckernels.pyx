# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; same contracts and summation order as _pykernels."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint8_t, uint64_t, int64_t

cnp.import_array()


cdef uint64_t[6] _LOW_PATTERNS = [
    0xAAAAAAAAAAAAAAAAULL, 0xCCCCCCCCCCCCCCCCULL, 0xF0F0F0F0F0F0F0F0ULL,
    0xFF00FF00FF00FF00ULL, 0xFFFF0000FFFF0000ULL, 0xFFFFFFFF00000000ULL,
]


def failure_table(int n, ops, child_ptr, children, int top):
    # 64 states per word: events 0..5 vary inside a word, higher events per word
    cdef const uint8_t[:] op = np.ascontiguousarray(ops, dtype=np.uint8)
    cdef const int64_t[:] ptr = np.ascontiguousarray(child_ptr, dtype=np.int64)
    cdef const int64_t[:] kids = np.ascontiguousarray(children, dtype=np.int64)
    cdef Py_ssize_t n_gates = op.shape[0]
    cdef uint64_t n_states = (<uint64_t>1) << n
    out_arr = np.zeros(n_states, dtype=np.uint8)
    cdef uint8_t[:] out = out_arr
    cdef uint64_t[:] val = np.zeros(n + n_gates, dtype=np.uint64)
    cdef uint64_t n_words = (n_states + 63) >> 6
    cdef uint64_t w, j, word, v, lim
    cdef Py_ssize_t i, g, c
    for w in range(n_words):
        for i in range(n):
            if i < 6:
                val[i] = _LOW_PATTERNS[i]
            else:
                val[i] = <uint64_t>0 - ((w >> (i - 6)) & 1)
        for g in range(n_gates):
            if op[g] == 0:
                v = <uint64_t>0 - 1
                for c in range(ptr[g], ptr[g + 1]):
                    v &= val[kids[c]]
            else:
                v = 0
                for c in range(ptr[g], ptr[g + 1]):
                    v |= val[kids[c]]
            val[n + g] = v
        word = val[n + top]
        lim = 64 if n_states >= 64 else n_states
        for j in range(lim):
            out[(w << 6) + j] = (word >> j) & 1
    return out_arr


def minimal_states(fail, int n):
    cdef const uint8_t[:] f = np.ascontiguousarray(fail, dtype=np.uint8)
    cdef uint64_t n_states = (<uint64_t>1) << n
    cdef uint64_t s, bit
    cdef int i
    cdef bint ok
    found = []
    for s in range(n_states):
        if not f[s]:
            continue
        ok = True
        for i in range(n):
            bit = (<uint64_t>1) << i
            if (s & bit) and f[s ^ bit]:
                ok = False
                break
        if ok:
            found.append(s)
    return np.array(found, dtype=np.uint64)


def state_sums(q, cut_masks, fail, int n):
    cdef const double[:] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef const uint64_t[:] masks = np.ascontiguousarray(cut_masks, dtype=np.uint64)
    cdef const uint8_t[:] f = np.ascontiguousarray(fail, dtype=np.uint8)
    cdef Py_ssize_t k = masks.shape[0]
    cdef uint64_t n_states = (<uint64_t>1) << n
    num_arr = np.zeros(n, dtype=np.float64)
    cdef double[:] num = num_arr
    cdef double top = 0.0
    cdef double w
    cdef uint64_t s, covered, m
    cdef Py_ssize_t i, j
    # products over the low bits are tabulated; the multiplication order is
    # unchanged, so weights stay bit-identical to the numpy kernel
    cdef int low = n if n < 8 else 8
    cdef uint64_t low_mask = ((<uint64_t>1) << low) - 1
    cdef double[:] low_w = np.ones(1 << low, dtype=np.float64)
    cdef double[:] comp = np.empty(n, dtype=np.float64)
    for i in range(n):
        comp[i] = 1.0 - qv[i]
    for s in range(1 << low):
        for i in range(low):
            if (s >> i) & 1:
                low_w[s] *= qv[i]
            else:
                low_w[s] *= comp[i]
    for s in range(n_states):
        if not f[s]:
            continue
        w = low_w[s & low_mask]
        for i in range(low, n):
            if (s >> i) & 1:
                w *= qv[i]
            else:
                w *= comp[i]
        top += w
        covered = 0
        for j in range(k):
            m = masks[j]
            if (s & m) == m:
                covered |= m
        for i in range(n):
            if (covered >> i) & 1:
                num[i] += w
    return top, num_arr


def inclusion_exclusion(q, masks):
    cdef const double[:] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef const uint64_t[:] mk = np.ascontiguousarray(masks, dtype=np.uint64)
    cdef Py_ssize_t k = mk.shape[0]
    cdef Py_ssize_t n = qv.shape[0]
    if k == 0:
        return 0.0
    cdef uint64_t n_sub = (<uint64_t>1) << k
    cdef uint64_t[:] unions = np.zeros(n_sub, dtype=np.uint64)
    cdef uint8_t[:] parity = np.zeros(n_sub, dtype=np.uint8)
    cdef uint64_t S, low
    cdef int j
    cdef Py_ssize_t i
    cdef double acc = 0.0, p
    for S in range(1, n_sub):
        low = S & (~S + 1)
        j = 0
        while ((<uint64_t>1) << j) != low:
            j += 1
        unions[S] = unions[S ^ low] | mk[j]
        parity[S] = parity[S ^ low] ^ 1
        p = 1.0
        for i in range(n):
            if (unions[S] >> i) & 1:
                p = p * qv[i]
        if parity[S]:
            acc += p
        else:
            acc += -p
    return acc


def absorb(masks):
    cdef const uint64_t[:] mk = np.ascontiguousarray(masks, dtype=np.uint64)
    cdef Py_ssize_t n = mk.shape[0]
    cdef uint64_t[:] kept = np.zeros(n, dtype=np.uint64)
    cdef Py_ssize_t n_kept = 0, a, b
    cdef uint64_t m
    cdef bint dominated
    for a in range(n):
        m = mk[a]
        dominated = False
        for b in range(n_kept):
            if (kept[b] & m) == kept[b]:
                dominated = True
                break
        if not dominated:
            kept[n_kept] = m
            n_kept += 1
    return [int(kept[b]) for b in range(n_kept)]
