# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled walker kernel; mirrors ctrw_fallback draw for draw."""

import numpy as np

cimport numpy as cnp
from libc.math cimport log

cdef extern from *:
    """
    #include <stdint.h>
    static inline uint64_t hl_mix(uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    """
    unsigned long long hl_mix(unsigned long long z) nogil

DEF PHI = 0x9E3779B97F4A7C15


cdef inline double _uniform(unsigned long long base, unsigned long long ctr) nogil:
    cdef unsigned long long z = hl_mix(base + (ctr + 1ULL) * <unsigned long long>PHI)
    return ((z >> 11) + 0.5) * (1.0 / 9007199254740992.0)


def simulate_counts(cnp.int64_t[::1] indptr, cnp.int64_t[::1] indices,
                    double[::1] rates, double[::1] total_rate,
                    long start, double t, long n_paths, unsigned long long seed):
    cdef cnp.int64_t n_cells = total_rate.shape[0]
    counts_arr = np.zeros(n_cells, dtype=np.int64)
    cdef cnp.int64_t[::1] counts = counts_arr
    cdef long p
    cdef cnp.int64_t pos, kk, chosen
    cdef unsigned long long base, ctr
    cdef double t_acc, R, u1, tau, target, acc
    with nogil:
        for p in range(n_paths):
            base = hl_mix(seed + (<unsigned long long>p + 1ULL) * <unsigned long long>PHI)
            ctr = 0
            pos = start
            t_acc = 0.0
            while True:
                R = total_rate[pos]
                if R <= 0.0:
                    break
                u1 = _uniform(base, ctr)
                ctr += 1
                tau = -log(u1) / R
                if t_acc + tau > t:
                    break
                t_acc += tau
                target = _uniform(base, ctr) * R
                ctr += 1
                acc = 0.0
                chosen = indices[indptr[pos + 1] - 1]
                for kk in range(indptr[pos], indptr[pos + 1]):
                    acc += rates[kk]
                    if acc >= target:
                        chosen = indices[kk]
                        break
                pos = chosen
            counts[pos] += 1
    return counts_arr
