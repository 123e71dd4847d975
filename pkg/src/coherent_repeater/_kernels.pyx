# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Monte Carlo and Z_N tail kernels (mirror of _fallback.py)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, log1p, expm1, exp, floor, INFINITY
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double TWO_POW_M53 = 1.0 / 9007199254740992.0


cdef inline uint64_t rotl(uint64_t x, int k) nogil:
    return (x << k) | (x >> (64 - k))


cdef inline uint64_t splitmix(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline void seed_stream(uint64_t* s, uint64_t seed, uint64_t stream) nogil:
    cdef int i
    for i in range(4):
        s[i] = splitmix(seed + (4 * stream + i + 1) * GOLDEN)


cdef inline double next_double(uint64_t* s) nogil:
    cdef uint64_t result = rotl(s[1] * 5, 7) * 9
    cdef uint64_t t = s[1] << 17
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = rotl(s[3], 45)
    return (result >> 11) * TWO_POW_M53


def z_tail_sum(int N, double P, double tol=1e-12):
    cdef double log_q = log1p(-P)
    cdef double total = 1.0, comp = 0.0, term, y, s
    cdef long long t = 1
    with nogil:
        while True:
            term = -expm1(N * log(-expm1(t * log_q)))
            y = term - comp
            s = total + y
            comp = (s - total) - y
            total = s
            if term / P < tol * total:
                break
            t += 1
    return total


def cycle_trials(int N, double p, object seed, long long start, long long count):
    cdef uint64_t useed = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef double log_q = log1p(-p) if p < 1.0 else -INFINITY
    cdef cnp.ndarray[int64_t] mx = np.zeros(count, dtype=np.int64)
    cdef cnp.ndarray[int64_t] sm = np.zeros(count, dtype=np.int64)
    cdef cnp.ndarray[int64_t] sq = np.zeros(count, dtype=np.int64)
    cdef uint64_t s[4]
    cdef long long i
    cdef int k
    cdef int64_t g
    cdef double u
    with nogil:
        for i in range(count):
            seed_stream(s, useed, <uint64_t>(start + i))
            for k in range(N):
                u = next_double(s)
                g = <int64_t>(1.0 + floor(log(1.0 - u) / log_q))
                if g > mx[i]:
                    mx[i] = g
                sm[i] += g
                sq[i] += g * g
    return mx, sm, sq


def pumping_trials(int N, double p_dist, object round_success, object seed, long long start, long long count):
    cdef uint64_t useed = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef cnp.ndarray[double] rs = np.ascontiguousarray(round_success, dtype=np.float64)
    cdef int k = rs.shape[0]
    cdef cnp.ndarray[int64_t] mx = np.zeros(count, dtype=np.int64)
    cdef cnp.ndarray[int64_t] sm = np.zeros(count, dtype=np.int64)
    cdef cnp.ndarray[int64_t] sq = np.zeros(count, dtype=np.int64)
    cdef cnp.ndarray[int64_t] fp = np.zeros(count, dtype=np.int64)
    cdef uint64_t s[4]
    cdef long long i
    cdef int seg, n
    cdef int64_t attempts
    cdef bint first, ok
    with nogil:
        for i in range(count):
            seed_stream(s, useed, <uint64_t>(start + i))
            for seg in range(N):
                attempts = 0
                first = True
                while True:
                    while True:
                        attempts += 1
                        if next_double(s) < p_dist:
                            break
                        first = False
                    ok = True
                    for n in range(k):
                        while True:
                            attempts += 1
                            if next_double(s) < p_dist:
                                break
                            first = False
                        if not next_double(s) < rs[n]:
                            ok = False
                            first = False
                            break
                    if ok:
                        break
                if attempts > mx[i]:
                    mx[i] = attempts
                sm[i] += attempts
                sq[i] += attempts * attempts
                if first:
                    fp[i] += 1
    return mx, sm, sq, fp
