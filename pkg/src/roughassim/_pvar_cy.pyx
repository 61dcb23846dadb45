# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernel for the p-variation dynamic program.

best[j] = max_{i<j} best[i] + |x(t_j) - x(t_i)|^p over all grid dissections;
returns best[n-1] (the p-th power is NOT undone here).
"""

import numpy as np

from libc.math cimport pow, sqrt


def pvar_max_sum(const double[:, ::1] values, double p):
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t d = values.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double s, diff, cand, best_j
    if n < 2:
        return 0.0
    cdef double[::1] best = np.zeros(n)
    for j in range(1, n):
        best_j = -1.0
        for i in range(j):
            s = 0.0
            for k in range(d):
                diff = values[j, k] - values[i, k]
                s += diff * diff
            cand = best[i] + pow(sqrt(s), p)
            if cand > best_j:
                best_j = cand
        best[j] = best_j
    return best[n - 1]
