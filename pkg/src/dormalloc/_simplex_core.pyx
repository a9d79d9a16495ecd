# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled simplex pivot loop.

Twin of _simplex_py.run_pivots: identical pivot rules and identical
floating-point operation order (build with -ffp-contract=off so the C
compiler does not fuse multiply-adds that numpy keeps separate).
"""

import numpy as np

cimport numpy as cnp

STATUS_OPTIMAL = 0
STATUS_UNBOUNDED = 1
STATUS_PIVOT_LIMIT = 2


def run_pivots(cnp.ndarray[cnp.float64_t, ndim=2] T,
               cnp.ndarray[cnp.int64_t, ndim=1] basis,
               double tol, long bland_after, long max_pivots):
    cdef long nrows = T.shape[0] - 1
    cdef long last = T.shape[1] - 1
    cdef long pivots = 0
    cdef long i, j, r, c, tie_row
    cdef double best, ratio, rmin, piv, f
    cdef long tie_basis

    while True:
        # entering column
        j = -1
        if pivots >= bland_after:
            for c in range(last):
                if T[nrows, c] < -tol:
                    j = c
                    break
            if j < 0:
                return STATUS_OPTIMAL, pivots
        else:
            best = T[nrows, 0]
            j = 0
            for c in range(1, last):
                if T[nrows, c] < best:
                    best = T[nrows, c]
                    j = c
            if best >= -tol:
                return STATUS_OPTIMAL, pivots
        if pivots >= max_pivots:
            return STATUS_PIVOT_LIMIT, pivots

        # ratio test; ties to the lowest basic-column index
        i = -1
        rmin = 0.0
        tie_basis = 0
        for r in range(nrows):
            if T[r, j] > tol:
                ratio = T[r, last] / T[r, j]
                if i < 0 or ratio < rmin:
                    i = r
                    rmin = ratio
                    tie_basis = basis[r]
                elif ratio == rmin and basis[r] < tie_basis:
                    i = r
                    tie_basis = basis[r]
        if i < 0:
            return STATUS_UNBOUNDED, pivots

        piv = T[i, j]
        for c in range(last + 1):
            T[i, c] /= piv
        for r in range(nrows + 1):
            if r == i:
                continue
            f = T[r, j]
            for c in range(last + 1):
                T[r, c] -= f * T[i, c]
        for r in range(nrows + 1):
            T[r, j] = 0.0
        T[i, j] = 1.0
        basis[i] = j
        pivots += 1
