# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled sign-enumeration kernel.

Walks all 2^n sign vectors in Gray-code order so each step flips a single
sign and updates the per-row sums in O(rows) instead of O(rows * n).
Results land at their natural index (out[k] corresponds to the sign vector
whose i-th entry is +1 iff bit i of k is set), matching the numpy fallback.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_ID = "c"


def signed_max_values(values):
    m = np.ascontiguousarray(values, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"expected a nonempty 2-D matrix, got shape {m.shape}")
    if m.shape[1] > 30:
        raise ValueError("sign enumeration limited to n <= 30")
    out = np.empty(1 << m.shape[1], dtype=np.float64)
    _walk(m, out)
    return out


cdef void _walk(const double[:, ::1] m, double[::1] out) noexcept:
    cdef Py_ssize_t rows = m.shape[0]
    cdef Py_ssize_t n = m.shape[1]
    cdef unsigned long long total = (<unsigned long long>1) << n
    cdef unsigned long long j, gray, low
    cdef Py_ssize_t r, i, bit
    cdef double best, s
    cdef double[::1] sums = np.empty(rows, dtype=np.float64)
    cdef double sign

    # start at k = 0: every sign is -1
    for r in range(rows):
        s = 0.0
        for i in range(n):
            s -= m[r, i]
        sums[r] = s

    gray = 0
    best = sums[0]
    for r in range(1, rows):
        if sums[r] > best:
            best = sums[r]
    out[0] = best

    for j in range(1, total):
        low = j & (~j + 1)
        bit = 0
        while (low >> 1) != 0:
            low >>= 1
            bit += 1
        gray ^= (<unsigned long long>1) << bit
        if (gray >> bit) & 1:
            sign = 2.0
        else:
            sign = -2.0
        best = -1e308
        for r in range(rows):
            sums[r] = sums[r] + sign * m[r, bit]
            if sums[r] > best:
                best = sums[r]
        out[gray] = best
