"""Numpy fallback for the sign-enumeration kernel.

Same contract as the compiled module: for a (rows, n) matrix M,
``signed_max_values(M)[k] = max_r sum_i sign_i(k) * M[r, i]`` where
``sign_i(k)`` is +1 when bit i of k is set and -1 otherwise, for every
k in 0 .. 2^n - 1. Work proceeds in chunks of sign vectors so the full
2^n x n sign matrix never materializes.
"""

from __future__ import annotations

import numpy as np

BACKEND_ID = "python"

_CHUNK_BITS = 14


def signed_max_values(values: np.ndarray) -> np.ndarray:
    m = np.ascontiguousarray(values, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"expected a nonempty 2-D matrix, got shape {m.shape}")
    n = m.shape[1]
    if n > 30:
        raise ValueError("sign enumeration limited to n <= 30")
    total = 1 << n
    out = np.empty(total, dtype=np.float64)
    chunk = min(total, 1 << _CHUNK_BITS)
    bits = np.arange(n, dtype=np.uint64)
    for start in range(0, total, chunk):
        ks = np.arange(start, min(start + chunk, total), dtype=np.uint64)
        signs = (((ks[:, None] >> bits[None, :]) & 1).astype(np.float64)) * 2.0 - 1.0
        out[start : start + len(ks)] = (signs @ m.T).max(axis=1)
    return out
