"""Empirical Rademacher complexity of a finite loss matrix.

Exact enumeration over all 2^n sign vectors (compiled kernel when available),
a seeded Monte Carlo estimator, the finite-class log bound, and the
covering-number bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fractal import covering_number
from .kernels import get_kernel
from .metric import PointCloud

__all__ = [
    "LossMatrix",
    "RadEstimate",
    "rademacher_exact",
    "rademacher_mc",
    "massart_bound",
    "covering_rad_bound",
]

DEFAULT_EXACT_N_LIMIT = 20
_RANGE_SLACK = 1e-9


@dataclass(frozen=True)
class LossMatrix:
    """Loss values: rows are parameters, columns are sample points.

    Entries must lie in [range_a, range_a + range_b]; range_b is the loss
    range width used by the probabilistic bounds.
    """

    values: np.ndarray
    range_a: float
    range_b: float

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(f"loss matrix must be 2-D and nonempty, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("loss matrix entries must be finite")
        if self.range_b <= 0:
            raise ValueError("range_b must be positive")
        slack = _RANGE_SLACK * max(1.0, abs(self.range_a) + self.range_b)
        if v.min() < self.range_a - slack or v.max() > self.range_a + self.range_b + slack:
            raise ValueError(
                f"entries in [{v.min():g}, {v.max():g}] fall outside the declared range "
                f"[{self.range_a:g}, {self.range_a + self.range_b:g}]"
            )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class RadEstimate:
    value: float
    stderr: float
    mode: str  # "exact" | "mc"
    draws: int


def rademacher_exact(
    M: LossMatrix,
    exact_n_limit: int = DEFAULT_EXACT_N_LIMIT,
    backend: str | None = None,
) -> RadEstimate:
    """(1/n) * average over all 2^n sign vectors of the max row correlation.

    Deterministic; refuses n above ``exact_n_limit`` (use the Monte Carlo
    estimator there). Nonnegative for every matrix: the max dominates each
    fixed row, whose expected correlation is zero.
    """
    n = M.n
    if n > exact_n_limit:
        raise ValueError(f"n={n} exceeds exact enumeration limit {exact_n_limit}; use rademacher_mc")
    kern = get_kernel(backend)
    vals = kern.signed_max_values(M.values)
    value = float(vals.sum()) / len(vals) / n
    return RadEstimate(value=value, stderr=0.0, mode="exact", draws=1 << n)


def rademacher_mc(
    M: LossMatrix,
    draws: int,
    seed: int,
    chunk: int = 4096,
) -> RadEstimate:
    """Monte Carlo estimate over ``draws`` uniform sign vectors.

    PRNG: numpy default_rng (PCG64) seeded with ``seed``; signs are consumed
    as chunks of (chunk, n) integer draws in order, so results are
    bit-reproducible for fixed (seed, draws).
    """
    if draws < 2:
        raise ValueError("need at least 2 draws for a standard error")
    rng = np.random.default_rng(seed)
    v = M.values
    n = M.n
    maxima = np.empty(draws, dtype=np.float64)
    done = 0
    while done < draws:
        take = min(chunk, draws - done)
        signs = rng.integers(0, 2, size=(take, n)).astype(np.float64) * 2.0 - 1.0
        maxima[done : done + take] = (signs @ v.T).max(axis=1)
        done += take
    maxima /= n
    value = float(maxima.mean())
    stderr = float(maxima.std(ddof=1) / math.sqrt(draws))
    return RadEstimate(value=value, stderr=stderr, mode="mc", draws=draws)


def massart_bound(rows: int, b: float, n: int) -> float:
    """Finite-class bound b * sqrt(2 ln(rows) / n); 0 for a single row."""
    if rows < 1:
        raise ValueError("rows must be >= 1")
    return b * math.sqrt(2.0 * math.log(rows) / n)


def covering_rad_bound(
    cloud: PointCloud,
    L: float,
    b: float,
    n: int,
    eps_grid: list[float],
    exact_limit: int = 20,
) -> tuple[float, float]:
    """Minimize L*eps + b*sqrt(2 ln N(cloud, eps) / n) over the grid.

    Returns (best_eps, best_bound). Depends on the cloud, the Lipschitz
    constant, the loss range and n only; covering numbers come from the
    fractal module (greedy upper bounds above ``exact_limit`` only make the
    bound larger, never invalid).
    """
    if not eps_grid:
        raise ValueError("eps grid must be nonempty")
    best_eps, best_val = None, None
    for eps in eps_grid:
        cnt = covering_number(cloud, float(eps), exact_limit).count
        val = L * eps + b * math.sqrt(2.0 * math.log(cnt) / n)
        if best_val is None or val < best_val:
            best_eps, best_val = float(eps), float(val)
    return best_eps, best_val
