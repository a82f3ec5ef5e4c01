"""Ghost/primary sample machinery: supersamples, sign mixing, learner output sets.

A learner is any callable ``learner(sample, seed) -> parameter vector`` where
``sample`` is an (n, d) array and ``seed`` feeds whatever internal randomness
the learner has. Within one output-set construction every sign mixing sees the
same seed, so the set is conditional on the learner's randomness.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from typing import Callable

import numpy as np

from .metric import Metric, PointCloud, dedup

__all__ = [
    "Distribution",
    "make_distribution",
    "Supersample",
    "draw_supersample",
    "sign_vector",
    "mix",
    "build_theta_hat",
    "build_theta_bar",
]

Learner = Callable[[np.ndarray, int], np.ndarray]

EXACT_N_LIMIT = 20
THETA_BAR_N_LIMIT = 6
DEFAULT_DEDUP_TOL = 1e-12


@dataclass(frozen=True)
class Distribution:
    """A sampling distribution on R^d with an identifier for reproducibility."""

    kind: str
    params: dict

    @property
    def dist_id(self) -> str:
        return json.dumps({"dist": self.kind, "params": self.params}, sort_keys=True)

    @property
    def dim(self) -> int:
        if self.kind in ("uniform_box", "trunc_gauss"):
            return len(self.params["box"])
        return np.asarray(self.params["points"]).shape[1]

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "uniform_box":
            box = np.asarray(self.params["box"], dtype=float)
            return rng.uniform(box[:, 0], box[:, 1], size=(size, box.shape[0]))
        if self.kind == "trunc_gauss":
            box = np.asarray(self.params["box"], dtype=float)
            mean = np.asarray(self.params.get("mean", box.mean(axis=1)), dtype=float)
            sigma = float(self.params.get("sigma", 1.0))
            out = np.empty((size, box.shape[0]))
            filled = 0
            while filled < size:
                batch = rng.normal(mean, sigma, size=(max(size - filled, 16), box.shape[0]))
                ok = np.all((batch >= box[:, 0]) & (batch <= box[:, 1]), axis=1)
                good = batch[ok]
                take = min(len(good), size - filled)
                out[filled : filled + take] = good[:take]
                filled += take
            return out
        if self.kind == "empirical":
            pts = np.asarray(self.params["points"], dtype=float)
            if pts.ndim == 1:
                pts = pts.reshape(-1, 1)
            idx = rng.integers(0, pts.shape[0], size=size)
            return pts[idx]
        raise ValueError(f"unknown distribution kind {self.kind!r}")

    def mean_var(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-coordinate mean and variance, for closed-form risks."""
        if self.kind == "uniform_box":
            box = np.asarray(self.params["box"], dtype=float)
            return box.mean(axis=1), (box[:, 1] - box[:, 0]) ** 2 / 12.0
        if self.kind == "empirical":
            pts = np.asarray(self.params["points"], dtype=float)
            if pts.ndim == 1:
                pts = pts.reshape(-1, 1)
            return pts.mean(axis=0), pts.var(axis=0)
        raise ValueError(f"no closed-form moments for {self.kind!r}")

    def support(self) -> np.ndarray:
        if self.kind != "empirical":
            raise ValueError("support() is defined for empirical distributions only")
        pts = np.asarray(self.params["points"], dtype=float)
        return pts.reshape(-1, 1) if pts.ndim == 1 else pts


def make_distribution(spec: dict) -> Distribution:
    """Parse the wire format {"dist": kind, "params": {...}}."""
    if "dist" not in spec:
        raise ValueError("distribution spec needs a 'dist' field")
    kind = spec["dist"]
    if kind not in ("uniform_box", "trunc_gauss", "empirical"):
        raise ValueError(f"unsupported distribution {kind!r}")
    return Distribution(kind=kind, params=dict(spec.get("params", {})))


@dataclass(frozen=True)
class Supersample:
    """Two independent same-size samples: s_minus is the ghost half."""

    s_minus: np.ndarray
    s_plus: np.ndarray
    seed: int
    dist_id: str

    @property
    def n(self) -> int:
        return self.s_minus.shape[0]


def draw_supersample(dist: Distribution, n: int, seed: int) -> Supersample:
    """2n i.i.d. draws split into halves; the first n are the ghost sample."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    both = dist.sample(rng, 2 * n)
    return Supersample(s_minus=both[:n].copy(), s_plus=both[n:].copy(), seed=seed, dist_id=dist.dist_id)


def sign_vector(index: int, n: int) -> np.ndarray:
    """Sign vector for enumeration index: entry i is +1 iff bit i of index is set."""
    bits = (index >> np.arange(n)) & 1
    return bits.astype(np.int8) * 2 - 1


def mix(ss: Supersample, sigma: np.ndarray) -> np.ndarray:
    """Position i takes the ghost entry when sigma[i] = -1, the primary when +1."""
    sigma = np.asarray(sigma)
    if sigma.shape != (ss.n,):
        raise ValueError(f"sign vector length {sigma.shape} does not match n={ss.n}")
    if not np.all(np.isin(sigma, (-1, 1))):
        raise ValueError("sign entries must be -1 or +1")
    take_plus = sigma > 0
    out = ss.s_minus.copy()
    out[take_plus] = ss.s_plus[take_plus]
    return out


def _sampled_sigma_indices(n: int, m: int, ss_seed: int, learner_seed: int) -> np.ndarray:
    """Deterministic selection of m sign-vector indices out of 2^n.

    Without replacement when m <= 2^(n-1) (and at most 2^n), with replacement
    above; seeded jointly by the supersample and learner seeds.
    """
    total = 1 << n
    rng = np.random.default_rng(np.random.SeedSequence([ss_seed & (2**63 - 1), learner_seed & (2**63 - 1), 1]))
    if m <= total // 2:
        return np.sort(rng.choice(total, size=m, replace=False))
    return np.sort(rng.integers(0, total, size=m))


def build_theta_hat(
    learner: Learner,
    ss: Supersample,
    mode: str = "exact",
    m: int | None = None,
    learner_seed: int = 0,
    tol: float = DEFAULT_DEDUP_TOL,
    metric: Metric = Metric.LINF,
) -> PointCloud:
    """Learner outputs over sign mixings of the supersample, deduplicated.

    mode="exact" runs all 2^n sign vectors in index order (n <= 20);
    mode="sampled" runs m seeded sign vectors and yields a flagged-by-caller
    inner subset of the exact set. The same ``learner_seed`` goes to every
    run, so randomized learners are frozen across mixings.
    """
    n = ss.n
    if mode == "exact":
        if n > EXACT_N_LIMIT:
            raise ValueError(f"exact mode enumerates 2^n sign vectors; n={n} exceeds {EXACT_N_LIMIT}")
        indices = np.arange(1 << n, dtype=np.int64)
    elif mode == "sampled":
        if m is None or m < 1:
            raise ValueError("sampled mode needs m >= 1")
        indices = _sampled_sigma_indices(n, m, ss.seed, learner_seed)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if hasattr(learner, "outputs_for_mixings"):
        # vectorized fast path; must agree with the per-mixing loop exactly
        outputs = learner.outputs_for_mixings(ss, indices, learner_seed)
    else:
        outputs = np.asarray(
            [learner(mix(ss, sign_vector(int(k), n)), learner_seed) for k in indices], dtype=float
        )
    return dedup(outputs, metric, tol)


def build_theta_bar(
    learner: Learner,
    ss: Supersample,
    learner_seed: int = 0,
    tol: float = DEFAULT_DEDUP_TOL,
    metric: Metric = Metric.LINF,
) -> PointCloud:
    """Learner outputs over every size-n subset of the 2n supersample points.

    Points are interleaved (ghost_1, primary_1, ghost_2, primary_2, ...) and
    subsets keep that order, so every sign-mixed sample appears among the
    subsets and the exact sign-mixing set is always contained in this one.
    """
    n = ss.n
    if n > THETA_BAR_N_LIMIT:
        raise ValueError(f"theta-bar enumerates C(2n, n) subsets; n={n} exceeds {THETA_BAR_N_LIMIT}")
    pool = np.empty((2 * n, ss.s_minus.shape[1]))
    pool[0::2] = ss.s_minus
    pool[1::2] = ss.s_plus
    outputs = [
        learner(pool[list(comb)], learner_seed) for comb in combinations(range(2 * n), n)
    ]
    return dedup(np.asarray(outputs, dtype=float), metric, tol)
