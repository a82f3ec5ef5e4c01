"""Loss models and concrete learners: projected SGD, grid ERM, compression, thresholds.

Learners follow the ``learner(sample, seed) -> parameter vector`` protocol from
the supersample module and are deterministic given (sample, seed); every tie
is broken by lowest index or lexicographic order so exact output-set equality
tests are meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .metric import PointCloud

__all__ = [
    "Box",
    "Ball",
    "project",
    "domain_diameter",
    "LossModel",
    "quadratic_loss",
    "contraction_factor",
    "forgetting_depth",
    "SgdSpec",
    "sgd_run",
    "make_sgd_learner",
    "erm_finite",
    "make_erm_learner",
    "compress_k",
    "make_compression_learner",
    "vc_threshold_erm",
    "make_threshold_learner",
    "ThresholdLoss",
]

_CHECK_PAIRS = 1000
_CHECK_TOL = 1e-9
_GRAD_RTOL = 1e-5


@dataclass(frozen=True)
class Box:
    bounds: np.ndarray  # (d, 2): low, high per coordinate

    def __post_init__(self):
        b = np.asarray(self.bounds, dtype=float)
        if b.ndim != 2 or b.shape[1] != 2 or np.any(b[:, 0] > b[:, 1]):
            raise ValueError("box bounds must be (d, 2) with low <= high")
        object.__setattr__(self, "bounds", b)


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        if self.radius <= 0:
            raise ValueError("ball radius must be positive")
        object.__setattr__(self, "center", c)


def project(domain: Box | Ball, theta: np.ndarray) -> np.ndarray:
    """Exact projection: coordinate clamp on a box, radial rescale on a ball."""
    if isinstance(domain, Box):
        return np.clip(theta, domain.bounds[:, 0], domain.bounds[:, 1])
    diff = theta - domain.center
    norm = float(np.sqrt(np.dot(diff, diff)))
    if norm <= domain.radius:
        return theta.copy()
    return domain.center + diff * (domain.radius / norm)


def domain_diameter(domain: Box | Ball) -> float:
    """Euclidean diameter of the projection domain."""
    if isinstance(domain, Box):
        w = domain.bounds[:, 1] - domain.bounds[:, 0]
        return float(np.sqrt(np.dot(w, w)))
    return 2.0 * domain.radius


def _domain_sampler(domain: Box | Ball) -> Callable[[np.random.Generator], np.ndarray]:
    if isinstance(domain, Box):
        return lambda rng: rng.uniform(domain.bounds[:, 0], domain.bounds[:, 1])

    def sample_ball(rng: np.random.Generator) -> np.ndarray:
        while True:
            x = rng.uniform(-1.0, 1.0, size=domain.center.shape[0])
            if np.dot(x, x) <= 1.0:
                return domain.center + domain.radius * x

    return sample_ball


@dataclass
class LossModel:
    """A loss with gradient and declared constants, spot-checked at construction.

    eval(theta, z) must stay within [a + h(theta), a + b + h(theta)] on the
    declared domains; alpha/beta are the strong-convexity and smoothness
    moduli, L the (weak-)Lipschitz constant in theta (Euclidean norm). The
    optional ``risk_matrix`` hook evaluates a (thetas, zs) loss matrix in one
    vectorized call; the default falls back to looping over eval.
    """

    eval: Callable[[np.ndarray, np.ndarray], float]
    grad: Callable[[np.ndarray, np.ndarray], np.ndarray]
    L: float
    a: float
    b: float
    alpha: float
    beta: float
    theta_domain: Box | Ball
    z_domain: Box | Ball
    h: Callable[[np.ndarray], float] | None = None
    risk_matrix: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    true_risk: Callable[[np.ndarray, object], float] | None = None  # (theta, distribution)
    validate: bool = True
    check_pairs: int = _CHECK_PAIRS

    def __post_init__(self):
        if self.b <= 0:
            raise ValueError("loss range width b must be positive")
        if not (0 < self.alpha <= self.beta):
            raise ValueError("need 0 < alpha <= beta")
        if self.validate:
            self._spot_check()

    def _offset(self, theta: np.ndarray) -> float:
        return self.h(theta) if self.h is not None else 0.0

    def _spot_check(self) -> None:
        rng = np.random.default_rng(1234)
        draw_theta = _domain_sampler(self.theta_domain)
        draw_z = _domain_sampler(self.z_domain)
        for _ in range(self.check_pairs):
            th, th2 = draw_theta(rng), draw_theta(rng)
            z = draw_z(rng)
            v = self.eval(th, z)
            off = self._offset(th)
            if not (self.a + off - _CHECK_TOL <= v <= self.a + self.b + off + _CHECK_TOL):
                raise ValueError(f"loss value {v:g} escapes declared range at a random pair")
            g, g2 = self.grad(th, z), self.grad(th2, z)
            dtheta = th - th2
            sq = float(np.dot(dtheta, dtheta))
            if float(np.dot(g - g2, dtheta)) < self.alpha * sq - _CHECK_TOL:
                raise ValueError("strong convexity check failed at a random pair")
            if float(np.linalg.norm(g - g2)) > self.beta * math.sqrt(sq) + _CHECK_TOL:
                raise ValueError("smoothness check failed at a random pair")
            centered = (v - off) - (self.eval(th2, z) - self._offset(th2))
            if abs(centered) > self.L * math.sqrt(sq) + _CHECK_TOL:
                raise ValueError("Lipschitz check failed at a random pair")
            step = 1e-6
            for d in range(th.shape[0]):
                e = np.zeros_like(th)
                e[d] = step
                lo, hi = th - e, th + e
                # only probe where both finite-difference points stay in the domain
                if not (np.array_equal(project(self.theta_domain, lo), lo)
                        and np.array_equal(project(self.theta_domain, hi), hi)):
                    continue
                fd = (self.eval(hi, z) - self.eval(lo, z)) / (2.0 * step)
                if abs(fd - g[d]) > _GRAD_RTOL * max(1.0, abs(g[d])) + 1e-7:
                    raise ValueError("gradient disagrees with finite differences at a random pair")

    def risks(self, thetas: np.ndarray, zs: np.ndarray) -> np.ndarray:
        """(len(thetas), len(zs)) loss matrix."""
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        zs = np.atleast_2d(np.asarray(zs, dtype=float))
        if self.risk_matrix is not None:
            return self.risk_matrix(thetas, zs)
        out = np.empty((thetas.shape[0], zs.shape[0]))
        for i, th in enumerate(thetas):
            for j, z in enumerate(zs):
                out[i, j] = self.eval(th, z)
        return out


def quadratic_loss(box: np.ndarray | list, weights: np.ndarray | list | None = None) -> LossModel:
    """Weighted half squared distance on a box: 0.5 * sum_d w_d (theta_d - z_d)^2.

    theta and z share the box; alpha = min(w), beta = max(w), and L / b are the
    tight constants over the box.
    """
    domain = Box(np.asarray(box, dtype=float))
    d = domain.bounds.shape[0]
    w = np.ones(d) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (d,) or np.any(w <= 0):
        raise ValueError("weights must be positive, one per coordinate")
    widths = domain.bounds[:, 1] - domain.bounds[:, 0]
    L = float(np.sqrt(np.sum((w * widths) ** 2)))
    b = float(0.5 * np.sum(w * widths**2))

    def ev(theta: np.ndarray, z: np.ndarray) -> float:
        diff = theta - z
        return float(0.5 * np.dot(w * diff, diff))

    def gr(theta: np.ndarray, z: np.ndarray) -> np.ndarray:
        return w * (theta - z)

    def rm(thetas: np.ndarray, zs: np.ndarray) -> np.ndarray:
        diff = thetas[:, None, :] - zs[None, :, :]
        return 0.5 * np.einsum("ijk,k,ijk->ij", diff, w, diff)

    def tr(theta: np.ndarray, dist) -> float:
        # E 0.5 sum_d w_d (theta_d - Z_d)^2 from per-coordinate moments
        mean, var = dist.mean_var()
        return float(0.5 * np.sum(w * ((theta - mean) ** 2 + var)))

    return LossModel(
        eval=ev,
        grad=gr,
        L=L,
        a=0.0,
        b=b,
        alpha=float(w.min()),
        beta=float(w.max()),
        theta_domain=domain,
        z_domain=domain,
        risk_matrix=rm,
        true_risk=tr,
    )


def contraction_factor(alpha: float, beta: float, eta: float) -> float:
    """One-step Lipschitz factor sqrt(1 - 2*alpha*eta + alpha*beta*eta^2) in [0, 1)."""
    if not (0 < alpha <= beta):
        raise ValueError("need 0 < alpha <= beta")
    if not (0 < eta < 2.0 / beta):
        raise ValueError("need eta in (0, 2/beta)")
    return math.sqrt(max(0.0, 1.0 - 2.0 * alpha * eta + alpha * beta * eta * eta))


def forgetting_depth(R: float, gamma: float, eps: float) -> int:
    """Smallest m >= 0 with gamma^m * R <= eps.

    ceil() is guarded by 1e-9 so exact integer ratios are not bumped by float
    noise.
    """
    if not (0 <= gamma < 1):
        raise ValueError("need gamma in [0, 1)")
    if eps <= 0 or R <= 0:
        raise ValueError("R and eps must be positive")
    if R <= eps:
        return 0
    if gamma == 0.0:
        return 1
    return max(0, math.ceil(math.log(R / eps) / math.log(1.0 / gamma) - 1e-9))


@dataclass(frozen=True)
class SgdSpec:
    """Initialization, step size, horizon, index source and projection domain."""

    theta1: np.ndarray
    eta: float
    T: int
    domain: Box | Ball
    indices: tuple[int, ...] | None = None
    index_seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "theta1", np.asarray(self.theta1, dtype=float))
        if self.T < 1:
            raise ValueError("T must be >= 1")

    def resolve_indices(self, n: int, fallback_seed: int) -> np.ndarray:
        """Index sequence i_1..i_T; fixed per construction, never per mixing."""
        if self.indices is not None:
            idx = np.asarray(self.indices, dtype=int)
            if idx.min() < 0 or idx.max() >= n:
                raise ValueError("explicit indices out of sample range")
            if len(idx) != self.T:
                raise ValueError("explicit indices must have length T")
            return idx
        seed = self.index_seed if self.index_seed is not None else fallback_seed
        return np.random.default_rng(seed).integers(0, n, size=self.T)


def sgd_run(loss: LossModel, spec: SgdSpec, sample: np.ndarray, seed: int = 0) -> np.ndarray:
    """Projected SGD: theta <- project(theta - eta * grad(theta, z_i)) for T steps."""
    if not (0 < spec.eta < 2.0 / loss.beta):
        raise ValueError(f"eta must lie in (0, {2.0 / loss.beta:g}) for contraction")
    sample = np.atleast_2d(np.asarray(sample, dtype=float))
    idx = spec.resolve_indices(sample.shape[0], seed)
    theta = project(spec.domain, spec.theta1)
    for i in idx:
        theta = project(spec.domain, theta - spec.eta * loss.grad(theta, sample[i]))
    return theta


def make_sgd_learner(loss: LossModel, spec: SgdSpec):
    def learner(sample: np.ndarray, seed: int) -> np.ndarray:
        return sgd_run(loss, spec, sample, seed)

    return learner


def erm_finite(grid: PointCloud, loss: LossModel, sample: np.ndarray) -> np.ndarray:
    """Grid point minimizing empirical risk; ties go to the lowest grid index."""
    sample = np.atleast_2d(np.asarray(sample, dtype=float))
    risks = loss.risks(grid.points, sample).mean(axis=1)
    return grid.points[int(np.argmin(risks))].copy()


class ErmLearner:
    """Finite-grid ERM with a vectorized all-mixings path.

    ``outputs_for_mixings`` evaluates the ghost/primary loss matrices once and
    resolves every sign mixing with two matmuls; identical to calling the
    learner per mixed sample (same terms, same lowest-index tie-breaking).
    """

    __name__ = "erm_grid"

    def __init__(self, grid: PointCloud, loss: LossModel):
        self.grid = grid
        self.loss = loss

    def __call__(self, sample: np.ndarray, seed: int) -> np.ndarray:
        return erm_finite(self.grid, self.loss, sample)

    def outputs_for_mixings(self, ss, sigma_indices: np.ndarray, seed: int) -> np.ndarray:
        ghost = self.loss.risks(self.grid.points, ss.s_minus)
        primary = self.loss.risks(self.grid.points, ss.s_plus)
        bits = ((sigma_indices[:, None] >> np.arange(ss.n)[None, :]) & 1).astype(float)
        risks = ghost @ (1.0 - bits).T + primary @ bits.T
        return self.grid.points[np.argmin(risks, axis=0)]


def make_erm_learner(grid: PointCloud, loss: LossModel):
    return ErmLearner(grid, loss)


def _lex_smallest(points: np.ndarray) -> int:
    order = np.lexsort(points.T[::-1])
    return int(order[0])


def compress_k(sample: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Farthest-point subsample of size k, then the coordinate-wise mean.

    Selection starts at the lexicographically smallest point and greedily adds
    the point maximizing the minimum Euclidean distance to the selection (ties
    by lexicographic order, then index), so the output depends only on the
    multiset of sample points.
    """
    sample = np.atleast_2d(np.asarray(sample, dtype=float))
    n = sample.shape[0]
    if not (1 <= k <= n):
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    selected = [_lex_smallest(sample)]
    mind = np.linalg.norm(sample - sample[selected[0]], axis=1)
    while len(selected) < k:
        best = None
        best_key = None
        for i in range(n):
            if i in selected:
                continue
            key = (-mind[i], tuple(sample[i]), i)
            if best_key is None or key < best_key:
                best_key = key
                best = i
        selected.append(best)
        mind = np.minimum(mind, np.linalg.norm(sample - sample[best], axis=1))
    sub = sample[selected]
    return sub, sub.mean(axis=0)


def make_compression_learner(k: int):
    def learner(sample: np.ndarray, seed: int) -> np.ndarray:
        return compress_k(sample, k)[1]

    return learner


def vc_threshold_erm(sample: np.ndarray) -> float:
    """Threshold minimizing 0-1 risk of 'predict 1 iff x > t'; ties take the smallest t.

    Rows are (x, label) with labels in {0, 1}. Candidate cuts are midpoints of
    sorted distinct x values plus finite sentinels min(x)-1 and max(x)+1 (all-0
    and all-1 predictions); sentinels stay finite so thresholds remain valid
    parameter vectors.
    """
    sample = np.atleast_2d(np.asarray(sample, dtype=float))
    if sample.shape[1] != 2:
        raise ValueError("threshold ERM expects rows (x, label)")
    x, y = sample[:, 0], sample[:, 1]
    if not np.all(np.isin(y, (0.0, 1.0))):
        raise ValueError("labels must be binary 0/1")
    xs = np.unique(x)
    cuts = [float(xs[0]) - 1.0]
    cuts.extend(0.5 * (xs[:-1] + xs[1:]))
    cuts.append(float(xs[-1]) + 1.0)
    best_t, best_err = None, None
    for t in cuts:
        err = int(np.sum((x > t).astype(float) != y))
        if best_err is None or err < best_err:
            best_t, best_err = float(t), err
    return best_t


def make_threshold_learner():
    def learner(sample: np.ndarray, seed: int) -> np.ndarray:
        return np.array([vc_threshold_erm(sample)])

    return learner


@dataclass(frozen=True)
class ThresholdLoss:
    """0-1 loss of 'predict 1 iff x > t' on labeled points (x, y); values in [0, 1].

    Gradient-free: only the loss-matrix surface the complexity machinery needs.
    """

    a: float = 0.0
    b: float = 1.0

    def eval(self, theta: np.ndarray, z: np.ndarray) -> float:
        pred = 1.0 if z[0] > theta[0] else 0.0
        return float(pred != z[1])

    def risks(self, thetas: np.ndarray, zs: np.ndarray) -> np.ndarray:
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        zs = np.atleast_2d(np.asarray(zs, dtype=float))
        pred = (zs[None, :, 0] > thetas[:, 0][:, None]).astype(float)
        return (pred != zs[None, :, 1]).astype(float)
