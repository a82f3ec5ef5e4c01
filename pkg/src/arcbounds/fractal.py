"""Covering numbers, minimum 2-covers, finite Minkowski dimension, Steiner points.

Dimension conventions
---------------------
Natural logarithms throughout. The product dim * ln(diameter/covering_diameter)
is base-invariant (it equals ln of the 2-cover cardinality), so the bound
functions are unambiguous; standalone dimension values are in nats.

Covering numbers use internal centers (centers chosen from the cloud itself).
An external-center count can differ by a bounded factor; internal centers keep
the Steiner construction inside the convex hull for free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import cover as _cover
from .metric import PointCloud, covering_diameter, diameter, is_focal, nn_distances

__all__ = [
    "CoverResult",
    "TwoCover",
    "TwoCoverResult",
    "DimResult",
    "SteinerInfeasibleError",
    "covering_number",
    "min_two_cover",
    "dim_fm",
    "dim_fm_oracle",
    "steiner_augment",
    "fractal_bound",
    "trivial_dim_bound",
    "minkowski_slope_estimate",
]

DEFAULT_EXACT_LIMIT = 20
DEFAULT_ORACLE_LIMIT = 8


@dataclass(frozen=True)
class CoverResult:
    """Minimum ball cover: size, the (center, members) assignment, exactness."""

    count: int
    cover: tuple[tuple[int, frozenset[int]], ...]
    exact: bool


@dataclass(frozen=True)
class TwoCover:
    """Family of index subsets, each of size >= 2, jointly covering the cloud."""

    sets: tuple[frozenset[int], ...]

    def validate(self, n_points: int) -> None:
        union: set[int] = set()
        for s in self.sets:
            if len(s) < 2:
                raise ValueError("every member of a 2-cover needs at least 2 points")
            union |= s
        if union != set(range(n_points)):
            raise ValueError("2-cover does not cover all points")


@dataclass(frozen=True)
class TwoCoverResult:
    count: int
    cover: TwoCover
    exact: bool


@dataclass(frozen=True)
class DimResult:
    """Finite-set dimension report.

    value is +inf exactly when the cloud is focal (and has >= 2 points);
    a singleton has value 0. For finite values, value = ln(T) / ln(delta/nabla).
    """

    value: float
    focal: bool
    T: int | None
    delta: float
    nabla: float | None
    exact: bool


class SteinerInfeasibleError(ValueError):
    """No augmentation with fewer points than the cloud can exist or be built."""


def _mask_from_indices(idxs) -> int:
    m = 0
    for i in idxs:
        m |= 1 << int(i)
    return m


def _indices_from_mask(mask: int) -> tuple[int, ...]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask &= mask - 1
    return tuple(out)


def covering_number(
    cloud: PointCloud,
    eps: float,
    exact_limit: int = DEFAULT_EXACT_LIMIT,
    node_budget: int = _cover.DEFAULT_NODE_BUDGET,
) -> CoverResult:
    """Minimum number of closed eps-balls centered at cloud points covering the cloud.

    Exact (branch and bound) when the cloud has at most ``exact_limit`` points
    and the node budget holds out; otherwise a greedy upper bound with
    ``exact=False``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    m = len(cloud)
    if m == 1:
        return CoverResult(1, ((0, frozenset({0})),), True)
    dm = cloud.distance_matrix()
    balls = [_mask_from_indices(np.nonzero(dm[c] <= eps)[0]) for c in range(m)]
    universe = (1 << m) - 1
    want_exact = m <= exact_limit
    chosen, proven = _cover.solve_cover(balls, universe, want_exact, node_budget)
    assignment = []
    covered = 0
    for c in chosen:
        fresh = balls[c] & ~covered
        covered |= balls[c]
        assignment.append((c, frozenset(_indices_from_mask(fresh))))
    return CoverResult(len(chosen), tuple(assignment), bool(want_exact and proven))


def _admissible_graph(cloud: PointCloud, a: float) -> list[int]:
    """Neighbor bitmasks of the graph joining points at distance <= a."""
    dm = cloud.distance_matrix()
    m = len(cloud)
    adj = []
    for i in range(m):
        mask = _mask_from_indices(np.nonzero(dm[i] <= a)[0])
        adj.append(mask & ~(1 << i))
    return adj


def _greedy_two_cover(cloud: PointCloud, adj: list[int]) -> list[int]:
    """Greedy 2-cover: grow a maximal admissible subset per seed, keep the best.

    Candidate growth adds the compatible point covering the most uncovered
    points (ties: lowest index) until maximal; the round winner is the grown
    subset with the largest uncovered gain, ties by lowest smallest-index.
    """
    m = len(cloud)
    universe = (1 << m) - 1
    uncovered = universe
    chosen: list[int] = []
    while uncovered:
        best_mask = 0
        best_key = None
        for seed in range(m):
            mask = 1 << seed
            compat = adj[seed]
            while compat:
                pick = -1
                pick_key = None
                probe = compat
                while probe:
                    v = (probe & -probe).bit_length() - 1
                    probe &= probe - 1
                    gain = ((mask | (1 << v)) & uncovered).bit_count()
                    key = (-gain, v)
                    if pick_key is None or key < pick_key:
                        pick_key = key
                        pick = v
                mask |= 1 << pick
                compat &= adj[pick]
            if mask.bit_count() < 2:
                continue
            gain = (mask & uncovered).bit_count()
            key = (-gain, (mask & -mask).bit_length() - 1, mask)
            if gain > 0 and (best_key is None or key < best_key):
                best_key = key
                best_mask = mask
        if best_mask == 0:
            raise ValueError("no admissible subset covers the remaining points")
        chosen.append(best_mask)
        uncovered &= ~best_mask
    return chosen


def min_two_cover(
    cloud: PointCloud,
    a: float,
    exact_limit: int = DEFAULT_EXACT_LIMIT,
    node_budget: int = _cover.DEFAULT_NODE_BUDGET,
) -> TwoCoverResult:
    """Minimum-cardinality cover by subsets of >= 2 points with diameter <= a.

    Requires a >= covering_diameter(cloud): below that, the point realizing the
    covering diameter cannot be paired with anything, so no 2-cover exists.
    Exact via branch and bound over maximal admissible subsets up to
    ``exact_limit`` points; greedy with ``exact=False`` beyond.
    """
    m = len(cloud)
    if m < 2:
        raise ValueError("a 2-cover needs at least 2 points")
    nabla = covering_diameter(cloud)
    if a < nabla:
        raise ValueError(f"no 2-cover with member diameter <= {a:g} exists (covering diameter {nabla:g})")
    adj = _admissible_graph(cloud, a)
    universe = (1 << m) - 1
    if m <= exact_limit:
        cliques = _cover.maximal_cliques(adj, m)
        cliques = [c for c in cliques if c.bit_count() >= 2]
        chosen_idx, proven = _cover.exact_cover(cliques, universe, node_budget)
        masks = [cliques[i] for i in chosen_idx]
        exact = proven
    else:
        masks = _greedy_two_cover(cloud, adj)
        exact = False
    sets = tuple(frozenset(_indices_from_mask(msk)) for msk in masks)
    tc = TwoCover(sets)
    tc.validate(m)
    return TwoCoverResult(len(sets), tc, exact)


def dim_fm(
    cloud: PointCloud,
    exact_limit: int = DEFAULT_EXACT_LIMIT,
    node_budget: int = _cover.DEFAULT_NODE_BUDGET,
) -> DimResult:
    """Finite Minkowski dimension of a finite cloud.

    0 for a singleton; +inf for focal clouds (which includes every 2-point
    cloud); otherwise ln(T) / ln(delta/nabla) where T is the minimum 2-cover
    cardinality at member diameter <= nabla.
    """
    m = len(cloud)
    if m == 1:
        return DimResult(0.0, False, None, 0.0, None, True)
    delta = diameter(cloud)
    nabla = covering_diameter(cloud)
    if is_focal(cloud):
        return DimResult(math.inf, True, None, delta, nabla, True)
    res = min_two_cover(cloud, nabla, exact_limit, node_budget)
    value = math.log(res.count) / math.log(delta / nabla)
    return DimResult(value, False, res.count, delta, nabla, res.exact)


def _min_cover_dp(piece_masks: list[int], m: int) -> int:
    """Exact minimum number of pieces covering {0..m-1}, by bitmask DP.

    Independent of the branch-and-bound path on purpose: this is the oracle's
    engine for small clouds.
    """
    full = (1 << m) - 1
    INF = 1 << 30
    best = [INF] * (full + 1)
    best[0] = 0
    for mask in range(1, full + 1):
        low = mask & -mask
        b = INF
        for piece in piece_masks:
            if piece & low:
                prev = best[mask & ~piece]
                if prev + 1 < b:
                    b = prev + 1
        best[mask] = b
    return best[full]


def dim_fm_oracle(
    cloud: PointCloud,
    s_tol: float = 1e-6,
    oracle_limit: int = DEFAULT_ORACLE_LIMIT,
) -> float:
    """Dimension from the layered covering-cost definition, solved by bisection.

    For exponent s, the covering cost of a family is (family size) times
    (largest member diameter)^s; the cost at scale delta minimizes over
    families whose members stay below both delta and the cloud diameter, and
    the overall cost maximizes over scales down to the covering diameter. The
    dimension is the s at which that cost equals diameter^s. Minimum family
    sizes come from an exhaustive bitmask DP, so this is a slow, independent
    cross-check for clouds of at most ``oracle_limit`` points.
    """
    m = len(cloud)
    if m > oracle_limit:
        raise ValueError(f"oracle limited to {oracle_limit} points (exponential enumeration)")
    if m <= 2:
        raise ValueError("oracle needs more than 2 points")
    if is_focal(cloud):
        raise ValueError("oracle is defined for non-focal clouds only")
    delta = diameter(cloud)
    nabla = covering_diameter(cloud)
    dm = cloud.distance_matrix()

    # Achievable member diameters are pairwise distances; the layered
    # definition only admits families with member diameter < delta.
    dists = sorted({float(dm[i, j]) for i in range(m) for j in range(i + 1, m)})
    grid = [d for d in dists if nabla <= d < delta]

    subsets: list[tuple[int, float]] = []
    idx = list(range(m))
    for size in range(2, m + 1):
        for comb in combinations(idx, size):
            d = max(dm[i, j] for i in comb for j in comb if i < j)
            subsets.append((_mask_from_indices(comb), float(d)))

    t_at: dict[float, int] = {}
    for d in grid:
        pieces = [msk for msk, dd in subsets if dd <= d]
        t_at[d] = _min_cover_dp(pieces, m)

    def layered_cost(s: float) -> float:
        best = -math.inf
        for cap in grid:
            level = min(t_at[d] * d**s for d in grid if d <= cap)
            best = max(best, level)
        return best

    def f(s: float) -> float:
        return layered_cost(s) - delta**s

    lo, hi = 0.0, 1.0
    while f(hi) > 0:
        lo = hi
        hi *= 2.0
        if hi > 1e6:
            raise RuntimeError("bisection failed to bracket the dimension")
    while hi - lo > s_tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def steiner_augment(
    cloud: PointCloud,
    eps: float,
    exact_limit: int = DEFAULT_EXACT_LIMIT,
) -> np.ndarray:
    """Auxiliary points P pulling the covering diameter down to eps.

    Returns the added points as a (p, dim) array; p may be 0 (PointCloud
    requires nonempty sets, and an empty P is a legitimate outcome).

    Guarantees, when it returns: |P| < |cloud|, the diameter of cloud + P
    equals the cloud diameter, the eps-covering number is unchanged, and the
    covering diameter of cloud + P equals eps exactly whenever P is nonempty
    (it is at most eps when nothing was isolated and P is empty).

    Each isolated point (nearest neighbor beyond eps) receives one point
    placed on the segment toward another cloud point at distance exactly eps,
    re-checking isolation as points land so no point is fixed twice. Raises
    SteinerInfeasibleError when eps is below the minimum pairwise distance
    (every point isolated: no valid P smaller than the cloud exists) or when
    no candidate placement preserves the covering number.
    """
    m = len(cloud)
    if m < 2:
        raise ValueError("augmentation needs at least 2 points")
    delta = diameter(cloud)
    if not (0 < eps < delta):
        raise ValueError("eps must lie strictly between 0 and the cloud diameter")
    if is_focal(cloud):
        raise ValueError("augmentation is defined for non-focal clouds")
    dmin = float(nn_distances(cloud).min())
    if eps < dmin:
        raise SteinerInfeasibleError(
            f"eps={eps:g} is below the minimum pairwise distance {dmin:g}: every point "
            "is isolated, so any augmentation needs at least as many points as the cloud"
        )
    base = covering_number(cloud, eps, exact_limit).count
    pts = cloud.points
    added: list[np.ndarray] = []

    def dist_to(p: np.ndarray, block: np.ndarray) -> np.ndarray:
        diffs = block - p
        if cloud.metric.value == "linf":
            return np.max(np.abs(diffs), axis=1)
        return np.sqrt(np.sum(diffs * diffs, axis=1))

    def all_points() -> np.ndarray:
        if added:
            return np.vstack([pts, np.asarray(added)])
        return pts

    for z_idx in range(m):
        z = pts[z_idx]
        others = np.vstack([np.delete(pts, z_idx, axis=0)] + ([np.asarray(added)] if added else []))
        if dist_to(z, others).min() <= eps:
            continue  # not (or no longer) isolated
        placed = False
        order = np.argsort(dist_to(z, pts), kind="stable")  # nearest targets first
        for w_idx in order:
            if w_idx == z_idx:
                continue
            w = pts[w_idx]
            d_zw = float(dist_to(z, w[None, :])[0])
            t = eps / d_zw
            p = z + t * (w - z)
            # nudge inward until the computed distance does not overshoot eps
            for _ in range(8):
                if float(dist_to(z, p[None, :])[0]) <= eps:
                    break
                t *= 1.0 - 1e-15
                p = z + t * (w - z)
            d_zp = float(dist_to(z, p[None, :])[0])
            if not (eps * (1.0 - 1e-9) <= d_zp <= eps):
                continue
            trial = np.vstack([all_points(), p[None, :]])
            trial_cloud = PointCloud(trial, cloud.metric, dedup_tol=0.0, validate=False)
            if covering_number(trial_cloud, eps, exact_limit).count != base:
                continue
            added.append(p)
            placed = True
            break
        if not placed:
            raise SteinerInfeasibleError(
                f"no placement at distance {eps:g} from point {z_idx} preserves the covering number"
            )
    if len(added) >= m:
        raise SteinerInfeasibleError("augmentation would need as many points as the cloud")
    return np.asarray(added) if added else np.empty((0, cloud.dim))


def fractal_bound(
    cloud: PointCloud,
    L: float,
    b: float,
    n: int,
    exact_limit: int = DEFAULT_EXACT_LIMIT,
) -> float:
    """Dimension-based complexity bound L*nabla + b*sqrt(ln(T)/n).

    The dimension times ln(delta/nabla) collapses to ln(T), so the bound is
    computed directly from the minimum 2-cover cardinality. Rejects focal
    clouds (infinite dimension) and clouds of fewer than 3 points.
    """
    if len(cloud) <= 2:
        raise ValueError("bound needs more than 2 points")
    if is_focal(cloud):
        raise ValueError("bound undefined for focal clouds (infinite dimension)")
    nabla = covering_diameter(cloud)
    res = min_two_cover(cloud, nabla, exact_limit)
    return L * nabla + b * math.sqrt(math.log(res.count) / n)


def trivial_dim_bound(cloud: PointCloud) -> float:
    """ln(|C|-1) / ln(delta/nabla): always at least the finite dimension."""
    if len(cloud) <= 2:
        raise ValueError("bound needs more than 2 points")
    if is_focal(cloud):
        raise ValueError("bound undefined for focal clouds")
    delta = diameter(cloud)
    nabla = covering_diameter(cloud)
    return math.log(len(cloud) - 1) / math.log(delta / nabla)


def minkowski_slope_estimate(
    cloud: PointCloud,
    eps_grid: list[float],
    exact_limit: int = DEFAULT_EXACT_LIMIT,
) -> float:
    """Least-squares slope of ln N(C, eps) against ln(1/eps) over the grid.

    A finite-grid stand-in for the box-counting dimension, used by the
    large-n trend experiment only. A singleton has slope 0.
    """
    if len(cloud) == 1:
        return 0.0
    if len(eps_grid) < 2:
        raise ValueError("need at least 2 grid epsilons")
    delta = diameter(cloud)
    eps = np.asarray(sorted(set(float(e) for e in eps_grid), reverse=True), dtype=float)
    if len(eps) < 2:
        raise ValueError("grid epsilons must be distinct")
    if np.any(eps <= 0) or np.any(eps >= delta):
        raise ValueError("grid epsilons must lie in (0, diameter)")
    logn = np.array(
        [math.log(covering_number(cloud, float(e), exact_limit).count) for e in eps]
    )
    x = np.log(1.0 / eps)
    slope = np.polyfit(x, logn, 1)[0]
    return float(slope)
