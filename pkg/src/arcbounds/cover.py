"""Minimum set cover over small universes, on integer bitmasks.

Shared engine for ball covers (covering numbers) and clique covers
(minimum 2-covers). Exact solving is branch and bound seeded with the greedy
solution; a node budget keeps worst cases bounded, degrading to the greedy
answer with a cleared exactness flag.
"""

from __future__ import annotations

__all__ = [
    "BudgetExceeded",
    "greedy_cover",
    "exact_cover",
    "solve_cover",
    "maximal_cliques",
]

DEFAULT_NODE_BUDGET = 10**6


class BudgetExceeded(Exception):
    """Raised internally when branch and bound runs out of nodes."""


def _lsb_index(mask: int) -> int:
    return (mask & -mask).bit_length() - 1


def greedy_cover(candidates: list[int], universe: int) -> list[int]:
    """Indices of a greedy cover: max new coverage, ties by lowest member then index."""
    if universe == 0:
        return []
    uncovered = universe
    chosen: list[int] = []
    while uncovered:
        best_idx = -1
        best_key = None
        for idx, cand in enumerate(candidates):
            gain = (cand & uncovered).bit_count()
            if gain == 0:
                continue
            key = (-gain, _lsb_index(cand), idx)
            if best_key is None or key < best_key:
                best_key = key
                best_idx = idx
        if best_idx < 0:
            raise ValueError("candidates do not cover the universe")
        chosen.append(best_idx)
        uncovered &= ~candidates[best_idx]
    return chosen


def _prune_dominated(candidates: list[int]) -> list[int]:
    """Indices of candidates not strictly contained in another candidate.

    Keeps the first of exact duplicates. Quadratic, fine at desk scale.
    """
    keep: list[int] = []
    for i, ci in enumerate(candidates):
        dominated = False
        for j, cj in enumerate(candidates):
            if i == j:
                continue
            if ci & ~cj == 0 and (ci != cj or j < i):
                dominated = True
                break
        if not dominated:
            keep.append(i)
    return keep


def exact_cover(
    candidates: list[int],
    universe: int,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> tuple[list[int], bool]:
    """Minimum cover by branch and bound.

    Returns (indices, proven) where proven=False means the node budget ran out
    and the best solution found so far (at worst the greedy one) is returned.
    Deterministic: branching element is the uncovered element with fewest
    covering candidates; candidates are tried in index order.
    """
    if universe == 0:
        return [], True
    greedy = greedy_cover(candidates, universe)
    live = _prune_dominated(candidates)

    m = universe.bit_count()
    covers_by_elem: dict[int, list[int]] = {}
    bit = 1
    for e in range(universe.bit_length()):
        if universe & bit:
            covering = [i for i in live if candidates[i] & bit]
            if not covering:
                raise ValueError("candidates do not cover the universe")
            covers_by_elem[e] = covering
        bit <<= 1

    best: list[int] = list(greedy)
    best_len = len(best)
    nodes = 0

    def lower_bound(uncovered: int) -> int:
        widest = 0
        for i in live:
            g = (candidates[i] & uncovered).bit_count()
            if g > widest:
                widest = g
        if widest == 0:
            return 1 << 30  # dead branch: nothing covers the remainder
        return -(-uncovered.bit_count() // widest)

    def dfs(uncovered: int, chosen: list[int]) -> None:
        nonlocal best, best_len, nodes
        nodes += 1
        if nodes > node_budget:
            raise BudgetExceeded
        if uncovered == 0:
            if len(chosen) < best_len:
                best = list(chosen)
                best_len = len(chosen)
            return
        if len(chosen) + 1 >= best_len:
            return
        lb = lower_bound(uncovered)
        if len(chosen) + lb >= best_len:
            return
        branch_elem = -1
        branch_width = None
        probe = uncovered
        while probe:
            e = _lsb_index(probe)
            probe &= probe - 1
            width = len(covers_by_elem[e])
            if branch_width is None or width < branch_width:
                branch_width = width
                branch_elem = e
        for i in covers_by_elem[branch_elem]:
            chosen.append(i)
            dfs(uncovered & ~candidates[i], chosen)
            chosen.pop()

    try:
        dfs(universe, [])
        return best, True
    except BudgetExceeded:
        return best, False


def solve_cover(
    candidates: list[int],
    universe: int,
    exact: bool,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> tuple[list[int], bool]:
    """Greedy or exact cover depending on the ``exact`` switch."""
    if not exact:
        return greedy_cover(candidates, universe), False
    return exact_cover(candidates, universe, node_budget)


def maximal_cliques(adjacency: list[int], n: int) -> list[int]:
    """All maximal cliques of a graph given as per-vertex neighbor bitmasks.

    Bron-Kerbosch with pivoting; output sorted by (size desc, lowest member,
    mask) so downstream tie-breaking is deterministic.
    """
    cliques: list[int] = []

    def expand(r: int, p: int, x: int) -> None:
        if p == 0 and x == 0:
            cliques.append(r)
            return
        pivot_pool = p | x
        pivot = -1
        pivot_deg = -1
        probe = pivot_pool
        while probe:
            v = _lsb_index(probe)
            probe &= probe - 1
            deg = (adjacency[v] & p).bit_count()
            if deg > pivot_deg:
                pivot_deg = deg
                pivot = v
        ext = p & ~adjacency[pivot]
        while ext:
            v = _lsb_index(ext)
            ext &= ext - 1
            vb = 1 << v
            expand(r | vb, p & adjacency[v], x & adjacency[v])
            p &= ~vb
            x |= vb
    expand(0, (1 << n) - 1, 0)
    cliques.sort(key=lambda c: (-c.bit_count(), _lsb_index(c), c))
    return cliques
