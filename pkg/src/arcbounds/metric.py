"""Finite point clouds: metrics, diameters, nearest neighbors, focality, dedup.

Everything here is brute force on purpose. Clouds at desk scale stay below a
few thousand points, so O(m^2) distance matrices are cheaper and far easier to
audit than any spatial index.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Metric",
    "PointCloud",
    "as_point",
    "distance",
    "pairwise_distances",
    "diameter",
    "nn_distances",
    "covering_diameter",
    "is_focal",
    "dedup",
    "save_pointcloud",
    "load_pointcloud",
]

# Relative slack used when focality has to be decided from floating-point
# distances; exact ties are rare, near-ties are common.
FOCAL_REL_TOL = 1e-9


class Metric(str, Enum):
    """Distance on R^k. LINF is the default (box-covering convention)."""

    LINF = "linf"
    L2 = "l2"


def as_point(x: Sequence[float] | np.ndarray) -> np.ndarray:
    """Validate and convert a coordinate sequence to a float64 vector."""
    p = np.asarray(x, dtype=float)
    if p.ndim != 1 or p.size < 1:
        raise ValueError(f"point must be a 1-D vector of dimension >= 1, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError("point coordinates must be finite")
    return p


def _as_points(points: Iterable[Sequence[float]] | np.ndarray) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"expected a nonempty (m, k) array of points, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point coordinates must be finite")
    return arr


def distance(p: Sequence[float], q: Sequence[float], metric: Metric = Metric.LINF) -> float:
    """Distance between two vectors of equal dimension."""
    pa, qa = as_point(p), as_point(q)
    if pa.shape != qa.shape:
        raise ValueError(f"dimension mismatch: {pa.shape[0]} vs {qa.shape[0]}")
    d = pa - qa
    if metric == Metric.LINF:
        return float(np.max(np.abs(d)))
    return float(np.sqrt(np.dot(d, d)))


def pairwise_distances(points: np.ndarray, metric: Metric = Metric.LINF) -> np.ndarray:
    """Full (m, m) distance matrix of a point array."""
    pts = _as_points(points)
    diff = pts[:, None, :] - pts[None, :, :]
    if metric == Metric.LINF:
        return np.max(np.abs(diff), axis=-1)
    return np.sqrt(np.sum(diff * diff, axis=-1))


class PointCloud:
    """A finite set of distinct points with a metric attached.

    Invariant: every pairwise distance exceeds ``dedup_tol`` (points are
    genuinely distinct at the declared resolution). Build clouds from raw,
    possibly repeated vectors with :func:`dedup`.
    """

    def __init__(
        self,
        points: Iterable[Sequence[float]] | np.ndarray,
        metric: Metric = Metric.LINF,
        dedup_tol: float = 0.0,
        validate: bool = True,
    ):
        if dedup_tol < 0:
            raise ValueError("dedup_tol must be nonnegative")
        self.points = _as_points(points)
        self.points.setflags(write=False)
        self.metric = Metric(metric)
        self.dedup_tol = float(dedup_tol)
        self._dmat: np.ndarray | None = None
        if validate and len(self) > 1:
            dm = self.distance_matrix()
            off = dm[~np.eye(len(self), dtype=bool)]
            if off.min() <= self.dedup_tol:
                raise ValueError(
                    f"cloud contains points at distance {off.min():g} <= dedup_tol "
                    f"{self.dedup_tol:g}; run dedup() first"
                )

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def distance_matrix(self) -> np.ndarray:
        if self._dmat is None:
            self._dmat = pairwise_distances(self.points, self.metric)
            self._dmat.setflags(write=False)
        return self._dmat

    def replace_points(self, points: np.ndarray) -> "PointCloud":
        """New cloud with the same metric/tol and different points."""
        return PointCloud(points, self.metric, self.dedup_tol)

    def __repr__(self) -> str:
        return f"PointCloud(n={len(self)}, dim={self.dim}, metric={self.metric.value})"


def diameter(cloud: PointCloud) -> float:
    """Largest pairwise distance; 0 for a singleton."""
    if len(cloud) == 1:
        return 0.0
    return float(cloud.distance_matrix().max())


def nn_distances(cloud: PointCloud) -> np.ndarray:
    """Per-point distance to the nearest other point, aligned with cloud indices."""
    if len(cloud) < 2:
        raise ValueError("nearest-neighbor distances need at least 2 points")
    dm = cloud.distance_matrix().copy()
    np.fill_diagonal(dm, np.inf)
    return dm.min(axis=1)


def covering_diameter(cloud: PointCloud) -> float:
    """Largest nearest-neighbor distance over the cloud."""
    return float(nn_distances(cloud).max())


def is_focal(cloud: PointCloud, tol: float | None = None) -> bool:
    """True when the covering diameter reaches the diameter (within tol).

    ``tol`` defaults to ``1e-9 * diameter`` because floating-point distances
    rarely tie exactly; a two-point cloud is always focal.
    """
    if len(cloud) < 2:
        raise ValueError("focality needs at least 2 points")
    delta = diameter(cloud)
    if tol is None:
        tol = FOCAL_REL_TOL * delta
    return covering_diameter(cloud) >= delta - tol


def dedup(
    points: Iterable[Sequence[float]] | np.ndarray,
    metric: Metric = Metric.LINF,
    tol: float = 0.0,
) -> PointCloud:
    """Greedy pass in input order: keep a point iff it is > tol from every kept point.

    Idempotent; first occurrence wins, so learner outputs that coincide
    numerically collapse deterministically.
    """
    pts = _as_points(points)
    kept: list[np.ndarray] = []
    for row in pts:
        if not kept:
            kept.append(row)
            continue
        block = np.asarray(kept)
        diffs = block - row
        if metric == Metric.LINF:
            d = np.max(np.abs(diffs), axis=1)
        else:
            d = np.sqrt(np.sum(diffs * diffs, axis=1))
        if d.min() > tol:
            kept.append(row)
    return PointCloud(np.asarray(kept), metric, dedup_tol=tol, validate=False)


# --- CSV serialization: one point per row, header c0..c(k-1); metric and tol
# --- ride in a sidecar JSON file next to the CSV.


def _sidecar_path(path: Path) -> Path:
    return path.with_name(path.stem + ".meta.json")


def save_pointcloud(cloud: PointCloud, path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"c{i}" for i in range(cloud.dim)])
        for row in cloud.points:
            writer.writerow([repr(float(v)) for v in row])
    with open(_sidecar_path(path), "w") as fh:
        json.dump({"metric": cloud.metric.value, "dedup_tol": cloud.dedup_tol}, fh)
        fh.write("\n")
    return path


def load_pointcloud(
    path: str | Path,
    metric: Metric | None = None,
    dedup_tol: float | None = None,
) -> PointCloud:
    """Read a cloud CSV; sidecar JSON supplies metric/tol unless overridden."""
    path = Path(path)
    meta = {"metric": Metric.LINF.value, "dedup_tol": 0.0}
    sidecar = _sidecar_path(path)
    if sidecar.exists():
        with open(sidecar) as fh:
            meta.update(json.load(fh))
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or not header[0].startswith("c"):
            raise ValueError(f"{path}: expected a header row c0..c(k-1)")
        rows = [[float(v) for v in row] for row in reader if row]
    if not rows:
        raise ValueError(f"{path}: no points")
    m = Metric(metric) if metric is not None else Metric(meta["metric"])
    tol = float(meta["dedup_tol"]) if dedup_tol is None else float(dedup_tol)
    return dedup(np.asarray(rows), m, tol)
