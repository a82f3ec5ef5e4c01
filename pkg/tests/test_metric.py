import math

import numpy as np
import pytest

from arcbounds.metric import (
    Metric,
    PointCloud,
    covering_diameter,
    dedup,
    diameter,
    distance,
    is_focal,
    load_pointcloud,
    nn_distances,
    pairwise_distances,
    save_pointcloud,
)


def line(*xs):
    return PointCloud(np.asarray(xs, dtype=float)[:, None])


class TestDistance:
    def test_linf_unit_square_diagonal(self):
        assert distance((0, 0), (1, 1), Metric.LINF) == 1.0

    def test_l2_unit_square_diagonal(self):
        assert distance((0, 0), (1, 1), Metric.L2) == pytest.approx(math.sqrt(2), abs=1e-12)

    def test_identity(self):
        assert distance((0.3, -2.0), (0.3, -2.0)) == 0.0

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            distance((0, 0), (1, 1, 1))

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            distance((0, np.nan), (1, 1))

    def test_metric_axioms_random(self):
        rng = np.random.default_rng(0)
        for metric in Metric:
            for _ in range(200):
                p, q, r = rng.normal(size=(3, 4))
                assert distance(p, q, metric) == distance(q, p, metric)
                assert distance(p, q, metric) >= 0
                assert distance(p, r, metric) <= distance(p, q, metric) + distance(q, r, metric) + 1e-12

    def test_translation_invariance(self):
        rng = np.random.default_rng(1)
        for metric in Metric:
            p, q, v = rng.normal(size=(3, 3))
            assert distance(p + v, q + v, metric) == pytest.approx(distance(p, q, metric), rel=1e-12)


class TestDiameters:
    def test_line_diameter(self):
        assert diameter(line(0, 1, 2, 3)) == 3.0

    def test_singleton_diameter(self):
        assert diameter(line(5.0)) == 0.0

    def test_unit_square_l2(self):
        sq = PointCloud([[0, 0], [1, 0], [0, 1], [1, 1]], Metric.L2)
        # oracle: largest of the exhaustive pairwise distances
        dm = pairwise_distances(sq.points, Metric.L2)
        assert diameter(sq) == dm.max() == pytest.approx(math.sqrt(2), abs=1e-12)

    def test_nn_distances_line(self):
        assert np.allclose(nn_distances(line(0, 1, 2, 3)), [1, 1, 1, 1])

    def test_nn_distances_with_outlier(self):
        assert np.allclose(nn_distances(line(0, 1, 10)), [1, 1, 9])

    def test_nn_two_points(self):
        assert np.allclose(nn_distances(line(2, 5)), [3, 3])

    def test_nn_rejects_singleton(self):
        with pytest.raises(ValueError):
            nn_distances(line(1.0))

    def test_covering_diameter(self):
        assert covering_diameter(line(0, 1, 2, 3)) == 1.0
        assert covering_diameter(line(0, 1, 10)) == 9.0

    def test_nn_oracle_random(self):
        rng = np.random.default_rng(7)
        for metric in Metric:
            pts = rng.normal(size=(20, 3))
            cloud = PointCloud(pts, metric)
            dm = pairwise_distances(pts, metric)
            for i in range(20):
                expect = min(dm[i, j] for j in range(20) if j != i)
                assert nn_distances(cloud)[i] == pytest.approx(expect, rel=1e-12)

    def test_scaling_covariance(self):
        rng = np.random.default_rng(3)
        pts = rng.normal(size=(12, 2))
        for metric in Metric:
            c = 3.7
            a = PointCloud(pts, metric)
            b = PointCloud(c * pts, metric)
            assert diameter(b) == pytest.approx(c * diameter(a), rel=1e-12)
            assert covering_diameter(b) == pytest.approx(c * covering_diameter(a), rel=1e-12)

    def test_nabla_between_zero_and_delta(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            cloud = PointCloud(rng.normal(size=(8, 2)))
            nu = nn_distances(cloud)
            assert 0 < nu.max() <= diameter(cloud)
            assert np.all(nu <= covering_diameter(cloud))


class TestFocality:
    def test_line_is_non_focal(self):
        assert not is_focal(line(0, 1, 2, 3), tol=0.0)

    def test_unit_square_linf_is_focal(self):
        sq = PointCloud([[0, 0], [1, 0], [0, 1], [1, 1]], Metric.LINF)
        assert is_focal(sq, tol=0.0)

    def test_two_points_focal(self):
        assert is_focal(line(0, 4))

    def test_focal_iff_nabla_equals_delta(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            cloud = PointCloud(rng.normal(size=(6, 2)), Metric.L2)
            expect = covering_diameter(cloud) >= diameter(cloud)
            assert is_focal(cloud, tol=0.0) == expect


class TestDedup:
    def test_exact_duplicates(self):
        cloud = dedup(np.array([[0.0], [0.0], [1.0]]), tol=0.0)
        assert np.array_equal(cloud.points.ravel(), [0.0, 1.0])

    def test_tolerance_merge(self):
        cloud = dedup(np.array([[0.0], [1e-12], [1.0]]), tol=1e-9)
        assert np.array_equal(cloud.points.ravel(), [0.0, 1.0])

    def test_identity_case(self):
        cloud = dedup(np.array([[0.0], [1.0], [2.0]]), tol=0.0)
        assert np.array_equal(cloud.points.ravel(), [0.0, 1.0, 2.0])

    def test_idempotent(self):
        rng = np.random.default_rng(9)
        pts = np.round(rng.normal(size=(40, 2)), 1)  # induce collisions
        once = dedup(pts, Metric.LINF, tol=0.05)
        twice = dedup(once.points, Metric.LINF, tol=0.05)
        assert np.array_equal(once.points, twice.points)

    def test_first_occurrence_wins(self):
        cloud = dedup(np.array([[1.0], [1.0 + 1e-12]]), tol=1e-9)
        assert cloud.points[0, 0] == 1.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            dedup(np.empty((0, 1)))

    def test_cloud_invariant_enforced(self):
        with pytest.raises(ValueError):
            PointCloud([[0.0], [0.0]], dedup_tol=0.0)


class TestSerialization:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(2)
        cloud = PointCloud(rng.normal(size=(10, 3)), Metric.L2, dedup_tol=1e-9)
        path = save_pointcloud(cloud, tmp_path / "cloud.csv")
        back = load_pointcloud(path)
        assert back.metric == Metric.L2
        assert back.dedup_tol == 1e-9
        assert np.array_equal(back.points, cloud.points)

    def test_sidecar_defaults(self, tmp_path):
        path = tmp_path / "bare.csv"
        path.write_text("c0\n0.0\n1.0\n")
        cloud = load_pointcloud(path)
        assert cloud.metric == Metric.LINF
        assert len(cloud) == 2

    def test_metric_override(self, tmp_path):
        cloud = PointCloud([[0.0, 0.0], [1.0, 1.0]], Metric.LINF)
        path = save_pointcloud(cloud, tmp_path / "c.csv")
        back = load_pointcloud(path, metric=Metric.L2)
        assert back.metric == Metric.L2

    def test_header_required(self, tmp_path):
        path = tmp_path / "nohdr.csv"
        path.write_text("0.0\n1.0\n")
        with pytest.raises(ValueError):
            load_pointcloud(path)
