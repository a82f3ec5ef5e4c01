import math

import numpy as np
import pytest

from arcbounds.learners import (
    Ball,
    Box,
    LossModel,
    SgdSpec,
    ThresholdLoss,
    compress_k,
    contraction_factor,
    domain_diameter,
    erm_finite,
    forgetting_depth,
    make_erm_learner,
    project,
    quadratic_loss,
    sgd_run,
    vc_threshold_erm,
)
from arcbounds.metric import PointCloud

UNIT_BOX = [[0.0, 1.0]]


def step_map(loss, eta, z, domain):
    def phi(theta):
        return project(domain, theta - eta * loss.grad(theta, z))

    return phi


class TestLossModel:
    def test_quadratic_constants(self):
        loss = quadratic_loss(UNIT_BOX)
        assert loss.L == 1.0 and loss.b == 0.5 and loss.alpha == 1.0 and loss.beta == 1.0

    def test_anisotropic_constants(self):
        loss = quadratic_loss([[0, 1], [0, 1]], weights=[1.0, 2.0])
        assert loss.alpha == 1.0 and loss.beta == 2.0

    def test_gradient_matches_finite_differences(self):
        loss = quadratic_loss([[0, 1], [0, 1]], weights=[1.0, 3.0])
        rng = np.random.default_rng(0)
        h = 1e-6
        for _ in range(1000):
            th = rng.uniform(0, 1, 2)
            z = rng.uniform(0, 1, 2)
            g = loss.grad(th, z)
            for d in range(2):
                e = np.zeros(2)
                e[d] = h
                fd = (loss.eval(th + e, z) - loss.eval(th - e, z)) / (2 * h)
                assert g[d] == pytest.approx(fd, rel=1e-5, abs=1e-7)

    def test_bad_range_rejected(self):
        loss = quadratic_loss(UNIT_BOX)
        with pytest.raises(ValueError):
            LossModel(
                eval=loss.eval,
                grad=loss.grad,
                L=loss.L,
                a=0.0,
                b=0.01,  # declared range too small for the actual loss
                alpha=1.0,
                beta=1.0,
                theta_domain=loss.theta_domain,
                z_domain=loss.z_domain,
            )

    def test_bad_smoothness_rejected(self):
        loss = quadratic_loss(UNIT_BOX)
        with pytest.raises(ValueError):
            LossModel(
                eval=loss.eval,
                grad=loss.grad,
                L=loss.L,
                a=0.0,
                b=0.5,
                alpha=0.5,
                beta=0.5,  # true smoothness is 1
                theta_domain=loss.theta_domain,
                z_domain=loss.z_domain,
            )

    def test_alpha_beta_order_enforced(self):
        loss = quadratic_loss(UNIT_BOX)
        with pytest.raises(ValueError):
            LossModel(
                eval=loss.eval, grad=loss.grad, L=1.0, a=0.0, b=0.5,
                alpha=2.0, beta=1.0,
                theta_domain=loss.theta_domain, z_domain=loss.z_domain,
            )

    def test_weak_lipschitz_offset(self):
        # shifting the loss by h(theta) keeps the centered increments Lipschitz
        base = quadratic_loss(UNIT_BOX)

        def ev(theta, z):
            return base.eval(theta, z) + 3.0 * theta[0]

        LossModel(
            eval=ev,
            grad=lambda th, z: base.grad(th, z) + 3.0,
            L=base.L,
            a=0.0,
            b=base.b,
            alpha=1.0,
            beta=1.0,
            theta_domain=base.theta_domain,
            z_domain=base.z_domain,
            h=lambda th: 3.0 * th[0],
        )


class TestProjection:
    def test_box_clamp(self):
        dom = Box(np.array([[0.0, 1.0], [0.0, 1.0]]))
        assert np.array_equal(project(dom, np.array([1.5, -0.2])), [1.0, 0.0])

    def test_ball_rescale(self):
        dom = Ball(np.zeros(2), 1.0)
        out = project(dom, np.array([3.0, 4.0]))
        assert np.allclose(out, [0.6, 0.8])

    def test_interior_untouched(self):
        dom = Ball(np.zeros(2), 1.0)
        assert np.allclose(project(dom, np.array([0.1, 0.2])), [0.1, 0.2])

    def test_projection_is_nonexpansive(self):
        rng = np.random.default_rng(1)
        dom = Box(np.array([[0.0, 1.0], [0.0, 1.0]]))
        for _ in range(200):
            a, b = rng.normal(size=(2, 2)) * 2
            assert np.linalg.norm(project(dom, a) - project(dom, b)) <= np.linalg.norm(a - b) + 1e-12

    def test_diameters(self):
        assert domain_diameter(Box(np.array([[0.0, 1.0]]))) == 1.0
        assert domain_diameter(Box(np.array([[0.0, 3.0], [0.0, 4.0]]))) == 5.0
        assert domain_diameter(Ball(np.zeros(3), 2.0)) == 4.0


class TestContraction:
    def test_closed_form_values(self):
        assert contraction_factor(1, 1, 1) == 0.0
        assert contraction_factor(1, 2, 0.5) == pytest.approx(math.sqrt(0.5), abs=1e-12)

    def test_approaches_one_for_small_eta(self):
        assert contraction_factor(1, 2, 1e-9) == pytest.approx(1.0, abs=1e-6)

    def test_rejects_eta_out_of_range(self):
        with pytest.raises(ValueError):
            contraction_factor(1, 2, 1.0)

    @pytest.mark.parametrize("alpha,beta,eta", [(1, 1, 0.5), (1, 2, 0.5), (2, 4, 0.25)])
    def test_step_map_contracts(self, alpha, beta, eta):
        d = 2
        box = [[0.0, 1.0]] * d
        loss = quadratic_loss(box, weights=[alpha, beta])
        gamma = contraction_factor(alpha, beta, eta)
        dom = loss.theta_domain
        rng = np.random.default_rng(2)
        for _ in range(1000):
            th, th2, z = rng.uniform(0, 1, size=(3, d))
            phi = step_map(loss, eta, z, dom)
            lhs = np.linalg.norm(phi(th) - phi(th2))
            assert lhs <= gamma * np.linalg.norm(th - th2) + 1e-9

    def test_iterated_contraction(self):
        loss = quadratic_loss([[0.0, 1.0]] * 2, weights=[1.0, 2.0])
        eta = 0.5
        gamma = contraction_factor(1.0, 2.0, eta)
        dom = loss.theta_domain
        R = domain_diameter(dom)
        rng = np.random.default_rng(3)
        for _ in range(200):
            th, th2 = rng.uniform(0, 1, size=(2, 2))
            zs = rng.uniform(0, 1, size=(6, 2))
            a, b = th, th2
            for m, z in enumerate(zs, start=1):
                phi = step_map(loss, eta, z, dom)
                a, b = phi(a), phi(b)
                assert np.linalg.norm(a - b) <= gamma**m * R + 1e-9


class TestForgettingDepth:
    def test_zero_when_radius_within_eps(self):
        assert forgetting_depth(0.5, 0.9, 1.0) == 0

    def test_exact_power(self):
        assert forgetting_depth(1.0, 0.5, 1 / 16) == 4

    def test_known_value(self):
        assert forgetting_depth(1.0, 0.70711, 0.01) == 14

    def test_gamma_zero(self):
        assert forgetting_depth(1.0, 0.0, 0.1) == 1
        assert forgetting_depth(0.05, 0.0, 0.1) == 0

    def test_monotone_in_eps(self):
        depths = [forgetting_depth(1.0, 0.5, e) for e in (0.5, 0.25, 0.1, 0.01)]
        assert depths == sorted(depths)


class TestSgd:
    def test_single_step_lands_on_z(self):
        loss = quadratic_loss(UNIT_BOX)
        spec = SgdSpec(theta1=[0.9], eta=1.0, T=1, domain=loss.theta_domain, indices=(0,))
        out = sgd_run(loss, spec, np.array([[0.3]]))
        assert out[0] == pytest.approx(0.3, abs=1e-12)

    def test_rejects_bad_eta(self):
        loss = quadratic_loss(UNIT_BOX)
        spec = SgdSpec(theta1=[0.5], eta=2.5, T=1, domain=loss.theta_domain, indices=(0,))
        with pytest.raises(ValueError):
            sgd_run(loss, spec, np.array([[0.3]]))

    def test_rejects_t_zero(self):
        loss = quadratic_loss(UNIT_BOX)
        with pytest.raises(ValueError):
            SgdSpec(theta1=[0.5], eta=0.5, T=0, domain=loss.theta_domain)

    def test_deterministic_given_indices(self):
        loss = quadratic_loss(UNIT_BOX)
        spec = SgdSpec(theta1=[0.2], eta=0.5, T=5, domain=loss.theta_domain, indices=(0, 1, 1, 0, 1))
        sample = np.array([[0.1], [0.9]])
        assert sgd_run(loss, spec, sample) == sgd_run(loss, spec, sample)

    def test_index_seed_reproducible(self):
        loss = quadratic_loss(UNIT_BOX)
        spec = SgdSpec(theta1=[0.2], eta=0.5, T=5, domain=loss.theta_domain, index_seed=7)
        sample = np.random.default_rng(4).uniform(size=(6, 1))
        a = sgd_run(loss, spec, sample, seed=1)
        b = sgd_run(loss, spec, sample, seed=2)  # index_seed wins over call seed
        assert np.array_equal(a, b)

    def test_call_seed_used_without_index_seed(self):
        loss = quadratic_loss(UNIT_BOX)
        spec = SgdSpec(theta1=[0.2], eta=0.5, T=5, domain=loss.theta_domain)
        sample = np.random.default_rng(5).uniform(size=(6, 1))
        assert np.array_equal(sgd_run(loss, spec, sample, seed=3), sgd_run(loss, spec, sample, seed=3))


class TestErm:
    def test_singleton_grid(self):
        loss = quadratic_loss(UNIT_BOX)
        grid = PointCloud([[0.7]])
        assert erm_finite(grid, loss, np.array([[0.1]]))[0] == 0.7

    def test_exact_minimizer_in_grid(self):
        loss = quadratic_loss(UNIT_BOX)
        grid = PointCloud([[0.0], [1.0]])
        assert erm_finite(grid, loss, np.array([[0.0], [0.0]]))[0] == 0.0

    def test_matches_bruteforce(self):
        loss = quadratic_loss(UNIT_BOX)
        rng = np.random.default_rng(6)
        grid = PointCloud(np.sort(rng.uniform(0, 1, 12))[:, None])
        for _ in range(50):
            sample = rng.uniform(0, 1, size=(8, 1))
            risks = [np.mean([loss.eval(g, z) for z in sample]) for g in grid.points]
            expect = grid.points[int(np.argmin(risks))]
            assert np.array_equal(erm_finite(grid, loss, sample), expect)

    def test_tie_breaks_to_lowest_index(self):
        loss = quadratic_loss(UNIT_BOX)
        grid = PointCloud([[0.4], [0.6]])  # symmetric around the sample point
        out = erm_finite(grid, loss, np.array([[0.5]]))
        assert out[0] == 0.4

    def test_batch_hook_matches_loop(self):
        from arcbounds.supersample import draw_supersample, mix, sign_vector

        loss = quadratic_loss(UNIT_BOX)
        grid = PointCloud(np.linspace(0, 1, 9)[:, None])
        learner = make_erm_learner(grid, loss)
        dist_spec = {"dist": "uniform_box", "params": {"box": UNIT_BOX}}
        from arcbounds.supersample import make_distribution

        ss = draw_supersample(make_distribution(dist_spec), 7, seed=8)
        idx = np.arange(2**7)
        fast = learner.outputs_for_mixings(ss, idx, 0)
        slow = np.array([learner(mix(ss, sign_vector(int(k), 7)), 0) for k in idx])
        assert np.array_equal(fast, slow)


class TestCompression:
    def test_k_equals_n_gives_mean(self):
        sample = np.array([[0.0], [1.0], [2.0]])
        sub, theta = compress_k(sample, 3)
        assert theta[0] == pytest.approx(1.0)

    def test_k_one_gives_lex_smallest(self):
        sample = np.array([[2.0, 0.0], [0.0, 5.0], [0.0, 1.0]])
        sub, theta = compress_k(sample, 1)
        assert np.array_equal(sub[0], [0.0, 1.0])

    def test_farthest_point_trace(self):
        sub, theta = compress_k(np.array([[0.0], [1.0], [10.0]]), 2)
        assert set(sub.ravel()) == {0.0, 10.0}
        assert theta[0] == 5.0

    def test_order_independent(self):
        rng = np.random.default_rng(7)
        sample = rng.uniform(size=(9, 2))
        _, theta = compress_k(sample, 4)
        for _ in range(5):
            perm = rng.permutation(9)
            _, theta2 = compress_k(sample[perm], 4)
            assert np.array_equal(theta, theta2)

    def test_rejects_k_above_n(self):
        with pytest.raises(ValueError):
            compress_k(np.array([[0.0]]), 2)


class TestVcThreshold:
    def brute(self, sample):
        x, y = sample[:, 0], sample[:, 1]
        xs = np.unique(x)
        cuts = [xs[0] - 1.0, *(0.5 * (xs[:-1] + xs[1:])), xs[-1] + 1.0]
        errs = [(int(np.sum((x > t).astype(float) != y)), t) for t in cuts]
        best = min(e for e, _ in errs)
        return min(t for e, t in errs if e == best)

    def test_perfect_separation(self):
        sample = np.array([[0.0, 0], [0.2, 0], [0.8, 1], [1.0, 1]], dtype=float)
        t = vc_threshold_erm(sample)
        x, y = sample[:, 0], sample[:, 1]
        assert np.sum((x > t).astype(float) != y) == 0

    def test_all_zero_labels(self):
        sample = np.array([[0.1, 0], [0.5, 0], [0.9, 0]], dtype=float)
        t = vc_threshold_erm(sample)
        assert t > 0.9  # the predict-all-0 sentinel

    def test_all_one_labels(self):
        sample = np.array([[0.1, 1], [0.5, 1]], dtype=float)
        t = vc_threshold_erm(sample)
        assert t < 0.1

    def test_rejects_bad_labels(self):
        with pytest.raises(ValueError):
            vc_threshold_erm(np.array([[0.0, 2.0]]))

    def test_matches_bruteforce(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            x = rng.uniform(0, 1, 10)
            y = (x > rng.uniform(0.2, 0.8)).astype(float)
            flip = rng.random(10) < 0.2
            y[flip] = 1 - y[flip]
            sample = np.column_stack([x, y])
            assert vc_threshold_erm(sample) == self.brute(sample)


class TestThresholdLoss:
    def test_values_are_zero_one(self):
        loss = ThresholdLoss()
        assert loss.eval(np.array([0.5]), np.array([0.7, 1.0])) == 0.0
        assert loss.eval(np.array([0.5]), np.array([0.7, 0.0])) == 1.0

    def test_risks_matrix_matches_eval(self):
        loss = ThresholdLoss()
        rng = np.random.default_rng(9)
        thetas = rng.uniform(0, 1, size=(4, 1))
        zs = np.column_stack([rng.uniform(0, 1, 6), rng.integers(0, 2, 6).astype(float)])
        mat = loss.risks(thetas, zs)
        for i in range(4):
            for j in range(6):
                assert mat[i, j] == loss.eval(thetas[i], zs[j])
