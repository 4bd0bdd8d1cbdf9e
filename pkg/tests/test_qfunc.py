import numpy as np
import pytest

from tvtransfer.envs import Transition
from tvtransfer.qfunc import (FeatureMap, features, mellow_td_error,
                              mellowmax, mountain_car_feature_map, q_value,
                              q_values, rooms_feature_map, td_loss_and_grad)


def random_batch(rng, fmap, n, terminal_frac=0.2):
    batch = []
    for _ in range(n):
        s = rng.uniform(0, 10, 2)
        sp = rng.uniform(0, 10, 2)
        a = int(rng.integers(fmap.num_actions))
        r = float(rng.normal())
        term = bool(rng.random() < terminal_frac)
        batch.append(Transition(s, a, r, sp, term))
    return batch


def td_loss_only(fmap, theta, batch, gamma, omega):
    """Independent loss recomputation through the scalar-op oracles."""
    errs = [mellow_td_error(fmap, theta, tr, gamma, omega) for tr in batch]
    return float(np.mean(np.square(errs)))


class TestFeatures:
    def test_center_gives_one(self):
        fmap = rooms_feature_map()
        for i in (0, 60, 120):
            phi = features(fmap, fmap.centers[i])
            assert phi[i] == pytest.approx(1.0)

    def test_equidistant_centers_equal(self):
        fmap = rooms_feature_map()
        phi = features(fmap, np.array([0.5, 0.0]))
        # centers (0,0) and (1,0) are both at distance 0.5
        assert phi[0] == pytest.approx(phi[11])

    def test_corner_sum_matches_brute_force(self):
        fmap = rooms_feature_map()
        state = np.array([0.0, 0.0])
        expected = sum(
            np.exp(-np.sum((state - c) ** 2) / (2 * (1 / np.sqrt(2)) ** 2))
            for c in fmap.centers)
        assert features(fmap, state).sum() == pytest.approx(expected,
                                                            rel=1e-12)

    def test_dimension_and_positivity(self):
        fmap = rooms_feature_map()
        phi = features(fmap, np.array([3.3, 7.1]))
        assert phi.shape == (121,)
        assert np.all(phi > 0)
        assert fmap.dim == 484

    def test_mountain_car_map_shape(self):
        fmap = mountain_car_feature_map()
        assert fmap.centers.shape == (64, 2)
        assert fmap.dim == 192
        assert fmap.bandwidths[0] != fmap.bandwidths[1]


class TestQValue:
    def test_zero_weights(self):
        fmap = rooms_feature_map()
        theta = np.zeros(fmap.dim)
        assert q_value(fmap, theta, np.array([2.0, 3.0]), 1) == 0.0

    def test_unit_weight_at_center(self):
        fmap = rooms_feature_map()
        theta = np.zeros(fmap.dim)
        theta[2 * fmap.n_features + 17] = 1.0
        got = q_value(fmap, theta, fmap.centers[17], 2)
        assert got == pytest.approx(1.0)

    def test_matches_naive_dot_product(self):
        fmap = rooms_feature_map()
        rng = np.random.default_rng(3)
        theta = rng.normal(size=fmap.dim)
        state = rng.uniform(0, 10, 2)
        for action in range(4):
            phi = features(fmap, state)
            expected = sum(theta[action * 121 + i] * phi[i]
                           for i in range(121))
            assert q_value(fmap, theta, state, action) == pytest.approx(
                expected, rel=1e-12)

    def test_linearity_in_theta(self):
        fmap = rooms_feature_map()
        rng = np.random.default_rng(4)
        t1, t2 = rng.normal(size=(2, fmap.dim))
        state = rng.uniform(0, 10, 2)
        a, b = 0.37, -1.4
        for action in range(4):
            lhs = q_value(fmap, a * t1 + b * t2, state, action)
            rhs = (a * q_value(fmap, t1, state, action)
                   + b * q_value(fmap, t2, state, action))
            assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_invalid_action(self):
        fmap = rooms_feature_map()
        with pytest.raises(ValueError):
            q_value(fmap, np.zeros(fmap.dim), np.zeros(2), 4)


class TestMellowmax:
    def test_constant_vector(self):
        for omega in (0.5, 5.0, 50.0):
            assert mellowmax([3.3, 3.3, 3.3], omega) == pytest.approx(3.3)

    def test_two_values_omega_one(self):
        expected = np.log((1 + np.e) / 2)
        assert mellowmax([0.0, 1.0], 1.0) == pytest.approx(expected,
                                                           rel=1e-12)

    def test_large_omega_approaches_max(self):
        val = mellowmax([0.0, 1.0], 100.0)
        assert 1.0 - np.log(2) / 100.0 <= val <= 1.0

    def test_bounds_fuzz(self):
        rng = np.random.default_rng(5)
        for _ in range(500):
            v = rng.normal(scale=rng.uniform(0.1, 50), size=rng.integers(1, 9))
            omega = rng.uniform(0.05, 80)
            mm = mellowmax(v, omega)
            assert v.max() - np.log(len(v)) / omega - 1e-12 <= mm
            assert mm <= v.max() + 1e-12

    def test_monotone(self):
        rng = np.random.default_rng(6)
        for _ in range(300):
            v = rng.normal(size=5)
            w = v + rng.uniform(0, 1, size=5)
            assert mellowmax(v, 7.0) <= mellowmax(w, 7.0) + 1e-12

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            mellowmax([], 1.0)
        with pytest.raises(ValueError):
            mellowmax([1.0], 0.0)


class TestMellowTdError:
    def test_terminal_drops_bootstrap(self):
        fmap = rooms_feature_map()
        tr = Transition(np.array([1.0, 1.0]), 0, 1.0, np.array([2.0, 1.0]),
                        True)
        assert mellow_td_error(fmap, np.zeros(fmap.dim), tr, 0.99,
                               5.0) == pytest.approx(1.0)

    def test_all_zero(self):
        fmap = rooms_feature_map()
        tr = Transition(np.array([1.0, 1.0]), 2, 0.0, np.array([2.0, 1.0]),
                        False)
        assert mellow_td_error(fmap, np.zeros(fmap.dim), tr, 0.99,
                               5.0) == pytest.approx(0.0)

    def test_composition_of_oracles(self):
        fmap = rooms_feature_map()
        rng = np.random.default_rng(7)
        theta = rng.normal(size=fmap.dim) * 0.3
        tr = Transition(rng.uniform(0, 10, 2), 1, 0.7, rng.uniform(0, 10, 2),
                        False)
        expected = (tr.reward
                    + 0.99 * mellowmax(q_values(fmap, theta, tr.next_state),
                                       5.0)
                    - q_value(fmap, theta, tr.state, tr.action))
        assert mellow_td_error(fmap, theta, tr, 0.99, 5.0) == pytest.approx(
            expected, rel=1e-12)


def central_fd(f, theta, h=1e-5):
    grad = np.empty_like(theta)
    for i in range(len(theta)):
        tp, tm = theta.copy(), theta.copy()
        tp[i] += h
        tm[i] -= h
        grad[i] = (f(tp) - f(tm)) / (2 * h)
    return grad


class TestTdLossAndGrad:
    def test_empty_batch_rejected(self):
        fmap = rooms_feature_map()
        with pytest.raises(ValueError):
            td_loss_and_grad(fmap, np.zeros(fmap.dim), [], 0.99, 5.0, 1.0)

    def test_single_terminal_transition(self):
        # loss (1 - Q)^2 at theta=0 gives loss 1 and gradient -2 phi(s, a)
        fmap = rooms_feature_map()
        tr = Transition(np.array([4.0, 4.0]), 3, 1.0, np.array([5.0, 4.0]),
                        True)
        theta = np.zeros(fmap.dim)
        loss, grad = td_loss_and_grad(fmap, theta, [tr], 0.99, 5.0, 1.0)
        assert loss == pytest.approx(1.0)
        expected = np.zeros(fmap.dim)
        expected[3 * 121:] = -2.0 * features(fmap, tr.state)
        np.testing.assert_allclose(grad, expected, atol=1e-12)
        fd = central_fd(
            lambda t: td_loss_and_grad(fmap, t, [tr], 0.99, 5.0, 1.0)[0],
            theta)
        np.testing.assert_allclose(grad, fd, atol=1e-8)

    def test_loss_matches_scalar_oracle(self):
        fmap = rooms_feature_map()
        rng = np.random.default_rng(8)
        theta = rng.normal(size=fmap.dim) * 0.2
        batch = random_batch(rng, fmap, 7)
        loss, _ = td_loss_and_grad(fmap, theta, batch, 0.99, 5.0, 0.5)
        assert loss == pytest.approx(td_loss_only(fmap, theta, batch,
                                                  0.99, 5.0), rel=1e-12)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_gradient_matches_finite_differences(self, seed):
        # exact only at proj = 1, where the surrogate is the true derivative
        fmap = rooms_feature_map()
        rng = np.random.default_rng(seed)
        theta = rng.normal(size=fmap.dim) * 0.3
        batch = random_batch(rng, fmap, 10)
        loss, grad = td_loss_and_grad(fmap, theta, batch, 0.99, 5.0, 1.0)
        fd = central_fd(
            lambda t: td_loss_and_grad(fmap, t, batch, 0.99, 5.0, 1.0)[0],
            theta)
        denom = max(np.linalg.norm(fd), 1e-12)
        assert np.linalg.norm(grad - fd) / denom < 1e-4

    def test_proj_scales_next_state_term_linearly(self):
        fmap = rooms_feature_map()
        rng = np.random.default_rng(9)
        theta = rng.normal(size=fmap.dim) * 0.3
        batch = random_batch(rng, fmap, 6, terminal_frac=0.0)
        g0 = td_loss_and_grad(fmap, theta, batch, 0.99, 5.0, 0.0)[1]
        g1 = td_loss_and_grad(fmap, theta, batch, 0.99, 5.0, 1.0)[1]
        gh = td_loss_and_grad(fmap, theta, batch, 0.99, 5.0, 0.5)[1]
        np.testing.assert_allclose(2 * gh, g0 + g1, atol=1e-12)

    def test_near_stationary_point_small_gradient(self):
        # single non-terminal self-loop with reward 0: theta = 0 is optimal
        fmap = rooms_feature_map()
        s = np.array([5.0, 5.0])
        tr = Transition(s, 0, 0.0, s, False)
        loss, grad = td_loss_and_grad(fmap, np.zeros(fmap.dim), [tr],
                                      0.99, 5.0, 1.0)
        assert loss == 0.0
        np.testing.assert_allclose(grad, 0.0, atol=1e-12)
