"""Backend parity: the compiled kernels must match the numpy reference."""

import numpy as np
import pytest

from tvtransfer import kernels

pytestmark = pytest.mark.skipif(
    kernels.backend != "cython",
    reason="compiled kernels unavailable; reference backend in use")


def random_td_inputs(rng, n=37, f=19, a=4, t=6, terminal_frac=0.3):
    return dict(
        phi_s=rng.random((n, f)),
        actions=rng.integers(0, a, n),
        rewards=rng.normal(size=n),
        phi_sp=rng.random((n, f)),
        nonterm=(rng.random(n) > terminal_frac).astype(float),
        thetas=rng.normal(size=(t, a, f)) * 0.4,
    )


class TestParity:
    @pytest.mark.parametrize("seed", range(5))
    def test_td_loss_grad(self, seed):
        rng = np.random.default_rng(seed)
        kw = random_td_inputs(rng)
        l_ref, g_ref = kernels.reference_td_loss_grad_multi(
            **kw, gamma=0.97, omega=6.0, proj=0.5)
        l_fast, g_fast = kernels.td_loss_grad_multi(
            **kw, gamma=0.97, omega=6.0, proj=0.5)
        np.testing.assert_allclose(l_fast, l_ref, rtol=1e-12, atol=1e-13)
        np.testing.assert_allclose(g_fast, g_ref, rtol=1e-10, atol=1e-13)

    def test_td_all_terminal(self):
        rng = np.random.default_rng(10)
        kw = random_td_inputs(rng, terminal_frac=1.1)
        l_ref, g_ref = kernels.reference_td_loss_grad_multi(
            **kw, gamma=0.99, omega=5.0, proj=1.0)
        l_fast, g_fast = kernels.td_loss_grad_multi(
            **kw, gamma=0.99, omega=5.0, proj=1.0)
        np.testing.assert_allclose(l_fast, l_ref, rtol=1e-12)
        np.testing.assert_allclose(g_fast, g_ref, rtol=1e-12, atol=1e-15)

    def test_td_single_transition(self):
        rng = np.random.default_rng(11)
        kw = random_td_inputs(rng, n=1, t=1)
        l_ref, g_ref = kernels.reference_td_loss_grad_multi(
            **kw, gamma=0.5, omega=1.0, proj=0.0)
        l_fast, g_fast = kernels.td_loss_grad_multi(
            **kw, gamma=0.5, omega=1.0, proj=0.0)
        np.testing.assert_allclose(l_fast, l_ref, rtol=1e-13)
        np.testing.assert_allclose(g_fast, g_ref, rtol=1e-13, atol=1e-16)

    @pytest.mark.parametrize("seed", range(3))
    def test_rbf_features(self, seed):
        rng = np.random.default_rng(seed)
        states = rng.uniform(-2, 12, (41, 2))
        centers = rng.uniform(0, 10, (23, 2))
        w = rng.uniform(0.2, 3.0, 2)
        np.testing.assert_allclose(
            kernels.rbf_features(states, centers, w),
            kernels.reference_rbf_features(states, centers, w),
            rtol=1e-14)

    @pytest.mark.parametrize("seed", range(3))
    def test_adam_update(self, seed):
        rng = np.random.default_rng(seed)
        shape = (3, 7, 7)
        m1 = rng.random(shape)
        v1 = rng.random(shape)
        p1 = rng.normal(size=shape)
        m2, v2, p2 = m1.copy(), v1.copy(), p1.copy()
        for t in range(1, 6):
            g = rng.normal(size=shape)
            kernels.adam_update(m1, v1, p1, g, t, 1e-2, 0.9, 0.999, 1e-8)
            kernels.reference_adam_update(m2, v2, p2, g, t, 1e-2, 0.9,
                                          0.999, 1e-8)
        np.testing.assert_allclose(p1, p2, rtol=1e-13)
        np.testing.assert_allclose(m1, m2, rtol=1e-13)
        np.testing.assert_allclose(v1, v2, rtol=1e-13)

    def test_adam_shape_mismatch(self):
        m = np.zeros(4)
        with pytest.raises(ValueError):
            kernels.adam_update(m, np.zeros(4), np.zeros(4), np.zeros(5),
                                1, 1e-3, 0.9, 0.999, 1e-8)


class TestBackendSelection:
    def test_backend_reported(self):
        assert kernels.backend in ("cython", "numpy")

    def test_env_override_numpy(self):
        import os
        import subprocess
        import sys
        out = subprocess.run(
            [sys.executable, "-c",
             "from tvtransfer import kernels; print(kernels.backend)"],
            env={**os.environ, "TVTRANSFER_KERNELS": "numpy"},
            capture_output=True, text=True)
        assert out.stdout.strip() == "numpy"
