"""Mixture-of-Gaussians variational family with Cholesky-factored covariances.

Components have equal weights 1/K.  Sampling is reparametrized: a draw
records its component index and standard-normal noise so that pathwise
gradients can be propagated back to the means and Cholesky factors.
"""

import numpy as np

# Diagonal floor of every Cholesky factor, i.e. the minimum eigenvalue
# reachable by L.  Floors of the order of the prior scale or larger inject
# enough per-step weight-resampling noise to break greedy control in the
# rooms tasks, so the floor binds L itself, not the covariance.
SIGMA_MIN = 1e-4


class MixturePosterior:
    """Equal-weight Gaussian mixture q(theta) = (1/K) sum_k N(mu_k, L_k L_k^T)."""

    def __init__(self, means, chols):
        self.means = np.array(means, dtype=np.float64)
        self.chols = np.array(chols, dtype=np.float64)
        if self.means.ndim != 2 or self.chols.ndim != 3:
            raise ValueError("means must be (K, p), chols (K, p, p)")
        k, p = self.means.shape
        if self.chols.shape != (k, p, p):
            raise ValueError("means/chols shape mismatch")
        tril = np.tril(self.chols)
        if not np.allclose(tril, self.chols):
            raise ValueError("Cholesky factors must be lower-triangular")
        self.chols = tril
        self.clamp_diag()

    @property
    def n_components(self):
        return self.means.shape[0]

    @property
    def dim(self):
        return self.means.shape[1]

    def clamp_diag(self):
        """Floor the Cholesky diagonals at SIGMA_MIN, in place."""
        idx = np.arange(self.dim)
        diag = self.chols[:, idx, idx]
        self.chols[:, idx, idx] = np.maximum(diag, SIGMA_MIN)

    def copy(self):
        return MixturePosterior(self.means.copy(), self.chols.copy())

    def sample(self, rng):
        """Draw theta = mu_k + L_k eps with k uniform; returns (theta, k, eps)."""
        k = int(rng.integers(self.n_components))
        eps = rng.standard_normal(self.dim)
        return self.means[k] + self.chols[k] @ eps, k, eps

    def sample_n(self, rng, n):
        """Vectorized draws: (thetas (n, p), ks (n,), epss (n, p))."""
        ks = rng.integers(self.n_components, size=n)
        epss = rng.standard_normal((n, self.dim))
        thetas = self.means[ks] + np.einsum("kij,kj->ki",
                                            self.chols[ks], epss)
        return thetas, ks, epss

    def logpdf(self, points):
        """Log density at the given (n, p) points."""
        points = np.atleast_2d(points)
        n, p = points.shape
        comp = np.empty((self.n_components, n))
        for k in range(self.n_components):
            diff = points - self.means[k]
            y = _forward_solve(self.chols[k], diff.T)
            maha = np.sum(y * y, axis=0)
            logdet = 2.0 * np.sum(np.log(np.diag(self.chols[k])))
            comp[k] = -0.5 * (maha + logdet + p * np.log(2.0 * np.pi))
        m = comp.max(axis=0)
        return m + np.log(np.mean(np.exp(comp - m), axis=0))


def _forward_solve(chol, rhs):
    """Solve the lower-triangular system chol @ y = rhs."""
    y = np.array(rhs, dtype=np.float64)
    n = chol.shape[0]
    for i in range(n):
        y[i] -= chol[i, :i] @ y[:i]
        y[i] /= chol[i, i]
    return y


_TRIL_MASKS = {}


def _tril_mask(p):
    mask = _TRIL_MASKS.get(p)
    if mask is None:
        mask = _TRIL_MASKS[p] = np.tril(np.ones((p, p)))
    return mask


def reparam_grad(posterior, ks, epss, per_theta_grads):
    """Pathwise gradient of a Monte-Carlo mean over posterior samples.

    Given S samples theta_s = mu_{k_s} + L_{k_s} eps_s and the gradients
    g_s = d loss / d theta at each sample, returns the gradient of
    (1/S) sum_s loss(theta_s) with respect to the means and Cholesky factors
    (lower-triangular part only).
    """
    ks = np.asarray(ks)
    epss = np.atleast_2d(np.asarray(epss, dtype=np.float64))
    grads = np.atleast_2d(np.asarray(per_theta_grads, dtype=np.float64))
    if len(ks) != len(grads) or len(epss) != len(grads):
        raise ValueError("sample/gradient count mismatch")
    n = len(ks)
    mask = _tril_mask(posterior.dim)
    d_means = np.zeros_like(posterior.means)
    d_chols = np.zeros_like(posterior.chols)
    for k in range(posterior.n_components):
        sel = ks == k
        if not np.any(sel):
            continue
        g = grads[sel]
        d_means[k] = g.sum(axis=0) / n
        outer = g.T @ epss[sel]
        outer *= mask
        outer /= n
        d_chols[k] = outer
    return d_means, d_chols
