"""Gaussian KL divergences and a variational upper bound between mixtures.

The KL divergence between two Gaussian mixtures has no closed form.  The
bound used here pairs posterior components i with prior components j through
two variational matrices chi1 (i, j) and chi2 (j, i), refined by an
alternating fixed point; each full iteration can only tighten the bound.
The additive constant coming from the estimator's normalization is dropped
throughout: it does not depend on the variational parameters.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class ChiMatrices:
    """Variational pairing weights and the bound trace of the fixed point.

    For each prior component j, sum_i chi1[i, j] equals its weight; for each
    posterior component i, sum_j chi2[j, i] equals 1/K.  ``trace`` holds the
    bound value after each full update, a non-increasing sequence.
    """
    chi1: np.ndarray     # (K, J)
    chi2: np.ndarray     # (J, K)
    trace: list


def gauss_kl(mu1, chol1, mu2, sigma2):
    """KL( N(mu1, L L^T) || N(mu2, sigma2 I) ) with L = chol1 lower-triangular."""
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    mu1 = np.asarray(mu1, dtype=np.float64)
    mu2 = np.asarray(mu2, dtype=np.float64)
    chol1 = np.asarray(chol1, dtype=np.float64)
    p = mu1.shape[0]
    diag = np.diag(chol1)
    if np.any(diag <= 0):
        raise ValueError("chol1 must have a positive diagonal")
    logdet1 = 2.0 * np.sum(np.log(diag))
    tr = np.sum(chol1 * chol1)
    d2 = np.sum((mu1 - mu2) ** 2)
    return 0.5 * (p * np.log(sigma2) - logdet1 + (tr + d2) / sigma2 - p)


def _pairwise_kl(posterior, prior):
    """Matrix D[i, j] = KL(posterior component i || prior component j)."""
    p = posterior.dim
    idx = np.arange(p)
    diags = posterior.chols[:, idx, idx]
    logdets = 2.0 * np.sum(np.log(diags), axis=1)
    trs = np.sum(posterior.chols ** 2, axis=(1, 2))
    d2 = ((posterior.means[:, None, :] - prior.means[None, :, :]) ** 2).sum(axis=2)
    own = 0.5 * (p * np.log(prior.sigma2) - logdets + trs / prior.sigma2 - p)
    return own[:, None] + 0.5 * d2 / prior.sigma2


def _bound_value(log_chi1, log_chi2, d_matrix):
    # entries with chi2 = 0 (underflow) contribute nothing to the sum
    chi2 = np.exp(log_chi2)
    mask = chi2 > 0.0
    out = np.zeros_like(chi2)
    out[mask] = chi2[mask] * (log_chi2[mask] - log_chi1.T[mask]
                              + d_matrix.T[mask])
    return float(out.sum())


def _logsumexp(a, axis):
    m = a.max(axis=axis, keepdims=True)
    return m + np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True))


def mog_kl_upper_bound(posterior, prior, iters=10, tol=1e-8):
    """Upper bound on KL(posterior mixture || prior mixture), up to a constant.

    Runs at most ``iters`` full chi updates, stopping early once no entry of
    either matrix moves by more than ``tol``.  Returns the bound and the
    final :class:`ChiMatrices` (whose ``trace`` records the bound after each
    iteration).
    """
    if posterior.dim != prior.dim:
        raise ValueError("posterior/prior dimension mismatch")
    if iters < 1:
        raise ValueError("iters must be >= 1")
    d_matrix = _pairwise_kl(posterior, prior)          # (K, J)
    log_cq = -np.log(posterior.n_components)
    log_cp = np.log(prior.weights)                     # (J,)

    log_chi1 = np.broadcast_to(log_cp, d_matrix.shape).copy()
    log_chi2 = None
    trace = []
    for _ in range(iters):
        prev1, prev2 = log_chi1, log_chi2
        # chi2[j, i] ∝ chi1[i, j] e^{-D_ij}, normalized over j to 1/K
        s = log_chi1 - d_matrix
        log_chi2 = (log_cq + s - _logsumexp(s, axis=1)).T
        # chi1[i, j] ∝ chi2[j, i], normalized over i to the prior weight
        log_chi1 = (log_cp[:, None] + log_chi2
                    - _logsumexp(log_chi2, axis=1)).T
        trace.append(_bound_value(log_chi1, log_chi2, d_matrix))
        if prev2 is not None:
            delta = max(np.abs(np.exp(log_chi1) - np.exp(prev1)).max(),
                        np.abs(np.exp(log_chi2) - np.exp(prev2)).max())
            if delta < tol:
                break
    chi = ChiMatrices(np.exp(log_chi1), np.exp(log_chi2), trace)
    return trace[-1], chi


def bound_given_chi(posterior, prior, chi):
    """Bound value at the current mixture pair with the chi matrices frozen.

    Only the pairwise KL matrix is recomputed; the chi entropy term is kept.
    Differentiating this expression in the posterior parameters gives
    :func:`mog_kl_upper_bound_grad`.
    """
    k, j = chi.chi1.shape
    if k != posterior.n_components or j != prior.n_components:
        raise ValueError("chi matrices do not match the mixture pair")
    d_matrix = _pairwise_kl(posterior, prior)
    mask = chi.chi2 > 0.0
    out = np.zeros_like(chi.chi2)
    out[mask] = chi.chi2[mask] * (np.log(chi.chi2[mask])
                                  - np.log(chi.chi1.T[mask])
                                  + d_matrix.T[mask])
    return float(out.sum())


def mog_kl_upper_bound_grad(posterior, prior, chi):
    """Gradient of the bound's pairwise-KL term with chi held fixed.

    Returns (d_means, d_chols) of sum_{i,j} chi2[j,i] KL(f_i || g_j) with
    respect to the posterior means and Cholesky factors.
    """
    k, j = chi.chi1.shape
    if k != posterior.n_components or j != prior.n_components:
        raise ValueError("chi matrices do not match the mixture pair")
    w = chi.chi2.sum(axis=0)                           # (K,) mass per component
    d_means = (w[:, None] * posterior.means
               - chi.chi2.T @ prior.means) / prior.sigma2
    idx = np.arange(posterior.dim)
    d_chols = w[:, None, None] * posterior.chols / prior.sigma2
    inv_diag = 1.0 / posterior.chols[:, idx, idx]
    d_chols[:, idx, idx] -= w[:, None] * inv_diag
    return d_means, d_chols
