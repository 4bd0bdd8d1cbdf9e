"""Priors over Q-function weights built from solved source tasks.

Two constructions: a time-variant kernel density estimate whose temporal
Epanechnikov kernel concentrates the mixture weights on recent sources, and
the uniform mixture that ignores observation times.  Both yield a Gaussian
mixture with one component per source solution and shared isotropic
covariance sigma2 * I.
"""

from dataclasses import dataclass

import numpy as np


class EmptyPriorError(ValueError):
    """No source solution carries positive weight at the query time."""


@dataclass
class SourceSolutions:
    """Source-task weight vectors observed on a time grid.

    thetas[m] was observed at times[m] in (0, 1]; instants[m] is the index of
    its time instant (several solutions may share one instant).
    """
    thetas: np.ndarray     # (M, p)
    times: np.ndarray      # (M,)
    instants: np.ndarray   # (M,) int

    def __post_init__(self):
        self.thetas = np.atleast_2d(np.asarray(self.thetas, dtype=np.float64))
        self.times = np.asarray(self.times, dtype=np.float64)
        self.instants = np.asarray(self.instants, dtype=np.int64)
        if not (len(self.thetas) == len(self.times) == len(self.instants)):
            raise ValueError("entry count mismatch")
        # distinct instants must come with strictly increasing times
        order = np.argsort(self.instants, kind="stable")
        inst, times = self.instants[order], self.times[order]
        for a in range(len(inst) - 1):
            if inst[a] == inst[a + 1] and times[a] != times[a + 1]:
                raise ValueError("one time per instant required")
            if inst[a] < inst[a + 1] and not times[a] < times[a + 1]:
                raise ValueError("times must increase across instants")

    @property
    def n_entries(self):
        return len(self.thetas)

    @property
    def dim(self):
        return self.thetas.shape[1]


@dataclass
class PriorMixture:
    """Gaussian mixture prior: component means, weights, isotropic sigma2."""
    means: np.ndarray      # (J, p)
    weights: np.ndarray    # (J,) positive, sum to 1
    sigma2: float

    def __post_init__(self):
        self.means = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")
        if np.any(self.weights <= 0):
            raise ValueError("weights must be strictly positive")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")

    @property
    def n_components(self):
        return len(self.weights)

    @property
    def dim(self):
        return self.means.shape[1]

    def logpdf(self, points):
        """Log density at the given (n, p) points."""
        points = np.atleast_2d(points)
        p = points.shape[1]
        d2 = ((points[:, None, :] - self.means[None, :, :]) ** 2).sum(axis=2)
        logcomp = (-0.5 * d2 / self.sigma2
                   - 0.5 * p * np.log(2.0 * np.pi * self.sigma2)
                   + np.log(self.weights)[None, :])
        m = logcomp.max(axis=1)
        return m + np.log(np.sum(np.exp(logcomp - m[:, None]), axis=1))


def epanechnikov(u):
    """Epanechnikov kernel (3/4)(1 - u^2) on [-1, 1], 0 outside."""
    u = np.asarray(u, dtype=np.float64)
    out = np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)
    return float(out) if out.ndim == 0 else out


def boundary_factor(rho):
    """Mass of the Epanechnikov kernel on [-rho, 1].

    Closed form (3/4) [(1 + rho) - (1 + rho^3) / 3]; equals 1/2 at the
    boundary (rho = 0) and 1 once the full support fits (rho = 1).
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    return 0.75 * ((1.0 + rho) - (1.0 + rho ** 3) / 3.0)


def tvkde_weights(sources, query_t, lam):
    """Normalized temporal-kernel weight of every source entry at query_t.

    Entry (i, j) gets raw weight K_T((query_t - t_i) / lam); sources later
    than the query time get zero.  The normalization absorbs every constant
    factor of the density estimator, so only the kernel values matter.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    if not 0.0 < query_t <= 1.0:
        raise ValueError("query_t must lie in (0, 1]")
    if sources.n_entries == 0:
        raise EmptyPriorError("no source solutions")
    u = (query_t - sources.times) / lam
    raw = np.where(sources.times <= query_t, epanechnikov(u), 0.0)
    total = raw.sum()
    if total <= 0.0:
        raise EmptyPriorError(
            f"no source solution within the temporal window at t={query_t}")
    return raw / total


def build_prior(sources, query_t, lam, sigma2):
    """Time-variant prior: one Gaussian per positive-weight source solution."""
    weights = tvkde_weights(sources, query_t, lam)
    keep = weights > 0.0
    return PriorMixture(sources.thetas[keep], weights[keep], sigma2)


def uniform_prior(sources, sigma2):
    """Time-invariant prior: every source solution weighted equally."""
    n = sources.n_entries
    if n == 0:
        raise EmptyPriorError("no source solutions")
    return PriorMixture(sources.thetas.copy(), np.full(n, 1.0 / n), sigma2)


def tvkde_density(sources, points, query_t, lam, sigma2):
    """Unnormalized time-variant KDE of the source density at query_t.

    Evaluates the full estimator including its constant factors: temporal
    Epanechnikov kernel with boundary correction over [-rho, 1] where
    rho = (1 - query_t)/lam (clipped to [0, 1]), Gaussian spatial kernel with
    isotropic covariance sigma2 * I, divided by the number of contributing
    observations.  Used by the consistency checks; the transfer algorithms
    only ever need the normalized weights.
    """
    points = np.atleast_2d(points)
    p = points.shape[1]
    rho = min(max((1.0 - query_t) / lam, 0.0), 1.0)
    a0 = boundary_factor(rho)
    mask = sources.times <= query_t
    n_obs = int(mask.sum())
    if n_obs == 0:
        raise EmptyPriorError(f"no source observed up to t={query_t}")
    kt = epanechnikov((query_t - sources.times[mask]) / lam)
    d2 = ((points[:, None, :] - sources.thetas[mask][None, :, :]) ** 2).sum(axis=2)
    spatial = np.exp(-0.5 * d2 / sigma2) / (2.0 * np.pi * sigma2) ** (p / 2.0)
    return spatial @ kt / (a0 * n_obs * lam)
