"""ADAM updates and the stochastic variational objective.

The objective per gradient step is the Monte-Carlo expected squared mellow
TD loss on a minibatch plus (psi / N) times the mixture-KL upper bound to
the prior, where N is the current size of the replay dataset.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels, kl
from .posterior import reparam_grad


@dataclass
class AdamState:
    """Moment estimates for one parameter group."""
    m: np.ndarray
    v: np.ndarray
    alpha: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0


def adam_init(params, alpha, beta1=0.9, beta2=0.999, eps=1e-8):
    return AdamState(np.zeros_like(params, dtype=np.float64),
                     np.zeros_like(params, dtype=np.float64),
                     alpha, beta1, beta2, eps)


def adam_step(state, params, grad):
    """One bias-corrected ADAM update; mutates state and params in place.

    Returns the updated parameter array (the same object that was passed
    in, when it was a float64 ndarray already).
    """
    params = np.ascontiguousarray(params, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if params.shape != grad.shape or params.shape != state.m.shape:
        raise ValueError("parameter/gradient shape mismatch")
    state.t += 1
    kernels.adam_update(state.m, state.v, params, grad, state.t,
                        state.alpha, state.beta1, state.beta2, state.eps)
    return params


@dataclass
class ElboConfig:
    """Knobs of the variational objective."""
    psi: float
    batch_size: int
    n_weight_samples: int = 10
    gamma: float = 0.99
    omega: float = 5.0
    proj: float = 0.5
    kl_iters: int = 10

    def __post_init__(self):
        if self.psi < 0:
            raise ValueError("psi must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def elbo_fixed(posterior, prior, batch, ks, epss, n_data, config, chi=None):
    """Objective value and gradient for fixed minibatch and noise draws.

    ``ks``/``epss`` are the component indices and standard-normal draws of
    the weight samples; the thetas are rebuilt from the current posterior so
    common-random-number comparisons stay valid.  Passing ``chi`` freezes the
    KL pairing instead of re-running the fixed point.

    Returns (value, d_means, d_chols, chi).
    """
    ks = np.asarray(ks)
    epss = np.atleast_2d(np.asarray(epss, dtype=np.float64))
    thetas = posterior.means[ks].copy()
    for k in np.unique(ks):
        sel = ks == k
        thetas[sel] += epss[sel] @ posterior.chols[k].T
    n_actions = posterior.dim // batch.phi_s.shape[1]
    losses, tgrads = kernels.td_loss_grad_multi(
        batch.phi_s, batch.actions, batch.rewards, batch.phi_sp,
        batch.nonterm,
        thetas.reshape(len(ks), n_actions, -1),
        config.gamma, config.omega, config.proj)
    td_value = float(losses.mean())
    d_means, d_chols = reparam_grad(posterior, ks, epss,
                                    tgrads.reshape(len(ks), -1))

    if chi is None:
        bound, chi = kl.mog_kl_upper_bound(posterior, prior, config.kl_iters)
    else:
        bound = kl.bound_given_chi(posterior, prior, chi)
    dmu_kl, dchol_kl = kl.mog_kl_upper_bound_grad(posterior, prior, chi)

    scale = config.psi / n_data
    value = td_value + scale * bound
    return value, d_means + scale * dmu_kl, d_chols + scale * dchol_kl, chi


def elbo_value_and_grad(posterior, prior, buffer, config, rng):
    """Draw a minibatch and weight samples, return (value, d_means, d_chols).

    One minibatch is shared by all weight samples of the estimate; N in the
    psi/N factor is the size of the buffer at call time.
    """
    if len(buffer) == 0:
        raise ValueError("empty replay buffer")
    batch = buffer.sample_batch(rng, config.batch_size)
    ks = rng.integers(posterior.n_components, size=config.n_weight_samples)
    epss = rng.standard_normal((config.n_weight_samples, posterior.dim))
    value, d_means, d_chols, _ = elbo_fixed(
        posterior, prior, batch, ks, epss, len(buffer), config)
    return value, d_means, d_chols
