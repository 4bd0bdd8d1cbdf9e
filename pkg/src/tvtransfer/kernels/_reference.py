"""Reference numpy implementation of the hot kernels.

These two functions dominate the runtime of source solving and transfer:
radial-basis feature evaluation and the batched temporal-difference loss
with its weight gradient.  The compiled extension in ``_fast.pyx`` mirrors
their semantics exactly; keep the two in sync.
"""

import numpy as np


def rbf_features(states, centers, inv_two_bw2):
    """Gaussian RBF feature matrix.

    Parameters
    ----------
    states : (N, d) array
    centers : (F, d) array
    inv_two_bw2 : (d,) array, per-dimension 1 / (2 * bandwidth**2)

    Returns
    -------
    (N, F) array with entries exp(-sum_d (s_d - c_d)^2 / (2 bw_d^2)).
    """
    states = np.asarray(states, dtype=np.float64)
    diff = states[:, None, :] - centers[None, :, :]
    d2 = np.einsum("nfd,d->nf", diff * diff, inv_two_bw2)
    return np.exp(-d2)


def adam_update(m, v, params, grad, t, alpha, beta1, beta2, eps):
    """One bias-corrected ADAM update, in place on m, v and params."""
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    params -= (alpha / c1) * m / (np.sqrt(v / c2) + eps)


def td_loss_grad_multi(phi_s, actions, rewards, phi_sp, nonterm,
                       thetas, gamma, omega, proj):
    """Squared mellow TD loss and gradient for a stack of weight vectors.

    Parameters
    ----------
    phi_s : (N, F) features of the visited states
    actions : (N,) int64 indices of the taken actions
    rewards : (N,) rewards
    phi_sp : (N, F) features of the successor states
    nonterm : (N,) 1.0 for non-terminal transitions, 0.0 for terminal
    thetas : (T, A, F) weight vectors, one (A, F) action-block matrix each
    gamma, omega, proj : discount, mellowmax temperature, gradient projection

    Returns
    -------
    losses : (T,) mean squared mellow TD error per weight vector
    grads : (T, A, F) gradient of the loss w.r.t. each weight vector
    """
    phi_s = np.asarray(phi_s, dtype=np.float64)
    phi_sp = np.asarray(phi_sp, dtype=np.float64)
    thetas = np.asarray(thetas, dtype=np.float64)
    n, f = phi_s.shape
    t, a, _ = thetas.shape
    th2d = thetas.reshape(t * a, f)

    qs = (phi_s @ th2d.T).reshape(n, t, a)
    qsp = (phi_sp @ th2d.T).reshape(n, t, a)

    qmax = qsp.max(axis=2, keepdims=True)
    ex = np.exp(omega * (qsp - qmax))
    sumex = ex.sum(axis=2, keepdims=True)
    mm = qmax[:, :, 0] + np.log(sumex[:, :, 0] / a) / omega
    soft = ex / sumex

    q_taken = np.take_along_axis(qs, actions[:, None, None].repeat(t, axis=1),
                                 axis=2)[:, :, 0]
    b = rewards[:, None] + gamma * mm * nonterm[:, None] - q_taken

    losses = np.mean(b * b, axis=0)

    # d(loss)/d(theta[t,a]) = (2/N) sum_i b_it * d(b_it)/d(theta[t,a])
    w_next = (2.0 / n) * gamma * proj * b * nonterm[:, None]
    grads = np.einsum("it,ita,if->taf", w_next, soft, phi_sp)
    w_cur = (2.0 / n) * b
    onehot = np.zeros((n, a))
    onehot[np.arange(n), actions] = 1.0
    grads -= np.einsum("it,ia,if->taf", w_cur, onehot, phi_s)
    return losses, grads
