"""Source-task solving and the online variational transfer loop.

The transfer loop follows the sampling scheme of the target-task algorithm:
at every environment step a weight vector is drawn from the posterior, the
greedy action under it is executed, the transition feeds a FIFO replay
buffer, and one ADAM update of the variational parameters is applied.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .optimizer import ElboConfig, adam_init, adam_step, elbo_value_and_grad
from .posterior import MixturePosterior
from .qfunc import feature_map_for, features
from .kl import mog_kl_upper_bound, mog_kl_upper_bound_grad


@dataclass
class FeatureBatch:
    """Minibatch of transitions in feature space."""
    phi_s: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    phi_sp: np.ndarray
    nonterm: np.ndarray


class ReplayBuffer:
    """FIFO transition store holding precomputed feature vectors."""

    def __init__(self, n_features, capacity):
        self.capacity = int(capacity)
        self.phi_s = np.empty((self.capacity, n_features))
        self.actions = np.empty(self.capacity, dtype=np.int64)
        self.rewards = np.empty(self.capacity)
        self.phi_sp = np.empty((self.capacity, n_features))
        self.nonterm = np.empty(self.capacity)
        self._size = 0
        self._ptr = 0

    def __len__(self):
        return self._size

    def push(self, phi_s, action, reward, phi_sp, terminal):
        i = self._ptr
        self.phi_s[i] = phi_s
        self.actions[i] = action
        self.rewards[i] = reward
        self.phi_sp[i] = phi_sp
        self.nonterm[i] = 0.0 if terminal else 1.0
        self._ptr = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample_batch(self, rng, n):
        """Uniform sample of n transitions, with replacement."""
        idx = rng.integers(0, self._size, size=n)
        return FeatureBatch(self.phi_s[idx], self.actions[idx],
                            self.rewards[idx], self.phi_sp[idx],
                            self.nonterm[idx])


@dataclass
class SolveConfig:
    """Source-task TD solver settings."""
    iterations: int
    batch_size: int = 50
    buffer_size: int = 50000
    alpha: float = 1e-3
    epsilon_end: float = 0.02
    omega: float = 5.0
    proj: float = 0.5


def _epsilon(i, iterations, epsilon_end):
    """Linear decay from 1 to epsilon_end over the first half of the budget."""
    half = 0.5 * iterations
    if i >= half:
        return epsilon_end
    return 1.0 - (1.0 - epsilon_end) * i / half


def _greedy(q, rng):
    """Argmax with exact ties broken uniformly at random.

    Before the first reward is observed all Q-values are identically zero, so
    a first-index argmax would collapse the greedy policy onto one action;
    random tie-breaking keeps it exploring.
    """
    best = np.flatnonzero(q == q.max())
    if len(best) == 1:
        return int(best[0])
    return int(best[rng.integers(len(best))])


def solve_source(env, config, rng, fmap=None):
    """Minimize the squared mellow TD error with epsilon-greedy exploration."""
    fmap = fmap or feature_map_for(env)
    n_act, n_feat = fmap.num_actions, fmap.n_features
    theta = np.zeros(fmap.dim)
    adam = adam_init(theta, config.alpha)
    buffer = ReplayBuffer(n_feat, config.buffer_size)

    state = env.reset(rng)
    phi_s = features(fmap, state)
    ep_steps = 0
    for i in range(config.iterations):
        if rng.random() < _epsilon(i, config.iterations, config.epsilon_end):
            action = int(rng.integers(n_act))
        else:
            action = _greedy(theta.reshape(n_act, n_feat) @ phi_s, rng)
        tr = env.step(state, action, rng)
        phi_sp = features(fmap, tr.next_state)
        buffer.push(phi_s, action, tr.reward, phi_sp, tr.terminal)

        batch = buffer.sample_batch(rng, config.batch_size)
        _, grads = kernels.td_loss_grad_multi(
            batch.phi_s, batch.actions, batch.rewards, batch.phi_sp,
            batch.nonterm, theta.reshape(1, n_act, n_feat),
            env.gamma, config.omega, config.proj)
        theta = adam_step(adam, theta, grads[0].ravel())

        ep_steps += 1
        if tr.terminal or ep_steps >= env.max_episode_steps:
            state = env.reset(rng)
            phi_s = features(fmap, state)
            ep_steps = 0
        else:
            state = tr.next_state
            phi_s = phi_sp
    return theta


def evaluate_greedy(env, theta, n_episodes, rng, fmap=None):
    """Discounted return of the greedy policy of theta, one value per episode."""
    fmap = fmap or feature_map_for(env)
    n_act, n_feat = fmap.num_actions, fmap.n_features
    blocks = theta.reshape(n_act, n_feat)
    returns = np.empty(n_episodes)
    for e in range(n_episodes):
        state = env.reset(rng)
        total, discount = 0.0, 1.0
        for _ in range(env.max_episode_steps):
            action = _greedy(blocks @ features(fmap, state), rng)
            tr = env.step(state, action, rng)
            total += discount * tr.reward
            discount *= env.gamma
            if tr.terminal:
                break
            state = tr.next_state
        returns[e] = total
    return returns


def init_posterior(prior, K, refine_steps, rng, alpha_mu=1e-3, kl_iters=10):
    """Posterior initialization by approximate KL projection onto the prior.

    Component means start at the K heaviest prior components (exact weight
    ties are broken at random; if K exceeds the component count the extras
    are drawn proportionally to weight, with replacement) plus Gaussian
    jitter of the prior's covariance scale, then take ADAM steps on the KL
    upper bound.  Cholesky factors start isotropic at sqrt(sigma2), floored
    at the diagonal minimum.
    """
    if prior.n_components < 1:
        raise ValueError("empty prior")
    w = prior.weights
    if K <= prior.n_components:
        order = np.lexsort((rng.random(len(w)), -w))
        chosen = order[:K]
    else:
        extra = rng.choice(len(w), size=K - prior.n_components, p=w)
        chosen = np.concatenate([np.arange(prior.n_components), extra])
    sigma = np.sqrt(prior.sigma2)
    means = prior.means[chosen] + rng.normal(0.0, sigma, (K, prior.dim))
    chols = np.tile(sigma * np.eye(prior.dim), (K, 1, 1))
    posterior = MixturePosterior(means, chols)

    # Every prior component has covariance sigma2 * I, so the bound-optimal
    # Cholesky factor is sqrt(sigma2) * I regardless of the pairing weights;
    # only the means need iterative refinement.
    adam_mu = adam_init(posterior.means, alpha_mu)
    for _ in range(refine_steps):
        _, chi = mog_kl_upper_bound(posterior, prior, kl_iters)
        d_means, _ = mog_kl_upper_bound_grad(posterior, prior, chi)
        adam_step(adam_mu, posterior.means, d_means)
    return posterior


@dataclass
class TransferConfig:
    """Settings of one transfer run."""
    iterations: int
    elbo: ElboConfig
    K: int = 1
    record_stride: int = 50
    refine_steps: int = 500
    buffer_size: int = 50000
    alpha_mu: float = 1e-3
    alpha_chol: float = 0.1


@dataclass
class RunRecord:
    """Learning curve and bookkeeping of one transfer run."""
    iterations: np.ndarray       # record grid
    avg_returns: np.ndarray      # moving average over the last 50 episodes
    episode_returns: list
    posterior: MixturePosterior
    n_action_samples: int
    n_updates: int


def run_transfer(env, prior, config, rng, fmap=None):
    """Online variational transfer on the target task (one run)."""
    fmap = fmap or feature_map_for(env)
    n_act, n_feat = fmap.num_actions, fmap.n_features
    posterior = init_posterior(prior, config.K, config.refine_steps, rng,
                               config.alpha_mu, config.elbo.kl_iters)
    adam_mu = adam_init(posterior.means, config.alpha_mu)
    buffer = ReplayBuffer(n_feat, config.buffer_size)

    state = env.reset(rng)
    phi_s = features(fmap, state)
    ep_steps, ep_return, ep_discount = 0, 0.0, 1.0
    episode_returns = []
    grid, series = [], []
    n_action_samples = n_updates = 0

    for it in range(1, config.iterations + 1):
        theta, _, _ = posterior.sample(rng)
        n_action_samples += 1
        action = int(np.argmax(theta.reshape(n_act, n_feat) @ phi_s))
        tr = env.step(state, action, rng)
        phi_sp = features(fmap, tr.next_state)
        buffer.push(phi_s, action, tr.reward, phi_sp, tr.terminal)

        _, d_means, d_chols = elbo_value_and_grad(
            posterior, prior, buffer, config.elbo, rng)
        adam_step(adam_mu, posterior.means, d_means)
        # Cholesky factors take raw projected gradient steps: alpha_chol is
        # sized to the TD-gradient scale, and a normalized step of the same
        # rate would dwarf the factor entries.
        posterior.chols -= config.alpha_chol * d_chols
        posterior.clamp_diag()
        n_updates += 1

        ep_return += ep_discount * tr.reward
        ep_discount *= env.gamma
        ep_steps += 1
        if tr.terminal or ep_steps >= env.max_episode_steps:
            episode_returns.append(ep_return)
            state = env.reset(rng)
            phi_s = features(fmap, state)
            ep_steps, ep_return, ep_discount = 0, 0.0, 1.0
        else:
            state = tr.next_state
            phi_s = phi_sp

        if it % config.record_stride == 0:
            if episode_returns:
                series.append(float(np.mean(episode_returns[-50:])))
            else:
                series.append(ep_return)
            grid.append(it)

    return RunRecord(np.asarray(grid, dtype=np.int64), np.asarray(series),
                     episode_returns, posterior, n_action_samples, n_updates)
