"""Linearly parametrized Q-functions over Gaussian RBF features.

A weight vector theta of length F * A is laid out as one F-block per action,
``theta.reshape(A, F)``, and Q(s, a) is the dot product of block ``a`` with
the feature vector of ``s``.  The max in the TD error is replaced by the
mellowmax operator, which keeps the loss differentiable.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .envs import GRID_SIDE, MountainCar, RoomsEnv


@dataclass
class FeatureMap:
    """Gaussian RBF feature map shared by all actions."""
    centers: np.ndarray            # (F, d)
    bandwidths: np.ndarray         # (d,)
    num_actions: int
    inv_two_bw2: np.ndarray = field(init=False)

    def __post_init__(self):
        self.centers = np.ascontiguousarray(self.centers, dtype=np.float64)
        self.bandwidths = np.atleast_1d(np.asarray(self.bandwidths,
                                                   dtype=np.float64))
        if self.bandwidths.size == 1:
            self.bandwidths = np.full(self.centers.shape[1],
                                      self.bandwidths[0])
        self.inv_two_bw2 = 1.0 / (2.0 * self.bandwidths ** 2)

    @property
    def n_features(self):
        return self.centers.shape[0]

    @property
    def dim(self):
        """Length of the full weight vector."""
        return self.n_features * self.num_actions


def _grid_centers(lows, highs, counts):
    axes = [np.linspace(lo, hi, c) for lo, hi, c in zip(lows, highs, counts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def rooms_feature_map(num_actions=4):
    """121 RBFs on an 11x11 grid over the 10x10 rooms, bandwidth spacing/sqrt(2)."""
    centers = _grid_centers([0.0, 0.0], [GRID_SIDE, GRID_SIDE], [11, 11])
    return FeatureMap(centers, np.full(2, 1.0 / np.sqrt(2.0)), num_actions)


def mountain_car_feature_map(num_actions=3):
    """8x8 RBF grid over position x velocity, per-dimension bandwidth spacing/sqrt(2)."""
    lows = [-1.2, -0.07]
    highs = [0.6, 0.07]
    centers = _grid_centers(lows, highs, [8, 8])
    spacing = np.array([(h - l) / 7.0 for l, h in zip(lows, highs)])
    return FeatureMap(centers, spacing / np.sqrt(2.0), num_actions)


def feature_map_for(env):
    if isinstance(env, RoomsEnv):
        return rooms_feature_map(env.n_actions)
    if isinstance(env, MountainCar):
        return mountain_car_feature_map(env.n_actions)
    raise TypeError(f"no default feature map for {type(env).__name__}")


def features(fmap, state):
    """Feature vector of a single state."""
    return kernels.rbf_features(np.asarray(state, dtype=np.float64)[None, :],
                                fmap.centers, fmap.inv_two_bw2)[0]


def features_batch(fmap, states):
    return kernels.rbf_features(states, fmap.centers, fmap.inv_two_bw2)


def q_values(fmap, theta, state):
    """Q(s, a) for every action, shape (A,)."""
    phi = features(fmap, state)
    return theta.reshape(fmap.num_actions, fmap.n_features) @ phi


def q_value(fmap, theta, state, action):
    if not 0 <= action < fmap.num_actions:
        raise ValueError(f"invalid action {action}")
    block = theta.reshape(fmap.num_actions, fmap.n_features)[action]
    return float(block @ features(fmap, state))


def greedy_action(fmap, theta, state):
    return int(np.argmax(q_values(fmap, theta, state)))


def mellowmax(values, omega):
    """(1/omega) log mean exp(omega * v), computed with a max shift."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("mellowmax of an empty vector")
    if omega <= 0:
        raise ValueError("omega must be positive")
    vmax = values.max()
    return float(vmax + np.log(np.mean(np.exp(omega * (values - vmax)))) / omega)


def mellow_td_error(fmap, theta, transition, gamma, omega):
    """r + gamma * mellowmax_a' Q(s', a') * (1 - terminal) - Q(s, a)."""
    boot = 0.0
    if not transition.terminal:
        boot = gamma * mellowmax(q_values(fmap, theta, transition.next_state),
                                 omega)
    return float(transition.reward + boot
                 - q_value(fmap, theta, transition.state, transition.action))


def _batch_arrays(fmap, batch):
    states = np.stack([tr.state for tr in batch])
    next_states = np.stack([tr.next_state for tr in batch])
    actions = np.array([tr.action for tr in batch], dtype=np.int64)
    rewards = np.array([tr.reward for tr in batch], dtype=np.float64)
    nonterm = np.array([0.0 if tr.terminal else 1.0 for tr in batch])
    return (features_batch(fmap, states), actions, rewards,
            features_batch(fmap, next_states), nonterm)


def td_loss_and_grad(fmap, theta, batch, gamma, omega, proj):
    """Mean squared mellow TD error over a batch and its theta-gradient.

    The next-state term of the gradient is scaled by ``proj``; with proj = 1
    the gradient is the exact derivative of the loss, smaller values give the
    standard biased surrogate that tempers the double-sampling problem.
    """
    if len(batch) == 0:
        raise ValueError("empty batch")
    phi_s, actions, rewards, phi_sp, nonterm = _batch_arrays(fmap, batch)
    losses, grads = kernels.td_loss_grad_multi(
        phi_s, actions, rewards, phi_sp, nonterm,
        theta.reshape(1, fmap.num_actions, fmap.n_features),
        gamma, omega, proj)
    return float(losses[0]), grads[0].ravel()
