"""Episodic MDP environments: two-rooms, three-rooms, mountain car.

All environments are functional state machines: ``step`` takes the current
state explicitly and returns a :class:`Transition`, so a single instance can
serve any number of sequential rollouts.
"""

from dataclasses import dataclass

import numpy as np

GRID_SIDE = 10.0
ROOMS_NOISE_STD = 0.2
DOOR_WIDTH = 1.0
GOAL_RADIUS = 1.0


@dataclass
class Transition:
    """One environment step, the unit of the replay dataset."""
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    terminal: bool


class RoomsEnv:
    """Continuous 10x10 grid split into rooms by vertical walls with doors.

    The agent starts at the bottom-left corner (0.5, 0.5) and must reach the
    ball of radius 1 around the opposite corner cell (9.5, 9.5).  Actions move
    one unit up/down/left/right; the landing position is perturbed by
    per-axis Gaussian noise (std 0.2).  A move that would leave the grid or
    cross a wall outside its door opening leaves the position unchanged.
    Reward is 1 on entering the goal region, 0 elsewhere.
    """

    n_actions = 4
    state_dim = 2
    gamma = 0.99
    max_episode_steps = 100
    reward_bound = 1.0
    # up, down, left, right
    _steps = ((0.0, 1.0), (0.0, -1.0), (-1.0, 0.0), (1.0, 0.0))

    def __init__(self, wall_x, door_positions, noise_std=ROOMS_NOISE_STD):
        self.wall_x = np.asarray(wall_x, dtype=np.float64)
        self.door_positions = np.asarray(door_positions, dtype=np.float64)
        if self.wall_x.shape != self.door_positions.shape:
            raise ValueError("one door position per wall required")
        self.noise_std = float(noise_std)
        self.start = np.array([0.5, 0.5])
        self.goal = np.array([GRID_SIDE - 0.5, GRID_SIDE - 0.5])
        self.low = np.zeros(2)
        self.high = np.full(2, GRID_SIDE)
        # plain-float copies for the hot step path
        self._walls = [float(w) for w in self.wall_x]
        self._doors = [float(d) for d in self.door_positions]

    def reset(self, rng):
        return self.start.copy()

    def _blocked(self, x0, y0, x1, y1):
        if not (0.0 <= x1 <= GRID_SIDE and 0.0 <= y1 <= GRID_SIDE):
            return True
        for wx, door in zip(self._walls, self._doors):
            if (x0 - wx) * (x1 - wx) < 0.0:
                y_cross = y0 + (wx - x0) / (x1 - x0) * (y1 - y0)
                if abs(y_cross - door) > DOOR_WIDTH / 2.0:
                    return True
        return False

    def step(self, state, action, rng):
        if not 0 <= action < self.n_actions:
            raise ValueError(f"invalid action {action}")
        noise = rng.normal(0.0, self.noise_std, size=2)
        x0, y0 = float(state[0]), float(state[1])
        x1 = x0 + self._steps[action][0] + noise[0]
        y1 = y0 + self._steps[action][1] + noise[1]
        if self._blocked(x0, y0, x1, y1):
            x1, y1 = x0, y0
        dx, dy = x1 - self.goal[0], y1 - self.goal[1]
        reached = dx * dx + dy * dy <= GOAL_RADIUS * GOAL_RADIUS
        return Transition(np.asarray(state, dtype=np.float64).copy(),
                          int(action), 1.0 if reached else 0.0,
                          np.array([x1, y1]), reached)


class TwoRooms(RoomsEnv):
    """Two rooms separated by a wall at x = 5 with one door."""

    def __init__(self, door, noise_std=ROOMS_NOISE_STD):
        super().__init__([GRID_SIDE / 2.0], [door], noise_std)


class ThreeRooms(RoomsEnv):
    """Three rooms with walls at x = 10/3 and x = 20/3, one door each."""

    def __init__(self, door1, door2, noise_std=ROOMS_NOISE_STD):
        super().__init__([GRID_SIDE / 3.0, 2.0 * GRID_SIDE / 3.0],
                         [door1, door2], noise_std)


class MountainCar:
    """Classic underpowered-car control task with a task-specific engine power.

    Actions are reverse/idle/forward.  Reward is -1 per step; an episode ends
    when the position reaches 0.5.
    """

    n_actions = 3
    state_dim = 2
    gamma = 0.99
    max_episode_steps = 250
    reward_bound = 1.0

    min_position = -1.2
    max_position = 0.6
    max_speed = 0.07
    goal_position = 0.5
    gravity = 0.0025

    def __init__(self, power):
        self.power = float(power)
        self.low = np.array([self.min_position, -self.max_speed])
        self.high = np.array([self.max_position, self.max_speed])

    def reset(self, rng):
        return np.array([-0.5, 0.0])

    def step(self, state, action, rng):
        if not 0 <= action < self.n_actions:
            raise ValueError(f"invalid action {action}")
        position, velocity = state
        velocity += (action - 1) * self.power - self.gravity * np.cos(3.0 * position)
        velocity = float(np.clip(velocity, -self.max_speed, self.max_speed))
        position = float(np.clip(position + velocity, self.min_position,
                                 self.max_position))
        if position <= self.min_position and velocity < 0.0:
            velocity = 0.0
        terminal = position >= self.goal_position
        next_state = np.array([position, velocity])
        return Transition(np.asarray(state, dtype=np.float64).copy(),
                          int(action), -1.0, next_state, bool(terminal))
