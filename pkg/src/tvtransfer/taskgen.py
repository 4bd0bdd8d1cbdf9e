"""Drifting task distributions: temporal mean dynamics and task sampling.

A dynamic d(t) in [-1, 1] moves the mean of a Gaussian over the task
parameter across the unit time interval; samples are clipped into the
admissible parameter range.  Two-parameter tasks (three rooms) drive the
second parameter with -d(t), so the two doors travel in opposite
directions.
"""

from dataclasses import dataclass

import numpy as np

DYNAMICS = ("linear", "polynomial", "sinusoidal")

# quartic with d(0) = -1, d(1) ~ 1 and two interior wiggles
POLY_COEFFS = (-15.625, 39.5833, -31.875, 9.91667, -1.0)


def dynamic_value(kind, t):
    """Evaluate the temporal dynamic d(t) on [0, 1]."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    if kind == "linear":
        return 2.0 * t - 1.0
    if kind == "polynomial":
        a, b, c, d, e = POLY_COEFFS
        return ((((a * t) + b) * t + c) * t + d) * t + e
    if kind == "sinusoidal":
        return float(np.sin(2.0 * np.pi * t))
    raise ValueError(f"unknown dynamic {kind!r}")


def scale_param(d, k_min, k_max):
    """Affine map of d in [-1, 1] into the parameter range [k_min, k_max]."""
    if not k_min < k_max:
        raise ValueError("k_min must be below k_max")
    return d * (k_max - k_min) / 2.0 + (k_max + k_min) / 2.0


@dataclass
class TaskSchedule:
    """Source/target layout: n source instants at i/n plus the target at t=1."""
    k_min: float
    k_max: float
    n_instants: int = 10
    tasks_per_instant: int = 5
    std: float = None
    n_params: int = 1
    opposite_directions: bool = False

    def __post_init__(self):
        if self.std is None:
            self.std = (self.k_max - self.k_min) / 20.0

    def source_times(self):
        n = self.n_instants
        return np.arange(1, n + 1) / n


def sample_task(kind, t, schedule, rng):
    """Draw task parameters at time t: clipped Gaussian around the drifting mean."""
    d = dynamic_value(kind, t)
    ds = [d, -d][:schedule.n_params] if schedule.opposite_directions \
        else [d] * schedule.n_params
    means = np.array([scale_param(x, schedule.k_min, schedule.k_max)
                      for x in ds])
    draw = means + rng.normal(0.0, schedule.std, size=schedule.n_params)
    return np.clip(draw, schedule.k_min, schedule.k_max)
