"""Experiment orchestration: configs, run matrices, CSV curves, archives.

One experiment = n_runs independent repetitions.  Each run resamples the
source tasks from the drifting distribution, solves them by TD minimization,
builds the requested priors, resamples a target task at t = 1 and executes
the transfer loop for every (K, algorithm) combination on that same target.
Curves are aggregated to mean and 95% half-width per grid point.
"""

import io
import os
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from .envs import MountainCar, ThreeRooms, TwoRooms
from .optimizer import ElboConfig
from .prior import SourceSolutions, build_prior, uniform_prior
from .qfunc import feature_map_for
from .taskgen import DYNAMICS, TaskSchedule, sample_task
from .transfer import SolveConfig, TransferConfig, run_transfer, solve_source

ALGORITHMS = ("T2VT", "MGVT", "source-solver")
_ALG_ID = {"T2VT": 1, "MGVT": 2}

# rng stream tags, combined with (seed, run_idx) into a SeedSequence
_STREAM_TASKS = 1
_STREAM_TARGET = 2
_STREAM_SOURCE = 3
_STREAM_TRANSFER = 4

_ENV_DEFAULTS = {
    "two-rooms": dict(iterations=3000, source_iterations=20000,
                      batch_size=50, source_batch_size=50, buffer_size=50000,
                      psi=1e-6, alpha_L=0.1, record_stride=50,
                      epsilon_end=0.02, k_min=0.7, k_max=9.3, n_params=1),
    "three-rooms": dict(iterations=15000, source_iterations=30000,
                        batch_size=50, source_batch_size=50,
                        buffer_size=50000, psi=1e-6, alpha_L=0.1,
                        record_stride=50, epsilon_end=0.02,
                        k_min=2.7, k_max=7.3, n_params=2),
    "mountain-car": dict(iterations=75000, source_iterations=30000,
                         batch_size=500, source_batch_size=32,
                         buffer_size=10000, psi=1e-4, alpha_L=1e-4,
                         record_stride=200, epsilon_end=0.01,
                         k_min=0.001, k_max=0.0015, n_params=1),
}


class ConfigError(ValueError):
    """Malformed experiment configuration."""


class ArchiveError(ValueError):
    """Malformed weight archive."""


class ArchiveVersionError(ArchiveError):
    pass


class ArchiveTruncatedError(ArchiveError):
    pass


class ArchiveDimensionError(ArchiveError):
    pass


@dataclass
class ExperimentConfig:
    """Full parametrization of one experiment.

    ``None`` fields are filled with the environment's defaults by
    :func:`finalize_config`; environment, dynamic and algorithm have no
    defaults and must always be given.
    """
    environment: str
    dynamic: str
    algorithm: tuple
    K: tuple = (1,)
    n_runs: int = 50
    seed: int = 0
    iterations: int = None
    source_iterations: int = None
    record_stride: int = None
    batch_size: int = None
    source_batch_size: int = None
    buffer_size: int = None
    psi: float = None
    alpha_mu: float = 1e-3
    alpha_L: float = None
    alpha: float = 1e-3
    epsilon_end: float = None
    prior_sigma2: float = 1e-5
    sigma2_min: float = 1e-4
    time_lambda: float = 0.3333
    proj: float = 0.5
    omega: float = 5.0
    gamma: float = 0.99
    n_weight_samples: int = 10
    n_instants: int = 10
    tasks_per_instant: int = 5
    task_std: float = None
    refine_steps: int = 500


_LIST_FIELDS = {"algorithm": str, "K": int}
_INT_FIELDS = {"n_runs", "seed", "iterations", "source_iterations",
               "record_stride", "batch_size", "source_batch_size",
               "buffer_size", "n_weight_samples", "n_instants",
               "tasks_per_instant", "refine_steps"}
_STR_FIELDS = {"environment", "dynamic"}


def parse_config(text):
    """Parse the flat ``key = value`` experiment-config format."""
    known = {f.name for f in fields(ExperimentConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            if key in _LIST_FIELDS:
                conv = _LIST_FIELDS[key]
                values[key] = tuple(conv(x.strip())
                                    for x in val.split(",") if x.strip())
            elif key in _STR_FIELDS:
                values[key] = val
            elif key in _INT_FIELDS:
                values[key] = int(val)
            else:
                values[key] = float(val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}")
    for required in ("environment", "dynamic", "algorithm"):
        if required not in values:
            raise ConfigError(f"missing required key {required!r}")
    return finalize_config(ExperimentConfig(**values))


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def finalize_config(config):
    """Validate a config and fill environment-specific defaults."""
    if config.environment not in _ENV_DEFAULTS:
        raise ConfigError(f"unknown environment {config.environment!r}")
    if config.dynamic not in DYNAMICS:
        raise ConfigError(f"unknown dynamic {config.dynamic!r}")
    for alg in config.algorithm:
        if alg not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {alg!r}")
    for k in config.K:
        if k < 1:
            raise ConfigError("K must be >= 1")
    defaults = _ENV_DEFAULTS[config.environment]
    filled = {f.name: getattr(config, f.name)
              for f in fields(ExperimentConfig)}
    for key, val in defaults.items():
        if key in filled and filled[key] is None:
            filled[key] = val
    config = ExperimentConfig(**filled)
    if config.iterations <= 0 or config.source_iterations <= 0:
        raise ConfigError("iteration budgets must be positive")
    if config.n_runs < 1:
        raise ConfigError("n_runs must be >= 1")
    if config.seed < 0:
        raise ConfigError("seed must be non-negative")
    return config


def make_env(name, params):
    params = np.atleast_1d(params)
    if name == "two-rooms":
        return TwoRooms(params[0])
    if name == "three-rooms":
        return ThreeRooms(params[0], params[1])
    if name == "mountain-car":
        return MountainCar(params[0])
    raise ConfigError(f"unknown environment {name!r}")


def make_schedule(config):
    d = _ENV_DEFAULTS[config.environment]
    return TaskSchedule(k_min=d["k_min"], k_max=d["k_max"],
                        n_instants=config.n_instants,
                        tasks_per_instant=config.tasks_per_instant,
                        std=config.task_std,
                        n_params=d["n_params"],
                        opposite_directions=d["n_params"] > 1)


def _rng(*key):
    return np.random.default_rng(np.random.SeedSequence(list(key)))


def _solve_config(config):
    return SolveConfig(iterations=config.source_iterations,
                       batch_size=config.source_batch_size,
                       buffer_size=config.buffer_size,
                       alpha=config.alpha,
                       epsilon_end=config.epsilon_end,
                       omega=config.omega, proj=config.proj)


def _transfer_config(config, k):
    elbo = ElboConfig(psi=config.psi, batch_size=config.batch_size,
                      n_weight_samples=config.n_weight_samples,
                      gamma=config.gamma, omega=config.omega,
                      proj=config.proj)
    return TransferConfig(iterations=config.iterations, elbo=elbo, K=k,
                          record_stride=config.record_stride,
                          refine_steps=config.refine_steps,
                          buffer_size=config.buffer_size,
                          alpha_mu=config.alpha_mu,
                          alpha_chol=config.alpha_L)


def solve_source_set(config, run_idx):
    """Sample and solve the full source-task grid of one run."""
    schedule = make_schedule(config)
    rng_tasks = _rng(config.seed, run_idx, _STREAM_TASKS)
    times = schedule.source_times()
    solve_cfg = _solve_config(config)
    thetas, t_list, inst_list = [], [], []
    fmap = None
    for i, t_i in enumerate(times, start=1):
        for j in range(schedule.tasks_per_instant):
            params = sample_task(config.dynamic, t_i, schedule, rng_tasks)
            env = make_env(config.environment, params)
            env.gamma = config.gamma
            if fmap is None:
                fmap = feature_map_for(env)
            rng_solve = _rng(config.seed, run_idx, _STREAM_SOURCE, i, j)
            thetas.append(solve_source(env, solve_cfg, rng_solve, fmap))
            t_list.append(t_i)
            inst_list.append(i)
    return SourceSolutions(np.asarray(thetas), np.asarray(t_list),
                           np.asarray(inst_list))


def _single_run(config, run_idx):
    try:
        return _single_run_inner(config, run_idx)
    except Exception as exc:
        raise RuntimeError(
            f"run {run_idx} (master seed {config.seed}) failed: {exc}"
        ) from exc


def _single_run_inner(config, run_idx):
    sources = solve_source_set(config, run_idx)
    schedule = make_schedule(config)
    rng_target = _rng(config.seed, run_idx, _STREAM_TARGET)
    target_params = sample_task(config.dynamic, 1.0, schedule, rng_target)

    curves = {}
    grid = None
    for k in config.K:
        for alg in config.algorithm:
            if alg == "T2VT":
                prior = build_prior(sources, 1.0, config.time_lambda,
                                    config.prior_sigma2)
            else:
                prior = uniform_prior(sources, config.prior_sigma2)
            env = make_env(config.environment, target_params)
            env.gamma = config.gamma
            rng_tr = _rng(config.seed, run_idx, _STREAM_TRANSFER, k,
                          _ALG_ID[alg])
            rec = run_transfer(env, prior, _transfer_config(config, k),
                               rng_tr)
            curves[(k, alg)] = rec.avg_returns
            grid = rec.iterations
    return grid, curves, sources


@dataclass
class LearningCurve:
    """Aggregated curves: per-(K, algorithm) mean and 95% CI half-width."""
    grid: np.ndarray
    series: dict          # (K, alg) -> (mean, halfwidth)
    per_run: dict         # (K, alg) -> (n_runs, G) matrix


def aggregate_runs(grid, per_run):
    series = {}
    for key, mat in per_run.items():
        mat = np.asarray(mat)
        mean = mat.mean(axis=0)
        if mat.shape[0] == 1:
            half = np.zeros_like(mean)
        else:
            half = 1.96 * mat.std(axis=0, ddof=1) / np.sqrt(mat.shape[0])
        series[key] = (mean, half)
    return LearningCurve(grid, series, per_run)


def run_experiment(config, out_dir=None, workers=1):
    """Execute all runs, aggregate curves, optionally write artifacts.

    Runs execute independently (in processes when workers > 1) and are
    joined in run order, so results do not depend on scheduling.
    """
    config = finalize_config(config)
    for alg in config.algorithm:
        if alg not in _ALG_ID:
            raise ConfigError(f"algorithm {alg!r} cannot run transfer")
    indices = list(range(config.n_runs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_single_run, [config] * len(indices),
                                    indices))
    else:
        results = [_single_run(config, i) for i in indices]

    grid = results[0][0]
    per_run = {key: np.stack([res[1][key] for res in results])
               for key in results[0][1]}
    for res in results:
        if not np.array_equal(res[0], grid):
            raise RuntimeError("record grids differ across runs")
    curve = aggregate_runs(grid, per_run)

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        name = f"{config.environment}-{config.dynamic}.csv"
        with open(os.path.join(out_dir, name), "w", encoding="utf-8",
                  newline="") as fh:
            fh.write(curve_to_csv(curve, _series_order(config)))
        src_dir = os.path.join(out_dir, "sources")
        os.makedirs(src_dir, exist_ok=True)
        for idx, res in zip(indices, results):
            archive_weights(os.path.join(src_dir, f"run-{idx:03d}.t2vt"),
                            res[2])
    return curve


def _series_order(config):
    return [(k, alg) for k in config.K for alg in config.algorithm]


def _fmt(x):
    return repr(float(x))


def curve_to_csv(curve, order):
    """Render a LearningCurve in the CSV schema of the figure data files."""
    header = "i" + "".join(f",mean-{k}-{alg},std-{k}-{alg}"
                           for k, alg in order)
    lines = [header]
    for g in range(len(curve.grid)):
        parts = [str(int(curve.grid[g]))]
        for key in order:
            mean, half = curve.series[key]
            parts.append(_fmt(mean[g]))
            parts.append(_fmt(half[g]))
        lines.append(",".join(parts))
    return "\n".join(lines) + "\n"


def phi_diagnostic(theta_star, prior):
    """Softmax-weighted mean distance from the prior components to theta_star.

    Weight of component j is proportional to c_j * exp(-d_j / (2 sigma2))
    with d_j the Euclidean distance; the value is the weighted mean distance
    divided by sigma2.  Uniform component weights give the time-invariant
    variant.
    """
    theta_star = np.asarray(theta_star, dtype=np.float64)
    if theta_star.shape != (prior.dim,):
        raise ValueError("theta_star dimension mismatch")
    d = np.linalg.norm(prior.means - theta_star, axis=1)
    logw = np.log(prior.weights) - d / (2.0 * prior.sigma2)
    logw -= logw.max()
    w = np.exp(logw)
    w /= w.sum()
    return float(w @ d / prior.sigma2)


_MAGIC = b"T2VT1"


def archive_weights(path, sources):
    """Write source solutions to the binary weight-archive format."""
    n_instants = len(np.unique(sources.instants)) if sources.n_entries else 0
    buf = io.BytesIO()
    buf.write(_MAGIC)
    buf.write(struct.pack("<III", sources.n_entries, sources.dim, n_instants))
    for m in range(sources.n_entries):
        buf.write(struct.pack("<Id", int(sources.instants[m]),
                              float(sources.times[m])))
        buf.write(np.ascontiguousarray(sources.thetas[m],
                                       dtype="<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_weights(path, expect_dim=None):
    """Read a weight archive back into SourceSolutions."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < len(_MAGIC) or data[:len(_MAGIC)] != _MAGIC:
        raise ArchiveVersionError(f"{path}: not a {_MAGIC.decode()} archive")
    off = len(_MAGIC)
    if len(data) < off + 12:
        raise ArchiveTruncatedError(f"{path}: truncated header")
    count, dim, _ = struct.unpack_from("<III", data, off)
    off += 12
    if expect_dim is not None and count and dim != expect_dim:
        raise ArchiveDimensionError(
            f"{path}: dimension {dim}, expected {expect_dim}")
    entry = 12 + 8 * dim
    if len(data) != off + count * entry:
        raise ArchiveTruncatedError(
            f"{path}: {len(data) - off} payload bytes, "
            f"expected {count * entry}")
    thetas = np.empty((count, dim))
    times = np.empty(count)
    instants = np.empty(count, dtype=np.int64)
    for m in range(count):
        instants[m], times[m] = struct.unpack_from("<Id", data, off)
        off += 12
        thetas[m] = np.frombuffer(data, dtype="<f8", count=dim, offset=off)
        off += 8 * dim
    return SourceSolutions(thetas, times, instants)
