"""Seeded simulation of correlated geometric Brownian motion.

Random numbers come from a counter-based generator: every normal draw is a
pure function of ``(seed, path index, draw index)``. A SplitMix64 finaliser
turns the counter into 64 random bits, the top 53 bits become a uniform on
the open interval (0, 1), and the inverse normal CDF (``scipy.special.ndtri``)
maps it to a standard normal. Inverse-CDF is the only variate algorithm used,
so golden values stay stable, and because nothing depends on generation
order, splitting paths across threads cannot change a single bit.
"""

from __future__ import annotations

import csv
import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import DimensionMismatch, LsmError, NotPositiveDefinite
from .market import ModelParams

_MASK64 = (1 << 64) - 1
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_PATH_SALT = np.uint64(0xD1B54A32D192ED03)
PIVOT_TOLERANCE = 1e-12


class Scheme(str, enum.Enum):
    ARITHMETIC_EULER = "arithmetic_euler"
    EXACT_LOGNORMAL = "exact_lognormal"


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _seed_key(seed: int) -> np.uint64:
    with np.errstate(over="ignore"):
        return _mix64(np.array([int(seed) & _MASK64], dtype=np.uint64))[0]


def path_keys(seed: int, path_index: np.ndarray) -> np.ndarray:
    """Per-path substream keys ``mix(seed_key ^ mix(path * salt))``."""
    idx = np.asarray(path_index, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _mix64(_seed_key(seed) ^ _mix64((idx + np.uint64(1)) * _PATH_SALT))


def _normals_from_keys(keys: np.ndarray, n_draws: int) -> np.ndarray:
    counters = np.arange(1, n_draws + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        bits = _mix64(keys[:, None] + counters[None, :] * _GAMMA)
    u = ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return ndtri(u)


def standard_normals(seed: int, count: int) -> np.ndarray:
    """``count`` standard normals from the single stream keyed by ``seed``."""
    if count < 0:
        raise LsmError("count must be non-negative")
    key = np.array([_seed_key(seed)], dtype=np.uint64)
    return _normals_from_keys(key, count)[0]


def path_normals(seed: int, first_path: int, n_paths: int, n_draws: int) -> np.ndarray:
    """Normals for paths ``first_path .. first_path + n_paths - 1``, shape (n_paths, n_draws)."""
    keys = path_keys(seed, np.arange(first_path, first_path + n_paths, dtype=np.uint64))
    return _normals_from_keys(keys, n_draws)


@dataclass(frozen=True, eq=False)
class CholeskyFactor:
    matrix: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.matrix @ self.matrix.T


def cholesky(correlation) -> CholeskyFactor:
    """Lower-triangular ``B`` with ``B @ B.T == correlation``.

    Pivots in ``[-1e-12, 0]`` are clamped to zero so that singular but valid
    matrices (perfect correlation) factorise; anything more negative raises
    :class:`NotPositiveDefinite`.
    """
    rho = np.array(correlation, dtype=float, ndmin=2)
    n = rho.shape[0]
    if rho.shape != (n, n):
        raise DimensionMismatch(f"correlation must be square, got {rho.shape}")
    B = np.zeros((n, n))
    for j in range(n):
        pivot = rho[j, j] - B[j, :j] @ B[j, :j]
        if pivot < -PIVOT_TOLERANCE:
            raise NotPositiveDefinite(f"pivot {j} is {pivot:.3e}; matrix is not a valid correlation")
        pivot = max(pivot, 0.0)
        B[j, j] = math.sqrt(pivot)
        for i in range(j + 1, n):
            residual = rho[i, j] - B[i, :j] @ B[j, :j]
            if B[j, j] > 0.0:
                B[i, j] = residual / B[j, j]
            elif abs(residual) > math.sqrt(PIVOT_TOLERANCE):
                raise NotPositiveDefinite(f"zero pivot {j} with non-zero residual {residual:.3e}")
    B.setflags(write=False)
    return CholeskyFactor(B)


@dataclass(frozen=True, eq=False)
class PathSet:
    """Simulated prices indexed ``values[path, time index, asset]``."""

    values: np.ndarray
    dt: float
    t_grid: np.ndarray
    seed: int
    scheme: Scheme

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    @property
    def n_steps(self) -> int:
        return self.values.shape[1] - 1

    @property
    def n_assets(self) -> int:
        return self.values.shape[2]


def _correlate(z: np.ndarray, B: np.ndarray) -> np.ndarray:
    # explicit fixed-order sum; BLAS matmul may reorder across batch sizes
    n = B.shape[0]
    out = np.empty_like(z)
    for i in range(n):
        acc = B[i, 0] * z[..., 0]
        for j in range(1, i + 1):
            acc = acc + B[i, j] * z[..., j]
        out[..., i] = acc
    return out


def _simulate_block(params: ModelParams, B: np.ndarray, seed: int, first: int, count: int,
                    n_steps: int, dt: float, scheme: Scheme) -> np.ndarray:
    d = params.n_assets
    z = path_normals(seed, first, count, n_steps * d).reshape(count, n_steps, d)
    shocks = _correlate(z, B)
    sqdt = math.sqrt(dt)
    vols = params.vols
    r = params.rate
    out = np.empty((count, n_steps + 1, d))
    out[:, 0, :] = params.spots
    if scheme is Scheme.EXACT_LOGNORMAL:
        incr = (r - 0.5 * vols**2) * dt + vols * sqdt * shocks
        out[:, 1:, :] = params.spots * np.exp(np.cumsum(incr, axis=1))
    else:
        factors = 1.0 + r * dt + vols * sqdt * shocks
        out[:, 1:, :] = params.spots * np.cumprod(factors, axis=1)
    return out


def _chunks(n: int, workers: int):
    workers = max(1, min(workers, n))
    edges = np.linspace(0, n, workers + 1).astype(int)
    return [(int(a), int(b - a)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def simulate_paths(params: ModelParams, n_paths: int, n_steps: int, maturity: float,
                   scheme: Scheme | str = Scheme.EXACT_LOGNORMAL, seed: int = 0,
                   workers: int = 1) -> PathSet:
    """Simulate ``n_paths`` trajectories on a uniform mesh of ``n_steps`` steps.

    ``arithmetic_euler`` applies ``S(t+dt) = S(t) (1 + r dt + sigma sqrt(dt) (B Z))``;
    ``exact_lognormal`` uses the exact GBM transition. Negative Euler prices are
    kept, not clamped. ``workers`` only changes how the work is split.
    """
    scheme = Scheme(scheme)
    if n_paths < 1 or n_steps < 1:
        raise LsmError("n_paths and n_steps must be at least 1")
    if maturity <= 0:
        raise LsmError("maturity must be positive")
    B = cholesky(params.correlation).matrix
    dt = maturity / n_steps
    blocks = _chunks(n_paths, workers)
    if len(blocks) == 1:
        values = _simulate_block(params, B, seed, 0, n_paths, n_steps, dt, scheme)
    else:
        with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
            parts = list(pool.map(
                lambda blk: _simulate_block(params, B, seed, blk[0], blk[1], n_steps, dt, scheme),
                blocks))
        values = np.concatenate(parts, axis=0)
    values.setflags(write=False)
    t_grid = np.arange(n_steps + 1) * dt
    t_grid.setflags(write=False)
    return PathSet(values=values, dt=dt, t_grid=t_grid, seed=seed, scheme=scheme)


def simulate_terminal(params: ModelParams, n_paths: int, maturity: float, seed: int = 0,
                      workers: int = 1) -> np.ndarray:
    """Exact lognormal draw of ``S(T)`` in one step, shape ``(n_paths, n_assets)``.

    Uses the same random stream as the first step of :func:`simulate_paths`, so it
    agrees bitwise with ``simulate_paths(..., n_steps=1, scheme="exact_lognormal")``.
    """
    return simulate_paths(params, n_paths, 1, maturity, Scheme.EXACT_LOGNORMAL, seed, workers).values[:, 1, :]


def write_paths_csv(paths: PathSet, stream) -> None:
    """Dump a PathSet as ``path,step,asset,time,price`` rows."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["path", "step", "asset", "time", "price"])
    for p in range(paths.n_paths):
        for j in range(paths.n_steps + 1):
            for a in range(paths.n_assets):
                writer.writerow([p, j, a, repr(float(paths.t_grid[j])), repr(float(paths.values[p, j, a]))])
