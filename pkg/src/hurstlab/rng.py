"""Counter-based random streams.

Every stream is a Philox-4x64 generator keyed by ``seed + (task << 64)``.
The 128-bit key makes the map ``(seed, task) -> stream`` injective for
``0 <= seed, task < 2**64``, so distinct tasks never share a stream.

Gaussian draws use the Box-Muller transform on Philox doubles (not numpy's
ziggurat) so the transform is fixed and documented.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

from .errors import ConfigurationError

T = TypeVar("T")

_MAX64 = 2**64


def stream(seed: int, task: int = 0) -> np.random.Generator:
    """Return the generator for task ``task`` of master seed ``seed``."""
    seed, task = int(seed), int(task)
    if not (0 <= seed < _MAX64 and 0 <= task < _MAX64):
        raise ConfigurationError(f"seed and task must lie in [0, 2**64), got {seed}, {task}")
    return np.random.Generator(np.random.Philox(key=seed + (task << 64)))


def standard_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Box-Muller standard normals of the given shape."""
    shape = (shape,) if isinstance(shape, (int, np.integer)) else tuple(shape)
    n = math.prod(shape)
    m = (n + 1) // 2
    u = rng.random((2, m))
    radius = np.sqrt(-2.0 * np.log1p(-u[0]))
    theta = 2.0 * np.pi * u[1]
    z = np.empty(2 * m)
    z[0::2] = radius * np.cos(theta)
    z[1::2] = radius * np.sin(theta)
    return z[:n].reshape(shape)


def resolve_threads(threads: int | None = None) -> int:
    """Thread count from the argument, else ``HURSTLAB_THREADS``, else 1."""
    if threads is None:
        env = os.environ.get("HURSTLAB_THREADS")
        threads = int(env) if env else 1
    if threads < 1:
        raise ConfigurationError(f"threads must be >= 1, got {threads}")
    return threads


def replicate(fn: Callable[[int], T], tasks: Sequence[int] | int, threads: int | None = None) -> list[T]:
    """Evaluate ``fn(task)`` for every task, results in task order.

    Work items share no mutable state, so the output does not depend on
    the thread count.
    """
    if isinstance(tasks, (int, np.integer)):
        tasks = range(int(tasks))
    threads = resolve_threads(threads)
    if threads == 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks))


def mean_and_se(samples: np.ndarray, axis: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean and its standard error along ``axis``."""
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[axis]
    mean = samples.mean(axis=axis)
    se = samples.std(axis=axis, ddof=1) / math.sqrt(n) if n > 1 else np.full_like(mean, np.inf)
    return mean, se
