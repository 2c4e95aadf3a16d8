"""Cell geometry of the driving white noise and its Gaussian increments."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .. import rng as _rng
from ..errors import ConfigurationError
from .kernels import scale_factor, resolve_mode

ALIGN_TOL = 1e-9


def grid_index(t: float, step: float) -> int:
    """Integer ``k`` with ``t = k * step``; configuration error if misaligned."""
    k = round(t / step)
    if abs(t / step - k) > ALIGN_TOL * max(1.0, abs(k)):
        raise ConfigurationError(f"time {t} is not aligned to the noise step {step}")
    return int(k)


def tail_variance(H: float, t: float, L: float, mode: str = "unit") -> float:
    """Variance of ``B_t^H`` carried by noise older than ``-L``.

    Computed as ``scale^2 * int_L^inf ((x+t)^a - x^a)^2 dx`` through the
    substitution ``x = L/u``, which keeps the integral on ``(0, 1]``.
    """
    a = H - 0.5
    if a == 0.0 or t == 0.0:
        return 0.0
    if L <= abs(t):
        raise ConfigurationError(f"truncation L={L} must exceed |t|={abs(t)}")

    def f(u):
        if u <= 0.0:
            return 0.0
        x = L / u
        val = x**a * math.expm1(a * math.log1p(t / x))
        return val * val * L / (u * u)

    val, _ = integrate.quad(f, 0.0, 1.0, epsabs=0.0, epsrel=1e-10, limit=200)
    return val * scale_factor(H, mode) ** 2


def choose_truncation(h_grid, t_abs: float, tol: float, mode: str, L_min: float,
                      L_max: float = 1e100) -> tuple[float, float]:
    """Smallest ``L`` in ``[L_min, L_max]`` with tail variance ``<= tol`` for every H.

    Returns ``(L, achieved)``. If even ``L_max`` misses the tolerance, ``L_max``
    is returned together with the (larger) achieved tail variance.
    """
    L_min = max(L_min, abs(t_abs) * (1 + 1e-9) + 1e-12)

    def worst(L):
        return max(tail_variance(h, t_abs, L, mode) for h in h_grid)

    if worst(L_min) <= tol:
        return L_min, worst(L_min)
    if worst(L_max) > tol:
        return L_max, worst(L_max)
    lo, hi = math.log(L_min), math.log(L_max)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if worst(math.exp(mid)) <= tol:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-3:
            break
    L = math.exp(hi)
    return L, worst(L)


@dataclass(frozen=True)
class NoiseGeometry:
    """Cells of the truncated noise on ``[-L, T]``.

    Uniform cells of width ``step`` cover ``[near_start * step, k_max * step]``;
    every output time ``k * step`` with ``k_min <= k <= k_max`` is a cell
    boundary. Older noise down to ``-L`` lives on cells whose widths grow
    geometrically by ``growth`` (``growth = 1`` keeps them uniform).
    """

    step: float
    k_min: int
    k_max: int
    near_start: int
    L: float
    growth: float
    edges: np.ndarray = field(repr=False, compare=False)
    tail_bound: float = 0.0

    @property
    def n_far(self) -> int:
        return len(self.edges) - 1 - self.n_near

    @property
    def n_near(self) -> int:
        return self.k_max - self.near_start

    @property
    def n_cells(self) -> int:
        return len(self.edges) - 1

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def t_min(self) -> float:
        return self.k_min * self.step

    @property
    def T(self) -> float:
        return self.k_max * self.step

    def key(self) -> tuple:
        return (self.step, self.k_min, self.k_max, self.near_start, self.L, self.growth)

    def times(self) -> np.ndarray:
        """All aligned output times in ``[t_min, T]``."""
        return np.arange(self.k_min, self.k_max + 1) * self.step

    @classmethod
    def build(cls, step: float, T: float, t_min: float = 0.0, L: float | None = None,
              h_grid=(0.5,), tol: float = 1e-8, mode: str = "unit", growth: float = 1.05,
              buffer: float | None = None) -> "NoiseGeometry":
        """Lay out cells for output times in ``[t_min, T]``.

        When ``L`` is omitted it is chosen by :func:`choose_truncation` so the
        omitted tail variance is at most ``tol`` for every ``H`` in ``h_grid``
        at the time of largest magnitude.
        """
        if step <= 0:
            raise ConfigurationError("noise step must be positive")
        if t_min > 0 or T < 0:
            raise ConfigurationError("need t_min <= 0 <= T")
        if growth < 1.0:
            raise ConfigurationError("growth must be >= 1")
        k_min, k_max = grid_index(t_min, step), grid_index(T, step)
        span = (k_max - k_min) * step
        if buffer is None:
            buffer = max(0.5 * span, 1.0)
        near_start = k_min - max(1, math.ceil(buffer / step - ALIGN_TOL))
        near_edge = near_start * step
        mode = resolve_mode(mode)
        t_abs = max(abs(t_min), abs(T))
        if L is None:
            L, achieved = choose_truncation(h_grid, t_abs, tol, mode, -near_edge)
        else:
            if L < -near_edge:
                raise ConfigurationError(f"L={L} is shorter than the uniform region {-near_edge}")
            achieved = max(tail_variance(h, t_abs, L, mode) for h in h_grid) if t_abs > 0 else 0.0
        far = []
        e, w = near_edge, step
        while e > -L:
            w *= growth
            nxt = e - w
            slack = 1e-9 * w
            # snap onto -L, absorbing a remainder shorter than the next cell
            if nxt <= -L + slack or nxt - growth * w < -L - slack:
                nxt = -L
            far.append(nxt)
            e = nxt
        far_edges = far[::-1]
        near_edges = np.arange(near_start, k_max + 1) * step
        edges = np.concatenate([np.asarray(far_edges, dtype=float), near_edges])
        return cls(step, k_min, k_max, near_start, float(L), float(growth), edges, float(achieved))

    def describe(self) -> dict:
        return {"step": self.step, "t_min": self.t_min, "T": self.T, "L": self.L,
                "growth": self.growth, "n_cells": self.n_cells, "n_near": self.n_near,
                "n_far": self.n_far, "tail_bound": self.tail_bound}


@dataclass(frozen=True)
class WhiteNoiseGrid:
    """Gaussian increments of a d-dimensional Wiener process, one per cell."""

    geometry: NoiseGeometry
    dim: int
    seed: int
    task: int
    increments: np.ndarray = field(repr=False, compare=False)

    @property
    def step(self) -> float:
        return self.geometry.step

    @property
    def L(self) -> float:
        return self.geometry.L

    @property
    def T(self) -> float:
        return self.geometry.T

    @classmethod
    def draw(cls, geometry: NoiseGeometry, dim: int = 1, seed: int = 0, task: int = 0) -> "WhiteNoiseGrid":
        if dim < 1:
            raise ConfigurationError("dimension must be >= 1")
        z = _rng.standard_normal(_rng.stream(seed, task), (geometry.n_cells, dim))
        return cls(geometry, int(dim), int(seed), int(task), z * np.sqrt(geometry.widths)[:, None])
