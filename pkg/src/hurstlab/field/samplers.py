"""Joint (time, Hurst) samplers of the fBm field.

Two samplers share the :class:`FbmField` container:

* the exact sampler factorizes the quadrature covariance of a small grid;
* the projection sampler integrates the moving-average kernel cell by cell
  against one shared white noise, so all Hurst values see the same draws.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import fft as sfft
from scipy import linalg

from .. import rng as _rng
from ..errors import ConfigurationError, ModelError
from .covariance import CovarianceModel, default_model, grid_points
from .kernels import HurstRange, _check_hurst, resolve_mode, scale_factor
from .noise import ALIGN_TOL, NoiseGeometry, WhiteNoiseGrid, grid_index

RIDGE = 1e-10


@dataclass
class FbmField:
    """Field values ``B_t^H`` indexed ``values[time, hurst, component]``.

    Times may include negative values when the field was drawn on an
    extended grid (needed by stationary fOU paths); ``B_0 = 0`` always.
    """

    t_grid: np.ndarray
    h_grid: np.ndarray
    values: np.ndarray
    mode: str
    seed: int
    sampler: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t_grid = np.asarray(self.t_grid, dtype=float)
        self.h_grid = np.asarray(self.h_grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 3 or self.values.shape[:2] != (len(self.t_grid), len(self.h_grid)):
            raise ConfigurationError("values must have shape (len(t_grid), len(h_grid), d)")
        if np.any(np.diff(self.t_grid) <= 0) or np.any(np.diff(self.h_grid) <= 0):
            raise ConfigurationError("t_grid and h_grid must be strictly ascending")

    @property
    def dim(self) -> int:
        return self.values.shape[2]

    @property
    def hurst_range(self) -> HurstRange:
        return HurstRange.of(self.h_grid)

    def h_index(self, H: float) -> int:
        hits = np.flatnonzero(np.abs(self.h_grid - H) < 1e-12)
        if not len(hits):
            raise ConfigurationError(f"H={H} not in the field grid {self.h_grid.tolist()}")
        return int(hits[0])

    def t_index(self, t: float) -> int:
        hits = np.flatnonzero(np.abs(self.t_grid - t) <= 1e-9 * max(1.0, abs(t)))
        if not len(hits):
            raise ConfigurationError(f"t={t} not in the field time grid")
        return int(hits[0])

    def path(self, H: float) -> np.ndarray:
        """Values for one Hurst index, shape ``(n_t, d)``."""
        return self.values[:, self.h_index(H), :]

    def select(self, t_grid=None, h_grid=None) -> "FbmField":
        """Sub-field on a subset of the grid."""
        ti = slice(None) if t_grid is None else [self.t_index(t) for t in t_grid]
        hi = slice(None) if h_grid is None else [self.h_index(h) for h in h_grid]
        t = self.t_grid[ti]
        h = self.h_grid[hi]
        return FbmField(t, h, self.values[ti][:, hi], self.mode, self.seed, self.sampler, dict(self.meta))

    def uniform_step(self) -> float:
        """Common spacing of ``t_grid``; configuration error if not uniform."""
        if len(self.t_grid) < 2:
            raise ConfigurationError("need at least two times for a uniform grid")
        d = np.diff(self.t_grid)
        step = float(d.mean())
        if np.max(np.abs(d - step)) > 1e-9 * max(1.0, step):
            raise ConfigurationError("field time grid is not uniform")
        return step

    def metadata(self) -> dict:
        out = {"seed": self.seed, "mode": self.mode, "sampler": self.sampler,
               "n_t": len(self.t_grid), "h_grid": self.h_grid.tolist(), "dim": self.dim}
        out.update(self.meta)
        return out


# ---------------------------------------------------------------------------
# exact sampler


class ExactFieldSampler:
    """Cholesky sampler with the exact quadrature covariance of a small grid.

    Rows with ``t = 0`` are identically zero and are excluded from the
    factorization. A diagonal ridge of ``1e-10`` times the largest variance
    is added if the first factorization fails.
    """

    def __init__(self, t_grid, h_grid, dim: int = 1, mode: str = "unit",
                 model: CovarianceModel | None = None):
        self.t_grid = np.asarray(t_grid, dtype=float)
        self.h_grid = np.asarray([_check_hurst(h) for h in h_grid])
        self.dim = int(dim)
        self.mode = resolve_mode(mode)
        self.model = model or default_model()
        pts = grid_points(self.t_grid, self.h_grid)
        self._live = np.array([t != 0.0 for t, _ in pts])
        live_pts = [p for p, keep in zip(pts, self._live) if keep]
        self.covariance = self.model.matrix(live_pts, self.mode) if live_pts else np.zeros((0, 0))
        self.ridge = 0.0
        self.factor = self._factor(self.covariance)

    def _factor(self, cov):
        if cov.size == 0:
            return cov
        try:
            return linalg.cholesky(cov, lower=True)
        except linalg.LinAlgError:
            pass
        self.ridge = RIDGE * float(np.max(np.diag(cov)))
        try:
            return linalg.cholesky(cov + self.ridge * np.eye(len(cov)), lower=True)
        except linalg.LinAlgError as exc:
            raise ModelError("covariance not positive definite even with ridge") from exc

    def draw_values(self, seed: int, task: int = 0) -> np.ndarray:
        n = len(self.t_grid) * len(self.h_grid)
        out = np.zeros((n, self.dim))
        if self.factor.size:
            z = _rng.standard_normal(_rng.stream(seed, task), (self.factor.shape[0], self.dim))
            out[self._live] = self.factor @ z
        return out.reshape(len(self.t_grid), len(self.h_grid), self.dim)

    def sample(self, seed: int, task: int = 0) -> FbmField:
        return FbmField(self.t_grid, self.h_grid, self.draw_values(seed, task), self.mode, seed,
                        "exact-cholesky", {"ridge": self.ridge, "task": task,
                                           "quadrature_tol": self.model.tol})


@functools.lru_cache(maxsize=32)
def _exact_sampler(t_key, h_key, dim, mode, model_id):
    return ExactFieldSampler(t_key, h_key, dim, mode, _MODELS[model_id])


_MODELS: dict[int, CovarianceModel] = {}


def sample_field_exact(t_grid, h_grid, d: int = 1, seed: int = 0, mode: str = "unit",
                       model: CovarianceModel | None = None, task: int = 0) -> FbmField:
    """One exact field draw; the factorization is cached per grid."""
    model = model or default_model()
    _MODELS[id(model)] = model
    sampler = _exact_sampler(tuple(float(t) for t in t_grid), tuple(float(h) for h in h_grid),
                             int(d), resolve_mode(mode), id(model))
    return sampler.sample(seed, task)


# ---------------------------------------------------------------------------
# projection sampler


def _power_diff(m: np.ndarray, p: float) -> np.ndarray:
    """``(m+1)^p - m^p`` for integers ``m >= 0`` without cancellation."""
    m = np.asarray(m, dtype=float)
    out = np.ones_like(m)
    pos = m > 0
    mp = m[pos]
    out[pos] = mp**p * np.expm1(p * np.log1p(1.0 / mp))
    return out


def _lobatto(n: int, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    j = np.arange(n + 1)
    nodes = 0.5 * (lo + hi) + 0.5 * (hi - lo) * np.cos(np.pi * j / n)[::-1]
    w = (-1.0) ** j
    w[0] *= 0.5
    w[-1] *= 0.5
    return nodes, w[::-1] * (-1.0) ** n


def _barycentric_matrix(nodes, weights, x) -> np.ndarray:
    diff = x[:, None] - nodes[None, :]
    exact = diff == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        c = weights[None, :] / diff
        c = c / c.sum(axis=1, keepdims=True)
    rows = exact.any(axis=1)
    c[rows] = exact[rows].astype(float)
    return c


class ProjectionPlan:
    """Precomputed cell weights for a geometry, a Hurst grid and a mode.

    The weight of cell ``[e_i, e_{i+1}]`` for ``B_t^H`` is the exact integral
    of the kernel over the cell divided by its width, so
    ``B_t^H = sum_i weight_i(t, H) * dW_i``. Uniform cells are convolved by
    FFT; the geometric far-past cells are evaluated at Chebyshev-Lobatto
    nodes in time and interpolated barycentrically.
    """

    def __init__(self, geometry: NoiseGeometry, h_grid, mode: str = "unit", n_cheb: int = 48):
        self.geometry = geometry
        self.h_grid = np.asarray([_check_hurst(h) for h in h_grid])
        self.mode = resolve_mode(mode)
        self.n_cheb = int(n_cheb)
        g = geometry
        self.scale = np.array([scale_factor(h, self.mode) for h in self.h_grid])
        self.expo = self.h_grid + 0.5  # a + 1
        m = np.arange(g.n_near)
        self.near_coef = np.stack([
            sc * g.step ** (p - 1.0) * _power_diff(m, p) / p for sc, p in zip(self.scale, self.expo)
        ], axis=1)  # (n_near, n_h)
        self.nfft = sfft.next_fast_len(2 * g.n_near, real=True)
        self.near_coef_f = sfft.rfft(self.near_coef, n=self.nfft, axis=0)
        self.far_edges = g.edges[: g.n_far + 1]
        self.far_widths = np.diff(self.far_edges)
        if g.n_far:
            if g.k_max > g.k_min:
                self.nodes, self.bary = _lobatto(self.n_cheb, g.t_min, g.T)
            else:
                self.nodes, self.bary = np.array([g.t_min]), np.array([1.0])
            self.far_node_weights = self.far_weights(self.nodes)  # (n_h, n_nodes, n_far)

    def far_weights(self, times) -> np.ndarray:
        """Far-cell weights at arbitrary times, shape ``(n_h, n_times, n_far)``."""
        times = np.asarray(times, dtype=float)
        x = -self.far_edges  # descending positive distances
        out = np.empty((len(self.h_grid), len(times), len(x) - 1))
        for i, (sc, p) in enumerate(zip(self.scale, self.expo)):
            xx = x[None, :]
            tt = times[:, None]
            D = xx**p * np.expm1(p * np.log1p(tt / xx))
            out[i] = sc * (D[:, :-1] - D[:, 1:]) / p / self.far_widths[None, :]
        return out

    def _indices(self, t_grid) -> np.ndarray:
        g = self.geometry
        k = np.array([grid_index(float(t), g.step) for t in t_grid], dtype=int)
        if len(k) and (k.min() < g.k_min or k.max() > g.k_max):
            raise ConfigurationError(f"times must lie in [{g.t_min}, {g.T}]")
        return k

    def apply(self, noise: WhiteNoiseGrid, t_grid=None) -> tuple[np.ndarray, np.ndarray]:
        """Field values at ``t_grid`` (default: every aligned time)."""
        g = self.geometry
        if noise.geometry.key() != g.key():
            raise ConfigurationError("noise geometry differs from the plan geometry")
        t_grid = g.times() if t_grid is None else np.asarray(t_grid, dtype=float)
        k = self._indices(t_grid)
        dW = noise.increments
        near = dW[g.n_far:]
        spec = sfft.rfft(near, n=self.nfft, axis=0)  # (nf, d)
        conv = sfft.irfft(spec[:, None, :] * self.near_coef_f[:, :, None], n=self.nfft, axis=0)
        b = k - g.near_start  # boundary index inside the uniform block, >= 1
        b0 = -g.near_start
        values = conv[b - 1] - conv[b0 - 1][None]
        if g.n_far:
            far = np.einsum("hnc,cd->nhd", self.far_node_weights, dW[: g.n_far])
            if len(self.nodes) == 1:
                interp = np.ones((len(t_grid), 1))
            else:
                interp = _barycentric_matrix(self.nodes, self.bary, t_grid)
            values = values + np.einsum("tn,nhd->thd", interp, far)
        values[k == 0] = 0.0
        return t_grid, values

    def coefficients(self, t_grid) -> np.ndarray:
        """Cell weights at ``t_grid``, shape ``(n_t, n_h, n_cells)`` (far part not interpolated)."""
        g = self.geometry
        k = self._indices(t_grid)
        out = np.zeros((len(k), len(self.h_grid), g.n_cells))
        if g.n_far:
            out[:, :, : g.n_far] = self.far_weights(np.asarray(t_grid, float)).transpose(1, 0, 2)
        b0 = -g.near_start
        for r, kk in enumerate(k):
            if kk == 0:
                out[r] = 0.0
                continue
            b = kk - g.near_start
            near = np.zeros((len(self.h_grid), g.n_near))
            near[:, :b] += self.near_coef[:b][::-1].T
            near[:, :b0] -= self.near_coef[:b0][::-1].T
            out[r, :, g.n_far:] = near
        return out

    def discrete_covariance(self, t_grid) -> np.ndarray:
        """Exact covariance of the discretized field at ``t_grid`` (time-major, Hurst-minor)."""
        c = self.coefficients(t_grid).reshape(len(t_grid) * len(self.h_grid), -1)
        return (c * self.geometry.widths[None, :]) @ c.T


_PLANS: dict = {}


def projection_plan(geometry: NoiseGeometry, h_grid, mode: str = "unit", n_cheb: int = 48) -> ProjectionPlan:
    """Cached :class:`ProjectionPlan` per (geometry, Hurst grid, mode)."""
    key = (geometry.key(), tuple(float(h) for h in h_grid), resolve_mode(mode), int(n_cheb))
    plan = _PLANS.get(key)
    if plan is None:
        plan = ProjectionPlan(geometry, h_grid, mode, n_cheb)
        if len(_PLANS) > 16:
            _PLANS.clear()
        _PLANS[key] = plan
    return plan


def sample_field_mvn(noise: WhiteNoiseGrid, t_grid=None, h_grid=(0.5,), mode: str = "unit") -> FbmField:
    """Projection-sampler field from a shared white noise."""
    plan = projection_plan(noise.geometry, h_grid, mode)
    t, values = plan.apply(noise, t_grid)
    meta = {"task": noise.task, "noise": noise.geometry.describe()}
    return FbmField(t, plan.h_grid, values, plan.mode, noise.seed, "projection", meta)


class ProjectionSampler:
    """Convenience front end: geometry + plan + seeded draws.

    Parameters
    ----------
    h_grid : sequence of float
        Hurst values sampled jointly.
    T : float
        Last output time.
    step : float
        Uniform cell width; every output time is a multiple of it.
    t_min : float
        First output time (``<= 0``; negative values extend the grid into the past).
    tol : float
        Tail-variance budget used to choose the truncation ``L``.
    """

    def __init__(self, h_grid, T: float, step: float, t_min: float = 0.0, dim: int = 1,
                 mode: str = "unit", tol: float = 1e-8, growth: float = 1.05, L: float | None = None,
                 n_cheb: int = 48):
        self.mode = resolve_mode(mode)
        self.h_grid = tuple(float(h) for h in h_grid)
        self.dim = int(dim)
        self.geometry = NoiseGeometry.build(step, T, t_min, L, self.h_grid, tol, self.mode, growth)
        self.plan = projection_plan(self.geometry, self.h_grid, self.mode, n_cheb)

    @property
    def tail_bound(self) -> float:
        return self.geometry.tail_bound

    def noise(self, seed: int, task: int = 0) -> WhiteNoiseGrid:
        return WhiteNoiseGrid.draw(self.geometry, self.dim, seed, task)

    def sample(self, seed: int, task: int = 0, t_grid=None) -> FbmField:
        return sample_field_mvn(self.noise(seed, task), t_grid, self.h_grid, self.mode)

    def bias(self, t_grid, model: CovarianceModel | None = None) -> np.ndarray:
        """Entrywise ``discretized - quadrature`` covariance at ``t_grid``."""
        model = model or default_model()
        disc = self.plan.discrete_covariance(t_grid)
        exact = model.matrix(grid_points(t_grid, self.h_grid), self.mode)
        return disc - exact
