"""Quadrature covariance model of the (time, Hurst) fBm field."""
from __future__ import annotations

import math
import threading
from typing import Iterable, Sequence

import numpy as np

from ..errors import ModelError
from ..quadrature import check, half_line, singular_segment
from .kernels import _check_hurst, mvn_integrand_at, normalization_constant, resolve_mode

_KEY_DIGITS = 12


def _key_point(t, H):
    return (round(float(t), _KEY_DIGITS), round(float(H), _KEY_DIGITS))


class CovarianceModel:
    """Cached evaluations of ``E B_u^H B_v^K``.

    Values are L2 inner products of the two moving-average kernels,
    integrated piecewise between the kernel breakpoints with power-law
    substitution at the singular ends. The cache follows a build-then-freeze
    contract: after :meth:`freeze` lookups never mutate shared state, so
    concurrent reads are safe.

    Parameters
    ----------
    tol : float
        Absolute quadrature tolerance of each raw covariance.
    """

    def __init__(self, tol: float = 1e-8):
        if tol <= 0:
            raise ValueError("tol must be positive")
        self.tol = float(tol)
        self._cache: dict = {}
        self._frozen = False
        self._lock = threading.Lock()

    # -- cache management --------------------------------------------------
    def freeze(self) -> "CovarianceModel":
        self._frozen = True
        return self

    @property
    def frozen(self) -> bool:
        return self._frozen

    def __len__(self):
        return len(self._cache)

    def normalization(self, H: float) -> float:
        return normalization_constant(H, min(self.tol, 1e-10))

    # -- raw covariance ----------------------------------------------------
    def _raw_uncached(self, u: float, H: float, v: float, K: float) -> float:
        if u == 0.0 or v == 0.0:
            return 0.0
        a, b = H - 0.5, K - 0.5
        lo = min(0.0, u, v)
        width = max(abs(u), abs(v), 1.0)
        hi = max(0.0, u, v)
        cuts = {lo - width, 0.0, u, v}
        # two feature points much closer than the overall width create
        # structure at the scale of their gap; a geometric ladder of cuts
        # lets the adaptive rule see it
        pts = (0.0, u, v)
        for i in range(3):
            for j in range(i + 1, 3):
                g = abs(pts[i] - pts[j])
                while 0.0 < g < width / 16:
                    for p in (pts[i], pts[j]):
                        cuts.update((p - g, p + g))
                    g *= 16
        cuts = sorted(c for c in cuts if lo - width <= c <= hi)
        exponent = min(0.0, a) + min(0.0, b)

        def f(anchor, direction, d):
            return (mvn_integrand_at(a, u, anchor, direction, d)
                    * mvn_integrand_at(b, v, anchor, direction, d))

        pieces = len(cuts)  # finite segments plus the tail
        eps = self.tol / pieces
        total, err = 0.0, 0.0
        for p, q in zip(cuts[:-1], cuts[1:]):
            val, e = singular_segment(f, p, q, exponent, eps)
            total += val
            err += e
        val, e = half_line(f, cuts[0], -1, eps)
        total += val
        err += e
        g = math.gamma(H + 0.5) * math.gamma(K + 0.5)
        return check(total / g, err / g, self.tol, f"E B_{u}^{H} B_{v}^{K}")

    def raw(self, u: float, H: float, v: float, K: float) -> float:
        """Raw-normalization covariance ``E B_u^H B_v^K``."""
        H, K = _check_hurst(H), _check_hurst(K)
        p, q = _key_point(u, H), _key_point(v, K)
        key = (p, q) if p <= q else (q, p)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        value = self._raw_uncached(key[0][0], key[0][1], key[1][0], key[1][1])
        if not self._frozen:
            with self._lock:
                self._cache[key] = value
        return value

    def cov(self, u: float, H: float, v: float, K: float, mode: str = "unit") -> float:
        """``E B_u^H B_v^K`` in the requested normalization."""
        value = self.raw(u, H, v, K)
        if resolve_mode(mode) == "unit":
            value /= self.normalization(H) * self.normalization(K)
        return value

    def matrix(self, points: Sequence[tuple[float, float]], mode: str = "unit") -> np.ndarray:
        """Covariance matrix of ``B`` at the listed ``(t, H)`` points."""
        n = len(points)
        out = np.empty((n, n))
        for i in range(n):
            for j in range(i, n):
                out[i, j] = out[j, i] = self.cov(points[i][0], points[i][1], points[j][0], points[j][1], mode)
        return out

    def check_psd(self, cov: np.ndarray, slack: float | None = None) -> float:
        """Smallest eigenvalue; raises :class:`ModelError` below ``-slack``."""
        slack = len(cov) * self.tol * 10 if slack is None else slack
        lam = float(np.linalg.eigvalsh(cov).min())
        if lam < -slack:
            raise ModelError(f"covariance matrix not PSD: min eigenvalue {lam:.3g}")
        return lam

    # -- derived second moments -------------------------------------------
    def increment_second_moment(self, t, H, t2, H2, mode="unit") -> float:
        """``E (B_t^H - B_{t2}^{H2})^2``."""
        return (self.cov(t, H, t, H, mode) - 2.0 * self.cov(t, H, t2, H2, mode)
                + self.cov(t2, H2, t2, H2, mode))

    def rectangular_increment_second_moment(self, t, t2, H, H2, mode="unit") -> float:
        """Second moment of ``B_t^H - B_{t2}^H - B_t^{H2} + B_{t2}^{H2}``."""
        if H == H2 or t == t2:
            return 0.0
        pts = [(t, H), (t2, H), (t, H2), (t2, H2)]
        sign = np.array([1.0, -1.0, -1.0, 1.0])
        return float(sign @ self.matrix(pts, mode) @ sign)

    def increment_covariance(self, t, H, t2, K, shift=0.0, mode="unit") -> float:
        """``E (B_{t+shift}^H - B_shift^H)(B_{t2+shift}^K - B_shift^K)``."""
        s = shift
        return (self.cov(t + s, H, t2 + s, K, mode) - self.cov(t + s, H, s, K, mode)
                - self.cov(s, H, t2 + s, K, mode) + self.cov(s, H, s, K, mode))


_DEFAULT = CovarianceModel()


def default_model() -> CovarianceModel:
    """Process-wide model shared by the module-level helpers."""
    return _DEFAULT


def cross_covariance(u, H, v, K, mode="unit", model: CovarianceModel | None = None) -> float:
    """``E B_u^H B_v^K`` (negative times allowed)."""
    return (model or _DEFAULT).cov(u, H, v, K, mode)


def increment_second_moment(t, H, t2, H2, mode="unit", model: CovarianceModel | None = None) -> float:
    """``E (B_t^H - B_{t2}^{H2})^2``."""
    return (model or _DEFAULT).increment_second_moment(t, H, t2, H2, mode)


def rectangular_increment_second_moment(t, t2, H, H2, mode="unit", model: CovarianceModel | None = None) -> float:
    """Second moment of the rectangular increment between ``(t, H)`` and ``(t2, H2)``."""
    return (model or _DEFAULT).rectangular_increment_second_moment(t, t2, H, H2, mode)


def grid_points(t_grid: Iterable[float], h_grid: Iterable[float]) -> list[tuple[float, float]]:
    """Time-major list of ``(t, H)`` pairs matching ``values[t, h]`` layout."""
    h_grid = list(h_grid)
    return [(float(t), float(h)) for t in t_grid for h in h_grid]
