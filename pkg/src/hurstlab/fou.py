"""Fractional Ornstein-Uhlenbeck processes driven by the shared fBm field.

The stationary process is ``U_t = int_{-inf}^t exp(-(t-u)) dB_u``. Paths are
built from a field draw on an extended grid ``[-L, T]``; covariances are
computed by quadrature of the equivalent moving-average representation
``U_t = int g(t - sigma) dW_sigma``.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate, signal

from .errors import ConfigurationError, DomainError
from .field.covariance import CovarianceModel, default_model
from .field.kernels import _check_hurst, normalization_constant, resolve_mode
from .field.samplers import FbmField, ProjectionSampler
from .quadrature import LIMIT, check, singular_segment

TAIL_WEIGHT = 1e-10


@dataclass
class FouPath:
    """fOU values indexed ``values[time, hurst, component]``."""

    t_grid: np.ndarray
    h_grid: np.ndarray
    values: np.ndarray
    init: str
    seed: int
    L: float
    meta: dict = field(default_factory=dict)

    def path(self, H: float) -> np.ndarray:
        hits = np.flatnonzero(np.abs(self.h_grid - H) < 1e-12)
        if not len(hits):
            raise ConfigurationError(f"H={H} not sampled")
        return self.values[:, hits[0], :]

    def metadata(self) -> dict:
        out = {"seed": self.seed, "init": self.init, "L": self.L, "h_grid": self.h_grid.tolist()}
        out.update(self.meta)
        return out


def required_extension(magnitude: float, tol: float) -> float:
    """Past extension ``L`` with ``exp(-L) * magnitude <= tol``."""
    return math.log(max(float(magnitude), 1.0) / tol)


def sample_fou(fbm: FbmField, h_grid: Sequence[float] | None = None, tol: float = TAIL_WEIGHT,
               init: str = "stationary", u0=None, t_start: float = 0.0) -> FouPath:
    """fOU paths for every requested Hurst value of one field draw.

    Between grid points the driving path is taken linear, so each step is
    integrated exactly:
    ``U_{k+1} = e^{-step} U_k + (1 - e^{-step}) / step * (B_{k+1} - B_k)``.

    Parameters
    ----------
    fbm : FbmField
        Field on a uniform grid. For ``init="stationary"`` it must start at
        ``-L`` with ``exp(-L) * max|B| <= tol``.
    init : {"stationary", "given"}
        Stationary start from the remote past, or ``U_0 = u0``.
    t_start : float
        First output time (stationary mode).
    """
    step = fbm.uniform_step()
    h_grid = fbm.h_grid if h_grid is None else np.asarray(h_grid, dtype=float)
    idx = [fbm.h_index(h) for h in h_grid]
    B = fbm.values[:, idx, :]
    q = math.exp(-step)
    gain = -math.expm1(-step) / step
    if init == "stationary":
        magnitude = float(np.max(np.abs(B))) if B.size else 0.0
        need = required_extension(magnitude, tol)
        have = -float(fbm.t_grid[0])
        if have < need:
            raise ConfigurationError(f"stationary start needs the field to reach back to L >= {need:.3f}, "
                                     f"it reaches {have:.3f}")
        dB = np.diff(B, axis=0)
        U = np.concatenate([np.zeros_like(B[:1]),
                            signal.lfilter([gain], [1.0, -q], dB, axis=0)])
        keep = fbm.t_grid >= t_start - 1e-12
        return FouPath(fbm.t_grid[keep], h_grid, U[keep], "stationary", fbm.seed, have,
                       {"step": step, "tail_weight": math.exp(-have) * magnitude})
    if init == "given":
        i0 = fbm.t_index(0.0)
        B = B[i0:]
        u0 = np.broadcast_to(np.asarray(0.0 if u0 is None else u0, dtype=float), B.shape[1:])
        dB = np.diff(B, axis=0)
        zi = (q * u0)[None]
        tail, _ = signal.lfilter([gain], [1.0, -q], dB, axis=0, zi=zi)
        U = np.concatenate([u0[None], tail])
        return FouPath(fbm.t_grid[i0:], h_grid, U, "given", fbm.seed, 0.0, {"step": step})
    raise ConfigurationError(f"unknown initialization {init!r}")


class StationaryFouSampler:
    """Stationary fOU paths on ``[0, T]`` from projection-sampled fields.

    The field is drawn on ``[-L, T]`` with ``L`` large enough that the
    forgotten initial condition weighs less than ``tol``.
    """

    def __init__(self, h_grid, T: float, step: float, dim: int = 1, mode: str = "unit",
                 tol: float = TAIL_WEIGHT, field_tol: float = 1e-8, extension: float | None = None):
        if extension is None:
            extension = required_extension(1e3, tol)
        L = math.ceil(extension / step) * step
        self.field_sampler = ProjectionSampler(h_grid, T, step, t_min=-L, dim=dim, mode=mode, tol=field_tol)
        self.tol = tol

    def sample(self, seed: int, task: int = 0) -> FouPath:
        path = sample_fou(self.field_sampler.sample(seed, task), tol=self.tol)
        path.meta["field"] = self.field_sampler.geometry.describe()
        return path


# ---------------------------------------------------------------------------
# stationary covariance


def _g_kernel(a: float, tau: float) -> float:
    """``tau^a - int_0^tau e^{-v} (tau - v)^a dv`` without cancellation."""
    if tau <= 0.0:
        return 0.0
    ta = tau**a
    if a == 0.0:
        return math.exp(-tau)

    def f(v):
        return math.exp(-v) * -ta * math.expm1(a * math.log1p(-v / tau)) if v < tau else math.exp(-v) * ta

    hi = min(tau, 50.0)
    val, _ = integrate.quad(f, 0.0, hi, epsabs=1e-14, epsrel=1e-12, limit=LIMIT)
    if tau > hi:  # remaining mass below e^{-50} * tau^a, added in leading order
        val += ta * math.exp(-hi)
    return math.exp(-tau) * ta + val


@functools.lru_cache(maxsize=256)
def _stationary_raw(H: float, K: float, s: float, tol: float) -> tuple[float, float]:
    a, b = H - 0.5, K - 0.5
    if a == 0.0 and b == 0.0:
        return 0.5 * math.exp(-s), 0.0

    def f(anchor, direction, d):
        tau = anchor + direction * d
        return _g_kernel(a, tau) * _g_kernel(b, tau + s)

    exponent = min(0.0, a) + (min(0.0, b) if s == 0.0 else 0.0)
    total, err = 0.0, 0.0
    cuts = [0.0, 1.0, 8.0, 40.0]
    for p, q in zip(cuts[:-1], cuts[1:]):
        v, e = singular_segment(f, p, q, exponent if p == 0.0 else 0.0, tol / 8, epsrel=1e-10)
        total += v
        err += e
    v, e = integrate.quad(lambda x: f(0.0, 1, x), cuts[-1], math.inf, epsabs=tol / 8, epsrel=1e-10, limit=LIMIT)
    g = math.gamma(H + 0.5) * math.gamma(K + 0.5)
    return (total + v) / g, (err + e) / g


def stationary_cross_covariance(H: float, K: float, s: float, tol: float = 1e-8, mode: str = "unit") -> float:
    """``E[U_0^H U_s^K]`` per component for the stationary fOU pair.

    Evaluated as ``int_0^inf g_H(x) g_K(x + s) dx`` with the moving-average
    kernels ``g`` of the stationary fOU process.
    """
    H, K = _check_hurst(H), _check_hurst(K)
    if s < 0:
        raise DomainError("lag s must be >= 0; use the (K, H) pair for negative lags")
    value, err = _stationary_raw(H, K, float(s), float(tol))
    check(value, err, max(tol, 1e-9), f"fOU covariance ({H},{K},{s})")
    if resolve_mode(mode) == "unit":
        value /= normalization_constant(H) * normalization_constant(K)
    return value


def symmetrized_covariance(H: float, K: float, s: float, tol: float = 1e-8, mode: str = "unit") -> float:
    """``E[U_0^H U_s^K + U_s^H U_0^K]``."""
    return (stationary_cross_covariance(H, K, s, tol, mode)
            + stationary_cross_covariance(K, H, s, tol, mode))


def stationary_sq_diff(H: float, K: float, dim: int = 1, tol: float = 1e-8, mode: str = "unit") -> float:
    """``E|U_0^H - U_0^K|^2`` for ``dim`` independent components."""
    if H == K:
        return 0.0
    per = (stationary_cross_covariance(H, H, 0.0, tol, mode) + stationary_cross_covariance(K, K, 0.0, tol, mode)
           - 2.0 * stationary_cross_covariance(H, K, 0.0, tol, mode))
    return dim * per


def spectral_autocovariance(H: float, s: float) -> float:
    """Unit-mode ``E[U_0^H U_s^H]`` from the spectral density (independent route).

    ``r(s) = Gamma(2H+1) sin(pi H) / pi * int_0^inf cos(s x) x^{1-2H} / (1+x^2) dx``.
    """
    H = _check_hurst(H)
    c = math.gamma(2 * H + 1) * math.sin(math.pi * H) / math.pi

    def f(x):
        return x ** (1 - 2 * H) / (1 + x * x) if x > 0 else (0.0 if H < 0.5 else math.inf)

    kw = dict(epsabs=1e-13, epsrel=1e-12, limit=LIMIT)
    if s == 0:
        v1 = integrate.quad(f, 0, 1, **kw)[0]
        v2 = integrate.quad(f, 1, math.inf, **kw)[0]
    else:
        v1 = integrate.quad(lambda x: math.cos(s * x) * f(x), 0, 1, **kw)[0]
        v2 = integrate.quad(f, 1, math.inf, weight="cos", wvar=s, limlst=100)[0]
    return c * (v1 + v2)


def covariance_ibp(H: float, K: float, t: float, t2: float, model: CovarianceModel | None = None,
                   mode: str = "unit", panels=(0.0, 0.5, 2.0, 6.0, 14.0, 26.0), nodes: int = 10) -> float:
    """``E[U_t^H U_t2^K]`` from the field covariance (slow cross-check).

    Uses ``U_t = int_0^inf e^{-x} (B_t - B_{t-x}) dx`` so the covariance is a
    double exponential average of the rectangular covariance difference,
    integrated by tensor Gauss-Legendre panels (tail weight ``e^{-26}``).
    """
    model = model or default_model()
    x, w = np.polynomial.legendre.leggauss(nodes)
    pts, wts = [], []
    for p, q in zip(panels[:-1], panels[1:]):
        pts.append(0.5 * (q - p) * x + 0.5 * (q + p))
        wts.append(0.5 * (q - p) * w)
    pts = np.concatenate(pts)
    wts = np.concatenate(wts) * np.exp(-pts)
    wts /= wts.sum()  # the weights integrate e^{-x} to one

    def C(u, v):
        return model.cov(u, H, v, K, mode)

    c00 = C(t, t2)
    row = np.array([C(t, t2 - y) for y in pts])
    col = np.array([C(t - x, t2) for x in pts])
    total = 0.0
    for i, xi in enumerate(pts):
        inner = np.array([C(t - xi, t2 - y) for y in pts])
        total += wts[i] * (wts @ (c00 - row - col[i] + inner))
    return float(total)


@dataclass
class DecayProfile:
    """Symmetrized fOU covariance against the envelope ``1 ∧ s^{2 h_max - 2}``."""

    H: float
    K: float
    h_max: float
    s: np.ndarray
    magnitude: np.ndarray
    envelope: np.ndarray
    c_hat: float

    @property
    def ratio(self) -> np.ndarray:
        return self.magnitude / self.envelope

    def rows(self):
        return list(zip(self.s.tolist(), self.magnitude.tolist(), self.envelope.tolist()))

    def normalized_decay(self, s_ref: float = 1.0) -> np.ndarray:
        """``|r_sym(s)| s^{2-2h_max}`` divided by its value at ``s_ref`` (s >= s_ref only)."""
        ref = abs(symmetrized_covariance(self.H, self.K, s_ref)) * s_ref ** (2 - 2 * self.h_max)
        mask = self.s >= s_ref
        return self.magnitude[mask] * self.s[mask] ** (2 - 2 * self.h_max) / ref


def envelope(s, h_max: float) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(s <= 1.0, 1.0, np.power(np.maximum(s, 1.0), 2 * h_max - 2))


def covariance_decay_profile(H: float, K: float, s_grid, tol: float = 1e-8, h_max: float | None = None) -> DecayProfile:
    """Profile ``(s, |r_sym(s)|, 1 ∧ s^{2 h_max - 2})`` and the constant at ``s <= 1``."""
    s_grid = np.asarray(s_grid, dtype=float)
    if np.any(s_grid < 0) or np.any(np.diff(s_grid) <= 0):
        raise DomainError("s_grid must be ascending and non-negative")
    h_max = max(H, K) if h_max is None else h_max
    mag = np.array([abs(symmetrized_covariance(H, K, s, tol)) for s in s_grid])
    env = envelope(s_grid, h_max)
    small = s_grid <= 1.0
    if small.any():
        c_hat = float(np.max(mag[small] / env[small]))
    else:
        c_hat = abs(symmetrized_covariance(H, K, 1.0, tol))
    return DecayProfile(H, K, h_max, s_grid, mag, env, c_hat)
