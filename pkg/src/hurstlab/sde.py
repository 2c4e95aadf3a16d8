"""Dissipative SDEs driven additively by the fBm field.

``Y_t = Y_0 + int_0^t b(Y_s) ds + B_t^H`` is solved pathwise as a random
ODE. Two solvers are provided: a fine-step reference Euler method and the
coarse scheme ``M_{k+1} = M_k + gamma b(M_k) + (B_{(k+1)gamma} - B_{k gamma})``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import signal

from . import rng as _rng
from .errors import ConfigurationError, ValidationError
from .field.samplers import FbmField

REL_SLACK = 1e-9
STABILITY = 0.5


@dataclass(frozen=True)
class DriftSpec:
    """Drift ``b`` with dissipativity constant ``kappa`` and Lipschitz constant ``lipschitz``.

    ``linear_rate`` is set for ``b(x) = -rate * x`` so solvers can use a
    linear recursion; ``builtin`` marks drifts whose constants are analytic.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    kappa: float
    lipschitz: float
    name: str = "custom"
    linear_rate: float | None = None
    builtin: bool = False

    def __call__(self, x):
        return self.fn(x)

    @classmethod
    def linear(cls, rate: float = 1.0) -> "DriftSpec":
        if rate <= 0:
            raise ConfigurationError("linear drift needs a positive rate")
        return cls(lambda x: -rate * x, rate, rate, f"linear({rate:g})", rate, True)

    @classmethod
    def sine(cls, kappa: float = 2.0, c: float = 0.5) -> "DriftSpec":
        """``-kappa x + c sin(x)`` componentwise, dissipative when ``|c| < kappa``."""
        if abs(c) >= kappa:
            raise ConfigurationError("sine drift needs |c| < kappa")
        return cls(lambda x: -kappa * x + c * np.sin(x), kappa - abs(c), kappa + abs(c),
                   f"sine({kappa:g},{c:g})", None, True)

    @classmethod
    def zero(cls) -> "DriftSpec":
        """``b = 0``: not dissipative, allowed as a degenerate test drift."""
        return cls(lambda x: np.zeros_like(x), 0.0, 0.0, "zero", 0.0, True)

    @property
    def dissipative(self) -> bool:
        return self.kappa > 0

    def gamma0(self) -> float:
        """Largest step bound with ``0 < kappa xi - 2 K^2 xi^2 < 1`` on ``(0, gamma0)``."""
        if not self.dissipative:
            return math.inf
        root = self.kappa / (2.0 * self.lipschitz**2)
        # the quadratic peaks at kappa^2/(8K^2) <= 1/8 since kappa <= K
        return min(1.0, root)

    def describe(self) -> dict:
        return {"name": self.name, "kappa": self.kappa, "K": self.lipschitz,
                "gamma0": self.gamma0() if self.dissipative else None}


def drift_from_name(name: str, rate: float = 1.0, c: float = 0.5) -> DriftSpec:
    if name == "linear":
        return DriftSpec.linear(rate)
    if name == "sine":
        return DriftSpec.sine(rate, c)
    if name == "zero":
        return DriftSpec.zero()
    raise ConfigurationError(f"unknown drift {name!r}; choose linear, sine or zero")


@dataclass
class DriftReport:
    worst_dissipativity: float
    worst_lipschitz: float
    trials: int
    radius: float
    passed: bool
    witness: tuple | None = None

    def to_dict(self):
        return {"worst_dissipativity": self.worst_dissipativity, "worst_lipschitz": self.worst_lipschitz,
                "trials": self.trials, "radius": self.radius, "passed": self.passed}


def validate_drift(spec: DriftSpec, trials: int = 1000, radius: float = 10.0, seed: int = 0,
                   dim: int = 1, raise_on_failure: bool = True) -> DriftReport:
    """Spot-check both drift inequalities on random pairs in a ball.

    The dissipativity ratio is ``-<b(x)-b(y), x-y> / |x-y|^2`` (must stay
    ``>= kappa``); the Lipschitz ratio is ``|b(x)-b(y)| / |x-y|`` (must stay
    ``<= K``), each up to a relative slack of 1e-9.
    """
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    g = _rng.stream(seed, 0)
    x = g.uniform(-radius, radius, (trials, dim))
    y = g.uniform(-radius, radius, (trials, dim))
    dx = x - y
    db = spec(x) - spec(y)
    n2 = np.sum(dx * dx, axis=1)
    ok = n2 > 0
    diss = -np.sum(db * dx, axis=1)[ok] / n2[ok]
    lip = np.sqrt(np.sum(db * db, axis=1)[ok] / n2[ok])
    worst_d, worst_l = float(diss.min()), float(lip.max())
    bad_d = diss < spec.kappa * (1 - REL_SLACK) - REL_SLACK * (spec.kappa == 0)
    bad_l = lip > spec.lipschitz * (1 + REL_SLACK) + REL_SLACK * (spec.lipschitz == 0)
    passed = not (bad_d.any() or bad_l.any())
    witness = None
    if not passed:
        k = int(np.flatnonzero(bad_d | bad_l)[0])
        xs, ys = x[ok][k], y[ok][k]
        witness = (xs.tolist(), ys.tolist())
        if raise_on_failure:
            raise ValidationError(f"drift {spec.name} violates its declared constants at x={witness[0]}, "
                                  f"y={witness[1]} (dissipativity {diss[k]:.6g} vs {spec.kappa}, "
                                  f"Lipschitz {lip[k]:.6g} vs {spec.lipschitz})")
    return DriftReport(worst_d, worst_l, trials, radius, passed, witness)


@dataclass
class SdePath:
    """Solution values ``values[time, hurst, component]``."""

    t_grid: np.ndarray
    h_grid: np.ndarray
    values: np.ndarray
    scheme: str
    step: float
    seed: int
    meta: dict = field(default_factory=dict)

    def path(self, H: float) -> np.ndarray:
        hits = np.flatnonzero(np.abs(self.h_grid - H) < 1e-12)
        if not len(hits):
            raise ConfigurationError(f"H={H} not simulated")
        return self.values[:, hits[0], :]


def _stride(big: float, small: float, what: str) -> int:
    k = round(big / small)
    if k < 1 or abs(big / small - k) > 1e-9 * k:
        raise ConfigurationError(f"{what}: {big} is not a multiple of {small}")
    return int(k)


def _euler(y0: np.ndarray, dB: np.ndarray, step: float, spec: DriftSpec) -> np.ndarray:
    """States after each increment; ``dB`` has shape ``(n, n_h, d)``."""
    out = np.empty((len(dB) + 1,) + dB.shape[1:])
    out[0] = y0
    if spec.linear_rate is not None:
        q = 1.0 - spec.linear_rate * step
        tail, _ = signal.lfilter([1.0], [1.0, -q], dB, axis=0, zi=(q * out[0])[None])
        out[1:] = tail
        return out
    y = out[0].copy()
    for k in range(len(dB)):
        y = y + step * spec(y) + dB[k]
        out[k + 1] = y
    return out


def _initial(y0, n_h: int, d: int) -> np.ndarray:
    return np.broadcast_to(np.asarray(0.0 if y0 is None else y0, dtype=float), (n_h, d)).copy()


def solve_reference(fbm: FbmField, spec: DriftSpec, y0=None, delta: float | None = None,
                    out_step: float | None = None, strict: bool = False, T: float | None = None) -> SdePath:
    """Fine-step Euler solution of the random ODE for every H of the field.

    ``delta`` must be a multiple of the field spacing and divide ``out_step``.
    ``delta * K >= 0.5`` triggers a warning, or an error when ``strict``.
    """
    fstep = fbm.uniform_step()
    delta = fstep if delta is None else float(delta)
    out_step = delta if out_step is None else float(out_step)
    stride = _stride(delta, fstep, "fine step vs field spacing")
    out_stride = _stride(out_step, delta, "output step vs fine step")
    if delta * spec.lipschitz >= STABILITY:
        msg = f"fine step delta={delta} with K={spec.lipschitz} violates delta*K < {STABILITY}"
        if strict:
            raise ConfigurationError(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    if strict and not spec.builtin:
        validate_drift(spec, dim=fbm.dim)
    i0 = fbm.t_index(0.0)
    B = fbm.values[i0::stride]
    t = fbm.t_grid[i0::stride]
    if T is not None:
        n = _stride(T, delta, "horizon vs fine step")
        if n >= len(t):
            raise ConfigurationError(f"field covers t <= {t[-1]}, horizon {T} requested")
        B, t = B[: n + 1], t[: n + 1]
    Y = _euler(_initial(y0, B.shape[1], B.shape[2]), np.diff(B, axis=0), delta, spec)
    return SdePath(t[::out_stride], fbm.h_grid, Y[::out_stride], "reference-euler", delta, fbm.seed,
                   {"delta": delta, "drift": spec.describe()})


def euler_scheme(fbm: FbmField, spec: DriftSpec, m0=None, gamma: float = 0.05, n_steps: int | None = None,
                 check_gamma: bool = True) -> SdePath:
    """Coarse scheme on ``{k gamma : k = 0..N}`` driven by the field values there."""
    gamma = float(gamma)
    if check_gamma and spec.dissipative and not gamma < spec.gamma0():
        raise ConfigurationError(f"step gamma={gamma} must satisfy gamma < gamma0={spec.gamma0():.6g}, "
                                 f"where 0 < kappa*xi - 2K^2*xi^2 < 1 on (0, gamma0)")
    stride = _stride(gamma, fbm.uniform_step(), "scheme step vs field spacing")
    i0 = fbm.t_index(0.0)
    B = fbm.values[i0::stride]
    t = fbm.t_grid[i0::stride]
    if n_steps is not None:
        if n_steps >= len(t):
            raise ConfigurationError(f"field holds {len(t) - 1} scheme steps, {n_steps} requested")
        B, t = B[: n_steps + 1], t[: n_steps + 1]
    M = _euler(_initial(m0, B.shape[1], B.shape[2]), np.diff(B, axis=0), gamma, spec)
    return SdePath(t, fbm.h_grid, M, "euler", gamma, fbm.seed, {"gamma": gamma, "drift": spec.describe()})


@dataclass
class ErgodicMeanSeries:
    """Running ergodic means of ``|a - b|^2`` minus an optional centering."""

    times: np.ndarray
    values: np.ndarray
    centering: float
    mode: str

    @property
    def raw(self) -> np.ndarray:
        return self.values + self.centering


def ergodic_mean_sq_diff(path_a, path_b, t_grid, mode: str = "continuous",
                         centering: float | None = None) -> ErgodicMeanSeries:
    """Running mean square difference of two paths on a shared grid.

    ``continuous``: ``(1/(t+1)) int_0^{t+1} |a_s - b_s|^2 ds`` by the trapezoid
    rule, reported at every ``t`` with ``t + 1`` on the grid.
    ``discrete``: ``(1/N) sum_{k=1}^N |a_k - b_k|^2`` reported at ``t_N``.
    Subtracting ``centering`` turns the series into ``V_t``.
    """
    a = np.asarray(path_a, dtype=float)
    b = np.asarray(path_b, dtype=float)
    t = np.asarray(t_grid, dtype=float)
    if a.shape != b.shape or a.shape[0] != len(t):
        raise ValidationError(f"paths {a.shape} and {b.shape} do not share the grid of {len(t)} times")
    sq = (a - b) ** 2
    if sq.ndim > 1:
        sq = sq.reshape(len(t), -1).sum(axis=1)
    c = 0.0 if centering is None else float(centering)
    if mode == "continuous":
        if abs(t[0]) > 1e-12:
            raise ValidationError("continuous ergodic means need the grid to start at 0")
        area = np.concatenate([[0.0], np.cumsum(0.5 * (sq[1:] + sq[:-1]) * np.diff(t))])
        keep = t >= 1.0 - 1e-12
        return ErgodicMeanSeries(t[keep] - 1.0, area[keep] / t[keep] - c, c, mode)
    if mode == "discrete":
        n = np.arange(1, len(t))
        return ErgodicMeanSeries(t[1:], np.cumsum(sq[1:]) / n - c, c, mode)
    raise ValidationError(f"unknown ergodic mode {mode!r}")
