"""Mandelbrot-Van Ness kernels and the unit-variance normalization."""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

from ..errors import DomainError
from ..quadrature import check, half_line, singular_segment


def _check_hurst(H: float) -> float:
    H = float(H)
    if not 0.0 < H < 1.0:
        raise DomainError(f"Hurst parameter must lie in (0, 1), got {H}")
    return H


@dataclass(frozen=True)
class HurstRange:
    """Compact Hurst interval ``[h_min, h_max]`` inside (0, 1)."""

    h_min: float
    h_max: float

    def __post_init__(self):
        if not (0.0 < self.h_min <= self.h_max < 1.0):
            raise DomainError(f"need 0 < h_min <= h_max < 1, got [{self.h_min}, {self.h_max}]")

    @classmethod
    def of(cls, h_grid) -> "HurstRange":
        h = [float(x) for x in h_grid]
        return cls(min(h), max(h))

    def __contains__(self, H) -> bool:
        return self.h_min <= H <= self.h_max


def kernel_K1(H: float, t: float, s: float) -> float:
    """Past kernel ``((t+s)^(H-1/2) - s^(H-1/2)) / Gamma(H+1/2)`` for distance ``s > 0``."""
    H = _check_hurst(H)
    if s <= 0.0:
        raise DomainError("kernel_K1 needs s > 0; the s = 0 endpoint must be integrated, not evaluated")
    if t < 0.0:
        raise DomainError(f"kernel_K1 needs t >= 0, got {t}")
    a = H - 0.5
    return s**a * math.expm1(a * math.log1p(t / s)) / math.gamma(H + 0.5)


def kernel_K2(H: float, t: float, s: float) -> float:
    """Present kernel ``(t-s)^(H-1/2) / Gamma(H+1/2)`` for ``0 <= s < t``."""
    H = _check_hurst(H)
    if not 0.0 <= s < t:
        raise DomainError(f"kernel_K2 needs 0 <= s < t, got s={s}, t={t}")
    return (t - s) ** (H - 0.5) / math.gamma(H + 0.5)


def mvn_integrand(a: float, t: float, s: float) -> float:
    """Unscaled moving-average kernel ``(t-s)_+^a - (-s)_+^a`` for any real ``t``.

    The difference is evaluated with ``expm1`` in the far past where the two
    powers nearly cancel. At ``a = 0`` the value is the indicator of ``s``
    between 0 and ``t`` (signed).
    """
    return mvn_integrand_at(a, t, s, 1, 0.0)


def mvn_integrand_at(a: float, t: float, anchor: float, direction: int, d: float) -> float:
    """:func:`mvn_integrand` at ``s = anchor + direction * d`` with exact offsets."""
    ahead = (t - anchor) - direction * d      # t - s
    back = -anchor - direction * d            # -s
    if back > 0.0 and ahead > 0.0:
        return back**a * math.expm1(a * math.log1p(t / back))
    if ahead > 0.0:
        return ahead**a
    if back > 0.0:
        return -(back**a)
    return 0.0


def raw_variance_at_one(H: float, tol: float = 1e-10) -> float:
    """Raw-mode variance of ``B_1^H`` by quadrature."""
    H = _check_hurst(H)
    a = H - 0.5

    def f(anchor, direction, d):
        s = anchor + direction * d
        return (s**a * math.expm1(a * math.log1p(1.0 / s))) ** 2 if s > 0.0 else 0.0

    v1, e1 = singular_segment(f, 0.0, 1.0, min(0.0, 2.0 * a), 0.5 * tol)
    v2, e2 = half_line(f, 1.0, +1, 0.5 * tol)
    total = (v1 + v2 + 1.0 / (2.0 * H)) / math.gamma(H + 0.5) ** 2
    return check(total, (e1 + e2) / math.gamma(H + 0.5) ** 2, tol, f"Var B_1^{H}")


@functools.lru_cache(maxsize=4096)
def _normalization(H: float, tol: float) -> float:
    return math.sqrt(raw_variance_at_one(H, tol))


def normalization_constant(H: float, tol: float = 1e-10) -> float:
    """``c(H) = sqrt(Var_raw B_1^H)``; dividing by it gives unit variance at t = 1."""
    H = _check_hurst(H)
    if tol <= 0.0:
        raise DomainError("tol must be positive")
    return _normalization(H, float(tol))


def scale_factor(H: float, mode: str) -> float:
    """Multiplier turning the unscaled kernel integral into ``B_t^H`` in ``mode``."""
    g = math.gamma(H + 0.5)
    if resolve_mode(mode) == "raw":
        return 1.0 / g
    return 1.0 / (g * normalization_constant(H))


MODES = ("raw", "unit")


def resolve_mode(mode: str) -> str:
    """Canonical normalization name: ``"raw"`` or ``"unit"``."""
    m = str(mode).lower()
    if m in ("unit", "unit-variance", "unit_variance"):
        return "unit"
    if m == "raw":
        return "raw"
    raise DomainError(f"unknown normalization mode {mode!r}; use 'raw' or 'unit'")
