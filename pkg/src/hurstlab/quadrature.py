"""Adaptive quadrature helpers with power-law endpoint substitution."""
from __future__ import annotations

import math
import warnings
from typing import Callable

from scipy import integrate

from .errors import NumericalError

LIMIT = 400


def _quad(f, lo, hi, epsabs, epsrel, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(f, lo, hi, epsabs=epsabs, epsrel=epsrel, limit=LIMIT, **kw)


def singular_segment(g: Callable[[float, int, float], float], lo: float, hi: float, exponent: float,
                     epsabs: float, epsrel: float = 1e-12) -> tuple[float, float]:
    """Integrate over ``[lo, hi]`` allowing ``|x - end|**exponent`` blow-up at both ends.

    The integrand is passed as ``g(anchor, direction, d)`` meaning the value
    at ``anchor + direction * d``; handing over the distance ``d`` keeps the
    offset from a singular endpoint exact. The segment is halved and each
    half is mapped by ``d = c w**m`` with ``m = 1/(1 + exponent)``, which
    turns a singularity of the given order into a bounded integrand.
    """
    if hi <= lo:
        return 0.0, 0.0
    if exponent <= -1.0:
        raise NumericalError(f"non-integrable endpoint exponent {exponent}")
    m = 1.0 / (1.0 + exponent) if exponent < 0.0 else 1.0
    half = 0.5 * (hi - lo)

    def left(w):
        return g(lo, 1, half * w**m) * half * m * w ** (m - 1.0) if w > 0.0 else 0.0

    def right(w):
        return g(hi, -1, half * w**m) * half * m * w ** (m - 1.0) if w > 0.0 else 0.0

    v1, e1 = _quad(left, 0.0, 1.0, 0.5 * epsabs, epsrel)
    v2, e2 = _quad(right, 0.0, 1.0, 0.5 * epsabs, epsrel)
    return v1 + v2, e1 + e2


def half_line(g: Callable[[float, int, float], float], start: float, direction: int,
              epsabs: float, epsrel: float = 1e-12) -> tuple[float, float]:
    """Integrate ``g(start, direction, d)`` over ``d`` in ``[0, inf)``."""
    return _quad(lambda d: g(start, direction, d), 0.0, math.inf, epsabs, epsrel)


def check(value: float, error: float, tol: float, what: str) -> float:
    """Raise :class:`NumericalError` unless ``error`` meets the tolerance."""
    budget = max(tol, 1e-11 * abs(value))
    if not math.isfinite(value) or error > budget:
        raise NumericalError(f"{what}: quadrature error {error:.3g} exceeds {budget:.3g}", achieved=error)
    return value
