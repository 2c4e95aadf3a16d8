"""Independent reference values used by the tests.

Nothing here calls into the package: each oracle is a separate derivation
(closed forms from the spectral representation, brute-force enumeration,
or direct sorting) so agreement is a genuine cross-check.
"""
from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.integrate import quad


def raw_variance_closed_form(H: float) -> float:
    """``Var B_1^H`` for the kernel with the ``1/Gamma(H + 1/2)`` factor."""
    return 1.0 / (math.gamma(2 * H + 1) * math.sin(math.pi * H))


def raw_cross_covariance_closed_form(u: float, H: float, v: float, K: float) -> float:
    """``E B_u^H B_v^K`` for ``u, v >= 0`` and ``H + K != 1``.

    Both processes are driven by the same white noise, so the cross spectrum
    of their increments is ``|w|^{1-H-K} exp(i pi sgn(w) (K-H)/2)``. Inverting
    gives a symmetric part ``rho`` and an antisymmetric part ``eta``.
    """
    s = H + K
    g = math.gamma(s + 1)
    rho = math.cos(math.pi * (H - K) / 2) / (g * math.sin(math.pi * s / 2))
    if u == v:
        return rho * u**s
    eta = math.sin(math.pi * (K - H) / 2) / (g * math.cos(math.pi * s / 2))
    return 0.5 * ((rho + eta) * u**s + (rho - eta) * v**s
                  - (rho - eta * math.copysign(1.0, v - u)) * abs(v - u) ** s)


def unit_cross_covariance_closed_form(u, H, v, K):
    c = math.sqrt(raw_variance_closed_form(H) * raw_variance_closed_form(K))
    return raw_cross_covariance_closed_form(u, H, v, K) / c


def fou_cross_covariance_spectral(H: float, K: float, s: float, unit: bool = True) -> float:
    """``E U_0^H U_s^K`` for the stationary fOU pair by Fourier inversion."""
    a = 1 - H - K
    ph = -math.pi * (K - H) / 2

    def f(w):
        return w**a / (1 + w * w) if w > 0 else 0.0

    # [0, 1] carries the w^a endpoint singularity: plain adaptive rule
    head = quad(lambda w: math.cos(w * s + ph) * f(w), 0, 1, limit=200)[0]
    if s == 0:
        tail = math.cos(ph) * quad(f, 1, math.inf)[0]
    else:
        # oscillatory tail by the Fourier-weighted rule
        tail = (math.cos(ph) * quad(f, 1, math.inf, weight="cos", wvar=s)[0]
                - math.sin(ph) * quad(f, 1, math.inf, weight="sin", wvar=s)[0])
    val = head + tail
    val /= math.pi
    if unit:
        val /= math.sqrt(raw_variance_closed_form(H) * raw_variance_closed_form(K))
    return val


def perfect_matchings(items):
    items = list(items)
    if not items:
        yield []
        return
    first = items[0]
    for i in range(1, len(items)):
        rest = items[1:i] + items[i + 1:]
        for m in perfect_matchings(rest):
            yield [(first, items[i])] + m


def isserlis_brute(factors, cov) -> float:
    """Sum over all perfect matchings of the list of factor indices."""
    if len(factors) % 2:
        return 0.0
    return float(sum(math.prod(cov[i][j] for i, j in m) for m in perfect_matchings(list(factors))))


def centered_squares_brute(cov, mixed: bool = False) -> float:
    """``E prod (Z_i^2 - E Z_i^2)`` (or with ``Z_1 Z_2`` in front) by expanding the product."""
    n = len(cov)
    start = 2 if mixed else 0
    total = 0.0
    idx = range(start, n)
    for r in range(n - start + 1):
        for subset in itertools.combinations(idx, r):
            factors = [0, 1] if mixed else []
            for i in subset:
                factors += [i, i]
            rest = [i for i in idx if i not in subset]
            sign = (-1) ** len(rest)
            total += sign * math.prod(cov[i][i] for i in rest) * isserlis_brute(factors, cov)
    return total


def wasserstein_brute(a, b, p: int) -> float:
    """Quantile functions evaluated on the common refinement of ``1/n`` and ``1/m``."""
    a, b = np.sort(np.asarray(a, float)), np.sort(np.asarray(b, float))
    n, m = len(a), len(b)
    L = n * m // math.gcd(n, m)
    qa = np.repeat(a, L // n)
    qb = np.repeat(b, L // m)
    return float(np.mean(np.abs(qa - qb) ** p) ** (1.0 / p))
