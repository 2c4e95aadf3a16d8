from __future__ import annotations

import math

import numpy as np
import pytest

from hurstlab.errors import ConfigurationError, ValidationError
from hurstlab.field import FbmField, ProjectionSampler
from hurstlab.fou import StationaryFouSampler, stationary_cross_covariance, stationary_sq_diff
from hurstlab.sde import (DriftSpec, drift_from_name, ergodic_mean_sq_diff, euler_scheme, solve_reference,
                          validate_drift)


# -- drifts ------------------------------------------------------------------------

def test_validate_linear_exact_ratios():
    rep = validate_drift(DriftSpec.linear(1.0))
    assert rep.passed
    assert rep.worst_dissipativity == pytest.approx(1.0, rel=1e-12)
    assert rep.worst_lipschitz == pytest.approx(1.0, rel=1e-12)


def test_validate_sine_passes():
    spec = DriftSpec(lambda x: -2 * x + 0.5 * np.sin(x), 1.5, 2.5, "sine-declared")
    rep = validate_drift(spec, dim=3)
    assert rep.passed and rep.worst_dissipativity >= 1.5 and rep.worst_lipschitz <= 2.5


def test_validate_expansive_fails():
    spec = DriftSpec(lambda x: x, 1.0, 1.0, "expansive")
    with pytest.raises(ValidationError, match="x="):
        validate_drift(spec)
    assert not validate_drift(spec, raise_on_failure=False).passed


def test_gamma0():
    assert DriftSpec.linear(1.0).gamma0() == 0.5
    assert DriftSpec.sine(2.0, 0.5).gamma0() == pytest.approx(1.5 / (2 * 2.5**2))
    assert DriftSpec.zero().gamma0() == math.inf
    xi = np.linspace(1e-6, DriftSpec.linear(1.0).gamma0() - 1e-6, 50)
    q = 1.0 * xi - 2 * xi**2
    assert np.all((q > 0) & (q < 1))


def test_drift_names():
    assert drift_from_name("linear", 2.0).kappa == 2.0
    assert drift_from_name("sine", 2.0, 0.5).lipschitz == 2.5
    with pytest.raises(ConfigurationError):
        drift_from_name("cubic")
    with pytest.raises(ConfigurationError):
        DriftSpec.sine(1.0, 1.0)


# -- reference solver -----------------------------------------------------------------

@pytest.fixture(scope="module")
def field():
    return ProjectionSampler([0.3, 0.5, 0.7], 8.0, 1 / 256).sample(11)


def test_zero_drift_is_shifted_field(field):
    p = solve_reference(field, DriftSpec.zero(), y0=0.7)
    assert np.allclose(p.values, 0.7 + field.values, rtol=0, atol=1e-12)


def test_linear_fast_path_matches_loop(field):
    lin = DriftSpec.linear(1.0)
    generic = DriftSpec(lambda x: -1.0 * x, 1.0, 1.0, "generic")
    a = solve_reference(field, lin, y0=0.3, delta=1 / 64)
    b = solve_reference(field, generic, y0=0.3, delta=1 / 64)
    assert np.allclose(a.values, b.values, atol=1e-12)


def _voc(B, y0, delta):
    # variation of constants on the same grid: e^{-t} y0 + sum e^{-(t - s_j)} dB_j
    dB = np.diff(B)
    n = len(dB)
    w = np.exp(-delta * (n - np.arange(n)))
    return math.exp(-delta * n) * y0 + w @ dB


def test_richardson_first_order(field):
    deltas = [1 / 16, 1 / 32, 1 / 64, 1 / 128]
    errs = []
    for d in deltas:
        p = solve_reference(field, DriftSpec.linear(1.0), y0=1.0, delta=d)
        B = field.values[:: round(d * 256), :, 0]
        err = [abs(p.values[-1, h, 0] - _voc(B[:, h], 1.0, d)) for h in range(3)]
        errs.append(err)
    errs = np.array(errs)
    slopes = np.polyfit(np.log(deltas), np.log(errs), 1)[0]
    assert np.all((slopes > 0.8) & (slopes < 1.2)), slopes


def test_contraction_memory_loss(field):
    spec = DriftSpec.sine(2.0, 0.5)
    a = solve_reference(field, spec, y0=3.0, delta=1 / 64)
    b = solve_reference(field, spec, y0=-1.0, delta=1 / 64)
    gap = np.abs(a.values - b.values)[:, :, 0]
    bound = 4.0 * np.exp(-spec.kappa * a.t_grid)[:, None]
    assert np.all(gap <= bound * (1 + 1e-9))


def test_reference_checks(field):
    with pytest.raises(ConfigurationError):
        solve_reference(field, DriftSpec.linear(1.0), delta=3 / 512)
    with pytest.raises(ConfigurationError):
        solve_reference(field, DriftSpec.linear(40.0), delta=1 / 64, strict=True)
    with pytest.warns(RuntimeWarning):
        solve_reference(field, DriftSpec.linear(40.0), delta=1 / 64)
    bad = DriftSpec(lambda x: x, 1.0, 1.0, "expansive")
    with pytest.raises(ValidationError):
        solve_reference(field, bad, delta=1 / 64, strict=True)


def test_output_stride(field):
    p = solve_reference(field, DriftSpec.linear(1.0), delta=1 / 64, out_step=0.5)
    assert np.allclose(p.t_grid, np.arange(17) * 0.5)


def test_hurst_regularity_monotone():
    s = ProjectionSampler([0.5, 0.55, 0.6, 0.7], 5.0, 1 / 32)
    d = []
    for k in range(50):
        p = solve_reference(s.sample(3, k), DriftSpec.linear(1.0), delta=1 / 32)
        d.append([(p.values[-1, j, 0] - p.values[-1, 0, 0]) ** 2 for j in (1, 2, 3)])
    m = np.mean(d, axis=0)
    assert m[0] < m[1] < m[2]


# -- euler scheme -----------------------------------------------------------------------

def test_euler_single_step(field):
    spec = DriftSpec.sine(2.0, 0.5)
    g = 1 / 16
    p = euler_scheme(field, spec, m0=0.4, gamma=g, n_steps=1)
    B = field.values[field.t_index(g), :, 0]
    assert np.allclose(p.values[1, :, 0], 0.4 + g * spec(np.array(0.4)) + B)


def test_euler_zero_drift(field):
    p = euler_scheme(field, DriftSpec.zero(), m0=1.0, gamma=1 / 8)
    assert np.allclose(p.values, 1.0 + field.values[::32])


def test_euler_gamma_condition(field):
    with pytest.raises(ConfigurationError, match="gamma0"):
        euler_scheme(field, DriftSpec.linear(1.0), gamma=0.5)
    with pytest.raises(ConfigurationError):
        euler_scheme(field, DriftSpec.linear(1.0), gamma=0.25, n_steps=100)


def _euler_stationary_variance(H, gamma, rate=1.0, terms=4000):
    # exact stationary variance of M_{k+1} = q M_k + dB_k driven by fractional Gaussian noise
    q = 1 - rate * gamma
    m = np.arange(-terms, terms + 1)
    acf = 0.5 * gamma ** (2 * H) * (np.abs(m + 1) ** (2 * H) - 2 * np.abs(m) ** (2 * H) + np.abs(m - 1) ** (2 * H))
    # Var = sum_{j,k} q^j q^k acf(j - k) = sum_m acf(m) q^|m| / (1 - q^2)
    return float(np.sum(acf * q ** np.abs(m)) / (1 - q * q))


def test_euler_ergodic_second_moment():
    H, g = 0.7, 0.05
    s = ProjectionSampler([H], 500.0, g)
    means = []
    for k in range(20):
        p = euler_scheme(s.sample(5, k), DriftSpec.linear(1.0), gamma=g)
        means.append(np.mean(p.values[200:, 0, 0] ** 2))
    means = np.array(means)
    se = means.std(ddof=1) / np.sqrt(len(means))
    exact = _euler_stationary_variance(H, g)
    assert abs(means.mean() - exact) < 3 * se + 0.01
    # and the scheme sits within O(gamma) of the continuous stationary moment
    assert abs(exact - stationary_cross_covariance(H, H, 0.0)) < 2 * g


# -- ergodic means -----------------------------------------------------------------------

def test_ergodic_trivial_cases():
    t = np.arange(0, 11) * 0.5
    z = np.zeros(11)
    for mode in ("continuous", "discrete"):
        assert np.all(ergodic_mean_sq_diff(z, z, t, mode).values == 0)
        assert np.allclose(ergodic_mean_sq_diff(z, z + 1, t, mode).values, 1.0)
    s = ergodic_mean_sq_diff(z, z + 1, t, "continuous", centering=0.25)
    assert np.allclose(s.values, 0.75) and np.allclose(s.raw, 1.0)
    assert s.times[0] == 0.0


def test_ergodic_continuous_trapezoid():
    t = np.linspace(0, 3, 301)
    s = ergodic_mean_sq_diff(t, 0 * t, t, "continuous")
    # (1/(t+1)) int_0^{t+1} s^2 ds = (t+1)^2 / 3
    assert np.allclose(s.values, (s.times + 1) ** 2 / 3, rtol=1e-4)


def test_ergodic_grid_mismatch():
    with pytest.raises(ValidationError):
        ergodic_mean_sq_diff(np.zeros(3), np.zeros(4), np.arange(3))
    with pytest.raises(ValidationError):
        ergodic_mean_sq_diff(np.zeros(3), np.zeros(3), np.arange(1, 4), "continuous")


def test_ergodic_converges_to_stationary_value():
    H, K = 0.4, 0.6
    s = StationaryFouSampler([H, K], 200.0, 1 / 16)
    ends = []
    for k in range(16):
        p = s.sample(8, k)
        e = ergodic_mean_sq_diff(p.values[:, 0], p.values[:, 1], p.t_grid)
        ends.append(e.values[-1])
    ends = np.array(ends)
    target = stationary_sq_diff(H, K)
    assert abs(ends.mean() - target) < 3 * ends.std(ddof=1) / 4 + 0.01
