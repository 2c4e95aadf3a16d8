from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hurstlab import rng
from hurstlab.errors import ConfigurationError
from hurstlab.field import (ExactFieldSampler, FbmField, NoiseGeometry, ProjectionSampler,
                            WhiteNoiseGrid, choose_truncation, cross_covariance, sample_field_exact,
                            sample_field_mvn, tail_variance)


# -- noise geometry --------------------------------------------------------------

def test_geometry_layout():
    g = NoiseGeometry.build(0.125, 2.0, h_grid=(0.3, 0.7), tol=1e-6)
    w = g.widths
    assert np.all(w > 0)
    assert g.edges[0] == pytest.approx(-g.L)
    assert g.edges[-1] == pytest.approx(2.0)
    assert np.allclose(w[g.n_far:], 0.125)
    assert np.all(np.diff(w[: g.n_far]) <= 1e-12)  # widths shrink towards the present
    assert g.tail_bound <= 1e-6
    assert np.allclose(g.times(), np.arange(17) * 0.125)


def test_uniform_geometry_cell_count():
    g = NoiseGeometry.build(0.25, 3.0, L=5.0, growth=1.0)
    assert g.n_cells == int(np.ceil((3.0 + 5.0) / 0.25))
    assert np.allclose(g.widths, 0.25)


def test_geometry_rejects_bad_input():
    with pytest.raises(ConfigurationError):
        NoiseGeometry.build(0.0, 1.0)
    with pytest.raises(ConfigurationError):
        NoiseGeometry.build(0.1, 1.0, L=0.5)


def test_tail_variance_decreases_and_truncation_meets_budget():
    vals = [tail_variance(0.3, 1.0, L) for L in (10, 100, 1000)]
    assert vals[0] > vals[1] > vals[2] > 0
    L, achieved = choose_truncation([0.3, 0.7], 1.0, 1e-6, "unit", 2.0)
    assert achieved <= 1e-6
    assert max(tail_variance(h, 1.0, L) for h in (0.3, 0.7)) <= 1e-6 * (1 + 1e-6)


def test_tail_variance_brownian_is_zero():
    assert tail_variance(0.5, 3.0, 10.0) == 0.0


def test_white_noise_determinism_and_variance():
    g = NoiseGeometry.build(0.1, 1.0, L=50.0, growth=1.05)
    a = WhiteNoiseGrid.draw(g, 2, seed=7, task=3)
    b = WhiteNoiseGrid.draw(g, 2, seed=7, task=3)
    c = WhiteNoiseGrid.draw(g, 2, seed=7, task=4)
    assert np.array_equal(a.increments, b.increments)
    assert not np.array_equal(a.increments, c.increments)
    # standardized increments over many seeds have unit variance
    z = np.concatenate([WhiteNoiseGrid.draw(g, 1, 0, k).increments[:, 0] / np.sqrt(g.widths)
                        for k in range(200)])
    assert abs(z.mean()) < 4 / np.sqrt(z.size)
    assert abs(z.var() - 1) < 4 * np.sqrt(2 / z.size)


# -- exact sampler ---------------------------------------------------------------

def test_exact_zero_row():
    f = sample_field_exact([0.0], [0.3, 0.7], 2, seed=1)
    assert np.all(f.values == 0.0)


def test_exact_unit_variance_at_one():
    s = ExactFieldSampler([1.0], [0.5])
    x = np.array([s.draw_values(0, k)[0, 0, 0] for k in range(20000)])
    se = np.sqrt(2 / x.size)
    assert abs(x.var() - 1.0) < 3 * se


def test_exact_sampler_covariance_4x4():
    s = ExactFieldSampler([1.0, 2.0], [0.3, 0.7])
    draws = np.array([s.draw_values(3, k).ravel() for k in range(20000)])
    emp = draws.T @ draws / len(draws)
    prod = draws[:, :, None] * draws[:, None, :]
    se = prod.std(axis=0) / np.sqrt(len(draws))
    assert np.all(np.abs(emp - s.covariance) <= 3.5 * se + 1e-12)


def test_exact_sampler_determinism():
    a = sample_field_exact([0.5, 1.0], [0.4], 1, seed=5)
    b = sample_field_exact([0.5, 1.0], [0.4], 1, seed=5)
    assert np.array_equal(a.values, b.values)
    assert a.sampler == "exact-cholesky"


# -- projection sampler ----------------------------------------------------------

@pytest.fixture(scope="module")
def small_sampler():
    return ProjectionSampler([0.3, 0.5, 0.7], 2.0, 1 / 32, tol=1e-8)


def test_projection_zero_at_origin_and_shape(small_sampler):
    f = small_sampler.sample(0)
    assert f.values.shape == (65, 3, 1)
    assert np.all(f.values[0] == 0.0)
    assert f.sampler == "projection"


def test_projection_apply_matches_coefficients(small_sampler):
    noise = small_sampler.noise(4, 2)
    t = np.array([0.0, 0.25, 1.0, 2.0])
    _, vals = small_sampler.plan.apply(noise, t)
    coef = small_sampler.plan.coefficients(t)
    direct = np.einsum("thc,cd->thd", coef, noise.increments)
    assert np.allclose(vals, direct, atol=1e-10)


def test_projection_brownian_is_exact_cumsum():
    s = ProjectionSampler([0.5], 1.0, 0.125)
    noise = s.noise(1)
    f = sample_field_mvn(noise, None, [0.5])
    g = s.geometry
    near = noise.increments[g.n_far:, 0]
    zero = -g.near_start
    expected = np.cumsum(near[zero:])
    assert np.allclose(f.values[1:, 0, 0], expected, atol=1e-12)


def test_projection_discrete_covariance_close_to_model(small_sampler):
    t = [0.5, 1.0, 2.0]
    bias = small_sampler.bias(t)
    assert np.max(np.abs(bias)) < 0.02
    # Brownian entries are exact up to the truncation tail
    disc = small_sampler.plan.discrete_covariance(t).reshape(3, 3, 3, 3)
    assert disc[1, 1, 2, 1] == pytest.approx(1.0, abs=1e-10)


def test_projection_determinism(small_sampler):
    a = small_sampler.sample(9, 1)
    b = small_sampler.sample(9, 1)
    assert np.array_equal(a.values, b.values)


def test_projection_rejects_unaligned_times(small_sampler):
    with pytest.raises(ConfigurationError):
        small_sampler.sample(0, 0, [0.3])
    with pytest.raises(ConfigurationError):
        small_sampler.sample(0, 0, [3.0])


def test_cross_hurst_coupling_strong():
    s = ProjectionSampler([0.4, 0.6], 1.0, 1 / 16)
    x = np.array([s.sample(0, k, [1.0]).values[0, :, 0] for k in range(4000)])
    corr = np.corrcoef(x.T)[0, 1]
    rho = cross_covariance(1, 0.4, 1, 0.6)
    assert corr > 0.9
    assert abs(corr - rho) < 0.02


def test_negative_times_supported():
    s = ProjectionSampler([0.3], 1.0, 0.25, t_min=-2.0)
    f = s.sample(0)
    assert f.t_grid[0] == pytest.approx(-2.0)
    assert f.values[f.t_index(0.0), 0, 0] == 0.0


# -- FbmField --------------------------------------------------------------------

def test_fbm_field_helpers():
    vals = np.arange(12, dtype=float).reshape(3, 2, 2)
    f = FbmField([0.0, 0.5, 1.0], [0.3, 0.7], vals, "unit", 0, "test")
    assert f.dim == 2
    assert f.path(0.7).shape == (3, 2)
    assert f.uniform_step() == 0.5
    sub = f.select([0.5, 1.0], [0.3])
    assert sub.values.shape == (2, 1, 2)
    with pytest.raises(ConfigurationError):
        f.h_index(0.5)
    with pytest.raises(ConfigurationError):
        FbmField([1.0, 0.0], [0.3], np.zeros((2, 1, 1)), "unit", 0, "test")


# -- rng ---------------------------------------------------------------------------

@given(seed=st.integers(0, 2**63 - 1), task=st.integers(0, 2**20))
def test_streams_reproducible(seed, task):
    a = rng.standard_normal(rng.stream(seed, task), 5)
    b = rng.standard_normal(rng.stream(seed, task), 5)
    assert np.array_equal(a, b)


def test_streams_distinct_tasks():
    a = rng.standard_normal(rng.stream(1, 0), 8)
    b = rng.standard_normal(rng.stream(1, 1), 8)
    c = rng.standard_normal(rng.stream(2, 0), 8)
    assert not np.array_equal(a, b) and not np.array_equal(a, c)


def test_replicate_order_independent_of_threads():
    def one(k):
        return float(rng.standard_normal(rng.stream(3, k), 1)[0])

    assert rng.replicate(one, 16, 1) == rng.replicate(one, 16, 4)


def test_threads_env_fallback(monkeypatch):
    monkeypatch.setenv("HURSTLAB_THREADS", "3")
    assert rng.resolve_threads(None) == 3
    assert rng.resolve_threads(2) == 2
