import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from collapse_lab.constants import G, HBAR
from collapse_lab.errors import BadParameterError, FactorizationError
from collapse_lab.noise import (
    CorrelatedFieldNoise,
    RngStream,
    cholesky_with_jitter,
    coulomb_kernel_rates,
    make_stream,
    sample_correlated_field,
    sample_wiener,
)

# (master_seed, stream_index) -> first raw Philox4x64-10 output, first
# uniform, first standard normal (each from a fresh stream)
TEST_VECTORS = [
    (0, 0, 0x2f4ba6408e4d89b, 0.011546754286331562, 0.15929546600623282),
    (0, 1, 0xd037f8c3f9a1d176, 0.8133540609793564, -0.7440191742693708),
    (1, 0, 0x4db6a27b756282df, 0.3035680343067586, 1.02028797736073),
    (42, 0, 0xd1f8817d4d62880e, 0.8201981478608876, 0.3375714466967798),
    (42, 1, 0x719965f2debb5c86, 0.443746921343274, 0.866892464921677),
    (42, 9999, 0x245cdb2f69412893, 0.1420418730497245, 0.2272472824209741),
    (4294967303, 3, 0xaf552a2cff7a47ab, 0.6848932609422969, -0.8845313963336509),
    (18446744073709551615, 0, 0x3c2521c58dde5bfb, 0.23494158814525556, -2.7686715823603945),
    (123456789, 17, 0x449d39e0f297971a, 0.26802407972226505, -0.10965466643327033),
    (7, 1048576, 0xb1dabc8e707c8ebc, 0.6947439048531, 1.109824161104003),
]


@pytest.mark.parametrize("seed, index, raw, uniform, normal", TEST_VECTORS)
def test_frozen_vectors(seed, index, raw, uniform, normal):
    assert int(make_stream(seed, index).generator.bit_generator.random_raw()) == raw
    assert make_stream(seed, index).uniform() == uniform
    assert make_stream(seed, index).normal() == normal


def test_uniform_is_top_53_bits_of_raw():
    raw = int(make_stream(5, 2).generator.bit_generator.random_raw())
    assert make_stream(5, 2).uniform() == (raw >> 11) * 2.0**-53


def test_streams_independent_of_draw_order():
    a = make_stream(9, 4).normal(100)
    other = make_stream(9, 3)
    other.normal(1000)
    b = make_stream(9, 4).normal(100)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, make_stream(9, 5).normal(100))


def test_bad_stream_index():
    with pytest.raises(BadParameterError):
        RngStream(0, -1)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**63), st.floats(0.01, 10), st.floats(1e-4, 1.0))
def test_wiener_variance(seed, eta, dt):
    inc = sample_wiener(make_stream(seed), 20000, eta, dt)
    var = inc.values.var()
    # variance of the sample variance of n Gaussians: 2 s^4 / n
    assert abs(var - eta * dt) < 6 * eta * dt * np.sqrt(2 / 20000)


def test_wiener_gaussianity():
    z = sample_wiener(make_stream(3), 50000, 1.0, 1.0).values
    assert stats.kstest(z, "norm").pvalue > 1e-3


def test_wiener_rejects_bad_parameters():
    with pytest.raises(BadParameterError):
        sample_wiener(make_stream(0), 2, 0.0, 0.1)
    with pytest.raises(BadParameterError):
        sample_wiener(make_stream(0), 2, 1.0, -0.1)


def test_cholesky_jitter_only_when_needed():
    cov = np.array([[2.0, 1.0], [1.0, 2.0]])
    chol, jit = cholesky_with_jitter(cov)
    assert jit == 0.0
    assert np.allclose(chol @ chol.T, cov)
    singular = np.ones((3, 3))
    chol, jit = cholesky_with_jitter(singular)
    assert jit > 0
    assert np.allclose(chol @ chol.T, singular, atol=1e-6)
    with pytest.raises(FactorizationError):
        cholesky_with_jitter(np.diag([1.0, -1.0]))


def test_coulomb_kernel():
    pts = np.array([[0, 0, 0], [1e-9, 0, 0]])
    rates = coulomb_kernel_rates(pts, kappa=2.0, sigma_noise=1e-10)
    assert rates[0, 1] == pytest.approx(2.0 * G / (2 * HBAR * 1e-9))
    assert rates[0, 0] == pytest.approx(2.0 * G / (2 * HBAR * 1e-10))
    with pytest.raises(BadParameterError):
        coulomb_kernel_rates(pts, sigma_noise=0)


def test_correlated_field_covariance():
    grid = np.stack([np.linspace(0, 3e-9, 4), np.zeros(4), np.zeros(4)], axis=1)
    noise = CorrelatedFieldNoise.from_grid(grid, dt=1.0)
    noise = CorrelatedFieldNoise(noise.grid_points, noise.rates / noise.rates.max(), dt=0.5)
    stream = make_stream(11)
    samples = np.array([sample_correlated_field(stream, noise) for _ in range(20000)])
    emp = samples.T @ samples / len(samples)
    assert np.allclose(emp, noise.covariance, atol=0.03)


def test_dense_grid_kernel_is_rejected():
    # grid spacing equal to the cutoff makes the truncated kernel indefinite
    grid = np.stack([np.linspace(0, 3e-10, 4), np.zeros(4), np.zeros(4)], axis=1)
    noise = CorrelatedFieldNoise.from_grid(grid, dt=1.0)
    with pytest.raises(FactorizationError):
        noise.factor()
