import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from collapse_lab import timescales as ts
from collapse_lab.constants import G, HBAR
from collapse_lab.errors import BadParameterError

SIGMA = 1e-10


def monte_carlo_energy(up, down, n=400_000, seed=0):
    """Sampling oracle for the signed Coulomb double integral.

    For Gaussian blobs ``X_i - X_j ~ N(r_i - r_j, 2 sigma^2)``; one set of
    standard normal samples is shared by every pair (common random numbers),
    which keeps the signed combination from drowning in noise.
    """
    z = np.random.default_rng(seed).standard_normal((n, 3)) * np.sqrt(2.0) * up.smear_sigma

    def pair(a, b):
        total = 0.0
        for ra, ma in zip(a.positions, a.masses):
            for rb, mb in zip(b.positions, b.masses):
                total += ma * mb * np.mean(1.0 / np.linalg.norm(ra - rb + z, axis=1))
        return total

    return 4 * np.pi * G * (pair(up, up) + pair(down, down) - 2 * pair(up, down))


def random_configuration(rng):
    n = rng.integers(1, 5)
    pos = rng.normal(scale=3 * SIGMA, size=(n, 3))
    masses = rng.uniform(0.5, 2.0, size=n) * 1e-26
    shift = rng.normal(scale=2 * SIGMA, size=3) + rng.choice([-1, 1]) * 2 * SIGMA
    up = ts.MassDistribution(pos, masses, SIGMA)
    return up, up.shifted(shift)


@pytest.mark.parametrize("seed", range(10))
def test_closed_form_matches_monte_carlo(seed):
    up, down = random_configuration(np.random.default_rng(seed))
    exact = ts.dp_self_energy(up, down)
    assert exact > 0
    assert ts.dp_self_energy(up, down) == pytest.approx(monte_carlo_energy(up, down), rel=0.01)


def test_pair_kernel_limits():
    assert ts.gaussian_pair_kernel(0.0, SIGMA) == pytest.approx(1 / (SIGMA * np.sqrt(np.pi)))
    assert ts.gaussian_pair_kernel(1e-6, SIGMA) == pytest.approx(1e6, rel=1e-12)
    x = np.array([1e-16, 1e-14, 2e-14])
    assert np.allclose(ts.gaussian_pair_kernel(x, SIGMA), 1 / (SIGMA * np.sqrt(np.pi)), rtol=1e-7)


def test_identical_distributions_give_exact_zero():
    sphere = ts.homogeneous_sphere(1e-20, 2267.0)
    assert ts.dp_self_energy(sphere, sphere) == 0.0
    assert ts.dp_collapse_time(0.0) == float("inf")
    assert ts.dp_sphere(1e-20, 2267.0, 0.0).collapse_time == float("inf")


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-11, 1e-8))
def test_energy_non_negative_and_symmetric(seed, shift):
    rng = np.random.default_rng(seed)
    up = ts.MassDistribution(rng.normal(scale=1e-10, size=(3, 3)), rng.uniform(1, 2, 3), SIGMA)
    down = up.shifted([shift, 0, 0])
    e = ts.dp_self_energy(up, down)
    assert e >= 0
    assert e == pytest.approx(ts.dp_self_energy(down, up), rel=1e-9)
    # E scales with the square of the mass
    assert ts.dp_self_energy(up.scaled(3.0), down.scaled(3.0)) == pytest.approx(9 * e, rel=1e-9)


def test_point_pair_far_apart():
    # two separated unit masses: E -> 2 * 4 pi G (1/(sigma sqrt(pi)) - 1/d)
    d = 1e-6
    up = ts.MassDistribution([[0, 0, 0]], [1.0], SIGMA)
    e = ts.dp_self_energy(up, up.shifted([d, 0, 0]))
    assert e == pytest.approx(8 * np.pi * G * (1 / (SIGMA * np.sqrt(np.pi)) - 1 / d), rel=1e-12)


def test_sphere_lattice():
    s = ts.homogeneous_sphere(1.0, 2267.0, min_points=1000)
    assert len(s.masses) >= 1000
    assert s.total_mass == pytest.approx(1.0)
    r = ts.sphere_radius(1.0, 2267.0)
    assert np.max(np.linalg.norm(s.positions, axis=1)) <= r * (1 + 1e-9)


def test_large_displacement_approaches_self_energy_limit():
    # without overlap S_uu = S_dd = 6 M^2 / (5 R) and S_ud = M^2 / d
    m, rho = 1.0, 2267.0
    r = ts.sphere_radius(m, rho)
    d = 10 * r
    got = ts.dp_sphere(m, rho, d, min_points=4000).self_energy
    expected = 4 * np.pi * G * m**2 * 2 * (6 / (5 * r) - 1 / d)
    assert got == pytest.approx(expected, rel=0.03)


def test_mass_sweep_is_decreasing():
    rows = ts.dp_mass_sweep(2267.0, np.geomspace(1e-26, 10, 8), 1.0)
    taus = [r[2] for r in rows]
    assert all(a > b for a, b in zip(taus, taus[1:]))
    assert rows[0][2] == pytest.approx(HBAR / rows[0][1])


def test_joos_zeh_scaling_exact():
    base = ts.NH3_ROOM
    t0 = ts.joos_zeh_tau(base)

    def with_(**kw):
        return ts.joos_zeh_tau(ts.GasParameters(**{**base.__dict__, **kw}))

    assert with_(temperature=4 * base.temperature) / t0 == pytest.approx(4**-1.5, rel=1e-12)
    assert with_(displacement=3 * base.displacement) / t0 == pytest.approx(1 / 9, rel=1e-12)
    assert with_(size=5 * base.size) / t0 == pytest.approx(1 / 25, rel=1e-12)
    assert with_(number_density=7 * base.number_density) / t0 == pytest.approx(1 / 7, rel=1e-12)
    assert with_(temperature=0.0) == float("inf")


def test_coherence_decay():
    assert ts.coherence_decay(0.5, 2.0, 2.0) == pytest.approx(0.5 / np.e)
    with pytest.raises(BadParameterError):
        ts.coherence_decay(1, 1, 0)
    with pytest.raises(BadParameterError):
        ts.coherence_decay(1, -1, 1)


def test_validation():
    with pytest.raises(BadParameterError):
        ts.GasParameters(-1, 300, 1, 1, 1)
    with pytest.raises(BadParameterError):
        ts.MassDistribution([[0, 0]], [1.0])
    with pytest.raises(BadParameterError):
        ts.MassDistribution([[0, 0, 0]], [-1.0])
    a = ts.MassDistribution([[0, 0, 0]], [1.0], 1e-10)
    with pytest.raises(BadParameterError):
        ts.dp_self_energy(a, ts.MassDistribution([[0, 0, 0]], [1.0], 2e-10))
    with pytest.raises(BadParameterError):
        ts.dp_collapse_time(-1.0)
