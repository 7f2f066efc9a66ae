"""Decoherence and gravitational-collapse timescales (SI units).

Point masses are smeared into normalized isotropic Gaussians of width
``sigma``.  For two such blobs at distance ``d`` the Coulomb double integral
has the closed form ``erf(d / (2 sigma)) / d`` (limit ``1 / (sigma sqrt(pi))``
at ``d = 0``), so the self-energy of a mass difference is a signed pair sum.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .constants import G, HBAR, K_B
from .errors import BadParameterError

DEFAULT_SMEAR_SIGMA = 1e-10          # m, atom scale
CARBON_DENSITY = 2267.0              # kg/m^3, graphite
INFINITE = float("inf")

_PAIR_BLOCK = 2048


@dataclass(frozen=True)
class GasParameters:
    number_density: float   # N/V, m^-3
    temperature: float      # K
    molecular_mass: float   # kg
    size: float             # molecule radius a, m
    displacement: float     # separation of the superposed geometries, m

    def __post_init__(self):
        for name in ("number_density", "molecular_mass", "size"):
            if not getattr(self, name) > 0:
                raise BadParameterError(f"{name} must be positive")
        if self.temperature < 0 or self.displacement < 0:
            raise BadParameterError("temperature and displacement must be non-negative")


# Ammonia in its own gas at room temperature and pressure.  The size and the
# up/down displacement are our choices: a ~ N-H bond scale, dx = twice the
# 0.38 A nitrogen height above the hydrogen plane.
NH3_ROOM = GasParameters(
    number_density=2.5e25,
    temperature=300.0,
    molecular_mass=2.82e-26,
    size=2e-10,
    displacement=7.6e-11,
)


def joos_zeh_rate(params):
    """Scattering decoherence rate ``1 / tau_D`` in 1/s."""
    return ((8.0 / (3.0 * HBAR**2)) * params.number_density
            * np.sqrt(2.0 * np.pi * params.molecular_mass)
            * params.size**2 * params.displacement**2
            * (K_B * params.temperature) ** 1.5)


def joos_zeh_tau(params):
    """Joos-Zeh decoherence time in seconds (``inf`` when the rate vanishes)."""
    rate = joos_zeh_rate(params)
    return INFINITE if rate == 0 else 1.0 / rate


def coherence_decay(c0, t, tau_d):
    if not tau_d > 0:
        raise BadParameterError("tau_d must be positive")
    if t < 0:
        raise BadParameterError("t must be non-negative")
    return c0 * np.exp(-t / tau_d)


@dataclass(frozen=True)
class MassDistribution:
    """Gaussian-smeared point masses: ``positions`` (n, 3) in m, ``masses`` (n,) in kg."""

    positions: np.ndarray
    masses: np.ndarray
    smear_sigma: float = DEFAULT_SMEAR_SIGMA

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        m = np.atleast_1d(np.asarray(self.masses, dtype=float))
        if pos.shape != (m.size, 3):
            raise BadParameterError(f"positions must have shape ({m.size}, 3), got {pos.shape}")
        if np.any(m <= 0):
            raise BadParameterError("masses must be positive")
        if not self.smear_sigma > 0:
            raise BadParameterError("smear_sigma must be positive")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "masses", m)

    @property
    def total_mass(self):
        return float(self.masses.sum())

    def shifted(self, vector):
        return MassDistribution(self.positions + np.asarray(vector, dtype=float),
                                self.masses, self.smear_sigma)

    def scaled(self, factor):
        return MassDistribution(self.positions, self.masses * factor, self.smear_sigma)


@dataclass(frozen=True)
class DpResult:
    self_energy: float     # J
    collapse_time: float   # s


def gaussian_pair_kernel(d, sigma):
    """``erf(d / 2 sigma) / d`` with its finite ``d -> 0`` limit."""
    d = np.asarray(d, dtype=float)
    x = d / (2.0 * sigma)
    small = x < 1e-4
    safe = np.where(small, 1.0, d)
    # series erf(x)/x = 2/sqrt(pi) (1 - x^2/3 + ...) below the cutoff
    series = (1.0 - x * x / 3.0) / (sigma * np.sqrt(np.pi))
    return np.where(small, series, erf(x) / safe)


def _pair_sum(x1, w1, x2, w2, sigma):
    total = 0.0
    for i in range(0, len(x1), _PAIR_BLOCK):
        xa, wa = x1[i:i + _PAIR_BLOCK], w1[i:i + _PAIR_BLOCK]
        d = np.sqrt(np.sum((xa[:, None, :] - x2[None, :, :]) ** 2, axis=-1))
        total += wa @ gaussian_pair_kernel(d, sigma) @ w2
    return total


def dp_self_energy(up, down):
    """Diosi-Penrose energy ``4 pi G (iint dmu(r) dmu(r') / |r - r'|)`` in joules.

    ``dmu = mu_up - mu_down``; both distributions must share ``smear_sigma``.
    Pair terms are grouped as ``S(up, up) + S(down, down) - 2 S(up, down)``,
    which is exactly zero for identical inputs.
    """
    if up.smear_sigma != down.smear_sigma:
        raise BadParameterError("up and down must share smear_sigma")
    if (np.array_equal(up.positions, down.positions)
            and np.array_equal(up.masses, down.masses)):
        return 0.0
    s = up.smear_sigma
    s_uu = _pair_sum(up.positions, up.masses, up.positions, up.masses, s)
    s_dd = _pair_sum(down.positions, down.masses, down.positions, down.masses, s)
    s_ud = _pair_sum(up.positions, up.masses, down.positions, down.masses, s)
    return float(max(0.0, 4.0 * np.pi * G * (s_uu + s_dd - 2.0 * s_ud)))


def dp_collapse_time(energy):
    if energy < 0:
        raise BadParameterError("self-energy must be non-negative")
    return INFINITE if energy == 0 else float(HBAR / energy)


def dp_result(up, down):
    e = dp_self_energy(up, down)
    return DpResult(e, dp_collapse_time(e))


def sphere_radius(mass, density):
    return (3.0 * mass / (4.0 * np.pi * density)) ** (1.0 / 3.0)


def homogeneous_sphere(mass, density, smear_sigma=DEFAULT_SMEAR_SIGMA, min_points=1000):
    """Uniform sphere as a cubic lattice of equal Gaussian-smeared masses.

    The lattice is refined until at least ``min_points`` sites fall inside the
    sphere.  Each site is smeared with ``sqrt(smear_sigma^2 + (h/2)^2)``
    (``h`` the lattice spacing) so the sum of blobs is smooth at lattice
    scale while still carrying the atomic smearing.
    """
    if not (mass > 0 and density > 0):
        raise BadParameterError("mass and density must be positive")
    radius = sphere_radius(mass, density)
    n = max(2, int(np.ceil((6.0 * min_points / np.pi) ** (1.0 / 3.0))) - 1)
    while True:
        h = 2.0 * radius / n
        g = (np.arange(n) - (n - 1) / 2.0) * h
        pts = np.stack(np.meshgrid(g, g, g, indexing="ij"), axis=-1).reshape(-1, 3)
        pts = pts[np.einsum("ij,ij->i", pts, pts) <= radius**2 * (1 + 1e-12)]
        if len(pts) >= min_points:
            break
        n += 1
    sigma = float(np.hypot(smear_sigma, 0.5 * h))
    return MassDistribution(pts, np.full(len(pts), mass / len(pts)), sigma)


def dp_sphere(mass, density, displacement, smear_sigma=DEFAULT_SMEAR_SIGMA, min_points=1000):
    """Collapse data for a homogeneous sphere superposed with a rigid shift."""
    if displacement < 0:
        raise BadParameterError("displacement must be non-negative")
    up = homogeneous_sphere(mass, density, smear_sigma, min_points)
    return dp_result(up, up.shifted([displacement, 0.0, 0.0]))


def dp_mass_sweep(material_density, masses, displacement, smear_sigma=DEFAULT_SMEAR_SIGMA,
                  min_points=1000):
    """``[(mass, E_delta, tau_c), ...]`` for homogeneous spheres of each mass."""
    if not (material_density > 0 and displacement > 0 and smear_sigma > 0):
        raise BadParameterError("density, displacement and smear_sigma must be positive")
    rows = []
    for m in masses:
        res = dp_sphere(m, material_density, displacement, smear_sigma, min_points)
        rows.append((float(m), res.self_energy, res.collapse_time))
    return rows
