"""Reproducible random streams and Wiener increments.

Every stream is a numpy ``Generator`` over the counter-based Philox4x64-10
bit generator, keyed by the 128-bit value ``(stream_index << 64) | master_seed``
with the counter starting at zero.  Gaussian draws use numpy's ziggurat
``standard_normal``, uniforms use ``Generator.random``.  A stream therefore
depends only on ``(master_seed, stream_index)``, never on which worker runs
it.
"""

from dataclasses import dataclass, field

import numpy as np

from .constants import G, HBAR
from .errors import BadParameterError, FactorizationError

_MASK64 = (1 << 64) - 1


class RngStream:
    """Deterministic random stream identified by ``(master_seed, stream_index)``."""

    def __init__(self, master_seed, stream_index=0):
        if stream_index < 0:
            raise BadParameterError("stream_index must be non-negative")
        self.master_seed = int(master_seed) & _MASK64
        self.stream_index = int(stream_index)
        key = (self.stream_index << 64) | self.master_seed
        self.generator = np.random.Generator(np.random.Philox(key=key))

    def normal(self, size=None):
        return self.generator.standard_normal(size)

    def uniform(self, size=None):
        return self.generator.random(size)

    def __repr__(self):
        return f"RngStream(master_seed={self.master_seed}, stream_index={self.stream_index})"


def make_stream(master_seed, stream_index=0):
    return RngStream(master_seed, stream_index)


@dataclass(frozen=True)
class WienerIncrement:
    values: np.ndarray
    dt: float
    eta: float


def sample_wiener(stream, n_channels, eta, dt):
    """Independent increments with mean 0 and variance ``eta * dt`` per channel."""
    if not eta > 0:
        raise BadParameterError(f"eta must be positive, got {eta}")
    if not dt > 0:
        raise BadParameterError(f"dt must be positive, got {dt}")
    z = stream.normal(n_channels)
    return WienerIncrement(values=z * np.sqrt(eta * dt), dt=dt, eta=eta)


def cholesky_with_jitter(cov, jitter=None):
    """Lower Cholesky factor of ``cov``.

    A diagonal jitter (default ``1e-12 * max(diag)``) is added only when the
    plain factorization fails; the jitter actually used is returned.
    """
    cov = np.asarray(cov, dtype=float)
    try:
        return np.linalg.cholesky(cov), 0.0
    except np.linalg.LinAlgError:
        pass
    if jitter is None:
        jitter = 1e-12 * float(np.max(np.diag(cov)))
    try:
        return np.linalg.cholesky(cov + jitter * np.eye(cov.shape[0])), jitter
    except np.linalg.LinAlgError as exc:
        raise FactorizationError(
            f"covariance not positive semidefinite even with jitter {jitter:.3g}") from exc


def coulomb_kernel_rates(points, kappa=1.0, sigma_noise=1e-10):
    """Noise rate matrix ``kappa G / (2 hbar |r_i - r_j|)`` in SI (kg^-2 s^-1).

    The coincident-point singularity is cut off at ``sigma_noise``: the
    diagonal uses ``1/sigma_noise`` and off-diagonal separations are floored
    at ``sigma_noise``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if sigma_noise <= 0:
        raise BadParameterError("sigma_noise must be positive")
    d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    return kappa * G / (2.0 * HBAR * np.maximum(d, sigma_noise))


@dataclass(frozen=True)
class CorrelatedFieldNoise:
    """Spatially correlated Gaussian field on a set of grid points.

    ``rates`` is the covariance per unit time; ``covariance = rates * dt`` is
    the covariance of one increment.
    """

    grid_points: np.ndarray
    rates: np.ndarray
    dt: float = 1.0
    jitter: float | None = None
    _factor: np.ndarray = field(default=None, repr=False, compare=False)

    @classmethod
    def from_grid(cls, grid_points, dt, kappa=1.0, sigma_noise=1e-10):
        pts = np.atleast_2d(np.asarray(grid_points, dtype=float))
        return cls(pts, coulomb_kernel_rates(pts, kappa, sigma_noise), dt)

    @property
    def covariance(self):
        return self.rates * self.dt

    def with_dt(self, dt):
        return CorrelatedFieldNoise(self.grid_points, self.rates, dt, self.jitter)

    def factor(self):
        if self._factor is None:
            if not self.dt > 0:
                raise BadParameterError(f"dt must be positive, got {self.dt}")
            chol, _ = cholesky_with_jitter(self.covariance, self.jitter)
            object.__setattr__(self, "_factor", chol)
        return self._factor


def sample_correlated_field(stream, noise):
    """One Gaussian field sample ``L z`` with ``L L^T = covariance``."""
    chol = noise.factor()
    return chol @ stream.normal(chol.shape[0])
