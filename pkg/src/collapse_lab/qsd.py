"""Quantum-state diffusion trajectories.

Integrates the Ito equation

    d|psi> = -i H |psi> dt + sum_n (A_n - <A_n>) |psi> dW_n
             - 1/2 sum_mn Gamma_mn (A_m - <A_m>)(A_n - <A_n>) |psi> dt

with ``dW_m dW_n = Gamma_mn dt`` (``Gamma = eta * I`` for independent channels)
by explicit Euler-Maruyama followed by renormalization.  Units have hbar = 1:
atomic units for the oscillator models, rad/s and seconds for the SI
mass-density model.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import BadParameterError, DimensionMismatchError, ZeroNormError
from .hilbert import as_state, check_hermitian, eigendecompose, normalize
from .noise import CorrelatedFieldNoise, sample_correlated_field, sample_wiener

MODEL_LABELS = ("hamiltonian", "position", "number", "mass_density", "custom")

_CHUNK_STEPS = 1 << 15


@dataclass(frozen=True)
class CollapseModel:
    """Hamiltonian, Hermitian collapse operators and noise strength.

    ``noise`` is set only for spatially correlated models; its ``rates``
    matrix then replaces ``eta * I`` as the channel covariance per unit time.
    """

    hamiltonian: np.ndarray
    collapse_ops: tuple
    eta: float
    label: str = "custom"
    noise: CorrelatedFieldNoise | None = None

    def __post_init__(self):
        h = check_hermitian(self.hamiltonian, name="hamiltonian")
        ops = tuple(check_hermitian(a, name="collapse operator") for a in self.collapse_ops)
        if not ops:
            raise BadParameterError("at least one collapse operator is required")
        if any(a.shape != h.shape for a in ops):
            raise DimensionMismatchError("collapse operators and hamiltonian differ in dimension")
        if not self.eta > 0:
            raise BadParameterError(f"eta must be positive, got {self.eta}")
        if self.label not in MODEL_LABELS:
            raise BadParameterError(f"unknown model label {self.label!r}")
        if self.noise is not None and self.noise.rates.shape != (len(ops), len(ops)):
            raise DimensionMismatchError("noise rate matrix does not match the number of channels")
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "collapse_ops", ops)

    @property
    def dim(self):
        return self.hamiltonian.shape[0]

    @property
    def n_channels(self):
        return len(self.collapse_ops)

    @property
    def channel_rates(self):
        """Noise covariance per unit time, ``Gamma``."""
        if self.noise is None:
            return self.eta * np.eye(self.n_channels)
        return np.asarray(self.noise.rates, dtype=float)

    def is_diagonal(self):
        mats = (self.hamiltonian,) + self.collapse_ops
        return all(np.count_nonzero(m - np.diag(np.diag(m))) == 0 for m in mats)


@dataclass(frozen=True)
class QsdConfig:
    dt: float
    t_max: float
    record_stride: int = 1
    collapse_epsilon: float = 1e-3

    def __post_init__(self):
        if not 0 < self.dt < self.t_max:
            raise BadParameterError(f"need 0 < dt < t_max, got dt={self.dt}, t_max={self.t_max}")
        if not 0 < self.collapse_epsilon < 0.5:
            raise BadParameterError("collapse_epsilon must lie in (0, 0.5)")
        if int(self.record_stride) < 1:
            raise BadParameterError("record_stride must be >= 1")
        object.__setattr__(self, "record_stride", int(self.record_stride))

    @property
    def n_steps(self):
        return int(round(self.t_max / self.dt))

    def record_steps(self):
        steps = list(range(0, self.n_steps + 1, self.record_stride))
        if steps[-1] != self.n_steps:
            steps.append(self.n_steps)
        return np.array(steps)

    def record_times(self):
        return self.record_steps() * self.dt


@dataclass(frozen=True)
class TrajectoryRecord:
    """One stochastic realization sampled every ``record_stride`` steps.

    ``populations`` are in the reference basis (see :func:`reference_basis`),
    ``states`` in the computational basis, ``norms`` are the
    pre-renormalization norms of the step that produced each sample.
    """

    times: np.ndarray
    populations: np.ndarray
    states: np.ndarray
    norms: np.ndarray
    outcome: int | None
    collapse_time: float | None
    max_norm_drift: float = field(default=0.0)

    def __eq__(self, other):
        if not isinstance(other, TrajectoryRecord):
            return NotImplemented
        return (self.outcome == other.outcome and self.collapse_time == other.collapse_time
                and self.max_norm_drift == other.max_norm_drift
                and all(np.array_equal(getattr(self, f), getattr(other, f))
                        for f in ("times", "populations", "states", "norms")))


# ---------------------------------------------------------------------------
# model families

def make_hamiltonian_model(hamiltonian, eta):
    """Energy-basis collapse: the Hamiltonian is the only collapse operator."""
    h = np.asarray(hamiltonian, dtype=complex)
    return CollapseModel(h, (h,), eta, label="hamiltonian")


def make_position_model(hamiltonian, positions, eta):
    """Position localization.

    ``positions`` is either the grid coordinate of each basis state (giving
    ``A = diag(x)``) or a full Hermitian position matrix.
    """
    x = np.asarray(positions)
    if x.ndim == 1:
        x = np.diag(x.astype(float)).astype(complex)
    return CollapseModel(np.asarray(hamiltonian, dtype=complex), (x,), eta, label="position")


def make_number_model(hamiltonian, number_ops, eta):
    ops = tuple(np.asarray(n, dtype=complex) for n in number_ops)
    return CollapseModel(np.asarray(hamiltonian, dtype=complex), ops, eta, label="number")


def _pad3(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None]
    if x.shape[-1] > 3:
        raise BadParameterError("coordinates have more than three components")
    if x.ndim == 1:
        x = x[:, None]
    pad = [(0, 0)] * (x.ndim - 1) + [(0, 3 - x.shape[-1])]
    return np.pad(x, pad)


def smeared_cell_masses(masses, configurations, grid, sigma):
    """Mass assigned to each grid cell for each basis configuration.

    Each particle's mass is spread over the grid with normalized Gaussian
    weights of width ``sigma``, so the cells of every configuration add up to
    the total mass.  Returns an array of shape ``(n_grid, n_configurations)``.
    """
    m = np.asarray(masses, dtype=float)
    conf = _pad3(configurations)
    if conf.ndim == 2:
        conf = conf[:, None, :]
    grid = _pad3(grid)
    if conf.shape[1] != m.size:
        raise DimensionMismatchError("configurations must give one position per mass")
    if np.any(m <= 0):
        raise BadParameterError("masses must be positive")
    if not sigma > 0:
        raise BadParameterError("smearing width must be positive")
    # (grid, config, particle)
    d2 = np.sum((grid[:, None, None, :] - conf[None, :, :, :]) ** 2, axis=-1)
    logw = -d2 / (2.0 * sigma**2)
    logw -= logw.max(axis=0, keepdims=True)
    w = np.exp(logw)
    w /= w.sum(axis=0, keepdims=True)
    return np.einsum("gkp,p->gk", w, m)


def make_mass_density_model(hamiltonian, masses, configurations, grid, sigma_noise, kappa=1.0):
    """Mass-density localization with the gravitational noise kernel (SI).

    Basis state ``k`` places particle ``p`` at ``configurations[k, p]``.  One
    diagonal collapse operator per grid cell holds the smeared mass in that
    cell (kg); the channels are correlated with rates
    ``kappa G / (2 hbar |r - r'|)`` cut off at ``sigma_noise``.  The
    Hamiltonian must be given as ``H / hbar`` (rad/s).
    """
    if not kappa > 0:
        raise BadParameterError("kappa must be positive")
    cells = smeared_cell_masses(masses, configurations, grid, sigma_noise)
    h = np.asarray(hamiltonian, dtype=complex)
    if cells.shape[1] != h.shape[0]:
        raise DimensionMismatchError("one configuration per basis state is required")
    ops = tuple(np.diag(c).astype(complex) for c in cells)
    noise = CorrelatedFieldNoise.from_grid(_pad3(grid), dt=1.0, kappa=kappa, sigma_noise=sigma_noise)
    eta = float(np.max(np.diag(noise.rates)))
    return CollapseModel(h, ops, eta, label="mass_density", noise=noise)


# ---------------------------------------------------------------------------
# single steps

def qsd_increment(psi, model, dw, dt):
    """Raw (unnormalized) Euler-Maruyama increment ``d|psi>``.

    ``dw`` is a :class:`WienerIncrement` or a plain array of channel values.
    """
    psi = as_state(psi)
    if psi.size != model.dim:
        raise DimensionMismatchError(f"state dim {psi.size} != model dim {model.dim}")
    w = np.asarray(getattr(dw, "values", dw), dtype=float)
    if w.shape != (model.n_channels,):
        raise DimensionMismatchError(f"expected {model.n_channels} noise channels, got {w.shape}")
    nrm2 = np.vdot(psi, psi).real
    shifted = []
    for a in model.collapse_ops:
        mean = np.vdot(psi, a @ psi).real / nrm2
        shifted.append(a - mean * np.eye(model.dim))
    u = np.array([b @ psi for b in shifted])
    g = model.channel_rates @ u
    second = sum(b @ gn for b, gn in zip(shifted, g))
    return -1j * dt * (model.hamiltonian @ psi) + w @ u - 0.5 * dt * second


def draw_increment(model, dt, stream):
    if model.noise is None:
        return sample_wiener(stream, model.n_channels, model.eta, dt).values
    return sample_correlated_field(stream, model.noise.with_dt(dt))


def step(psi, model, config, stream):
    """One renormalized step; returns ``(psi', pre_norm)``."""
    dw = draw_increment(model, config.dt, stream)
    new = as_state(psi) + qsd_increment(psi, model, dw, config.dt)
    pre = float(np.linalg.norm(new))
    if not np.isfinite(pre) or pre < 1e-14:
        raise ZeroNormError(f"step produced norm {pre:.3g}; dt={config.dt} is too large")
    return new / pre, pre


# ---------------------------------------------------------------------------
# trajectories

def reference_basis(model):
    """Basis in which populations are reported.

    The computational basis when the first collapse operator is diagonal
    (keeps level labels stable), otherwise its eigenbasis in ascending order.
    Returns ``None`` for the computational basis or the eigenvector matrix.
    """
    a0 = model.collapse_ops[0]
    if np.count_nonzero(a0 - np.diag(np.diag(a0))) == 0:
        return None
    return eigendecompose(a0)[1]


def reference_populations(psi, basis):
    c = psi if basis is None else basis.conj().T @ psi
    return np.abs(c) ** 2


class _Integrator:
    """Pre-processed model data shared by every trajectory of an ensemble."""

    def __init__(self, model, config):
        self.model = model
        self.config = config
        self.diagonal = model.is_diagonal()
        self.rates = np.ascontiguousarray(model.channel_rates, dtype=float)
        if self.diagonal:
            self.h = np.ascontiguousarray(np.diag(model.hamiltonian).real)
            self.a = np.ascontiguousarray(np.array([np.diag(a).real for a in model.collapse_ops]))
        else:
            self.h = np.ascontiguousarray(model.hamiltonian)
            self.a = np.ascontiguousarray(np.array(model.collapse_ops))
        basis = reference_basis(model)
        self.basis = basis
        self.use_ref = basis is not None
        self.uh = np.ascontiguousarray(basis.conj().T if basis is not None
                                       else np.zeros((1, 1), dtype=complex))
        if model.noise is None:
            self.noise_scale = np.sqrt(model.eta * config.dt)
            self.noise_factor = None
        else:
            self.noise_factor = model.noise.with_dt(config.dt).factor()
        self.kernel = _kernels.qsd_chunk_diag if self.diagonal else _kernels.qsd_chunk_dense

    def noise_chunk(self, stream, n):
        z = stream.normal((n, self.model.n_channels))
        if self.noise_factor is None:
            return z * self.noise_scale
        return np.ascontiguousarray(z @ self.noise_factor.T)

    def run(self, psi0, stream):
        cfg = self.config
        psi = normalize(psi0).copy()
        if psi.size != self.model.dim:
            raise DimensionMismatchError(f"state dim {psi.size} != model dim {self.model.dim}")
        n = cfg.n_steps
        times = cfg.record_times()
        n_rec = times.size
        d = psi.size
        states = np.empty((n_rec, d), dtype=complex)
        pops = np.empty((n_rec, d))
        norms = np.empty(n_rec)
        states[0] = psi
        pops[0] = reference_populations(psi, self.basis)
        norms[0] = 1.0
        threshold = 1.0 - cfg.collapse_epsilon
        counters = np.array([1, 0 if pops[0].max() >= threshold else -1], dtype=np.int64)
        drift = np.zeros(1)
        s0 = 0
        while s0 < n:
            m = min(_CHUNK_STEPS, n - s0)
            dw = self.noise_chunk(stream, m)
            status = self.kernel(psi, self.h, self.a, self.rates, dw, cfg.dt, s0, n,
                                 cfg.record_stride, self.uh, self.use_ref, threshold,
                                 states, pops, norms, counters, drift)
            if status != _kernels.OK:
                raise ZeroNormError(
                    f"integration failed at step ~{s0} (status {status}); dt={cfg.dt} is too large")
            s0 += m
        final = pops[-1]
        outcome = int(np.argmax(final)) if final.max() >= threshold else None
        collapse_time = float(counters[1] * cfg.dt) if counters[1] >= 0 else None
        return TrajectoryRecord(times, pops, states, norms, outcome, collapse_time, float(drift[0]))


def run_trajectory(psi0, model, config, stream):
    """Integrate one trajectory from ``psi0`` to ``config.t_max``.

    ``collapse_time`` is the first time the largest reference population
    reaches ``1 - collapse_epsilon``; ``outcome`` is the level holding that
    population at ``t_max`` (``None`` when no level has reached it).
    """
    return _Integrator(model, config).run(psi0, stream)

