"""Deterministic von Neumann / Lindblad propagation (hbar = 1).

Used as the independent oracle for ensemble-averaged QSD dynamics and for the
two-level decoherence picture.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    BadParameterError,
    DimensionMismatchError,
    InvalidDensityError,
    StepTooLargeError,
)
from .hilbert import check_density, check_hermitian

PROPAGATE_PSD_TOL = 1e-8
TRACE_DRIFT_LIMIT = 1e-6


@dataclass(frozen=True)
class MasterEquationModel:
    """``H`` plus ``(L_k, rate_k)`` pairs with non-negative rates."""

    hamiltonian: np.ndarray
    lindblad_ops: tuple = ()

    def __post_init__(self):
        h = check_hermitian(self.hamiltonian, name="hamiltonian")
        ops = []
        for op, rate in self.lindblad_ops:
            op = np.asarray(op, dtype=complex)
            if op.shape != h.shape:
                raise DimensionMismatchError("Lindblad operator and hamiltonian differ in shape")
            if rate < 0:
                raise BadParameterError(f"Lindblad rate must be non-negative, got {rate}")
            ops.append((op, float(rate)))
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "lindblad_ops", tuple(ops))

    @property
    def dim(self):
        return self.hamiltonian.shape[0]

    @property
    def max_rate(self):
        return max((r for _, r in self.lindblad_ops), default=0.0)

    @classmethod
    def from_collapse_model(cls, model):
        """Ensemble image of a QSD :class:`~collapse_lab.qsd.CollapseModel`.

        The channel covariance ``Gamma`` is diagonalized so that correlated
        channels become independent Lindblad operators
        ``L_k = sum_n U_nk A_n`` with rates equal to the eigenvalues.
        """
        lam, u = np.linalg.eigh(model.channel_rates)
        ops = np.array(model.collapse_ops)
        pairs = []
        for k in range(lam.size):
            if lam[k] <= 0:
                continue
            pairs.append((np.tensordot(u[:, k], ops, axes=1), lam[k]))
        return cls(model.hamiltonian, tuple(pairs))


def rhs(rho, model):
    """``-i[H, rho] + sum_k rate_k (L rho L^+ - 1/2 {L^+ L, rho})``."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (model.dim, model.dim):
        raise DimensionMismatchError(f"density shape {rho.shape} != model dim {model.dim}")
    h = model.hamiltonian
    out = -1j * (h @ rho - rho @ h)
    for op, rate in model.lindblad_ops:
        if rate == 0.0:
            continue
        ld = op.conj().T
        ldl = ld @ op
        out += rate * (op @ rho @ ld - 0.5 * (ldl @ rho + rho @ ldl))
    return out


def default_dt(model):
    rate = model.max_rate
    return 1e-3 if rate == 0 else min(1e-3, 0.01 / rate)


def _rk4(rho, model, dt, n):
    for _ in range(n):
        k1 = rhs(rho, model)
        k2 = rhs(rho + 0.5 * dt * k1, model)
        k3 = rhs(rho + 0.5 * dt * k2, model)
        k4 = rhs(rho + dt * k3, model)
        rho = rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return rho


def _check_output(rho):
    tr = np.trace(rho).real
    if abs(tr - 1.0) > TRACE_DRIFT_LIMIT:
        raise StepTooLargeError(f"trace drifted to {tr!r}; reduce dt")
    try:
        return check_density(rho, trace_tol=TRACE_DRIFT_LIMIT, herm_tol=1e-10,
                             psd_tol=PROPAGATE_PSD_TOL)
    except InvalidDensityError as exc:
        raise StepTooLargeError(str(exc)) from exc


def propagate(rho0, model, t, dt=None):
    """Classic fourth-order Runge-Kutta propagation of ``rho0`` to time ``t``.

    The step is ``dt`` (default ``min(1e-3, 0.01 / max rate)``) shrunk so an
    integer number of steps lands exactly on ``t``.
    """
    rho = check_density(rho0).astype(complex)
    if t < 0:
        raise BadParameterError("t must be non-negative")
    if t == 0:
        return rho.copy()
    dt = default_dt(model) if dt is None else dt
    n = max(1, int(np.ceil(t / dt - 1e-9)))
    return _check_output(_rk4(rho, model, t / n, n))


def propagate_series(rho0, model, times, dt=None):
    """Densities at each of the (ascending) ``times``; shape ``(len(times), d, d)``."""
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0) or times[0] < 0:
        raise BadParameterError("times must be non-negative and ascending")
    rho = check_density(rho0).astype(complex)
    dt = default_dt(model) if dt is None else dt
    out = np.empty((times.size,) + rho.shape, dtype=complex)
    t_prev = 0.0
    for i, t in enumerate(times):
        span = t - t_prev
        if span > 0:
            n = max(1, int(np.ceil(span / dt - 1e-9)))
            rho = _check_output(_rk4(rho, model, span / n, n))
        out[i] = rho
        t_prev = t
    return out


def decoherence_demo(a, b, overlap_decay_rate, t):
    """Two-level reduced density whose coherences decay as ``exp(-t / tau_D)``.

    ``tau_D = 1 / overlap_decay_rate``; populations ``|a|^2`` and ``|b|^2`` are
    untouched.
    """
    a, b = complex(a), complex(b)
    if abs(abs(a) ** 2 + abs(b) ** 2 - 1.0) > 1e-10:
        raise BadParameterError("|a|^2 + |b|^2 must equal 1")
    f = np.exp(-overlap_decay_rate * t)
    return np.array([[abs(a) ** 2, a * b.conjugate() * f],
                     [a.conjugate() * b * f, abs(b) ** 2]], dtype=complex)
