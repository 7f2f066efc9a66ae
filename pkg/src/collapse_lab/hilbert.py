"""Finite-dimensional states, densities and operators.

States are 1-D complex arrays and operators/densities are 2-D complex arrays;
nothing here wraps numpy in custom classes.  Composite spaces use
lexicographic ordering with the leftmost factor varying slowest, i.e. the
ordering produced by :func:`numpy.kron`.
"""

from dataclasses import dataclass
from math import prod

import numpy as np

from .errors import (
    BadWeightsError,
    ConvergenceError,
    DimensionMismatchError,
    InvalidDensityError,
    NonOrthonormalBasisError,
    NonUnitaryError,
    NotHermitianError,
    ZeroNormError,
)

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10


@dataclass(frozen=True)
class CompositeSpace:
    """Ordered tensor-product structure ``H_0 (x) H_1 (x) ...``."""

    factor_dims: tuple

    def __post_init__(self):
        dims = tuple(int(d) for d in self.factor_dims)
        if not dims or any(d < 1 for d in dims):
            raise ValueError(f"factor dims must be positive, got {self.factor_dims}")
        object.__setattr__(self, "factor_dims", dims)

    @property
    def total_dim(self):
        return prod(self.factor_dims)


def as_state(v):
    psi = np.asarray(v, dtype=complex)
    if psi.ndim != 1 or psi.size < 1:
        raise DimensionMismatchError(f"state must be a non-empty vector, got shape {psi.shape}")
    return psi


def basis_state(dim, k):
    psi = np.zeros(dim, dtype=complex)
    psi[k] = 1.0
    return psi


def normalize(v):
    """Return ``v / ||v||``; raise :class:`ZeroNormError` below 1e-14."""
    psi = as_state(v)
    n = np.linalg.norm(psi)
    if n < 1e-14:
        raise ZeroNormError(f"cannot normalize vector of norm {n:.3g}")
    return psi / n


def superposition(weights, phases=None):
    """Normalized state with populations ``weights`` (and optional phases)."""
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise BadWeightsError("weights must be non-negative")
    amp = np.sqrt(w).astype(complex)
    if phases is not None:
        amp = amp * np.exp(1j * np.asarray(phases, dtype=float))
    return normalize(amp)


def _check_square(a, name="operator"):
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"{name} must be square, got shape {a.shape}")
    return a


def is_hermitian(a, tol=HERMITIAN_TOL):
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and np.allclose(a, a.conj().T, rtol=0, atol=tol)


def check_hermitian(a, tol=HERMITIAN_TOL, name="operator"):
    a = _check_square(a, name)
    err = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
    if err > tol:
        raise NotHermitianError(f"{name} deviates from Hermitian by {err:.3g}")
    return a


def check_density(rho, trace_tol=TRACE_TOL, herm_tol=HERMITIAN_TOL, psd_tol=PSD_TOL):
    """Validate the density-operator invariants and return ``rho`` as an array.

    Violations raise :class:`InvalidDensityError`; nothing is repaired.
    """
    rho = _check_square(rho, "density")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > herm_tol:
        raise InvalidDensityError(f"density not Hermitian (deviation {herm:.3g})")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > trace_tol:
        raise InvalidDensityError(f"density trace is {tr!r}")
    lam_min = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if lam_min < -psd_tol:
        raise InvalidDensityError(f"density has negative eigenvalue {lam_min:.3g}")
    return rho


def expectation(a, psi):
    """``<psi|A|psi> / <psi|psi>`` as a real number."""
    a = _check_square(a)
    psi = as_state(psi)
    if a.shape[0] != psi.size:
        raise DimensionMismatchError(f"operator dim {a.shape[0]} != state dim {psi.size}")
    num = np.vdot(psi, a @ psi)
    den = np.vdot(psi, psi).real
    if den < 1e-28:
        raise ZeroNormError("expectation value of a null vector")
    return float(num.real / den)


def projector(psi):
    psi = as_state(psi)
    return np.outer(psi, psi.conj())


def density_from_ensemble(pairs, tol=1e-10):
    """Mixed state ``sum_i p_i |psi_i><psi_i|`` from ``(p_i, psi_i)`` pairs."""
    pairs = list(pairs)
    if not pairs:
        raise BadWeightsError("empty ensemble")
    p = np.array([float(w) for w, _ in pairs])
    if np.any(p < 0) or abs(p.sum() - 1.0) > tol:
        raise BadWeightsError(f"probabilities must be >= 0 and sum to 1, got {p}")
    states = [as_state(s) for _, s in pairs]
    dim = states[0].size
    rho = np.zeros((dim, dim), dtype=complex)
    for w, s in zip(p, states):
        if s.size != dim:
            raise DimensionMismatchError("ensemble states differ in dimension")
        if abs(np.linalg.norm(s) - 1.0) > tol:
            raise BadWeightsError("ensemble states must be normalized")
        rho += w * np.outer(s, s.conj())
    return check_density(rho)


def purity(rho):
    rho = _check_square(rho, "density")
    # Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
    return float(np.sum(np.abs(rho) ** 2))


def tensor(*states):
    """Kronecker product of state vectors (leftmost factor slowest)."""
    out = np.ones(1, dtype=complex)
    for s in states:
        out = np.kron(out, as_state(s))
    return out


def _space(space):
    return space if isinstance(space, CompositeSpace) else CompositeSpace(tuple(space))


def partial_trace(rho, space, keep):
    """Reduced density on factor(s) ``keep`` of ``space``.

    ``keep`` is a factor index or a sequence of them; the kept factors stay in
    their original order.
    """
    rho = _check_square(rho, "density")
    space = _space(space)
    if rho.shape[0] != space.total_dim:
        raise DimensionMismatchError(
            f"density dim {rho.shape[0]} != space total dim {space.total_dim}")
    keep = [keep] if np.isscalar(keep) else list(keep)
    n = len(space.factor_dims)
    if any(k < 0 or k >= n for k in keep) or len(set(keep)) != len(keep):
        raise DimensionMismatchError(f"invalid factor selection {keep} for {n} factors")
    keep = sorted(keep)
    traced = [k for k in range(n) if k not in keep]
    t = rho.reshape(space.factor_dims * 2)
    # trace out from the highest index so axis numbers stay valid
    for k in sorted(traced, reverse=True):
        m = t.ndim // 2
        t = np.trace(t, axis1=k, axis2=k + m)
    d = prod(space.factor_dims[k] for k in keep)
    return t.reshape(d, d)


def born_probabilities(psi, basis, tol=1e-10):
    """Outcome probabilities ``|<o_n|psi>|^2`` for an orthonormal basis.

    ``basis`` is a sequence of vectors or a matrix whose columns are the
    basis vectors.
    """
    psi = as_state(psi)
    if isinstance(basis, np.ndarray) and basis.ndim == 2:
        b = np.asarray(basis, dtype=complex)
    else:
        b = np.column_stack([as_state(v) for v in basis])
    if b.shape[0] != psi.size:
        raise DimensionMismatchError(f"basis vectors have dim {b.shape[0]}, state {psi.size}")
    gram = b.conj().T @ b
    if np.max(np.abs(gram - np.eye(b.shape[1]))) > tol:
        raise NonOrthonormalBasisError("basis is not orthonormal")
    return np.abs(b.conj().T @ psi) ** 2


def is_unitary(u, tol=1e-10):
    u = np.asarray(u)
    return u.ndim == 2 and u.shape[0] == u.shape[1] and np.allclose(
        u.conj().T @ u, np.eye(u.shape[0]), rtol=0, atol=tol)


def basis_transform(psi, u, tol=1e-10):
    psi = as_state(psi)
    u = _check_square(u, "unitary")
    if u.shape[0] != psi.size:
        raise DimensionMismatchError(f"unitary dim {u.shape[0]} != state dim {psi.size}")
    if not is_unitary(u, tol):
        raise NonUnitaryError("matrix is not unitary")
    return u @ psi


def eigendecompose(a):
    """Ascending eigenvalues and orthonormal eigenvector columns of Hermitian ``a``."""
    a = check_hermitian(a)
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(str(exc)) from exc
    return w, v


# ---------------------------------------------------------------------------
# standard operators

def pauli(which):
    mats = {
        "x": [[0, 1], [1, 0]],
        "y": [[0, -1j], [1j, 0]],
        "z": [[1, 0], [0, -1]],
    }
    return np.array(mats[which], dtype=complex)


HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def harmonic_oscillator(n_levels, mass=1.0, omega=1.0):
    """Truncated harmonic oscillator in its energy basis (hbar = 1).

    Returns ``(H, x)``: the diagonal Hamiltonian with energies
    ``omega (n + 1/2)`` and the position operator ``sqrt(1/(2 m omega)) (a + a^+)``.
    The ``mass`` only enters the position operator.
    """
    n = np.arange(n_levels)
    h = np.diag(omega * (n + 0.5)).astype(complex)
    a = np.diag(np.sqrt(n[1:].astype(float)), k=1).astype(complex)
    x = np.sqrt(1.0 / (2.0 * mass * omega)) * (a + a.conj().T)
    return h, x
