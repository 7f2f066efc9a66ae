import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from collapse_lab import hilbert as hb
from collapse_lab import lindblad as lb
from collapse_lab import qsd
from collapse_lab.errors import BadParameterError, DimensionMismatchError, StepTooLargeError


def random_hermitian(rng, d, scale=1.0):
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (m + m.conj().T) / 2


def test_dephasing_matches_closed_form():
    eta = 0.7
    model = lb.MasterEquationModel(np.zeros((2, 2)), ((hb.pauli("z"), eta),))
    a, b = np.sqrt(0.3), np.sqrt(0.7)
    rho0 = hb.projector([a, b])
    for t in (0.1, 0.5, 2.0):
        rho = lb.propagate(rho0, model, t)
        # L rho L - rho on the off-diagonal gives -2 eta
        assert np.allclose(rho, lb.decoherence_demo(a, b, 2 * eta, t), atol=1e-10)


def test_unitary_evolution_matches_exponential():
    rng = np.random.default_rng(0)
    h = random_hermitian(rng, 3)
    model = lb.MasterEquationModel(h)
    rho0 = hb.projector(hb.superposition([0.2, 0.3, 0.5]))
    w, v = np.linalg.eigh(h)
    u = v @ np.diag(np.exp(-1j * w * 1.3)) @ v.conj().T
    assert np.allclose(lb.propagate(rho0, model, 1.3), u @ rho0 @ u.conj().T, atol=1e-10)


def test_from_collapse_model_reproduces_correlated_generator():
    rng = np.random.default_rng(1)
    h = random_hermitian(rng, 3)
    ops = (np.diag([1.0, 0, 0.5]), np.diag([0.0, 1.0, 0.2]))
    m = qsd.CollapseModel(h, ops, 1.0)
    gamma = np.array([[1.0, 0.4], [0.4, 0.8]])
    rho = hb.projector(hb.normalize(rng.normal(size=3) + 1j * rng.normal(size=3)))
    direct = -1j * (h @ rho - rho @ h)
    for i in range(2):
        for j in range(2):
            a, b = ops[i], ops[j]
            direct += gamma[i, j] * (a @ rho @ b - 0.5 * (b @ a @ rho + rho @ b @ a))

    class Correlated:
        hamiltonian = h
        collapse_ops = ops
        channel_rates = gamma

    me = lb.MasterEquationModel.from_collapse_model(Correlated)
    assert np.allclose(lb.rhs(rho, me), direct, atol=1e-12)
    assert len(lb.MasterEquationModel.from_collapse_model(m).lindblad_ops) == 2


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.floats(0.05, 2.0))
def test_propagation_preserves_density_invariants(seed, d, t):
    rng = np.random.default_rng(seed)
    model = lb.MasterEquationModel(
        random_hermitian(rng, d),
        ((rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)), 0.3),
         (random_hermitian(rng, d), 0.5)))
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho0 = m @ m.conj().T
    rho0 /= np.trace(rho0).real
    rho = lb.propagate(rho0, model, t)
    assert abs(np.trace(rho).real - 1) < 1e-8
    assert np.linalg.eigvalsh(rho).min() > -1e-8
    assert np.allclose(rho, rho.conj().T, atol=1e-12)


def test_energy_collapse_keeps_populations():
    h, _ = hb.harmonic_oscillator(3)
    me = lb.MasterEquationModel.from_collapse_model(qsd.make_hamiltonian_model(h, 0.25))
    rho0 = hb.projector(hb.superposition([1 / 6, 2 / 3, 1 / 6]))
    rho = lb.propagate(rho0, me, 20.0)
    assert np.allclose(np.diag(rho).real, [1 / 6, 2 / 3, 1 / 6], atol=1e-12)
    assert abs(rho[0, 2]) == pytest.approx(abs(rho0[0, 2]) * np.exp(-0.25 * 4 / 2 * 20), rel=1e-6)


def test_series_matches_single_propagation():
    model = lb.MasterEquationModel(hb.pauli("x"), ((hb.pauli("z"), 0.2),))
    rho0 = hb.projector([1, 0])
    series = lb.propagate_series(rho0, model, [0.0, 0.5, 1.0])
    assert np.allclose(series[0], rho0)
    assert np.allclose(series[2], lb.propagate(rho0, model, 1.0), atol=1e-12)


def test_too_large_step_is_reported():
    model = lb.MasterEquationModel(np.zeros((2, 2)), ((hb.pauli("z"), 100.0),))
    with pytest.raises(StepTooLargeError):
        lb.propagate(hb.projector(hb.superposition([0.5, 0.5])), model, 1.0, dt=0.1)


def test_validation():
    with pytest.raises(BadParameterError):
        lb.MasterEquationModel(np.eye(2), ((np.eye(2), -1.0),))
    with pytest.raises(DimensionMismatchError):
        lb.MasterEquationModel(np.eye(2), ((np.eye(3), 1.0),))
    with pytest.raises(BadParameterError):
        lb.propagate(np.eye(2) / 2, lb.MasterEquationModel(np.eye(2)), -1)
    with pytest.raises(BadParameterError):
        lb.decoherence_demo(1, 1, 1, 1)
