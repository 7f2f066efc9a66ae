import numpy as np
import pytest

from collapse_lab import cq
from collapse_lab.errors import BadParameterError, DimensionMismatchError
from collapse_lab.hilbert import superposition
from collapse_lab.noise import make_stream

CFG = cq.CqToyConfig()
QUBIT = superposition([1 / 3, 2 / 3])


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_kernel_matches_reference(seed):
    cl = cq.ClassicalState(0.1, -0.2)
    fast = cq.run_cq_trajectory(QUBIT, cl, CFG, make_stream(seed, 5))
    slow = cq.run_cq_reference(QUBIT, cl, CFG, make_stream(seed, 5))
    assert fast.outcome == slow.outcome
    assert np.array_equal(fast.jump_flags, slow.jump_flags)
    assert np.allclose(fast.q, slow.q, rtol=1e-12, atol=1e-15)
    assert np.allclose(fast.p, slow.p, rtol=1e-12, atol=1e-15)
    assert np.array_equal(fast.populations, slow.populations)


def test_kicks_and_collapse():
    tr = cq.run_cq_trajectory(QUBIT, cq.ClassicalState(), CFG, make_stream(42, 0))
    assert tr.n_jumps > 0 and tr.outcome in (0, 1)
    first = np.argmax(tr.jump_flags)
    sign = cq.OUTCOME_SIGNS[tr.outcome]
    assert tr.p[first] - tr.p[first - 1] == pytest.approx(sign * CFG.coupling, rel=1e-3)
    assert np.all(np.abs(tr.populations[first:, tr.outcome] - 1.0) < 1e-9)
    assert np.allclose(tr.populations[:first], [1 / 3, 2 / 3])


def test_jump_consumes_two_uniforms():
    s1, s2 = make_stream(3), make_stream(3)
    cq.cq_jump(QUBIT, cq.ClassicalState(), CFG, s1)
    s2.uniform(2)
    assert s1.uniform() == s2.uniform()


def test_forced_jump_born_weights():
    cfg = cq.CqToyConfig(tau=1.0, dt=0.1, t_max=1.0)
    stream = make_stream(8)
    outcomes = []
    for _ in range(4000):
        q, _, jumped = cq.cq_jump(QUBIT, cq.ClassicalState(), cfg, stream, dt=1.0)
        assert jumped
        outcomes.append(int(np.argmax(np.abs(q))))
    assert np.mean(np.array(outcomes) == 0) == pytest.approx(1 / 3, abs=0.025)


def test_free_oscillator_energy_is_bounded():
    cfg = cq.CqToyConfig(dt=1e-3, tau=1.0, t_max=10.0)
    cl = cq.ClassicalState(1.0, 0.0)
    e0 = 0.5
    for _ in range(int(2 * np.pi / cfg.dt)):
        cl = cq.classical_drift(cl, 0.0, cfg)
    assert 0.5 * cl.p**2 + 0.5 * cl.q**2 == pytest.approx(e0, rel=1e-2)


def test_validation():
    with pytest.raises(BadParameterError):
        cq.CqToyConfig(dt=0.01, tau=0.01)
    with pytest.raises(BadParameterError):
        cq.CqToyConfig(mass=-1)
    with pytest.raises(BadParameterError):
        cq.ClassicalState(np.nan, 0)
    with pytest.raises(DimensionMismatchError):
        cq.run_cq_trajectory([1, 0, 0], cq.ClassicalState(), CFG, make_stream(0))
