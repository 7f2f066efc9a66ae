"""Classical-quantum jump unraveling: a qubit coupled to a classical oscillator.

Toy model (SI units):

* the qubit has no dynamics of its own; jumps arrive at constant rate
  ``1/tau`` (probability ``dt/tau`` per step) and project it onto ``|0>`` or
  ``|1>`` with Born weights,
* every jump kicks the particle momentum by ``s_k B`` with ``s_0 = -1``,
  ``s_1 = +1``,
* between jumps the particle is a harmonic oscillator ``(m, omega)``; once the
  qubit has collapsed to ``k`` it also feels the constant force
  ``s_k B omega``.

After the first projection the qubit is a basis state, so later jumps
re-project onto the same state (idempotent) but still deliver kicks.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import BadParameterError, DimensionMismatchError
from .hilbert import as_state, normalize

OUTCOME_SIGNS = np.array([-1.0, 1.0])

_CHUNK_STEPS = 1 << 14


@dataclass(frozen=True)
class ClassicalState:
    q: float = 0.0   # m
    p: float = 0.0   # kg m / s

    def __post_init__(self):
        if not (np.isfinite(self.q) and np.isfinite(self.p)):
            raise BadParameterError(f"classical state must be finite, got ({self.q}, {self.p})")


@dataclass(frozen=True)
class HybridState:
    qubit: np.ndarray
    classical: ClassicalState = ClassicalState()


@dataclass(frozen=True)
class CqToyConfig:
    coupling: float = 1.0   # B, J s / m
    mass: float = 1.0       # kg
    omega: float = 1.0      # 1/s
    tau: float = 0.01       # mean interval between jumps, s
    dt: float = 2.5e-5      # s
    t_max: float = 0.05     # s

    def __post_init__(self):
        for name in ("coupling", "mass", "omega", "tau", "dt", "t_max"):
            if not getattr(self, name) > 0:
                raise BadParameterError(f"{name} must be positive")
        if self.dt > self.tau / 10:
            raise BadParameterError(f"dt={self.dt} must not exceed tau/10={self.tau / 10}")
        if self.dt >= self.t_max:
            raise BadParameterError("dt must be smaller than t_max")

    @property
    def jump_probability(self):
        return self.dt / self.tau

    @property
    def n_steps(self):
        return int(round(self.t_max / self.dt))


@dataclass(frozen=True)
class HybridTrajectory:
    times: np.ndarray
    populations: np.ndarray      # (n, 2)
    q: np.ndarray
    p: np.ndarray
    jump_flags: np.ndarray       # 1 where a jump fired during the step ending at times[i]
    outcome: int | None

    @property
    def jump_times(self):
        return self.times[self.jump_flags.astype(bool)]

    @property
    def n_jumps(self):
        return int(self.jump_flags.sum())

    def __eq__(self, other):
        if not isinstance(other, HybridTrajectory):
            return NotImplemented
        return self.outcome == other.outcome and all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in ("times", "populations", "q", "p", "jump_flags"))


def _qubit(qubit):
    psi = as_state(qubit)
    if psi.size != 2:
        raise DimensionMismatchError(f"qubit must have dimension 2, got {psi.size}")
    return psi


def cq_jump(qubit, classical, config, stream, dt=None):
    """Possibly fire one jump during a step of length ``dt`` (default ``config.dt``).

    Consumes exactly two uniforms from ``stream``: the first decides whether
    a jump fires (probability ``dt / tau``), the second selects the outcome.
    Returns ``(qubit', classical', jumped)``.
    """
    psi = _qubit(qubit)
    dt = config.dt if dt is None else dt
    u_fire, u_pick = stream.uniform(2)
    if not u_fire < dt / config.tau:
        return psi, classical, False
    p0 = abs(psi[0]) ** 2 / np.vdot(psi, psi).real
    k = 0 if u_pick < p0 else 1
    new = np.zeros(2, dtype=complex)
    new[k] = 1.0
    kicked = ClassicalState(classical.q, classical.p + OUTCOME_SIGNS[k] * config.coupling)
    return new, kicked, True


def classical_drift(classical, force, config, dt=None):
    """Symplectic-Euler step of the oscillator with an extra constant ``force`` (N)."""
    dt = config.dt if dt is None else dt
    p = classical.p + (-config.mass * config.omega**2 * classical.q + force) * dt
    q = classical.q + p / config.mass * dt
    return ClassicalState(q, p)


def outcome_force(outcome, config):
    """Constant force felt by the particle once the qubit sits in ``outcome``."""
    if outcome is None:
        return 0.0
    return OUTCOME_SIGNS[outcome] * config.coupling * config.omega


def run_cq_trajectory(qubit0, classical0, config, stream):
    """Alternate :func:`classical_drift` and :func:`cq_jump` up to ``t_max``.

    Samples every step.  ``outcome`` is fixed by the first projection and is
    ``None`` if no jump fired.
    """
    amp = normalize(_qubit(qubit0)).copy()
    n = config.n_steps
    times = np.arange(n + 1) * config.dt
    pops = np.empty((n + 1, 2))
    q = np.empty(n + 1)
    p = np.empty(n + 1)
    flags = np.zeros(n + 1, dtype=np.int8)
    pops[0] = np.abs(amp) ** 2
    q[0], p[0] = classical0.q, classical0.p
    cl = np.array([classical0.q, classical0.p], dtype=float)
    state = np.array([-1, 0], dtype=np.int64)
    s0 = 0
    while s0 < n:
        m = min(_CHUNK_STEPS, n - s0)
        u = stream.uniform((m, 2))
        _kernels.cq_chunk(amp, cl, u, s0, config.coupling, config.mass, config.omega,
                          config.dt, config.jump_probability, OUTCOME_SIGNS,
                          pops, q, p, flags, state)
        s0 += m
    if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
        raise BadParameterError("classical trajectory diverged")
    outcome = int(state[0]) if state[0] >= 0 else None
    return HybridTrajectory(times, pops, q, p, flags, outcome)


def run_cq_reference(qubit0, classical0, config, stream):
    """Pure-Python step loop equivalent to :func:`run_cq_trajectory` (for testing)."""
    psi = normalize(_qubit(qubit0))
    cl = classical0
    outcome = None
    n = config.n_steps
    pops = [np.abs(psi) ** 2]
    qs, ps, flags = [cl.q], [cl.p], [0]
    for _ in range(n):
        cl = classical_drift(cl, outcome_force(outcome, config), config)
        psi, cl, jumped = cq_jump(psi, cl, config, stream)
        if jumped and outcome is None:
            outcome = int(np.argmax(np.abs(psi)))
        pops.append(np.abs(psi) ** 2)
        qs.append(cl.q)
        ps.append(cl.p)
        flags.append(int(jumped))
    return HybridTrajectory(np.arange(n + 1) * config.dt, np.array(pops), np.array(qs),
                            np.array(ps), np.array(flags, dtype=np.int8), outcome)
