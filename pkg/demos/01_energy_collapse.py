"""# Collapse onto energy eigenstates

A three-level harmonic oscillator starts in the superposition
sqrt(1/6)|0> + sqrt(2/3)|1> + sqrt(1/6)|2>.  Using the Hamiltonian itself as
the collapse operator, every stochastic trajectory drifts into a single
energy eigenstate, while the ensemble keeps the initial populations."""

import numpy as np

from collapse_lab import ensemble, lindblad, qsd
from collapse_lab.constants import AU_PER_FS
from collapse_lab.hilbert import harmonic_oscillator, superposition
from collapse_lab.noise import make_stream

# %%
h, _ = harmonic_oscillator(3)
psi0 = superposition([1 / 6, 2 / 3, 1 / 6])
model = qsd.make_hamiltonian_model(h, eta=0.25)
config = qsd.QsdConfig(dt=1e-3, t_max=60.0, record_stride=5000)

""" One trajectory: the populations wander, then lock onto one level."""

rec = qsd.run_trajectory(psi0, model, config, make_stream(42, 0))
for t, p in zip(rec.times, rec.populations):
    print(f"t = {t:5.1f} au   populations = {np.round(p, 3)}")
print("outcome:", rec.outcome, " collapse time:", rec.collapse_time, "au")

# %%
""" Many trajectories: the outcome frequencies follow the Born weights."""

res = ensemble.run_ensemble(psi0, config, ensemble.EnsembleConfig(1000, master_seed=1),
                            model=model)
print("frequencies:", np.round(res.stats.frequencies, 3), " expected:", res.stats.expected)
print("chi-square p-value:", round(res.stats.chi_square[1], 3))
median = np.nanmedian(res.collapse_times)
print(f"median collapse time: {median:.1f} au = {median / AU_PER_FS:.2f} fs")

# %%
""" The averaged density matrix is the solution of the master equation:
coherences die while the diagonal stays put."""

me = lindblad.MasterEquationModel.from_collapse_model(model)
exact = lindblad.propagate_series(np.outer(psi0, psi0.conj()), me, res.times)
for t, a, b in zip(res.times, res.mean_density, exact):
    print(f"t = {t:5.1f}   trace distance to Lindblad = {ensemble.trace_distance(a, b):.4f}")
