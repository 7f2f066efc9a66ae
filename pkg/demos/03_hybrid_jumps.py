"""# A qubit kicking a classical particle

Quantum jumps arrive at a constant rate.  The first one projects the qubit
onto |0> or |1> with Born weights, and every jump kicks the particle's
momentum in a direction set by the outcome."""

import numpy as np

from collapse_lab import cq, ensemble
from collapse_lab.hilbert import superposition
from collapse_lab.noise import make_stream

# %%
config = cq.CqToyConfig(coupling=1.0, mass=1.0, omega=1.0, tau=0.01, dt=2.5e-5, t_max=0.05)
start = cq.HybridState(superposition([1 / 3, 2 / 3]), cq.ClassicalState(0.0, 0.0))

tr = cq.run_cq_trajectory(start.qubit, start.classical, config, make_stream(42, 0))
print("outcome:", tr.outcome, " jumps at:", np.round(tr.jump_times, 4), "s")
print("final momentum:", tr.p[-1], "kg m/s")

# %%
""" Over many runs: one third collapse to |0>, and the number of jumps is
Poisson with mean t_max / tau = 5."""

res = ensemble.run_ensemble(start, config, ensemble.EnsembleConfig(500, master_seed=7,
                                                                   engine="cq"))
print("frequencies:", np.round(res.stats.frequencies, 3))
print("mean jumps:", res.jump_counts.mean())
print("Poisson chi-square p:", round(ensemble.chi_square_poisson(res.jump_counts, 5.0)[1], 3))
