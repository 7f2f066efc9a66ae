"""# How fast do superpositions disappear?

Two very different mechanisms: environmental scattering (decoherence) and
gravitational self-energy (Diosi-Penrose collapse).  Both are simple closed
forms, evaluated here in SI units."""

import numpy as np

from collapse_lab import timescales as ts
from collapse_lab.constants import SECONDS_PER_YEAR

# %%
""" Ammonia in its own gas at room temperature.  The molecular size and the
tunnelling displacement are documented in `NH3_ROOM`."""

tau_d = ts.joos_zeh_tau(ts.NH3_ROOM)
print(f"scattering decoherence time: {tau_d:.2e} s")
for t in (0.0, tau_d, 5 * tau_d):
    print(f"  |coherence|({t:.1e} s) = {abs(ts.coherence_decay(1.0, t, tau_d)):.3f}")

# %%
""" Gravitational collapse time of a carbon sphere displaced by 1 m, as a
function of its mass.  Light objects keep their superpositions for ages,
heavy ones lose them almost instantly."""

masses = np.geomspace(2.82e-26, 10.0, 9)
for m, e, tau in ts.dp_mass_sweep(ts.CARBON_DENSITY, masses, displacement=1.0):
    years = tau / SECONDS_PER_YEAR
    print(f"M = {m:9.2e} kg   E = {e:9.2e} J   tau = {tau:9.2e} s  ({years:8.1e} yr)")

# %%
""" Identical branches have no self-energy, so they never collapse."""

sphere = ts.homogeneous_sphere(1e-15, ts.CARBON_DENSITY)
print("E(identical) =", ts.dp_self_energy(sphere, sphere))
