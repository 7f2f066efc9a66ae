"""# Decoherence is entanglement seen from one side

A system qubit in (|0> + |1>)/sqrt(2) interacts with a one-qubit
"environment".  The more the environment states distinguish the system
states, the smaller the system coherence and purity."""

import numpy as np

from collapse_lab import hilbert as hb

# %%
plus = hb.superposition([0.5, 0.5])
e0 = hb.basis_state(2, 0)
for angle in np.linspace(0, np.pi / 2, 5):
    e1 = np.array([np.cos(angle), np.sin(angle)], dtype=complex)
    joint = hb.normalize(hb.tensor([1, 0], e0) + hb.tensor([0, 1], e1))
    red = hb.partial_trace(hb.projector(joint), (2, 2), 0)
    print(f"<e0|e1> = {np.cos(angle):.2f}   |rho_01| = {abs(red[0, 1]):.3f}"
          f"   purity = {hb.purity(red):.3f}")

# %%
""" Populations, and hence Born probabilities, never change."""

print(hb.born_probabilities(plus, np.eye(2)))
