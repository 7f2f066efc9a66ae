"""Physical constants and unit conversions (CODATA via :mod:`scipy.constants`).

Everything quantum-dynamical runs in atomic units (hbar = m_e = e = 1); the
classical-quantum toy model and the timescale calculators use SI.
"""

from scipy import constants as _c

HBAR = _c.hbar                      # J s
G = _c.G                            # m^3 kg^-1 s^-2
K_B = _c.k                          # J / K
AU_TIME = _c.physical_constants["atomic unit of time"][0]      # s
AU_ENERGY = _c.physical_constants["atomic unit of energy"][0]  # J
FEMTOSECOND = 1e-15                 # s
AU_PER_FS = FEMTOSECOND / AU_TIME   # ~41.341
ATOMIC_MASS = _c.physical_constants["atomic mass constant"][0]  # kg

SECONDS_PER_YEAR = 365.25 * 86400.0


def au_to_fs(t_au):
    return t_au / AU_PER_FS


def fs_to_au(t_fs):
    return t_fs * AU_PER_FS
