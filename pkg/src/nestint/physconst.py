"""Physical constants (CODATA 2018, SI units)."""

from dataclasses import dataclass, field
import math


@dataclass(frozen=True)
class Constants:
    hbar: float = 1.054571817e-34  # J s
    k_B: float = 1.380649e-23  # J/K
    G: float = 6.67430e-11  # m^3 / (kg s^2)
    c: float = 299792458.0  # m/s
    amu: float = 1.66053906660e-27  # kg
    m0: float = 1.67262192369e-27  # nucleon mass (proton), kg
    m_P: float = field(init=False)

    def __post_init__(self):
        # Planck mass is derived, never stored independently.
        object.__setattr__(self, "m_P", math.sqrt(self.hbar * self.c / self.G))


_CONSTANTS = Constants()


def constants() -> Constants:
    return _CONSTANTS


HBAR = _CONSTANTS.hbar
K_B = _CONSTANTS.k_B
G = _CONSTANTS.G
C = _CONSTANTS.c
AMU = _CONSTANTS.amu
M0 = _CONSTANTS.m0
M_P = _CONSTANTS.m_P
