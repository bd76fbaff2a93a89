"""Physical constants and atomic species.

All quantities are SI. Only the gravitational acceleration is adjustable.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import constants as _sc

MU_B = _sc.physical_constants["Bohr magneton"][0]  # J/T
HBAR = _sc.hbar  # J s
H = _sc.h  # J s
MU_0 = _sc.mu_0  # T m / A
G_EARTH = _sc.g  # m / s^2, standard gravity


@dataclass(frozen=True)
class Constants:
    mu_B: float = field(default=MU_B, init=False)
    hbar: float = field(default=HBAR, init=False)
    h: float = field(default=H, init=False)
    mu_0: float = field(default=MU_0, init=False)
    g_earth: float = G_EARTH

    def __post_init__(self):
        if not self.g_earth >= 0:
            raise ValueError("g_earth must be non-negative")


DEFAULT = Constants()


@dataclass(frozen=True)
class Species:
    """Atomic species and the hyperfine manifold it is prepared in.

    Parameters
    ----------
    mass : float
        Atomic mass in kg.
    F : float
        Total angular momentum of the hyperfine manifold.
    m_F : float
        Magnetic quantum number of the prepared state.
    g_F : float
        Signed Landé factor of the manifold.
    """

    mass: float
    F: float
    m_F: float
    g_F: float
    name: str = ""

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        if self.F < 0 or not float(2 * self.F).is_integer():
            raise ValueError("F must be a non-negative integer or half-integer")
        if abs(self.m_F) > self.F or not float(self.F - self.m_F).is_integer():
            raise ValueError(f"m_F={self.m_F} is not a valid level of F={self.F}")
        if self.g_F == 0:
            raise ValueError("g_F must be non-zero")

    @property
    def levels(self):
        """Magnetic levels -F, ..., F."""
        return -self.F + np.arange(int(round(2 * self.F)) + 1)

    @property
    def sign_g(self):
        return 1.0 if self.g_F > 0 else -1.0

    def larmor_field(self, omega, constants=DEFAULT):
        """Static field (T) whose Zeeman splitting equals hbar*omega."""
        return constants.hbar * omega / (abs(self.g_F) * constants.mu_B)

    def with_level(self, m_F):
        return Species(self.mass, self.F, m_F, self.g_F, self.name)


RB87_MASS = 1.4431606e-25  # kg

RB87_F2 = Species(mass=RB87_MASS, F=2, m_F=2, g_F=0.5, name="Rb87 F=2")
RB87_F1 = Species(mass=RB87_MASS, F=1, m_F=-1, g_F=-0.5, name="Rb87 F=1")

PRESETS = {
    "Rb87_F2": RB87_F2,
    "Rb87_F1": RB87_F1,
}
