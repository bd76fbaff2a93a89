"""Adiabatic RF-dressed potentials in the rotating-wave approximation.

The production path projects the complex RF amplitude onto the circular
component that co-rotates with the Larmor precession about the local static
field. The closed-form expression for an ideal Ioffe trap with a homogeneous
two-component drive is kept as an independent cross-check.
"""

from dataclasses import dataclass

import numpy as np

from .constants import DEFAULT
from .errors import NotApplicable, Unsupported, ZeroStaticField
from .fieldkit import Homogeneous, eval_rf_amplitude, eval_static_field

ZERO_FIELD = 1e-15  # T


@dataclass(frozen=True)
class DressedConfig:
    species: object
    level: float = None
    include_gravity: bool = True
    rwa: bool = True

    def __post_init__(self):
        level = self.species.m_F if self.level is None else self.level
        if abs(level) > self.species.F or not float(self.species.F - level).is_integer():
            raise ValueError(f"dressed level {level} outside -F..F for F={self.species.F}")
        object.__setattr__(self, "level", level)


@dataclass(frozen=True)
class CouplingSample:
    r: np.ndarray
    B_s: np.ndarray
    detuning_T: np.ndarray
    rabi_T: np.ndarray
    potential_J: np.ndarray

    def rabi_angular(self, species, constants=DEFAULT):
        """Angular Rabi frequency (rad/s) equivalent to ``rabi_T``."""
        return abs(species.g_F) * constants.mu_B * self.rabi_T / constants.hbar


def detuning(scene, drive, species, r, constants=DEFAULT):
    """Local detuning in field units, ``|B_s(r)| - hbar w / |g_F mu_B|``."""
    B = np.linalg.norm(eval_static_field(scene, r), axis=-1)
    return B - species.larmor_field(drive.omega_rf, constants)


def transverse_triad(B_s):
    """Right-handed orthonormal triad ``(e1, e2, eB)`` with ``eB`` along ``B_s``."""
    B_s = np.asarray(B_s, dtype=float)
    norm = np.linalg.norm(B_s, axis=-1)
    if np.any(norm < ZERO_FIELD):
        raise ZeroStaticField("static field vanishes; adiabatic frame undefined")
    eB = B_s / norm[..., None]
    # helper axis: whichever Cartesian axis is least aligned with eB
    helper = np.zeros_like(eB)
    idx = np.argmin(np.abs(eB), axis=-1)
    np.put_along_axis(helper, idx[..., None], 1.0, axis=-1)
    e1 = np.cross(helper, eB)
    e1 /= np.linalg.norm(e1, axis=-1)[..., None]
    e2 = np.cross(eB, e1)
    return e1, e2, eB


def rabi_general(B_s, B_amp, species):
    """Field-equivalent Rabi coupling (T) from the co-rotating projection.

    For ``g_F > 0`` the spin precesses positively about the static field, and
    the coupling is ``|(e1 + i e2) . B~| / 2``. For ``g_F < 0`` the sense of
    precession flips, which is the same as conjugating the drive amplitude.
    The result does not depend on how ``(e1, e2)`` is rotated about ``eB``.
    """
    e1, e2, _ = transverse_triad(B_s)
    amp = np.asarray(B_amp, dtype=complex)
    if species.g_F < 0:
        amp = np.conj(amp)
    proj = np.sum((e1 + 1j * e2) * amp, axis=-1)
    return 0.5 * np.abs(proj)


def rabi_closed_form(scene, drive, species, r):
    """Rabi coupling (T) for an ideal Ioffe trap and homogeneous drive, in closed form.

    Polar coordinates ``rho, phi`` are taken in the quadrupole plane,
    ``tan(alpha) = B_B / B_A`` and the effective phase is
    ``gamma = -sgn(g_F) delta``.
    """
    ideal = scene.ideal
    if ideal is None or not isinstance(drive.mode, Homogeneous):
        raise NotApplicable("closed form needs a single ideal Ioffe trap and a homogeneous drive")
    if not np.allclose(ideal.axes, np.eye(3)):
        raise NotApplicable("closed form assumes the Ioffe trap frame is the scene frame")
    mode = drive.mode
    delta = mode.delta + np.pi * (mode.B_A < 0) + np.pi * (mode.B_B < 0)
    B_A, B_B = abs(mode.B_A), abs(mode.B_B)
    alpha = np.arctan2(B_B, B_A)
    gamma = -species.sign_g * delta

    loc = ideal.local(r)
    x, y = loc[..., 0], loc[..., 1]
    rho2 = x**2 + y**2
    phi = np.arctan2(y, x)
    G, B_I = ideal.G, ideal.B_I
    B = np.sqrt(G**2 * rho2 + B_I**2)
    rhs = 2 * B_I * (B_I + B * np.sin(2 * alpha) * np.sin(gamma)) + G**2 * rho2 * (
        1 - np.cos(2 * alpha) * np.cos(2 * phi) + np.sin(2 * alpha) * np.sin(2 * phi) * np.cos(gamma)
    )
    omega2 = (B_A**2 + B_B**2) * rhs / (8 * B**2)
    return np.sqrt(np.maximum(omega2, 0.0))


def gravity_energy(scene, species, r):
    """``-m g . r`` in joules."""
    return -species.mass * (np.asarray(r, dtype=float) @ scene.gravity)


def dressed_potential(scene, drive, cfg, r, constants=DEFAULT):
    """Adiabatic potential ``level g_F mu_B sqrt(Delta^2 + Omega^2)`` plus gravity."""
    if not cfg.rwa:
        raise Unsupported("only the rotating-wave potential is available; use the Floquet solver beyond it")
    sp = cfg.species
    r = np.asarray(r, dtype=float)
    B_s = eval_static_field(scene, r)
    B_amp = eval_rf_amplitude(drive, r)
    delta = np.linalg.norm(B_s, axis=-1) - sp.larmor_field(drive.omega_rf, constants)
    omega = rabi_general(B_s, B_amp, sp)
    V = cfg.level * sp.g_F * constants.mu_B * np.hypot(delta, omega)
    if cfg.include_gravity:
        V = V + gravity_energy(scene, sp, r)
    return CouplingSample(r=r, B_s=B_s, detuning_T=delta, rabi_T=omega, potential_J=V)


def dressed_manifold(scene, drive, species, r, constants=DEFAULT):
    """Energies (J) of the ``2F+1`` dressed levels at ``r``, ordered by level -F..F.

    Uses the same sign convention as :func:`dressed_potential`, so energies are
    monotone in ``level * sgn(g_F)`` and adjacent levels are spaced by
    ``|g_F| mu_B sqrt(Delta^2 + Omega^2)``.
    """
    cfg = DressedConfig(species, include_gravity=False)
    s = dressed_potential(scene, drive, cfg, r, constants)
    root = np.hypot(s.detuning_T, s.rabi_T)
    return species.levels * species.g_F * constants.mu_B * np.asarray(root)[..., None]


def level_spacing_hz(scene, drive, species, r, constants=DEFAULT):
    """Adjacent dressed-level spacing in Hz."""
    cfg = DressedConfig(species, include_gravity=False)
    s = dressed_potential(scene, drive, cfg, r, constants)
    return abs(species.g_F) * constants.mu_B * np.hypot(s.detuning_T, s.rabi_T) / constants.h


def potential_function(scene, drive, cfg, constants=DEFAULT):
    """Vectorised ``r -> V(r)`` for use with the trap analysis tools."""

    def V(r):
        return dressed_potential(scene, drive, cfg, r, constants).potential_J

    return V


def static_potential_function(scene, species, level=None, include_gravity=True, constants=DEFAULT):
    """``r -> level g_F mu_B |B_s(r)|`` (+ gravity) for a bare magnetic trap."""
    level = species.m_F if level is None else level

    def V(r):
        r = np.asarray(r, dtype=float)
        U = level * species.g_F * constants.mu_B * np.linalg.norm(eval_static_field(scene, r), axis=-1)
        if include_gravity:
            U = U + gravity_energy(scene, species, r)
        return U

    return V
