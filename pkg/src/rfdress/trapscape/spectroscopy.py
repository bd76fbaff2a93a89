"""Trap-bottom resonance frequency as a function of the RF phase shift."""

from dataclasses import dataclass

import numpy as np

from ..constants import DEFAULT
from ..dressed import DressedConfig, level_spacing_hz, potential_function
from ..errors import NoConvergence
from ..fieldkit import Homogeneous, RfDrive
from .doublewell import quadrupole_plane
from .grids import sample_grid
from .minima import refine_minimum


@dataclass(frozen=True, eq=False)
class SpectroscopyCurve:
    delta_values: np.ndarray  # rad
    resonance_frequencies: np.ndarray  # Hz, adjacent dressed-level spacing at the minimum
    minimum_positions: np.ndarray  # (n, 3) m
    minimum_potentials: np.ndarray  # J


def elliptical_drive(B_A, ratio, delta, omega_rf):
    """``B_A (1, 0, 0) + ratio B_A e^{i delta} (0, 1, 0)``."""
    return RfDrive(Homogeneous(B_A, ratio * B_A, delta), omega_rf)


def trap_bottom(scene, drive, cfg, half_width, resolution=41, constants=DEFAULT):
    """Global minimum of the dressed potential in the quadrupole plane.

    The coarse grid picks the lowest sample; Newton refinement takes it from
    there. Returns ``(position, potential)``.
    """
    pot = potential_function(scene, drive, cfg, constants)
    plane = quadrupole_plane(scene, half_width)
    grid = sample_grid(pot, plane, resolution)
    v = np.where(grid.mask, np.inf, grid.values)
    seed = grid.position(np.unravel_index(np.argmin(v), v.shape))
    rep = refine_minimum(pot, seed, plane.axes, gtol_rel=1e-12)
    return rep.position, rep.potential


def spectroscopy_scan(scene, B_A, omega_rf, deltas, species, *, ratio=1.2, half_width=5e-6,
                      include_gravity=True, level=None, resolution=41, constants=DEFAULT):
    """Resonance frequency at the trap bottom across a scan of the phase shift.

    Parameters
    ----------
    scene : StaticScene
    B_A : float
        Amplitude along x (T); the y amplitude is ``ratio * B_A``.
    omega_rf : float
        Angular RF frequency (rad/s).
    deltas : array_like
        Phase shifts (rad).
    species : Species
        Sets ``g_F`` and hence which handedness couples.

    Raises
    ------
    NoConvergence
        The minimum could not be refined for some ``delta``.
    """
    cfg = DressedConfig(species, level=level, include_gravity=include_gravity)
    deltas = np.asarray(deltas, dtype=float)
    pos = np.empty((len(deltas), 3))
    vmin = np.empty(len(deltas))
    freq = np.empty(len(deltas))
    for i, d in enumerate(deltas):
        drive = elliptical_drive(B_A, ratio, d, omega_rf)
        try:
            pos[i], vmin[i] = trap_bottom(scene, drive, cfg, half_width, resolution, constants)
        except NoConvergence as exc:
            raise NoConvergence(f"trap bottom not found at delta = {d:.6g}: {exc}") from exc
        freq[i] = level_spacing_hz(scene, drive, species, pos[i], constants)
    return SpectroscopyCurve(delta_values=deltas, resonance_frequencies=freq,
                             minimum_positions=pos, minimum_potentials=vmin)
