"""Trap analysis on sampled and dressed potentials."""

from .doublewell import (
    DoubleWellReport,
    QuarticFit,
    angular_distance_mod_pi,
    characterize_double_well,
    polarization_orientation_scan,
    profile_fit,
    quadrupole_plane,
    quartic_fit,
)
from .grids import GridRegion, ScalarFieldGrid, evaluate_points, sample_grid
from .minima import MinimaResult, TrapReport, find_minima, refine_minimum
from .spectroscopy import SpectroscopyCurve, elliptical_drive, spectroscopy_scan, trap_bottom
from .splitter import (
    SplitterComparison,
    TwoWireSplitter,
    compare_quartic_confinement,
    critical_rf_amplitude,
    critical_two_wire_bias,
    two_wire_splitter_potential,
)
