"""Static two-wire beam splitter and quartic-confinement comparison with RF splitting."""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ..constants import DEFAULT, MU_0
from ..dressed import DressedConfig, potential_function
from ..errors import NotAtCriticalPoint
from ..fieldkit import RfDrive, StaticScene, UniformBias, WireSegment, eval_static_field
from .doublewell import profile_fit


@dataclass(frozen=True)
class TwoWireSplitter:
    """Two parallel wires along z at ``x = -a, +a`` in the plane ``y = 0``.

    Both carry ``current`` in +z. The bias points along +x, the Ioffe field
    along +z. Atoms sit above the wires (``y > 0``).
    """

    half_separation: float
    current: float
    B_bias: float
    B_ioffe: float
    half_length: float = 1.0

    @property
    def critical_bias(self):
        """Bias at which the two field zeros on the midplane merge (at height ``a``)."""
        return MU_0 * self.current / (2 * np.pi * self.half_separation)

    @property
    def merge_point(self):
        return np.array([0.0, self.half_separation, 0.0])

    def null_heights(self):
        """Heights of the midplane field zeros for ``B_bias`` below critical."""
        k = MU_0 * self.current / (2 * np.pi * self.B_bias)
        disc = k**2 - self.half_separation**2
        if disc < 0:
            return np.array([])
        return np.array([k - np.sqrt(disc), k + np.sqrt(disc)])

    def with_bias(self, B_bias):
        return TwoWireSplitter(self.half_separation, self.current, B_bias, self.B_ioffe, self.half_length)

    def scene(self, gravity=(0.0, 0.0, 0.0)):
        a, L = self.half_separation, self.half_length
        wires = [WireSegment((x, 0.0, -L), (x, 0.0, L), self.current) for x in (-a, a)]
        bias = UniformBias((self.B_bias, 0.0, self.B_ioffe))
        return StaticScene(wires + [bias], gravity=gravity)

    @classmethod
    def from_critical_bias(cls, half_separation, B_bias, B_ioffe, **kw):
        """Choose the current that puts the merge point at ``B_bias``."""
        current = 2 * np.pi * half_separation * B_bias / MU_0
        return cls(half_separation, current, B_bias, B_ioffe, **kw)


def two_wire_splitter_potential(params, species, r, level=None, constants=DEFAULT):
    """``level g_F mu_B |B|`` of the two-wire configuration (no gravity)."""
    level = species.m_F if level is None else level
    B = eval_static_field(params.scene(), r)
    return level * species.g_F * constants.mu_B * np.linalg.norm(B, axis=-1)


@dataclass(frozen=True)
class SplitterComparison:
    d_rf: float  # J/m^4
    d_2w: float  # J/m^4
    b_rf: float
    b_2w: float
    B_bias: float
    B_ioffe: float

    @property
    def ratio(self):
        return self.d_rf / self.d_2w

    @property
    def predicted_ratio(self):
        return (self.B_bias / self.B_ioffe) ** 2


def _check_critical(fit, window, label):
    if abs(fit.b) > 1e-2 * abs(fit.d) * window**2:
        raise NotAtCriticalPoint(
            f"{label} profile is not at its splitting point: b = {fit.b:.4g} J/m^2 "
            f"exceeds 1e-2 d w^2 = {1e-2 * abs(fit.d) * window**2:.4g}",
            b=fit.b,
        )


def compare_quartic_confinement(rf_potential, rf_center, rf_direction, tw_potential, tw_center,
                                tw_direction, B_bias, B_ioffe, window=0.5e-6, tw_window=None, samples=201):
    """Quartic coefficients of two splitters, each at its critical point.

    Each potential is fitted by ``b s^2 + d s^4`` along its splitting
    direction; ``|b|`` must be below ``1e-2 d w^2`` on both sides.
    """
    tw_window = window if tw_window is None else tw_window
    rf = profile_fit(rf_potential, rf_center, rf_direction, window, samples)
    tw = profile_fit(tw_potential, tw_center, tw_direction, tw_window, samples)
    _check_critical(rf, window, "RF")
    _check_critical(tw, tw_window, "two-wire")
    return SplitterComparison(d_rf=rf.d, d_2w=tw.d, b_rf=rf.b, b_2w=tw.b, B_bias=B_bias, B_ioffe=B_ioffe)


def rf_split_profile_b(scene, omega_rf, species, amplitude, angle=0.0, window=0.5e-6, samples=201, level=None):
    """Quadratic coefficient along the splitting direction for a linear drive."""
    drive = RfDrive.linear(amplitude, angle, omega_rf)
    cfg = DressedConfig(species, level=level, include_gravity=False)
    ideal = scene.ideal
    center = ideal.center if ideal is not None else np.zeros(3)
    # wells open along azimuth -angle in the quadrupole plane
    direction = np.array([np.cos(-angle), np.sin(-angle), 0.0])
    return profile_fit(potential_function(scene, drive, cfg), center, direction, window, samples).b


def critical_rf_amplitude(scene, omega_rf, species, bracket, angle=0.0, window=0.5e-6, xtol=1e-16, **kw):
    """Drive amplitude at which the fitted ``b`` changes sign (single trap -> double well)."""
    f = lambda B: rf_split_profile_b(scene, omega_rf, species, B, angle, window, **kw)
    return brentq(f, *bracket, xtol=xtol, rtol=1e-14)


def two_wire_profile_b(params, species, window=0.5e-6, samples=201, level=None):
    pot = lambda r: two_wire_splitter_potential(params, species, r, level)
    return profile_fit(pot, params.merge_point, (1.0, 0.0, 0.0), window, samples).b


def critical_two_wire_bias(params, species, bracket=None, window=0.5e-6, xtol=1e-16, **kw):
    """Bias at which the horizontal quadratic coefficient at the merge height vanishes."""
    if bracket is None:
        Bc = params.critical_bias
        bracket = (0.9 * Bc, 1.1 * Bc)
    f = lambda B: two_wire_profile_b(params.with_bias(B), species, window, **kw)
    return brentq(f, *bracket, xtol=xtol, rtol=1e-14)
