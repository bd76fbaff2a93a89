"""Double-well characterisation: well geometry, barrier and quartic shape."""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import minimize_scalar

from ..errors import FitIllConditioned, SingleWell
from .grids import GridRegion, sample_grid
from .minima import find_minima


@dataclass(frozen=True)
class QuarticFit:
    """``V(s) ~ c0 + c1 s + b s^2 + c3 s^3 + d s^4`` around the profile centre."""

    coefficients: np.ndarray  # c0..c4
    residual: float  # rms misfit, J
    half_window: float

    @property
    def b(self):
        return float(self.coefficients[2])

    @property
    def d(self):
        return float(self.coefficients[4])

    @property
    def odd(self):
        return float(self.coefficients[1]), float(self.coefficients[3])


def quartic_fit(s, v):
    """Least-squares degree-4 polynomial fit of ``v`` against ``s``."""
    s = np.asarray(s, dtype=float)
    v = np.asarray(v, dtype=float)
    ok = np.isfinite(v)
    if ok.sum() < 5:
        raise FitIllConditioned("quartic fit needs at least 5 samples")
    s, v = s[ok], v[ok]
    s_scale = np.max(np.abs(s))
    v_off = np.mean(v)
    v_scale = max(np.max(np.abs(v - v_off)), np.finfo(float).tiny)
    c = P.polyfit(s / s_scale, (v - v_off) / v_scale, 4)
    c = c * v_scale / s_scale ** np.arange(5)
    c[0] += v_off
    resid = v - P.polyval(s, c)
    return QuarticFit(coefficients=c, residual=float(np.sqrt(np.mean(resid**2))), half_window=float(s_scale))


def profile(potential, center, direction, half_window, samples=201):
    """Potential along ``center + s * direction`` for ``s`` in ``[-half_window, half_window]``."""
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    s = np.linspace(-half_window, half_window, samples)
    pts = np.asarray(center, dtype=float) + s[:, None] * direction
    return s, np.asarray(potential(pts), dtype=float).reshape(-1)


def profile_fit(potential, center, direction, half_window, samples=201):
    if samples < 5:
        raise FitIllConditioned("fit window needs at least 5 samples")
    s, v = profile(potential, center, direction, half_window, samples)
    return quartic_fit(s, v)


@dataclass(frozen=True, eq=False)
class DoubleWellReport:
    well_positions: np.ndarray  # (2, 3); first well on the -n side
    well_potentials: np.ndarray
    separation: float
    orientation: float  # rad in [0, pi) from the plane's first axis
    direction: np.ndarray  # unit vector from first to second well
    saddle_position: np.ndarray
    barrier_height: float
    asymmetry: float  # V(second) - V(first)
    quartic_fit: QuarticFit
    wells: tuple = ()


def orientation_angle(vector, axes):
    """Angle of ``vector`` in the plane of ``axes``, reduced to [0, pi)."""
    theta = np.arctan2(vector @ axes[1], vector @ axes[0]) % np.pi
    return 0.0 if np.isclose(theta, np.pi, rtol=0, atol=1e-12) else float(theta)


def characterize_double_well(potential, plane, fit_window=None, *, resolution=41, samples=201,
                             mass=None, min_separation=None, **minima_kw):
    """Locate and characterise a double well in a plane.

    Parameters
    ----------
    potential : callable
        Vectorised ``r -> V``.
    plane : GridRegion
        Two-axis region searched for minima. Orientation is measured from
        ``plane.axes[0]`` towards ``plane.axes[1]``.
    fit_window : float, optional
        Half length of the profile used for the quartic fit. By default the
        segment between the wells extended by half its length on each side.

    Raises
    ------
    SingleWell
        Fewer than two minima were found. The exception carries the quadratic
        coefficient ``b`` of a fit along the softest direction.
    """
    if len(plane.axes) != 2:
        raise ValueError("plane must have exactly two axes")
    grid = sample_grid(potential, plane, resolution)
    seeds = grid.local_minima()
    if not seeds:
        seeds = [plane.center]
    found = find_minima(potential, seeds=seeds, axes=plane.axes, mass=mass, **minima_kw)
    wells = [w for w in found if w.is_minimum]
    if min_separation is None:
        min_separation = 2 * np.min(grid.spacing) * 1e-3
    distinct = []
    for w in wells:
        if all(np.linalg.norm(w.position - o.position) > min_separation for o in distinct):
            distinct.append(w)
    if len(distinct) < 2:
        if not distinct:
            raise SingleWell("no minimum found in the plane", b=None)
        w = distinct[0]
        soft = w.principal_axes[0]
        hw = fit_window if fit_window is not None else 0.25 * float(np.min(plane.half_widths))
        fit = profile_fit(potential, w.position, soft, hw, samples)
        raise SingleWell(f"only one minimum found (b = {fit.b:.4g} J/m^2)", b=fit.b, report=w)

    a, c = sorted(distinct[:2], key=lambda t: t.potential)
    sep_vec = c.position - a.position
    theta = orientation_angle(sep_vec, plane.axes)
    n = np.cos(theta) * plane.axes[0] + np.sin(theta) * plane.axes[1]
    # order wells along n
    first, second = (a, c) if sep_vec @ n > 0 else (c, a)
    d_w = float(np.linalg.norm(sep_vec))
    mid = 0.5 * (first.position + second.position)
    direction = (second.position - first.position) / d_w

    # saddle: maximum of V on the straight segment between the wells
    def neg(s):
        return -float(np.asarray(potential((mid + s * direction)[None, :])).reshape(-1)[0])

    res = minimize_scalar(neg, bounds=(-0.5 * d_w, 0.5 * d_w), method="bounded",
                          options={"xatol": 1e-6 * d_w})
    saddle = mid + res.x * direction
    v_saddle = -res.fun
    barrier = max(v_saddle - 0.5 * (first.potential + second.potential), 0.0)

    hw = d_w if fit_window is None else fit_window
    fit = profile_fit(potential, mid, direction, hw, samples)
    return DoubleWellReport(
        well_positions=np.array([first.position, second.position]),
        well_potentials=np.array([first.potential, second.potential]),
        separation=d_w,
        orientation=theta,
        direction=direction,
        saddle_position=saddle,
        barrier_height=float(barrier),
        asymmetry=float(second.potential - first.potential),
        quartic_fit=fit,
        wells=(first, second),
    )


def polarization_orientation_scan(scene, amplitude, omega_rf, angles, cfg, plane, **kw):
    """Double-well orientation for linear polarisation at each angle.

    The drive is ``B_A = amplitude cos(theta)``, ``B_B = amplitude sin(theta)``,
    ``delta = 0``. Returns an array of ``(theta_pol, theta_dw)`` rows.
    """
    from ..dressed import potential_function
    from ..fieldkit import RfDrive

    rows = []
    for theta in angles:
        drive = RfDrive.linear(amplitude, theta, omega_rf)
        rep = characterize_double_well(potential_function(scene, drive, cfg), plane, **kw)
        rows.append((float(theta), rep.orientation))
    return np.array(rows)


def angular_distance_mod_pi(a, b):
    """Smallest distance between two axis orientations (mod pi)."""
    d = (np.asarray(a) - np.asarray(b)) % np.pi
    return np.minimum(d, np.pi - d)


def quadrupole_plane(scene, half_width, center=None):
    """Region in the quadrupole (x-y) plane through the static trap centre."""
    if center is None:
        ideal = scene.ideal
        center = ideal.center if ideal is not None else np.zeros(3)
    return GridRegion(center=center, axes=((1, 0, 0), (0, 1, 0)), half_widths=half_width)
