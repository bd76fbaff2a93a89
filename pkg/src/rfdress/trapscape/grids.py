"""Sampling potentials on rectangular grids."""

from dataclasses import dataclass
import warnings

import numpy as np
from scipy import ndimage

from ..errors import AllMasked, RfDressError


@dataclass(frozen=True, eq=False)
class GridRegion:
    """Box spanned by orthonormal ``axes`` around ``center``.

    ``half_widths`` gives the extent along each axis (scalar applies to all).
    """

    center: np.ndarray
    axes: np.ndarray = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0))
    half_widths: object = 1e-6

    def __post_init__(self):
        axes = np.atleast_2d(np.asarray(self.axes, dtype=float))
        if axes.shape[1] != 3 or not 1 <= axes.shape[0] <= 3:
            raise ValueError("axes must be 1 to 3 three-vectors")
        if not np.allclose(axes @ axes.T, np.eye(len(axes)), atol=1e-10):
            raise ValueError("axes must be orthonormal")
        hw = np.broadcast_to(np.asarray(self.half_widths, dtype=float), (len(axes),)).copy()
        if np.any(hw <= 0) or not np.all(np.isfinite(hw)):
            raise ValueError("half widths must be positive and finite")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(3))
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "half_widths", hw)


@dataclass(frozen=True, eq=False)
class ScalarFieldGrid:
    origin: np.ndarray
    axes: np.ndarray
    spacing: np.ndarray
    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        if np.any(np.asarray(self.spacing) <= 0):
            raise ValueError("grid spacing must be positive")
        if self.values.ndim != len(self.axes) or self.values.shape != self.mask.shape:
            raise ValueError("values shape does not match the grid axes")

    @property
    def shape(self):
        return self.values.shape

    def offsets(self):
        return [self.spacing[i] * np.arange(n) for i, n in enumerate(self.shape)]

    def points(self):
        """Positions of all samples, shape ``(*grid.shape, 3)``."""
        mesh = np.meshgrid(*self.offsets(), indexing="ij")
        return self.origin + sum(m[..., None] * a for m, a in zip(mesh, self.axes))

    def position(self, index):
        return self.origin + sum(i * s * a for i, s, a in zip(index, self.spacing, self.axes))

    def local_minima(self):
        """Interior samples that are no larger than all their neighbours."""
        v = np.where(self.mask, np.inf, self.values)
        low = ndimage.minimum_filter(v, size=3, mode="nearest")
        hit = (v == low) & ~self.mask & np.isfinite(v)
        interior = np.zeros_like(hit)
        interior[tuple(slice(1, -1) for _ in self.shape)] = True
        idx = np.argwhere(hit & interior)
        return [self.position(i) for i in idx]


def evaluate_points(potential, points):
    """Evaluate ``potential`` at ``points`` (..., 3); failures come back masked.

    The vectorised call is tried first. If it raises, points are evaluated one
    at a time so that a single bad sample does not lose the rest.
    """
    pts = np.asarray(points, dtype=float)
    flat = pts.reshape(-1, 3)
    try:
        with np.errstate(all="ignore"):
            vals = np.asarray(potential(flat), dtype=float).reshape(-1)
    except (RfDressError, ValueError, FloatingPointError, ZeroDivisionError):
        vals = np.empty(len(flat))
        for i, p in enumerate(flat):
            try:
                with np.errstate(all="ignore"):
                    vals[i] = float(potential(p))
            except (RfDressError, ValueError, FloatingPointError, ZeroDivisionError):
                vals[i] = np.nan
    mask = ~np.isfinite(vals)
    vals = np.where(mask, np.nan, vals)
    return vals.reshape(pts.shape[:-1]), mask.reshape(pts.shape[:-1])


def sample_grid(potential, region, resolution=41, min_resolution=8):
    """Sample ``potential`` densely over ``region``.

    Parameters
    ----------
    potential : callable
        ``r -> V`` accepting ``(N, 3)`` arrays.
    region : GridRegion
    resolution : int or sequence of int
        Samples per axis, endpoints included.

    Returns
    -------
    ScalarFieldGrid
        Samples that could not be evaluated are masked and set to NaN.
    """
    k = len(region.axes)
    res = np.broadcast_to(np.asarray(resolution, dtype=int), (k,))
    if np.any(res < min_resolution):
        raise ValueError(f"resolution must be at least {min_resolution} per axis")
    spacing = 2 * region.half_widths / (res - 1)
    origin = region.center - region.half_widths @ region.axes
    grid = ScalarFieldGrid(origin, region.axes, spacing, np.zeros(tuple(res)), np.zeros(tuple(res), bool))
    values, mask = evaluate_points(potential, grid.points())
    if mask.all():
        raise AllMasked("potential could not be evaluated at any grid sample")
    if mask.any():
        warnings.warn(f"{int(mask.sum())} grid samples could not be evaluated and are masked", stacklevel=2)
    return ScalarFieldGrid(origin, region.axes, spacing, values, mask)
