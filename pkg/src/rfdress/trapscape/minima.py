"""Minimum search and harmonic trap characterisation."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import NoConvergence
from .grids import ScalarFieldGrid


@dataclass(frozen=True, eq=False)
class TrapReport:
    position: np.ndarray
    potential: float
    hessian: np.ndarray  # J/m^2 in the scene frame, restricted to the search subspace
    curvatures: np.ndarray  # Hessian eigenvalues, ascending
    principal_axes: np.ndarray  # rows are scene-frame unit vectors
    frequencies: np.ndarray  # rad/s, sqrt(curvature / mass); empty if no mass given
    is_minimum: bool
    iterations: int = 0


@dataclass
class MinimaResult:
    reports: list
    failures: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.reports)

    def __len__(self):
        return len(self.reports)

    def __getitem__(self, i):
        return self.reports[i]


def _stencil(k, h):
    """Offsets for central first and second differences in ``k`` dimensions."""
    offsets = [np.zeros(k)]
    for i in range(k):
        for s in (1, -1):
            e = np.zeros(k)
            e[i] = s * h
            offsets.append(e)
    for i in range(k):
        for j in range(i + 1, k):
            for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                e = np.zeros(k)
                e[i], e[j] = si * h, sj * h
                offsets.append(e)
    return np.array(offsets)


def fd_derivatives(potential, r, axes, h):
    """Value, gradient and Hessian of ``potential`` along ``axes`` at ``r``."""
    k = len(axes)
    offs = _stencil(k, h)
    pts = r + offs @ axes
    v = np.asarray(potential(pts), dtype=float).reshape(-1)
    v0 = v[0]
    grad = np.empty(k)
    hess = np.empty((k, k))
    for i in range(k):
        vp, vm = v[1 + 2 * i], v[2 + 2 * i]
        grad[i] = (vp - vm) / (2 * h)
        hess[i, i] = (vp - 2 * v0 + vm) / h**2
    n = 1 + 2 * k
    for i in range(k):
        for j in range(i + 1, k):
            pp, pm, mp, mm = v[n : n + 4]
            n += 4
            hess[i, j] = hess[j, i] = (pp - pm - mp + mm) / (4 * h**2)
    return v0, grad, hess


def _report(potential, r, axes, h, mass, iterations, psd_tol):
    v0, _, hess = fd_derivatives(potential, r, axes, h)
    lam, vec = np.linalg.eigh(hess)
    scale = max(np.max(np.abs(lam)), np.finfo(float).tiny)
    is_min = bool(lam[0] >= -psd_tol * scale)
    freqs = np.sqrt(np.maximum(lam, 0.0) / mass) if mass else np.array([])
    return TrapReport(
        position=r,
        potential=float(v0),
        hessian=axes.T @ hess @ axes,
        curvatures=lam,
        principal_axes=vec.T @ axes,
        frequencies=freqs,
        is_minimum=is_min,
        iterations=iterations,
    )


def refine_minimum(potential, seed, axes=None, *, h=1e-8, gtol=1e-30, gtol_rel=None, xtol=1e-12,
                   max_step=1e-6, max_iter=300, mass=None, psd_tol=1e-6):
    """Damped Newton descent from ``seed`` restricted to ``seed + span(axes)``.

    Directions of non-positive curvature fall back to a gradient step, and
    every step is backtracked until the potential decreases. Convergence
    needs both a small gradient and a step below ``xtol``. ``gtol_rel``
    replaces the absolute gradient threshold by ``gtol_rel * |V| / max_step``.
    """
    axes = np.eye(3) if axes is None else np.atleast_2d(np.asarray(axes, dtype=float))
    r = np.asarray(seed, dtype=float).reshape(3).copy()
    stalled = 0
    for it in range(1, max_iter + 1):
        v0, g, H = fd_derivatives(potential, r, axes, h)
        if not np.isfinite(v0) or not np.all(np.isfinite(g)):
            raise NoConvergence(f"potential not finite near {r}")
        lam, Q = np.linalg.eigh(H)
        gq = Q.T @ g
        lam_ref = max(np.max(np.abs(lam)), np.finfo(float).tiny)
        # curvature within psd_tol of zero (the slack is_minimum also allows) is a flat direction,
        # e.g. the tangent of a ring where the potential is quartic, not a Newton or escape direction
        flat = psd_tol * lam_ref
        sq = np.empty_like(gq)
        for i, (l, gi) in enumerate(zip(lam, gq)):
            if l > flat:
                sq[i] = -gi / l
            elif l < -flat:
                sq[i] = -np.sign(gi) * max_step if gi != 0 else max_step
            else:
                sq[i] = -gi / lam_ref
        step = Q @ sq
        norm = np.linalg.norm(step)
        if norm > max_step:
            step *= max_step / norm
        # backtracking on the potential itself
        t = 1.0
        slope = g @ step
        while True:
            trial = r + (t * step) @ axes
            vt = float(np.asarray(potential(trial[None, :])).reshape(-1)[0])
            # allow for rounding in V once steps are tiny
            if np.isfinite(vt) and vt <= v0 + 1e-4 * t * min(slope, 0.0) + 4 * np.finfo(float).eps * abs(v0):
                break
            t *= 0.5
            if t < 1e-12:
                t = 0.0
                break
        r = r + (t * step) @ axes
        moved = t * np.linalg.norm(step)
        tol_g = gtol if gtol_rel is None else gtol_rel * abs(v0) / max_step
        stalled = stalled + 1 if moved < xtol else 0
        if moved < xtol and (np.linalg.norm(g) < tol_g or stalled >= 3):
            return _report(potential, r, axes, h, mass, it, psd_tol)
    raise NoConvergence(f"no convergence from seed {seed} after {max_iter} iterations")


def find_minima(potential, seeds=None, grid=None, axes=None, *, merge_tol=1e-9, mass=None, **kw):
    """Refine every seed to a local minimum.

    Seeds default to the interior local minima of ``grid``; the search then
    stays in the grid's subspace unless ``axes`` is given. Seeds that fail to
    converge are collected in ``failures`` rather than raised. Minima closer
    than ``merge_tol`` are merged, and reports are sorted by potential.
    """
    if seeds is None:
        if grid is None:
            raise ValueError("need seeds or a grid")
        seeds = grid.local_minima()
    if axes is None and isinstance(grid, ScalarFieldGrid):
        axes = grid.axes
    seeds = [np.asarray(s, dtype=float) for s in seeds]
    if not seeds:
        raise ValueError("no seeds to refine")
    reports, failures = [], []
    for s in seeds:
        try:
            reports.append(refine_minimum(potential, s, axes, mass=mass, **kw))
        except NoConvergence as exc:
            failures.append((s, exc))
    reports.sort(key=lambda t: (t.potential, tuple(t.position)))
    merged = []
    for rep in reports:
        if all(np.linalg.norm(rep.position - m.position) > merge_tol for m in merged):
            merged.append(rep)
    return MinimaResult(merged, failures)
