"""Time-of-flight observables: free expansion, fringe fitting, phase statistics.

Propagation is linear (no mean-field term) and two dimensional, in the plane
transverse to the long axis of the cloud.
"""

from dataclasses import dataclass
import warnings

import numpy as np
from scipy.optimize import minimize

from .constants import HBAR
from .errors import AliasingRisk, DomainTooSmall, NoFringePeak


@dataclass(frozen=True, eq=False)
class Wavefunction2D:
    """Complex amplitudes on an ``N x M`` mesh; axis 0 is x, axis 1 is y.

    Normalised so that ``sum |psi|^2 dx dy`` is the atom number fraction (1).
    """

    psi: np.ndarray
    spacing: tuple
    origin: tuple

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=complex)
        if psi.ndim != 2:
            raise ValueError("psi must be two dimensional")
        sp = tuple(float(s) for s in np.broadcast_to(self.spacing, (2,)))
        if min(sp) <= 0:
            raise ValueError("spacing must be positive")
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "spacing", sp)
        object.__setattr__(self, "origin", tuple(float(o) for o in np.broadcast_to(self.origin, (2,))))

    @property
    def shape(self):
        return self.psi.shape

    @property
    def cell_area(self):
        return self.spacing[0] * self.spacing[1]

    @property
    def extent(self):
        return tuple(n * s for n, s in zip(self.shape, self.spacing))

    def coordinates(self):
        """1D coordinate arrays ``(x, y)``."""
        return tuple(o + s * np.arange(n) for o, s, n in zip(self.origin, self.spacing, self.shape))

    def density(self):
        return np.abs(self.psi) ** 2

    def norm(self):
        return float(np.sum(self.density()) * self.cell_area)

    def moments(self):
        """Mean position and covariance of the density (m, m^2)."""
        return density_moments(self.density(), self.spacing, self.origin)

    @classmethod
    def centered_grid(cls, shape, extent, psi=None):
        """Mesh of ``shape`` points covering ``extent`` (m) centred on the origin."""
        shape = tuple(int(n) for n in np.broadcast_to(shape, (2,)))
        extent = np.broadcast_to(np.asarray(extent, dtype=float), (2,))
        spacing = extent / np.array(shape)
        origin = -0.5 * extent
        if psi is None:
            psi = np.zeros(shape, complex)
        return cls(psi, tuple(spacing), tuple(origin))


def density_moments(rho, spacing, origin):
    x = origin[0] + spacing[0] * np.arange(rho.shape[0])
    y = origin[1] + spacing[1] * np.arange(rho.shape[1])
    w = rho / rho.sum()
    px, py = w.sum(axis=1), w.sum(axis=0)
    mx, my = px @ x, py @ y
    cxx = px @ (x - mx) ** 2
    cyy = py @ (y - my) ** 2
    cxy = (x - mx) @ w @ (y - my)
    return np.array([mx, my]), np.array([[cxx, cxy], [cxy, cyy]])


def _is_pow2(n):
    return n > 0 and n & (n - 1) == 0


def _wavenumbers(psi):
    return [2 * np.pi * np.fft.fftfreq(n, d=s) for n, s in zip(psi.shape, psi.spacing)]


def expanded_variance(psi, time, mass):
    """Exact position variance per axis after free flight.

    ``<x^2>(t) = <x^2> + (t/m) <xp + px> + (t/m)^2 <p^2>`` (central moments),
    evaluated from the current state.
    """
    phi = psi.psi
    rho = np.abs(phi) ** 2
    total = rho.sum()
    coords = psi.coordinates()
    ks = _wavenumbers(psi)
    spec = np.fft.fft2(phi)
    out = []
    for ax in range(2):
        shape = [1, 1]
        shape[ax] = -1
        x = coords[ax].reshape(shape)
        k = ks[ax].reshape(shape)
        mx = float(np.sum(rho * x) / total)
        dphi = np.fft.ifft2(1j * k * spec)  # d psi / dx
        # p = -i hbar d/dx
        mp = float(np.real(np.sum(np.conj(phi) * (-1j) * dphi)) / total) * HBAR
        p2 = float(np.sum(np.abs(dphi) ** 2) / total) * HBAR**2
        xp = float(np.real(np.sum(np.conj(phi) * x * (-1j) * dphi)) / total) * HBAR
        var_x = float(np.sum(rho * (x - mx) ** 2) / total)
        cov = xp - mx * mp
        var_p = p2 - mp**2
        out.append(var_x + 2 * time / mass * cov + (time / mass) ** 2 * var_p)
    return np.array(out)


def free_expand(psi, time, mass, check_aliasing=True):
    """Free-particle evolution by one spectral step.

    The spectrum is multiplied by ``exp(-i hbar k^2 t / (2 m))``. Grid sizes
    must be powers of two. Emits :class:`AliasingRisk` when twice the rms
    width of the expanded cloud along an axis exceeds a quarter of the box.
    """
    if time < 0:
        raise ValueError("time must be non-negative")
    if not all(_is_pow2(n) for n in psi.shape):
        raise ValueError(f"grid sizes must be powers of two, got {psi.shape}")
    if time == 0:
        return Wavefunction2D(psi.psi.copy(), psi.spacing, psi.origin)
    if check_aliasing:
        width = 2 * np.sqrt(np.maximum(expanded_variance(psi, time, mass), 0.0))
        for ax, (w, L) in enumerate(zip(width, psi.extent)):
            if w > L / 4:
                warnings.warn(
                    f"expanded cloud width {w:.3g} m along axis {ax} exceeds a quarter of the box ({L:.3g} m)",
                    AliasingRisk,
                    stacklevel=2,
                )
    kx, ky = _wavenumbers(psi)
    k2 = kx[:, None] ** 2 + ky[None, :] ** 2
    prop = np.exp(-1j * HBAR * k2 * time / (2 * mass))
    out = np.fft.ifft2(np.fft.fft2(psi.psi) * prop)
    return Wavefunction2D(out, psi.spacing, psi.origin)


def gaussian_packet(grid, center, sigma, momentum=(0.0, 0.0)):
    """Normalised Gaussian whose density has rms width ``sigma`` (scalar or per axis)."""
    x, y = grid.coordinates()
    sx, sy = np.broadcast_to(np.asarray(sigma, dtype=float), (2,))
    X, Y = x[:, None] - center[0], y[None, :] - center[1]
    amp = np.exp(-(X**2) / (4 * sx**2) - Y**2 / (4 * sy**2)) * np.exp(1j * (momentum[0] * X + momentum[1] * Y) / HBAR)
    amp /= np.sqrt(np.sum(np.abs(amp) ** 2) * grid.cell_area)
    return amp


def double_source_components(grid, d, angle, sigma0, imbalance=0.5, sigma_perp=None):
    """The two normalised sources, weighted by their populations.

    Source 1 sits at ``-d/2`` along the axis, source 2 at ``+d/2``;
    ``imbalance`` is the population of source 2.
    """
    if d <= 0 or sigma0 <= 0:
        raise ValueError("d and sigma0 must be positive")
    if not 0 <= imbalance <= 1:
        raise ValueError("imbalance must lie in [0, 1]")
    sigma_perp = sigma0 if sigma_perp is None else sigma_perp
    n = np.array([np.cos(angle), np.sin(angle)])
    # size along the well axis, projected onto each box dimension
    reach = np.abs(n) * (d + 6 * sigma0) + np.abs(n[::-1]) * 6 * sigma_perp
    if np.any(reach > np.array(grid.extent)):
        raise DomainTooSmall(f"sources need {reach} m but the box is {grid.extent} m")
    comps = []
    for s, w in ((-0.5, 1 - imbalance), (0.5, imbalance)):
        c = s * d * n
        x, y = grid.coordinates()
        X, Y = x[:, None] - c[0], y[None, :] - c[1]
        u = X * n[0] + Y * n[1]
        v = -X * n[1] + Y * n[0]
        amp = np.exp(-(u**2) / (4 * sigma0**2) - v**2 / (4 * sigma_perp**2)).astype(complex)
        amp /= np.sqrt(np.sum(np.abs(amp) ** 2) * grid.cell_area)
        comps.append(np.sqrt(w) * amp)
    return comps


def double_source_state(d, angle, sigma0, phase_rel=0.0, imbalance=0.5, *, shape=(512, 512),
                        extent=(128e-6, 128e-6), sigma_perp=None):
    """Two coherent Gaussians at ``-+d/2`` along ``angle``.

    ``phase_rel`` multiplies the source at ``-d/2``, so the expanded pattern is
    ``1 + C cos(k n.r + phase_rel)`` with ``n`` the unit vector along the axis.
    ``sigma0`` is the rms width of each source density.

    Raises
    ------
    DomainTooSmall
        ``d + 6 sigma0`` does not fit in the box.
    """
    grid = Wavefunction2D.centered_grid(shape, extent)
    a, b = double_source_components(grid, d, angle, sigma0, imbalance, sigma_perp)
    psi = np.exp(1j * phase_rel) * a + b
    psi /= np.sqrt(np.sum(np.abs(psi) ** 2) * grid.cell_area)
    return Wavefunction2D(psi, grid.spacing, grid.origin)


def fringe_period(d, time, mass):
    """Far-field two-source fringe period ``h t / (m d)``."""
    return 2 * np.pi * HBAR * time / (mass * d)


ANGLE_SNAP = 1e-4


@dataclass(frozen=True)
class FringeFit:
    spacing: float  # m
    angle: float  # rad in [0, pi), direction of the fringe normal
    phase: float  # rad in (-pi, pi], referenced to the physical origin
    contrast: float
    wavevector: tuple  # rad/m


def _windowed(rho, window):
    if window is None or window == "none":
        return np.ones_like(rho)
    if window == "hann":
        return np.outer(np.hanning(rho.shape[0]), np.hanning(rho.shape[1]))
    raise ValueError(f"unknown window {window!r}")


def _dtft(f, x, y, k):
    # two real products avoid casting the image to complex on every call
    row = np.cos(k[0] * x) @ f - 1j * (np.sin(k[0] * x) @ f)
    return row @ np.exp(-1j * k[1] * y)


def fit_fringes(image, spacing=(1.0, 1.0), origin=(0.0, 0.0), window="hann", k_min=None):
    """Dominant straight-fringe component of a density image.

    The peak of the windowed 2D spectrum (mean removed) is located on the FFT
    grid, then refined off-grid by maximising the transform magnitude. The
    phase is the argument of the transform at the refined wavevector, with
    positions measured from the physical origin, so the image is modelled as
    ``1 + C cos(k n.r + phase)``. The sign of ``n`` is chosen so that its
    angle lies in ``[0, pi)``.

    Parameters
    ----------
    image : (N, M) array
        Non-negative density; axis 0 is x.
    k_min : float, optional
        Wavenumbers below this are ignored when looking for the peak. The
        default, ``2 / sigma`` with ``sigma`` the largest rms size of the
        image, keeps the cloud envelope from being mistaken for a fringe.

    Raises
    ------
    NoFringePeak
        All non-DC power is below ``1e-6`` of the DC power.
    """
    rho = np.asarray(image, dtype=float)
    if rho.ndim != 2:
        raise ValueError("image must be two dimensional")
    if np.any(rho < 0) or not np.all(np.isfinite(rho)):
        raise ValueError("image must be finite and non-negative")
    dx, dy = np.broadcast_to(np.asarray(spacing, dtype=float), (2,))
    x = origin[0] + dx * np.arange(rho.shape[0])
    y = origin[1] + dy * np.arange(rho.shape[1])

    spec = np.fft.fft2(rho)
    power = np.abs(spec) ** 2
    dc = power[0, 0]
    if dc == 0 or power.sum() - dc < 1e-6 * dc:
        raise NoFringePeak("no spectral power away from DC")

    w = _windowed(rho, window)
    f = (rho - np.sum(rho * w) / np.sum(w)) * w
    kx = 2 * np.pi * np.fft.fftfreq(rho.shape[0], dx)
    ky = 2 * np.pi * np.fft.fftfreq(rho.shape[1], dy)
    if k_min is None:
        _, cov = density_moments(rho, (dx, dy), origin)
        k_min = 2.0 / np.sqrt(np.max(np.linalg.eigvalsh(cov)))
    K = np.hypot(kx[:, None], ky[None, :])
    # half plane of the spectrum; angle in [0, pi)
    theta = np.arctan2(ky[None, :], kx[:, None])
    half = ((theta >= 0) & (theta < np.pi)) & (K >= k_min)
    P = np.abs(np.fft.fft2(f)) ** 2
    P = np.where(half, P, -1.0)
    if P.max() <= 0:
        raise NoFringePeak("no fringe peak above the envelope cutoff")
    # deterministic tie-break: smallest angle, then smallest |k|
    best = P.max()
    cand = np.argwhere(P >= best * (1 - 1e-12))
    order = sorted(cand, key=lambda ij: (theta[ij[0], ij[1]], K[ij[0], ij[1]]))
    i, j = order[0]
    k0 = np.array([kx[i], ky[j]])

    scale = np.array([2 * np.pi / (rho.shape[0] * dx), 2 * np.pi / (rho.shape[1] * dy)])

    def neg(u):
        return -np.abs(_dtft(f, x, y, k0 + u * scale))

    # stay within one bin of the coarse peak; |transform| is even in k
    simplex = np.array([[0.0, 0.0], [0.3, 0.0], [0.0, 0.3]])
    res = minimize(neg, np.zeros(2), method="Nelder-Mead", bounds=[(-1, 1), (-1, 1)],
                   options={"xatol": 1e-6, "fatol": 1e-13 * abs(neg(np.zeros(2))), "maxiter": 400,
                            "initial_simplex": simplex})
    k = k0 + res.x * scale
    # keep the normal in [0, pi); directions within ANGLE_SNAP of the x axis count as 0
    a = np.arctan2(k[1], k[0]) % (2 * np.pi)
    if np.pi - ANGLE_SNAP <= a < 2 * np.pi - ANGLE_SNAP:
        k = -k
    M = _dtft(f, x, y, k)
    kmag = float(np.hypot(*k))
    angle = float(max(np.arctan2(k[1], k[0]), 0.0))
    contrast = float(min(2 * np.abs(M) / np.sum(rho * w), 1.0))
    return FringeFit(spacing=2 * np.pi / kmag, angle=angle, phase=float(np.angle(M)),
                     contrast=contrast, wavevector=(float(k[0]), float(k[1])))


def fit_wavefunction_fringes(psi, **kw):
    return fit_fringes(psi.density(), psi.spacing, psi.origin, **kw)


@dataclass(frozen=True)
class PhaseStats:
    circular_mean: float  # rad
    circular_std: float  # rad
    rayleigh_p: float
    resultant_length: float
    n: int


def rayleigh_test(phases):
    """Rayleigh test p-value for uniformity, with the finite-sample series correction."""
    phi = np.asarray(phases, dtype=float)
    n = phi.size
    R = np.abs(np.mean(np.exp(1j * phi)))
    z = n * R**2
    p = np.exp(-z) * (1 + (2 * z - z**2) / (4 * n) - (24 * z - 132 * z**2 + 76 * z**3 - 9 * z**4) / (288 * n**2))
    return float(np.clip(p, 0.0, 1.0))


def phase_statistics(phases):
    """Circular mean, circular standard deviation and Rayleigh p-value."""
    phi = np.asarray(phases, dtype=float).reshape(-1)
    if phi.size < 2:
        raise ValueError("need at least two phases")
    z = np.mean(np.exp(1j * phi))
    R = float(min(np.abs(z), 1.0))
    std = float(np.sqrt(-2 * np.log(R))) if R > 0 else np.inf
    return PhaseStats(circular_mean=float(np.angle(z)), circular_std=std, rayleigh_p=rayleigh_test(phi),
                      resultant_length=R, n=int(phi.size))


def draw_shot_phases(rng, n_shots, mode, phase_rel=0.0, sigma=0.2):
    """Per-shot relative phases: Gaussian jitter around ``phase_rel`` or uniform."""
    if mode == "coherent":
        return phase_rel + sigma * rng.standard_normal(n_shots)
    if mode == "independent":
        return rng.uniform(-np.pi, np.pi, n_shots)
    raise ValueError(f"unknown mode {mode!r}")


@dataclass(frozen=True, eq=False)
class ExpandedPair:
    """Both sources after the same flight; shots differ only by the relative phase."""

    first: Wavefunction2D
    second: Wavefunction2D

    def density(self, phase_rel):
        return np.abs(np.exp(1j * phase_rel) * self.first.psi + self.second.psi) ** 2

    def fit(self, phase_rel, **kw):
        g = self.first
        return fit_fringes(self.density(phase_rel), g.spacing, g.origin, **kw)


def expand_double_source(d, time, mass, angle=0.0, sigma0=0.4e-6, imbalance=0.5, *, shape=(512, 512),
                         extent=(128e-6, 128e-6), sigma_perp=None):
    grid = Wavefunction2D.centered_grid(shape, extent)
    a, b = double_source_components(grid, d, angle, sigma0, imbalance, sigma_perp)
    wa = free_expand(Wavefunction2D(a, grid.spacing, grid.origin), time, mass)
    wb = free_expand(Wavefunction2D(b, grid.spacing, grid.origin), time, mass, check_aliasing=False)
    return ExpandedPair(wa, wb)


def fit_shots(pair, phases, map_fn=map):
    """Fit every shot; failed fits come back as the raised exception."""

    def one(phi):
        try:
            return pair.fit(phi)
        except NoFringePeak as exc:
            return exc

    return list(map_fn(one, phases))
