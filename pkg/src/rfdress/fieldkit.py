"""Static and radio-frequency magnetic fields of composable source sets.

Positions are given either as a single 3-vector or as an ``(N, 3)`` array;
fields come back with the same leading shape. Everything is SI.

Wires are infinitely thin filaments. Real chip wires have a finite cross
section (tens to hundreds of micrometres), which this model ignores; broad
wires can be approximated by several parallel filaments.
"""

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .constants import DEFAULT, MU_0
from .errors import EvaluationOnWire

WIRE_TOLERANCE = 1e-12  # m


def _as_points(r):
    r = np.asarray(r, dtype=float)
    if r.shape[-1] != 3:
        raise ValueError(f"positions must have a trailing dimension of 3, got {r.shape}")
    return r


def _frame(axes):
    R = np.eye(3) if axes is None else np.asarray(axes, dtype=float)
    if R.shape != (3, 3):
        raise ValueError("axis frame must be a 3x3 matrix")
    if not np.allclose(R.T @ R, np.eye(3), atol=1e-10):
        raise ValueError("axis frame must be orthonormal")
    if np.linalg.det(R) < 0:
        raise ValueError("axis frame must be right-handed")
    return R


@dataclass(frozen=True, eq=False)
class IdealIoffeQuad:
    """Ideal Ioffe-Pritchard field ``(G x, -G y, B_I)`` in its own frame.

    ``axes`` holds the frame's unit vectors as columns, so a local vector
    ``v`` maps to ``axes @ v`` in the scene frame.
    """

    G: float
    B_I: float
    center: Sequence[float] = (0.0, 0.0, 0.0)
    axes: np.ndarray = None

    def __post_init__(self):
        if not self.G > 0:
            raise ValueError("quadrupole gradient G must be positive")
        if not self.B_I > 0:
            raise ValueError("Ioffe field B_I must be positive")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(3))
        object.__setattr__(self, "axes", _frame(self.axes))

    def local(self, r):
        return (_as_points(r) - self.center) @ self.axes

    def field(self, r):
        loc = self.local(r)
        b = np.empty_like(loc)
        b[..., 0] = self.G * loc[..., 0]
        b[..., 1] = -self.G * loc[..., 1]
        b[..., 2] = self.B_I
        return b @ self.axes.T


@dataclass(frozen=True, eq=False)
class WireSegment:
    """Straight filament from ``p0`` to ``p1``.

    ``current`` may be complex; the field is then the complex amplitude of
    an oscillating current in the quasi-static limit.
    """

    p0: Sequence[float]
    p1: Sequence[float]
    current: Union[float, complex] = 1.0

    def __post_init__(self):
        p0 = np.asarray(self.p0, dtype=float).reshape(3)
        p1 = np.asarray(self.p1, dtype=float).reshape(3)
        if np.linalg.norm(p1 - p0) == 0:
            raise ValueError("wire segment endpoints coincide")
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "p1", p1)

    @property
    def length(self):
        return float(np.linalg.norm(self.p1 - self.p0))

    def distance(self, r):
        """Distance from each point to the closed segment."""
        r = _as_points(r)
        u = self.p1 - self.p0
        s = np.clip(((r - self.p0) @ u) / (u @ u), 0.0, 1.0)
        closest = self.p0 + s[..., None] * u
        return np.linalg.norm(r - closest, axis=-1)

    def unit_field(self, r):
        """Field per ampere (T/A), closed-form Biot-Savart for a segment."""
        r = _as_points(r)
        dist = self.distance(r)
        if np.any(dist < WIRE_TOLERANCE):
            bad = np.atleast_2d(r)[np.atleast_1d(dist < WIRE_TOLERANCE)][0]
            raise EvaluationOnWire(bad, self)
        r1 = r - self.p0
        r2 = r - self.p1
        n1 = np.linalg.norm(r1, axis=-1)
        n2 = np.linalg.norm(r2, axis=-1)
        # r1 x r2 = u x r1 avoids subtracting the two long lever arms
        c = np.cross(self.p1 - self.p0, r1)
        dot = np.sum(r1 * r2, axis=-1)
        # n1 n2 + r1.r2 cancels next to long segments; use |c|^2 / (n1 n2 - r1.r2) there
        s = np.where(dot < 0, np.sum(c * c, axis=-1) / (n1 * n2 - dot), n1 * n2 + dot)
        scale = MU_0 / (4 * np.pi) * (n1 + n2) / (n1 * n2 * s)
        return scale[..., None] * c

    def field(self, r):
        return self.current * self.unit_field(r)


@dataclass(frozen=True, eq=False)
class UniformBias:
    B: Sequence[float]

    def __post_init__(self):
        object.__setattr__(self, "B", np.asarray(self.B, dtype=float).reshape(3))

    def field(self, r):
        r = _as_points(r)
        return np.broadcast_to(self.B, r.shape).copy()


@dataclass(frozen=True, eq=False)
class StaticScene:
    sources: tuple
    gravity: Sequence[float] = None

    def __post_init__(self):
        sources = tuple(self.sources)
        for s in sources:
            if not isinstance(s, (IdealIoffeQuad, WireSegment, UniformBias)):
                raise TypeError(f"unsupported static source {type(s).__name__}")
            if isinstance(s, WireSegment) and np.iscomplexobj(s.current):
                raise TypeError("static wire segments need a real current")
        object.__setattr__(self, "sources", sources)
        g = (0.0, -DEFAULT.g_earth, 0.0) if self.gravity is None else self.gravity
        object.__setattr__(self, "gravity", np.asarray(g, dtype=float).reshape(3))

    def without_gravity(self):
        return StaticScene(self.sources, gravity=(0.0, 0.0, 0.0))

    def with_gravity(self, gravity):
        return StaticScene(self.sources, gravity=gravity)

    @property
    def ideal(self):
        """The single IdealIoffeQuad if that is the only source, else None."""
        if len(self.sources) == 1 and isinstance(self.sources[0], IdealIoffeQuad):
            return self.sources[0]
        return None


@dataclass(frozen=True)
class Homogeneous:
    """Two-component homogeneous drive ``B_A cos(wt) e_x + B_B cos(wt + delta) e_y``.

    Amplitudes may be negative; a negative amplitude is a pi phase shift
    of that component.
    """

    B_A: float
    B_B: float
    delta: float = 0.0

    @property
    def alpha(self):
        return float(np.arctan2(abs(self.B_B), abs(self.B_A)))

    @property
    def amplitude(self):
        return np.array([self.B_A, self.B_B * np.exp(1j * self.delta), 0.0], dtype=complex)


@dataclass(frozen=True)
class WireSourced:
    segments: tuple

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))


@dataclass(frozen=True)
class RfDrive:
    mode: Union[Homogeneous, WireSourced]
    omega_rf: float

    def __post_init__(self):
        if not self.omega_rf > 0:
            raise ValueError("omega_rf must be positive")

    @classmethod
    def homogeneous(cls, B_A, B_B, delta, omega_rf):
        return cls(Homogeneous(B_A, B_B, delta), omega_rf)

    @classmethod
    def linear(cls, amplitude, angle, omega_rf):
        """Linear polarisation at ``angle`` from the x axis."""
        return cls(Homogeneous(amplitude * np.cos(angle), amplitude * np.sin(angle), 0.0), omega_rf)

    @property
    def is_homogeneous(self):
        return isinstance(self.mode, Homogeneous)

    @property
    def alpha(self):
        if not self.is_homogeneous:
            raise AttributeError("alpha is only defined for homogeneous drives")
        return self.mode.alpha


def eval_static_field(scene, r):
    """Total static field (T) of ``scene`` at ``r``."""
    r = _as_points(r)
    total = np.zeros(r.shape, dtype=float)
    for src in scene.sources:
        total = total + src.field(r)
    return total


def eval_rf_amplitude(drive, r):
    """Complex RF amplitude ``B~(r)``; the physical field is ``Re[B~ exp(i w t)]``."""
    r = _as_points(r)
    if isinstance(drive.mode, Homogeneous):
        return np.broadcast_to(drive.mode.amplitude, r.shape).copy()
    total = np.zeros(r.shape, dtype=complex)
    for seg in drive.mode.segments:
        total = total + seg.field(r)
    return total


def static_field_jacobian(scene, r, step=1e-8):
    """Central-difference Jacobian ``J[i, j] = dB_i / dx_j`` in T/m."""
    r = _as_points(r).reshape(3)
    J = np.empty((3, 3))
    for j in range(3):
        e = np.zeros(3)
        e[j] = step
        J[:, j] = (eval_static_field(scene, r + e) - eval_static_field(scene, r - e)) / (2 * step)
    return J
