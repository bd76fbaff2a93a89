"""Floquet quasi-energies of a spin F in a static plus oscillating field.

The Hamiltonian is ``H(t) = g_F mu_B F . (B_s + Re[B~ exp(i w t)])`` with no
rotating-wave approximation, so the solver also serves as a check on where
the dressed-potential picture stops being accurate.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

from .constants import DEFAULT
from .errors import ConvergenceNotReached

MAX_DIMENSION = 500


def spin_matrices(F):
    """``(Fx, Fy, Fz)`` in the basis ``m = F, F-1, ..., -F`` (units of hbar)."""
    m = F - np.arange(int(round(2 * F)) + 1)
    fz = np.diag(m).astype(complex)
    # <m+1|F+|m>
    fp_elems = np.sqrt(F * (F + 1) - m[1:] * (m[1:] + 1))
    fp = np.diag(fp_elems, k=1).astype(complex)
    fm = fp.conj().T
    fx = 0.5 * (fp + fm)
    fy = -0.5j * (fp - fm)
    return fx, fy, fz


def fold(energies, quantum):
    """Map energies into the zone ``(-quantum/2, quantum/2]``."""
    e = np.asarray(energies, dtype=float)
    out = e - quantum * np.floor(e / quantum + 0.5)
    # floor(x + 0.5) sends exactly -1/2 to the lower edge; move it to +1/2
    out = np.where(np.isclose(out, -quantum / 2, rtol=0, atol=1e-14 * quantum), quantum / 2, out)
    return out


def _zone_distance(a, b, quantum):
    return np.abs(fold(np.asarray(a) - np.asarray(b), quantum))


@dataclass(frozen=True)
class FloquetSpectrum:
    quasienergies: np.ndarray  # J, folded and sorted ascending
    hbar_omega: float
    n_harmonics: int
    converged: bool

    @property
    def spacings(self):
        """Differences between adjacent sorted quasi-energies (J)."""
        return np.diff(self.quasienergies)


def _floquet_blocks(B_s, B_amp, omega_rf, species, constants):
    F = species.F
    fx, fy, fz = spin_matrices(F)
    hw = constants.hbar * omega_rf
    k = species.g_F * constants.mu_B / hw
    B_s = np.asarray(B_s, dtype=float)
    B_amp = np.asarray(B_amp, dtype=complex)
    H0 = k * (B_s[0] * fx + B_s[1] * fy + B_s[2] * fz)
    # coefficient of exp(+i w t)
    H1 = 0.5 * k * (B_amp[0] * fx + B_amp[1] * fy + B_amp[2] * fz)
    return H0, H1, hw


def _quasienergies_truncated(H0, H1, n_harmonics):
    d = H0.shape[0]
    n = np.arange(-n_harmonics, n_harmonics + 1)
    N = len(n)
    K = np.zeros((N * d, N * d), dtype=complex)
    for i, ni in enumerate(n):
        sl = slice(i * d, (i + 1) * d)
        K[sl, sl] = H0 + ni * np.eye(d)
        if i + 1 < N:
            nxt = slice((i + 1) * d, (i + 2) * d)
            # block (n+1, n) multiplies exp(+i w t)
            K[nxt, sl] = H1
            K[sl, nxt] = H1.conj().T
    vals, vecs = eigh(K)
    weights = np.abs(vecs.reshape(N, d, -1)) ** 2
    centroid = np.einsum("n,nk->k", n.astype(float), weights.sum(axis=1))
    pick = np.argsort(np.abs(centroid), kind="stable")[:d]
    return np.sort(fold(vals[pick], 1.0))


def floquet_quasienergies(B_s, B_amp, omega_rf, species, n_harmonics=8, constants=DEFAULT, tol=1e-10):
    """Quasi-energy ladder of the driven spin, folded to ``(-hbar w/2, hbar w/2]``.

    The truncation is increased one harmonic at a time until the folded
    spectrum changes by less than ``tol * hbar w``. Raises
    :class:`ConvergenceNotReached` if that does not happen before the Floquet
    matrix reaches ``MAX_DIMENSION``.
    """
    if n_harmonics < 3:
        raise ValueError("n_harmonics must be at least 3")
    d = int(round(2 * species.F)) + 1
    H0, H1, hw = _floquet_blocks(B_s, B_amp, omega_rf, species, constants)
    n = n_harmonics
    prev = _quasienergies_truncated(H0, H1, n)
    while d * (2 * (n + 1) + 1) <= MAX_DIMENSION:
        cur = _quasienergies_truncated(H0, H1, n + 1)
        change = np.max(_zone_distance(cur, prev, 1.0))
        if change <= tol:
            return FloquetSpectrum(quasienergies=prev * hw, hbar_omega=hw, n_harmonics=n, converged=True)
        prev, n = cur, n + 1
    raise ConvergenceNotReached(
        f"Floquet spectrum still changing by {change:.3g} hbar*w at {n} harmonics"
    )


def rwa_spacing(B_s, B_amp, omega_rf, species, constants=DEFAULT):
    """Adjacent quasi-energy spacing (J) predicted by the rotating-wave approximation."""
    from .dressed import rabi_general

    delta = np.linalg.norm(B_s) - species.larmor_field(omega_rf, constants)
    omega = rabi_general(B_s, B_amp, species)
    return abs(species.g_F) * constants.mu_B * float(np.hypot(delta, omega))
