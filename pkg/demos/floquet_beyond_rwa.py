"""Floquet quasi-energies of a resonantly driven spin against the rotating-wave result.

Weak drives agree with the rotating-wave spacing; stronger linear drives show
the Bloch-Siegert shift, which grows as the square of the drive.

    python3 demos/floquet_beyond_rwa.py
"""

import numpy as np

from rfdress.constants import RB87_F2
from rfdress.floquet import floquet_quasienergies, rwa_spacing

omega = 2 * np.pi * 1e6
B_res = RB87_F2.larmor_field(omega)
B_s = np.array([0.0, 0.0, B_res])
print(" Omega/omega   spacing / RWA - 1   ratio to (Omega/omega)^2")
for ratio in (0.005, 0.01, 0.05, 0.1, 0.25):
    B_amp = np.array([2 * ratio * B_res, 0.0, 0.0], complex)  # a linear drive couples with half its amplitude
    spec = floquet_quasienergies(B_s, B_amp, omega, RB87_F2)
    dev = np.mean(spec.spacings) / rwa_spacing(B_s, B_amp, omega, RB87_F2) - 1
    print(f"{ratio:12.3f}   {dev:+17.3e}   {dev / ratio**2:+24.4f}")
