"""Circular RF of either handedness on a quadrupole-Ioffe trap.

One handedness leaves the bare trap untouched at its centre (the coupling
vanishes there), the other turns it into a ring on the resonance shell.
Flipping the sign of the g-factor swaps the two.

    python3 demos/handedness.py
"""

import numpy as np

from rfdress.constants import RB87_F1, RB87_F2
from rfdress.dressed import DressedConfig, dressed_potential, potential_function
from rfdress.fieldkit import IdealIoffeQuad, RfDrive, StaticScene
from rfdress.trapscape import find_minima

scene = StaticScene([IdealIoffeQuad(G=1.0, B_I=1e-4)], gravity=(0, 0, 0))
omega = 2 * np.pi * 1e6
axes = np.eye(3)[:2]

for sp in (RB87_F2, RB87_F1):
    rho = np.sqrt(sp.larmor_field(omega) ** 2 - 1e-8)
    print(f"{sp.name}: g_F = {sp.g_F:+.1f}, resonance radius {rho * 1e6:.3f} um")
    for delta in (np.pi / 2, 3 * np.pi / 2):
        drive = RfDrive.homogeneous(1e-5, 1e-5, delta, omega)
        omega_c = float(dressed_potential(scene, drive, DressedConfig(sp), np.zeros(3)).rabi_T)
        seeds = [0.9 * rho * np.array([np.cos(a), np.sin(a), 0]) for a in np.arange(8) * np.pi / 4]
        ring = find_minima(potential_function(scene, drive, DressedConfig(sp, include_gravity=False)),
                           seeds=seeds, axes=axes)
        radii = [np.hypot(*m.position[:2]) * 1e6 for m in ring]
        if omega_c < 1e-12:
            shape = "coupling vanishes at the centre: the static trap survives"
        else:
            shape = f"{len(radii)} minima on a ring at {np.mean(radii):.3f} um"
        print(f"  delta = {delta / np.pi:.1f} pi: Omega(0) = {omega_c * 1e4:.3g} G, {shape}")
