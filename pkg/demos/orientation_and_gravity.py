"""Double-well orientation follows the RF polarisation; gravity tilts vertical wells.

    python3 demos/orientation_and_gravity.py
"""

import numpy as np

from rfdress.constants import DEFAULT, RB87_F2
from rfdress.dressed import DressedConfig, potential_function
from rfdress.fieldkit import IdealIoffeQuad, RfDrive, StaticScene
from rfdress.trapscape import characterize_double_well, quadrupole_plane

quad = IdealIoffeQuad(G=23.513, B_I=1e-4)  # 3 kHz radial trap at a 1 G bottom
omega = 2 * np.pi * 800e3
flat = StaticScene([quad], gravity=(0, 0, 0))
plane = quadrupole_plane(flat, 8e-6)

print(" pol (deg)   wells (deg)   -pol mod 180   separation (um)   barrier (kHz)")
for pol in range(0, 181, 30):
    drive = RfDrive.linear(0.5e-4, np.radians(pol), omega)
    rep = characterize_double_well(potential_function(flat, drive, DressedConfig(RB87_F2, include_gravity=False)),
                                   plane)
    print(f"{pol:9d}   {np.degrees(rep.orientation):11.3f}   {(-pol) % 180:12d}   "
          f"{rep.separation * 1e6:15.3f}   {rep.barrier_height / DEFAULT.h / 1e3:13.2f}")

tilted = StaticScene([quad])  # gravity along -y
drive = RfDrive.linear(0.5e-4, np.pi / 2, omega)
rep = characterize_double_well(potential_function(tilted, drive, DressedConfig(RB87_F2)), plane)
per_um = rep.asymmetry / DEFAULT.h / 1e3 / (rep.separation * 1e6)
print(f"\nvertical wells with gravity: upper well higher by {per_um:.4f} kHz per um of separation")
print(f"m g / h = {RB87_F2.mass * DEFAULT.g_earth / DEFAULT.h * 1e-9:.4f} kHz/um")
