"""Quartic confinement at the splitting point: RF-dressed versus static two-wire.

Both splitters are tuned to the point where the quadratic term along the
splitting direction vanishes; the remaining quartic coefficients are compared
with the (B_bias / B_Ioffe)^2 estimate.

    python3 demos/splitter_comparison.py
"""

import numpy as np

from rfdress.constants import RB87_F2
from rfdress.dressed import DressedConfig, potential_function
from rfdress.fieldkit import IdealIoffeQuad, RfDrive, StaticScene
from rfdress.trapscape import (
    TwoWireSplitter,
    compare_quartic_confinement,
    critical_rf_amplitude,
    critical_two_wire_bias,
    two_wire_splitter_potential,
)

B_ioffe = 1e-4
rf_scene = StaticScene([IdealIoffeQuad(23.513, B_ioffe)], gravity=(0, 0, 0))
omega = 2 * np.pi * 300e3
D = B_ioffe - RB87_F2.larmor_field(omega)
estimate = 2 * np.sqrt(B_ioffe * D)
amp = critical_rf_amplitude(rf_scene, omega, RB87_F2, (0.8 * estimate, 1.25 * estimate))
V_rf = potential_function(rf_scene, RfDrive.linear(amp, 0.0, omega), DressedConfig(RB87_F2, include_gravity=False))
print(f"RF splitter: critical amplitude {amp * 1e4:.4f} G (estimate {estimate * 1e4:.4f} G)")

wires = TwoWireSplitter(half_separation=115e-6, current=1.725, B_bias=30e-4, B_ioffe=B_ioffe)
wires = wires.with_bias(critical_two_wire_bias(wires, RB87_F2))
V_2w = lambda r: two_wire_splitter_potential(wires, RB87_F2, r)
print(f"two-wire splitter: critical bias {wires.B_bias * 1e4:.4f} G, merge point {wires.merge_point[1] * 1e6:.0f} um")

cmp = compare_quartic_confinement(V_rf, np.zeros(3), (1, 0, 0), V_2w, wires.merge_point, (1, 0, 0),
                                  wires.B_bias, B_ioffe)
print(f"d_RF = {cmp.d_rf:.4g} J/m^4, d_2w = {cmp.d_2w:.4g} J/m^4")
print(f"ratio {cmp.ratio:.0f}, estimate (B_bias/B_Ioffe)^2 = {cmp.predicted_ratio:.0f}")
