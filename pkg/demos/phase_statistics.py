"""Interference of two released clouds and the statistics of their relative phase.

Coherently split clouds keep a narrow phase distribution from shot to shot;
independently prepared ones give a uniform one.

    python3 demos/phase_statistics.py
"""

import numpy as np

from rfdress.constants import RB87_F2
from rfdress.matterwave import draw_shot_phases, expand_double_source, fit_shots, fringe_period, phase_statistics

d, t = 3e-6, 14e-3
pair = expand_double_source(d, t, RB87_F2.mass, angle=0.0, sigma0=0.4e-6, shape=(256, 256))
fit = pair.fit(0.7)
print(f"fringe period {fit.spacing * 1e6:.2f} um (h t / m d = {fringe_period(d, t, RB87_F2.mass) * 1e6:.2f} um), "
      f"phase {fit.phase:.3f} rad for a prepared 0.7 rad, contrast {fit.contrast:.2f}")

rng = np.random.default_rng(1)
for mode in ("coherent", "independent"):
    shots = fit_shots(pair, draw_shot_phases(rng, 200, mode, sigma=0.2))
    st = phase_statistics([f.phase for f in shots])
    print(f"{mode:>11}: circular std {st.circular_std:.3f} rad, Rayleigh p = {st.rayleigh_p:.3g}")
