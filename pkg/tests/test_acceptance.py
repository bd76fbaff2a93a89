"""Acceptance criteria, each at its stated tolerance; one PASS/FAIL line per criterion."""

import json
from importlib.resources import files

import numpy as np
import pytest

from rfdress.cli import main
from rfdress.constants import DEFAULT, RB87_F1, RB87_F2, Species
from rfdress.dressed import (
    DressedConfig,
    dressed_potential,
    potential_function,
    rabi_closed_form,
    rabi_general,
    static_potential_function,
)
from rfdress.fieldkit import IdealIoffeQuad, RfDrive, StaticScene, eval_rf_amplitude, eval_static_field
from rfdress.floquet import floquet_quasienergies, rwa_spacing
from rfdress.matterwave import (
    double_source_state,
    draw_shot_phases,
    expand_double_source,
    fit_shots,
    fit_wavefunction_fringes,
    free_expand,
    phase_statistics,
)
from rfdress.trapscape import (
    angular_distance_mod_pi,
    find_minima,
    polarization_orientation_scan,
    quadrupole_plane,
    spectroscopy_scan,
)

PUBLISHED_KHZ_PER_UM = 2.1389


def test_criterion_01_gravity_constant(acceptance):
    per_um = RB87_F2.mass * DEFAULT.g_earth / DEFAULT.h * 1e-6 / 1e3
    # the same number from the potential: two points 1 um apart vertically
    scene = StaticScene([IdealIoffeQuad(23.513, 1e-4)])
    cfg = DressedConfig(RB87_F2)
    V = potential_function(scene, RfDrive.linear(0.5e-4, np.pi / 2, 2 * np.pi * 800e3), cfg)
    grav = DressedConfig(RB87_F2, include_gravity=False)
    Vn = potential_function(scene, RfDrive.linear(0.5e-4, np.pi / 2, 2 * np.pi * 800e3), grav)
    pts = np.array([[0.0, 3e-6, 0.0], [0.0, 4e-6, 0.0]])
    dV = np.diff(V(pts) - Vn(pts))[0] / DEFAULT.h / 1e3
    rel = abs(per_um / PUBLISHED_KHZ_PER_UM - 1)
    ok = rel < 5e-3 and dV == pytest.approx(per_um, rel=1e-9)
    assert acceptance(1, "gravity asymmetry constant",
                      ok, f"m g/h = {per_um:.5f} kHz/um, potential difference {dV:.5f} kHz/um, "
                          f"{100 * rel:.3f}% from 2.1389 (< 0.5%)")


def test_criterion_02_rabi_equivalence(acceptance):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(10_000):
        G = rng.uniform(1.0, 300.0)
        B_I = rng.uniform(0.1e-4, 3e-4)
        scene = StaticScene([IdealIoffeQuad(G, B_I)], gravity=(0, 0, 0))
        drive = RfDrive.homogeneous(rng.uniform(-1e-4, 1e-4), rng.uniform(-1e-4, 1e-4), rng.uniform(0, 2 * np.pi),
                                    2 * np.pi * 1e6)
        sp = RB87_F2 if rng.random() < 0.5 else RB87_F1
        r = np.append(rng.uniform(-200e-6, 200e-6, 2), rng.uniform(-1e-3, 1e-3))
        general = rabi_general(eval_static_field(scene, r), eval_rf_amplitude(drive, r), sp)
        closed = rabi_closed_form(scene, drive, sp, r)
        worst = max(worst, abs(general - closed) / general)
    assert acceptance(2, "closed-form vs general Rabi coupling", worst < 1e-10,
                      f"max relative difference {worst:.2e} over 10^4 samples (< 1e-10)")


def test_criterion_03_orientation_law(acceptance):
    scene = StaticScene([IdealIoffeQuad(23.513, 1e-4)], gravity=(0, 0, 0))
    cfg = DressedConfig(RB87_F2, include_gravity=False)
    angles = np.radians(np.arange(0, 181, 5))
    table = polarization_orientation_scan(scene, 0.5e-4, 2 * np.pi * 800e3, angles, cfg,
                                          quadrupole_plane(scene, 8e-6), gtol_rel=1e-12)
    dev = np.degrees(np.max(angular_distance_mod_pi(table[:, 1], -table[:, 0])))
    assert acceptance(3, "orientation law", len(table) == 37 and dev < 1,
                      f"{len(table)} angles, max |theta_dw + theta_pol| mod pi = {dev:.4f} deg (< 1 deg)")


RING_SCENE = StaticScene([IdealIoffeQuad(1.0, 1e-4)], gravity=(0, 0, 0))
RING_OMEGA = 2 * np.pi * 1e6


def _handedness(sp, delta):
    """(centre coupling ratio, centre-trap minima, ring minima radii) for one handedness."""
    drive = RfDrive.homogeneous(1e-5, 1e-5, delta, RING_OMEGA)
    omega_ref = 0.5 * (1e-5 + 1e-5)  # fully co-rotating coupling
    omega_c = float(dressed_potential(RING_SCENE, drive, DressedConfig(sp), np.zeros(3)).rabi_T)
    rho = np.sqrt(sp.larmor_field(RING_OMEGA) ** 2 - 1e-8)  # G = 1 T/m
    axes = np.eye(3)[:2]
    # bare trapped state below resonance: dressed level -m_F; on the resonance shell: +m_F
    centre = find_minima(potential_function(RING_SCENE, drive, DressedConfig(sp, level=-sp.m_F,
                                                                             include_gravity=False)),
                         seeds=[[1e-6, 2e-6, 0], [-3e-6, 1e-6, 0], [2e-6, -2e-6, 0]], axes=axes, gtol_rel=1e-12)
    seeds = [0.9 * rho * np.array([np.cos(a), np.sin(a), 0]) for a in np.arange(8) * np.pi / 4]
    ring = find_minima(potential_function(RING_SCENE, drive, DressedConfig(sp, include_gravity=False)),
                       seeds=seeds, axes=axes)
    radii = np.array([np.hypot(*m.position[:2]) for m in ring if m.is_minimum])
    return omega_c / omega_ref, centre, radii, rho, len(ring.failures)


def test_criterion_04_handedness(acceptance):
    rho_ref = np.sqrt((DEFAULT.hbar * RING_OMEGA / (0.5 * DEFAULT.mu_B)) ** 2 - 1e-8)
    lines, ok = [], abs(rho_ref * 1e6 - 102.08) < 0.01
    for sp, trap_delta, ring_delta in ((RB87_F2, np.pi / 2, 3 * np.pi / 2), (RB87_F1, 3 * np.pi / 2, np.pi / 2)):
        ratio, centre, _, _, _ = _handedness(sp, trap_delta)
        single = len(centre) == 1 and np.linalg.norm(centre[0].position) < 1e-9 and centre[0].is_minimum
        ratio_ring, _, radii, rho, failed = _handedness(sp, ring_delta)
        on_ring = len(radii) >= 8 and np.all(np.abs(radii / rho_ref - 1) < 1e-2)
        ok = ok and ratio < 1e-6 and single and on_ring and ratio_ring > 0.5 and failed == 0
        lines.append(f"g_F={sp.g_F:+.1f}: Omega(0)/Omega_ref={ratio:.1e}, {len(centre)} centre minimum, "
                     f"{len(radii)} ring minima at {radii.min() * 1e6:.3f}-{radii.max() * 1e6:.3f} um")
    assert acceptance(4, "handedness and state dependence", ok,
                      f"rho_res={rho_ref * 1e6:.3f} um; " + "; ".join(lines))


def test_criterion_05_quartic_ratio(acceptance, tmp_path):
    out = tmp_path / "cmp.json"
    code = main(["compare-splitters", "two_wire", "--out", str(out)])
    rep = json.loads(out.read_text())
    ratio, pred = rep["ratio"], rep["predicted_ratio"]
    ok = code == 0 and abs(pred - 900) < 1 and 0.5 < ratio / pred < 2 and 0.5 < ratio / 1260 < 2
    assert acceptance(5, "quartic confinement ratio", ok,
                      f"d_RF/d_2w = {ratio:.0f}, predicted {pred:.0f} (x{ratio / pred:.2f}, within x2), "
                      f"x{ratio / 1260:.2f} of 1260")


def test_criterion_06_trap_frequency(acceptance):
    scene = StaticScene([IdealIoffeQuad(23.513, 1e-4)], gravity=(0, 0, 0))
    V = static_potential_function(scene, RB87_F2, include_gravity=False)
    rep = find_minima(V, seeds=[[1e-6, -2e-6, 0.0]], axes=np.eye(3)[:2], mass=RB87_F2.mass, gtol_rel=1e-12)[0]
    f = rep.frequencies / (2 * np.pi)
    ok = np.all(np.abs(f / 3000 - 1) < 1e-2) and np.linalg.norm(rep.position) < 1e-9
    assert acceptance(6, "static trap frequency", ok,
                      f"omega_perp/2pi = {f[0]:.2f}, {f[1]:.2f} Hz (3000 Hz within 1%)")


def test_criterion_07_floquet_rwa(acceptance):
    omega = 2 * np.pi * 1e6
    B_res = RB87_F2.larmor_field(omega)
    B_s = np.array([0.0, 0.0, B_res])
    B_amp = np.array([2 * 0.01 * B_res, 0.0, 0.0], complex)
    spec = floquet_quasienergies(B_s, B_amp, omega, RB87_F2)
    rwa = rwa_spacing(B_s, B_amp, omega, RB87_F2)
    dev = np.max(np.abs(spec.spacings / rwa - 1))
    assert acceptance(7, "Floquet vs rotating-wave spacing", dev < 1e-3 and spec.converged,
                      f"max relative deviation {dev:.2e} (< 1e-3), converged={spec.converged}")


def test_criterion_08_fringe_law(acceptance):
    period = []
    angle_dev = []
    for angle in (0.0, np.pi / 4, np.pi / 2, 2 * np.pi / 3):
        psi = double_source_state(3e-6, angle, 0.4e-6, 0.0)
        fit = fit_wavefunction_fringes(free_expand(psi, 14e-3, RB87_F2.mass))
        period.append(fit.spacing)
        angle_dev.append(float(angular_distance_mod_pi(fit.angle, angle)))
    period = np.array(period) * 1e6
    ok = np.all(np.abs(period / 21.4 - 1) < 0.02) and max(angle_dev) < np.radians(1)
    assert acceptance(8, "time-of-flight fringe law", ok,
                      f"periods {np.round(period, 3).tolist()} um (21.4 within 2%), "
                      f"max normal-to-axis deviation {np.degrees(max(angle_dev)):.3f} deg")


def test_criterion_09_phase_statistics(acceptance):
    pair = expand_double_source(3e-6, 14e-3, RB87_F2.mass)
    rng = np.random.default_rng(20260)
    coherent = fit_shots(pair, draw_shot_phases(rng, 500, "coherent", 0.0, 0.2))
    independent = fit_shots(pair, draw_shot_phases(rng, 500, "independent"))
    sc = phase_statistics([f.phase for f in coherent])
    si = phase_statistics([f.phase for f in independent])
    ok = abs(sc.circular_std - 0.2) <= 0.02 and si.rayleigh_p > 0.01
    assert acceptance(9, "phase statistics", ok,
                      f"coherent circular std {sc.circular_std:.4f} rad (0.20 +- 0.02), "
                      f"independent Rayleigh p = {si.rayleigh_p:.3f} (> 0.01)")


def test_criterion_10_spectroscopy_shape(acceptance):
    scene = StaticScene([IdealIoffeQuad(23.513, 1e-4)])
    deltas = np.arange(100) * np.pi / 50
    args = (scene, 0.41e-4, 2 * np.pi * 650e3)
    f = spectroscopy_scan(*args, deltas, RB87_F2).resonance_frequencies
    f_shift = spectroscopy_scan(*args, deltas + 2 * np.pi, RB87_F2).resonance_frequencies
    flipped = Species(mass=RB87_F2.mass, F=2, m_F=-2, g_F=-0.5)
    f_flip = spectroscopy_scan(*args, deltas, flipped).resonance_frequencies
    mirror = np.max(np.abs(f_flip[(-np.arange(100)) % 100] / f - 1))
    periodic = np.max(np.abs(f_shift / f - 1))
    lo, hi = deltas[np.argmin(f)], deltas[np.argmax(f)]
    ok = np.isclose(lo, np.pi / 2) and np.isclose(hi, 3 * np.pi / 2) and mirror < 1e-8 and periodic < 1e-9
    assert acceptance(10, "spectroscopy curve shape", ok,
                      f"min at {lo / np.pi:.2f} pi ({f.min() / 1e3:.1f} kHz), max at {hi / np.pi:.2f} pi "
                      f"({f.max() / 1e3:.1f} kHz), 2pi shift {periodic:.1e}, g_F mirror {mirror:.1e}")


SCENES = files("rfdress") / "scenes"

DETERMINISM = [
    ("eval", "ideal", "--grid", "axis"),
    ("eval", "ideal", "--grid", "plane"),
    ("eval", "chip", "--grid", "vertical"),
    ("eval", "two_wire", "--grid", "plane"),
    ("minima", "ideal"),
    ("minima", "chip"),
    ("doublewell", "ideal"),
    ("doublewell", "chip"),
    ("scan", "ideal", "--scan", "polarization"),
    ("scan", "ideal", "--scan", "spectroscopy"),
    ("spectroscopy", "ideal", "--scan", "spectroscopy"),
    ("scan", "ideal", "--scan", "ramp"),
    ("compare-splitters", "two_wire"),
    ("tof", "ideal", "--run", "coherent"),
    ("tof", "ideal", "--run", "independent"),
    ("floquet-check", "ideal"),
]


def test_criterion_11_determinism(acceptance, tmp_path):
    compared, mismatched = 0, []
    for i, cmd in enumerate(DETERMINISM):
        outs = []
        for workers in (1, 4):
            d = tmp_path / f"{i}-{workers}"
            d.mkdir()
            ext = ".csv" if cmd[0] in ("eval", "scan", "spectroscopy", "tof") else ".json"
            code = main(list(cmd) + ["--seed", "7", "--workers", str(workers), "--out", str(d / f"data{ext}")])
            assert code == 0, cmd
            outs.append({p.name: p.read_bytes() for p in sorted(d.iterdir()) if not p.name.endswith(".manifest.json")})
        compared += len(outs[0])
        if outs[0] != outs[1] or not outs[0]:
            mismatched.append(" ".join(cmd))
    assert acceptance(11, "CLI determinism across worker counts", not mismatched,
                      f"{compared} data files from {len(DETERMINISM)} invocations byte-identical "
                      f"for workers 1 and 4" + (f"; mismatched: {mismatched}" if mismatched else ""))
