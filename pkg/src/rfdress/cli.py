"""Command-line front end.

Every subcommand reads a scene file, computes everything in memory and only
then writes its data files plus one ``<out>.manifest.json``. Data files never
contain timestamps, and work spread over ``--workers`` threads is gathered in
input order, so reruns with the same seed are byte-identical.
"""

import argparse
from concurrent.futures import ThreadPoolExecutor
import csv
import datetime as _dt
import hashlib
import io
import json
import math
import os
import sys
import warnings

import numpy as np

from . import __version__
from .constants import H
from .dressed import DressedConfig, potential_function, static_potential_function
from .errors import (
    AllMasked,
    ConvergenceNotReached,
    DomainTooSmall,
    EvaluationOnWire,
    FitIllConditioned,
    NoConvergence,
    NoFringePeak,
    NotApplicable,
    NotAtCriticalPoint,
    RfDressError,
    SchemaError,
    SingleWell,
    Unsupported,
    ZeroStaticField,
)
from .fieldkit import IdealIoffeQuad, RfDrive, StaticScene, eval_rf_amplitude, eval_static_field
from .floquet import floquet_quasienergies, rwa_spacing
from .matterwave import draw_shot_phases, expand_double_source, fit_shots, fringe_period, phase_statistics
from .scenefile import UnitLog, load_scene, parse_quantity, parse_vector
from .trapscape import (
    GridRegion,
    TwoWireSplitter,
    angular_distance_mod_pi,
    characterize_double_well,
    compare_quartic_confinement,
    critical_rf_amplitude,
    critical_two_wire_bias,
    find_minima,
    profile_fit,
    sample_grid,
    two_wire_splitter_potential,
)
from .trapscape.spectroscopy import elliptical_drive, trap_bottom
from .dressed import level_spacing_hz

EXIT_OK, EXIT_INPUT, EXIT_CONVERGENCE, EXIT_DOMAIN = 0, 2, 3, 4
CHUNK = 256  # points per task; fixed so results do not depend on the worker count
SCENE_DIR = os.path.join(os.path.dirname(__file__), "scenes")

INPUT_ERRORS = (SchemaError,)
CONVERGENCE_ERRORS = (NoConvergence, ConvergenceNotReached)
DOMAIN_ERRORS = (SingleWell, NotAtCriticalPoint, DomainTooSmall, NoFringePeak, AllMasked, EvaluationOnWire,
                 ZeroStaticField, NotApplicable, Unsupported, FitIllConditioned)


class UsageError(Exception):
    """Bad command-line input; maps to the input exit code."""


def fmt(x):
    """Shortest round-trip text for a float; NaN as ``nan``."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return None if not math.isfinite(float(obj)) else float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def json_bytes(obj):
    return (json.dumps(jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n").encode("utf-8")


def csv_bytes(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue().encode("utf-8")


class Run:
    """Output staging, worker pool and manifest for one invocation."""

    def __init__(self, args, scene_path):
        self.args = args
        self.scene_path = scene_path
        self.outputs = []  # (path, bytes)
        self.warnings = []
        self.masked = 0
        self.masked_detail = []
        self.cli_units = UnitLog()

    def map(self, fn, items):
        items = list(items)
        if self.args.workers <= 1 or len(items) <= 1:
            return [fn(i) for i in items]
        with ThreadPoolExecutor(max_workers=self.args.workers) as ex:
            return list(ex.map(fn, items))

    def out_path(self, suffix=None, default_ext=".csv"):
        base = self.args.out
        if base is None:
            stem = os.path.splitext(os.path.basename(self.scene_path))[0]
            base = f"{stem}.{self.args.command}{default_ext}"
        if suffix is None:
            return base
        root, _ = os.path.splitext(base)
        return root + suffix

    def add(self, path, data):
        self.outputs.append((path, data))

    def quantity(self, text, dimension, flag):
        return parse_quantity(text, dimension, flag, self.cli_units)

    def write(self, scene):
        for path, data in self.outputs:
            d = os.path.dirname(path)
            if d:
                os.makedirs(d, exist_ok=True)
            with open(path, "wb") as fh:
                fh.write(data)
        with open(self.scene_path, "rb") as fh:
            digest = hashlib.sha256(fh.read()).hexdigest()
        units = (scene.units.entries if scene is not None else []) + self.cli_units.entries
        manifest = {
            "tool": "rfdress",
            "version": __version__,
            "command": self.args.command,
            "scene_file": self.scene_path,
            "scene_sha256": digest,
            "seed": self.args.seed,
            "workers": self.args.workers,
            "gravity": not self.args.no_gravity,
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            "outputs": [
                {"path": p, "sha256": hashlib.sha256(d).hexdigest(), "bytes": len(d)} for p, d in self.outputs
            ],
            "warnings": {"count": len(self.warnings) + self.masked, "masked_points": self.masked,
                         "masked_detail": self.masked_detail, "messages": self.warnings},
            "units": units,
        }
        path = (self.outputs[0][0] if self.outputs else self.out_path()) + ".manifest.json"
        with open(path, "wb") as fh:
            fh.write(json_bytes(manifest))
        if self.args.units_echo:
            for u in units:
                print(f"{u['location']}: {u['input']} -> {u['si']}", file=sys.stderr)
        return path


# ---------------------------------------------------------------- helpers


def resolve_scene(path):
    if os.path.exists(path):
        return path
    builtin = os.path.join(SCENE_DIR, path if path.endswith(".json") else path + ".json")
    if os.path.exists(builtin):
        return builtin
    raise UsageError(f"scene file not found: {path}")


def _analysis(scene, key, name=None, what="block"):
    block = scene.doc.get("analysis", {}).get(key)
    if block is None:
        raise SchemaError(f"scene has no analysis.{key} {what}", "$.analysis")
    if name is None:
        return block
    if name not in block:
        raise SchemaError(f"no {what} named {name!r} (have {sorted(block)})", f"$.analysis.{key}")
    return block[name]


def _pick(block, name, key):
    if name is not None:
        return name
    if len(block) == 1:
        return next(iter(block))
    raise UsageError(f"several {key} entries; choose one of {sorted(block)}")


def grid_region(scene, spec, loc, cfg_potential=None):
    """GridRegion from a grid block; resolution may be 1 for eval."""
    center = parse_vector(spec["center"], "length", f"{loc}.center", scene.units)
    axes = np.asarray(spec.get("axes", [[1, 0, 0], [0, 1, 0]]), dtype=float)
    axes = axes / np.linalg.norm(axes, axis=1, keepdims=True)
    hw = spec["half_widths"]
    if isinstance(hw, list):
        hw = [parse_quantity(h, "length", f"{loc}.half_widths[{i}]", scene.units) for i, h in enumerate(hw)]
    else:
        hw = parse_quantity(hw, "length", f"{loc}.half_widths", scene.units)
    res = np.broadcast_to(np.asarray(spec["resolution"], dtype=int), (len(axes),))
    if spec.get("snap_to_static_minimum"):
        V = static_potential_function(scene.static, scene.species, scene.level,
                                      include_gravity=bool(np.any(scene.static.gravity)))
        center = find_minima(V, seeds=[center])[0].position
    try:
        region = GridRegion(center=center, axes=axes, half_widths=hw)
    except ValueError as exc:
        raise SchemaError(str(exc), loc) from None
    return region, res


def region_points(region, res):
    offs = [np.linspace(-h, h, n) if n > 1 else np.zeros(1) for h, n in zip(region.half_widths, res)]
    mesh = np.meshgrid(*offs, indexing="ij")
    pts = region.center + sum(m[..., None] * a for m, a in zip(mesh, region.axes))
    return pts.reshape(-1, 3)


def scene_potential(scene, drive=None):
    drive = scene.drive if drive is None else drive
    grav = bool(np.any(scene.static.gravity))
    if drive is None:
        return static_potential_function(scene.static, scene.species, scene.level, include_gravity=grav)
    cfg = DressedConfig(scene.species, level=scene.level, include_gravity=grav)
    return potential_function(scene.static, drive, cfg, scene.constants)


def homogeneous_override(run, scene, amplitude=None, angle=None, delta=None, frequency=None):
    """Scene drive with command-line or block overrides applied."""
    drive = scene.drive
    if drive is None and amplitude is None:
        raise SchemaError("scene has no rf_drive", "$")
    omega = 2 * np.pi * frequency if frequency is not None else (drive.omega_rf if drive is not None else None)
    if omega is None:
        raise SchemaError("no RF frequency given", "$.rf_drive")
    if amplitude is None and angle is None and delta is None:
        return RfDrive(drive.mode, omega)
    if drive is not None and not drive.is_homogeneous:
        raise UsageError("amplitude/angle/delta overrides need a homogeneous rf_drive")
    if amplitude is None:
        amplitude = float(np.hypot(drive.mode.B_A, drive.mode.B_B))
    if angle is None:
        angle = float(np.arctan2(drive.mode.B_B, drive.mode.B_A)) if drive is not None else 0.0
    delta = delta if delta is not None else (drive.mode.delta if drive is not None else 0.0)
    return RfDrive.homogeneous(amplitude * np.cos(angle), amplitude * np.sin(angle), delta, omega)


def _opt(run, value, dim, flag):
    return None if value is None else run.quantity(value, dim, flag)


def dw_record(rep, scene):
    d = rep.separation
    return {
        "status": "double-well",
        "separation_um": d * 1e6,
        "theta_rad": rep.orientation,
        "theta_deg": np.degrees(rep.orientation),
        "direction": rep.direction,
        "well_positions_um": rep.well_positions * 1e6,
        "well_potentials_kHz": rep.well_potentials / H / 1e3,
        "saddle_position_um": rep.saddle_position * 1e6,
        "barrier_kHz": rep.barrier_height / H / 1e3,
        "asymmetry_kHz": rep.asymmetry / H / 1e3,
        "asymmetry_kHz_per_um": rep.asymmetry / H / 1e3 / (d * 1e6),
        "quartic_fit": {
            "b_J_per_m2": rep.quartic_fit.b,
            "d_J_per_m4": rep.quartic_fit.d,
            "odd_J": list(rep.quartic_fit.odd),
            "residual_J": rep.quartic_fit.residual,
            "half_window_um": rep.quartic_fit.half_window * 1e6,
        },
        "well_frequencies_Hz": [w.frequencies / (2 * np.pi) for w in rep.wells],
    }


def parse_range(run, scene, spec, dim, loc):
    start = parse_quantity(spec["start"], dim, f"{loc}.start", scene.units)
    stop = parse_quantity(spec["stop"], dim, f"{loc}.stop", scene.units)
    step = parse_quantity(spec["step"], dim, f"{loc}.step", scene.units)
    if step <= 0 or stop < start:
        raise SchemaError("empty scan range", loc)
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)


# ---------------------------------------------------------------- commands


def cmd_eval(run, scene):
    grids = _analysis(scene, "grids", what="grid")
    name = _pick(grids, run.args.grid, "grid")
    spec = _analysis(scene, "grids", name, "grid")
    region, res = grid_region(scene, spec, f"$.analysis.grids.{name}")
    pts = region_points(region, res)
    V = scene_potential(scene)

    def chunk(i):
        block = pts[i : i + CHUNK]
        try:
            with np.errstate(all="ignore"):
                return np.asarray(V(block), dtype=float).reshape(-1), []
        except (RfDressError, ValueError) as exc:
            vals, msgs = np.empty(len(block)), []
            for j, p in enumerate(block):
                try:
                    vals[j] = float(np.asarray(V(p[None, :])).reshape(-1)[0])
                except (RfDressError, ValueError) as e:
                    vals[j] = np.nan
                    msgs.append(f"point {i + j} at {p.tolist()} m masked: {e}")
            return vals, msgs

    parts = run.map(chunk, range(0, len(pts), CHUNK))
    vals = np.concatenate([p[0] for p in parts])
    run.masked_detail = [m for p in parts for m in p[1]]
    run.masked = int((~np.isfinite(vals)).sum())
    if run.masked:
        print(f"warning: {run.masked} of {len(vals)} points masked", file=sys.stderr)
    fmt_kind = run.args.format or ("json" if (run.args.out or "").endswith(".json") else "csv")
    if fmt_kind == "json":
        rows = [{"x_m": p[0], "y_m": p[1], "z_m": p[2], "V_J": v, "V_over_h_Hz": v / H} for p, v in zip(pts, vals)]
        run.add(run.out_path(default_ext=".json"), json_bytes(rows))
    else:
        rows = [(p[0], p[1], p[2], v, v / H) for p, v in zip(pts, vals)]
        run.add(run.out_path(), csv_bytes(["x_m", "y_m", "z_m", "V_J", "V_over_h_Hz"], rows))
    return EXIT_OK


def cmd_minima(run, scene):
    name = run.args.grid or scene.doc.get("analysis", {}).get("minima", {}).get("grid")
    grids = _analysis(scene, "grids", what="grid")
    name = _pick(grids, name, "grid")
    region, res = grid_region(scene, grids[name], f"$.analysis.grids.{name}")
    V = scene_potential(scene)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        grid = sample_grid(V, region, res)
    run.masked = int(grid.mask.sum())
    run.warnings.extend(str(w.message) for w in caught)
    seeds = grid.local_minima() or [region.center]

    def refine(seed):
        try:
            return find_minima(V, seeds=[seed], axes=region.axes, mass=scene.species.mass)
        except ValueError as exc:
            raise SchemaError(str(exc), "$.analysis.minima") from None

    results = run.map(refine, seeds)
    reports, failures = [], []
    for r in results:
        reports.extend(r.reports)
        failures.extend(r.failures)
    reports.sort(key=lambda t: (t.potential, tuple(t.position)))
    merged = []
    for rep in reports:
        if all(np.linalg.norm(rep.position - m.position) > 1e-9 for m in merged):
            merged.append(rep)
    out = {
        "grid": name,
        "minima": [
            {
                "position_um": r.position * 1e6,
                "potential_J": r.potential,
                "potential_kHz": r.potential / H / 1e3,
                "curvatures_J_per_m2": r.curvatures,
                "principal_axes": r.principal_axes,
                "frequencies_Hz": r.frequencies / (2 * np.pi),
                "is_minimum": r.is_minimum,
            }
            for r in merged
        ],
        "failed_seeds": [{"seed_um": np.asarray(s) * 1e6, "error": str(e)} for s, e in failures],
    }
    run.add(run.out_path(default_ext=".json"), json_bytes(out))
    if not merged:
        return EXIT_CONVERGENCE
    return EXIT_OK


def cmd_doublewell(run, scene):
    block = _analysis(scene, "doublewell")
    a = run.args
    amp = _opt(run, a.amplitude, "field", "--amplitude") if a.amplitude else scene.q("analysis.doublewell.amplitude", "field")
    ang = _opt(run, a.angle, "angle", "--angle") if a.angle else scene.q("analysis.doublewell.angle", "angle")
    dl = _opt(run, a.delta, "angle", "--delta") if a.delta else scene.q("analysis.doublewell.delta", "angle")
    fr = _opt(run, a.frequency, "frequency", "--frequency") if a.frequency else scene.q("analysis.doublewell.frequency", "frequency")
    drive = homogeneous_override(run, scene, amp, ang, dl, fr)
    region, res = grid_region(scene, block["plane"], "$.analysis.doublewell.plane")
    if len(region.axes) != 2:
        raise SchemaError("double-well plane needs two axes", "$.analysis.doublewell.plane.axes")
    fw = scene.q("analysis.doublewell.fit_window", "length")
    V = scene_potential(scene, drive)
    try:
        rep = characterize_double_well(V, region, fw, resolution=res, mass=scene.species.mass)
    except SingleWell as exc:
        run.add(run.out_path(default_ext=".json"),
                json_bytes({"status": "single-well", "b_J_per_m2": exc.b, "message": str(exc)}))
        return EXIT_DOMAIN
    run.add(run.out_path(default_ext=".json"), json_bytes(dw_record(rep, scene)))
    return EXIT_OK


def _scan_point(fn):
    def wrapped(x):
        try:
            return fn(x)
        except SingleWell as exc:
            return {"status": "single-well", "b": exc.b}
        except (NoConvergence, ConvergenceNotReached) as exc:
            return {"status": "no-convergence", "message": str(exc)}
        except RfDressError as exc:
            return {"status": type(exc).__name__, "message": str(exc)}

    return wrapped


def cmd_scan(run, scene):
    scans = _analysis(scene, "scans", what="scan")
    name = _pick(scans, run.args.scan, "scan")
    spec = scans[name]
    loc = f"$.analysis.scans.{name}"
    kind = spec["kind"]
    dim = "field" if kind == "amplitude-ramp" else "angle"
    values = parse_range(run, scene, spec["range"], dim, f"{loc}.range")
    amp = scene.q(f"analysis.scans.{name}.amplitude", "field")
    ang = scene.q(f"analysis.scans.{name}.angle", "angle")
    freq = scene.q(f"analysis.scans.{name}.frequency", "frequency")
    if "plane" in spec:
        region, res = grid_region(scene, spec["plane"], f"{loc}.plane")
    else:
        block = scene.doc.get("analysis", {}).get("doublewell")
        if block is not None:
            region, res = grid_region(scene, block["plane"], "$.analysis.doublewell.plane")
        else:
            region, res = GridRegion(np.zeros(3), half_widths=8e-6), 41
    grav = bool(np.any(scene.static.gravity))
    cfg = DressedConfig(scene.species, level=scene.level, include_gravity=grav)

    if kind == "polarization":

        def point(theta):
            drive = homogeneous_override(run, scene, amp, theta, 0.0, freq)
            rep = characterize_double_well(potential_function(scene.static, drive, cfg, scene.constants), region,
                                           resolution=res, mass=scene.species.mass)
            return {"status": "ok", "theta_dw": rep.orientation, "sep": rep.separation,
                    "barrier": rep.barrier_height}

        res_pts = run.map(_scan_point(point), values)
        header = ["theta_pol_rad", "theta_pol_deg", "theta_dw_rad", "law_deviation_rad", "separation_um",
                  "barrier_kHz", "status"]
        rows = []
        for t, r in zip(values, res_pts):
            if r["status"] == "ok":
                dev = float(angular_distance_mod_pi(r["theta_dw"], -t))
                rows.append((t, np.degrees(t), r["theta_dw"], dev, r["sep"] * 1e6, r["barrier"] / H / 1e3, "ok"))
            else:
                rows.append((t, np.degrees(t), np.nan, np.nan, np.nan, np.nan, r["status"]))

    elif kind == "spectroscopy":
        if scene.drive is None and amp is None:
            raise SchemaError("spectroscopy scan needs an amplitude", loc)
        B_A = amp if amp is not None else scene.drive.mode.B_A
        ratio = spec.get("ratio", 1.2)
        omega = 2 * np.pi * freq if freq is not None else scene.drive.omega_rf
        hw = float(np.min(region.half_widths))

        def point(delta):
            drive = elliptical_drive(B_A, ratio, delta, omega)
            pos, v = trap_bottom(scene.static, drive, cfg, hw, constants=scene.constants)
            f = level_spacing_hz(scene.static, drive, scene.species, pos, scene.constants)
            return {"status": "ok", "f": float(np.asarray(f).reshape(-1)[0]), "pos": pos}

        res_pts = run.map(_scan_point(point), values)
        header = ["delta_rad", "delta_deg", "resonance_kHz", "x_um", "y_um", "z_um", "status"]
        rows = []
        for d, r in zip(values, res_pts):
            if r["status"] == "ok":
                p = r["pos"] * 1e6
                rows.append((d, np.degrees(d), r["f"] / 1e3, p[0], p[1], p[2], "ok"))
            else:
                rows.append((d, np.degrees(d), np.nan, np.nan, np.nan, np.nan, r["status"]))

    else:  # amplitude ramp

        def point(B):
            drive = homogeneous_override(run, scene, B, ang, 0.0, freq)
            V = potential_function(scene.static, drive, cfg, scene.constants)
            rep = characterize_double_well(V, region, resolution=res, mass=scene.species.mass)
            return {"status": "ok", "sep": rep.separation, "barrier": rep.barrier_height, "b": rep.quartic_fit.b}

        res_pts = run.map(_scan_point(point), values)
        header = ["amplitude_G", "separation_um", "barrier_kHz", "b_J_per_m2", "status"]
        rows = []
        for B, r in zip(values, res_pts):
            if r["status"] == "ok":
                rows.append((B * 1e4, r["sep"] * 1e6, r["barrier"] / H / 1e3, r["b"], "ok"))
            else:
                rows.append((B * 1e4, np.nan, 0.0 if r["status"] == "single-well" else np.nan,
                             r.get("b", np.nan) if r.get("b") is not None else np.nan, r["status"]))

    run.add(run.out_path(), csv_bytes(header, rows))
    return EXIT_OK


def _splitter_side(scene, spec, loc, window):
    """Potential, fit centre, fit direction and tuned parameters for one splitter."""
    q = lambda key, dim: (parse_quantity(spec[key], dim, f"{loc}.{key}", scene.units) if key in spec else None)
    sp = scene.species
    tune = spec.get("tune", True)
    if spec["kind"] == "rf_dressed":
        G, B_I, f = q("gradient", "gradient"), q("ioffe", "field"), q("frequency", "frequency")
        if None in (G, B_I, f):
            raise SchemaError("rf_dressed side needs gradient, ioffe and frequency", loc)
        static = StaticScene([IdealIoffeQuad(G, B_I)], gravity=(0.0, 0.0, 0.0))
        omega = 2 * np.pi * f
        amp = q("amplitude", "field")
        if tune or amp is None:
            D = B_I - sp.larmor_field(omega, scene.constants)
            if D <= 0:
                raise NotApplicable("RF frequency above the trap bottom: no single-to-double transition")
            Bc = 2 * np.sqrt(B_I * D)
            amp = critical_rf_amplitude(static, omega, sp, (0.8 * Bc, 1.25 * Bc), window=window, level=scene.level)
        cfg = DressedConfig(sp, level=scene.level, include_gravity=False)
        V = potential_function(static, RfDrive.linear(amp, 0.0, omega), cfg, scene.constants)
        return V, np.zeros(3), (1.0, 0.0, 0.0), {"kind": "rf_dressed", "amplitude_G": amp * 1e4}, None
    a, I, B, B_Io = q("half_separation", "length"), q("current", "current"), q("bias", "field"), q("ioffe", "field")
    if None in (a, B, B_Io):
        raise SchemaError("two_wire side needs half_separation, bias and ioffe", loc)
    params = TwoWireSplitter.from_critical_bias(a, B, B_Io) if I is None else TwoWireSplitter(a, I, B, B_Io)
    if tune:
        params = params.with_bias(critical_two_wire_bias(params, sp, window=window, level=scene.level))
    V = lambda r: two_wire_splitter_potential(params, sp, r, scene.level, scene.constants)
    info = {"kind": "two_wire", "bias_G": params.B_bias * 1e4, "current_A": params.current,
            "critical_bias_G": params.critical_bias * 1e4}
    return V, params.merge_point, (1.0, 0.0, 0.0), info, params


def cmd_compare_splitters(run, scene):
    block = _analysis(scene, "splitter")
    window = scene.q("analysis.splitter.fit_window", "length", 0.5e-6)
    sides = [_splitter_side(scene, block[k], f"$.analysis.splitter.{k}", window) for k in ("first", "second")]
    tw = [s[4] for s in sides if s[4] is not None]
    B_bias = scene.q("analysis.splitter.B_bias", "field", tw[-1].B_bias if tw else None)
    B_ioffe = scene.q("analysis.splitter.B_ioffe", "field", tw[-1].B_ioffe if tw else None)
    if B_bias is None or B_ioffe is None:
        raise SchemaError("B_bias and B_ioffe are needed when no two_wire side is present", "$.analysis.splitter")
    (V1, c1, n1, i1, _), (V2, c2, n2, i2, _) = sides
    try:
        cmp = compare_quartic_confinement(V1, c1, n1, V2, c2, n2, B_bias, B_ioffe, window=window)
    except NotAtCriticalPoint as exc:
        f1, f2 = profile_fit(V1, c1, n1, window), profile_fit(V2, c2, n2, window)
        run.add(run.out_path(default_ext=".json"), json_bytes({
            "status": "not-at-critical-point", "message": str(exc), "b_J_per_m2": exc.b,
            "first": dict(i1, b_J_per_m2=f1.b, d_J_per_m4=f1.d), "second": dict(i2, b_J_per_m2=f2.b, d_J_per_m4=f2.d)}))
        return EXIT_DOMAIN
    out = {
        "status": "ok",
        "first": dict(i1, b_J_per_m2=cmp.b_rf, d_J_per_m4=cmp.d_rf),
        "second": dict(i2, b_J_per_m2=cmp.b_2w, d_J_per_m4=cmp.d_2w),
        "ratio": cmp.ratio,
        "predicted_ratio": cmp.predicted_ratio,
        "ratio_over_predicted": cmp.ratio / cmp.predicted_ratio,
        "B_bias_G": B_bias * 1e4,
        "B_ioffe_G": B_ioffe * 1e4,
        "fit_half_window_um": window * 1e6,
    }
    run.add(run.out_path(default_ext=".json"), json_bytes(out))
    return EXIT_OK


def cmd_tof(run, scene):
    runs = _analysis(scene, "tof", what="tof run")
    name = _pick(runs, run.args.run, "tof run")
    spec = runs[name]
    loc = f"analysis.tof.{name}"
    mode = run.args.mode or spec["mode"]
    shots = run.args.shots if run.args.shots is not None else spec["shots"]
    if shots < 1:
        raise UsageError("--shots must be at least 1")
    t = scene.q(f"{loc}.time", "time")
    d = scene.q(f"{loc}.separation", "length")
    angle = scene.q(f"{loc}.axis_angle", "angle", 0.0)
    sigma0 = scene.q(f"{loc}.sigma0", "length", 0.4e-6)
    phase = scene.q(f"{loc}.phase", "angle", 0.0)
    jitter = scene.q(f"{loc}.phase_jitter", "angle", 0.2)
    box = scene.q(f"{loc}.box", "length", 128e-6)
    n = spec.get("grid_points", 512)
    if n & (n - 1):
        raise SchemaError("grid_points must be a power of two", f"$.{loc}.grid_points")
    rng = np.random.default_rng(run.args.seed)
    drawn = draw_shot_phases(rng, shots, mode, phase, jitter)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        pair = expand_double_source(d, t, scene.species.mass, angle, sigma0, spec.get("imbalance", 0.5),
                                    shape=(n, n), extent=(box, box))
    run.warnings.extend(str(w.message) for w in caught)
    fits = fit_shots(pair, drawn, run.map)
    rows, ok = [], []
    for i, (p, f) in enumerate(zip(drawn, fits)):
        if isinstance(f, NoFringePeak):
            rows.append((i, float(p), np.nan, np.nan, np.nan, np.nan, "no-fringe-peak"))
        else:
            ok.append(f)
            rows.append((i, float(p), f.phase, f.spacing * 1e6, f.angle, f.contrast, "ok"))
    run.add(run.out_path(), csv_bytes(["shot", "drawn_phase_rad", "fitted_phase_rad", "spacing_um", "angle_rad",
                                       "contrast", "status"], rows))
    stats = {
        "mode": mode,
        "shots": shots,
        "fitted": len(ok),
        "failed": shots - len(ok),
        "seed": run.args.seed,
        "predicted_spacing_um": fringe_period(d, t, scene.species.mass) * 1e6,
        "mean_spacing_um": float(np.mean([f.spacing for f in ok])) * 1e6 if ok else None,
    }
    if len(ok) >= 2:
        ps = phase_statistics([f.phase for f in ok])
        stats.update(circular_mean_rad=ps.circular_mean, circular_std_rad=ps.circular_std,
                     rayleigh_p=ps.rayleigh_p, resultant_length=ps.resultant_length)
    else:
        stats.update(circular_mean_rad=None, circular_std_rad=None, rayleigh_p=None,
                     message="phase statistics need at least two fitted shots",
                     phases_rad=[f.phase for f in ok])
    run.add(run.out_path(".stats.json"), json_bytes(stats))
    x, y = pair.first.coordinates()
    X, Y = np.meshgrid(x, y, indexing="ij")
    for k in range(min(spec.get("save_images", 0), shots)):
        rho = pair.density(drawn[k]).reshape(-1)
        body = csv_bytes(["x_m", "y_m", "density_per_m2"], zip(X.reshape(-1), Y.reshape(-1), rho))
        run.add(run.out_path(f".image{k}.csv"), body)
    return EXIT_OK


def cmd_floquet_check(run, scene):
    block = scene.doc.get("analysis", {}).get("floquet", {})
    sp = scene.species
    nh = block.get("n_harmonics", 8)
    if "point" in block:
        if scene.drive is None:
            raise SchemaError("floquet check at a point needs an rf_drive", "$.rf_drive")
        r = parse_vector(block["point"], "length", "$.analysis.floquet.point", scene.units)
        B_s = eval_static_field(scene.static, r).reshape(3)
        B_amp = eval_rf_amplitude(scene.drive, r).reshape(3)
        omega = scene.drive.omega_rf
        where = {"point_um": r * 1e6}
    else:
        ratio = block.get("rabi_ratio", 0.01)
        omega = scene.drive.omega_rf if scene.drive is not None else 2 * np.pi * 1e6
        B_res = sp.larmor_field(omega, scene.constants)
        B_s = np.array([0.0, 0.0, B_res])
        # linear drive along x couples with half its amplitude
        B_amp = np.array([2 * ratio * B_res, 0.0, 0.0], dtype=complex)
        where = {"rabi_ratio": ratio, "on_resonance": True}
    spec = floquet_quasienergies(B_s, B_amp, omega, sp, n_harmonics=nh, constants=scene.constants)
    rwa = rwa_spacing(B_s, B_amp, omega, sp, scene.constants)
    spacing = spec.spacings
    out = dict(where, **{
        "rf_frequency_Hz": omega / (2 * np.pi),
        "quasienergies_Hz": spec.quasienergies / H,
        "spacings_Hz": spacing / H,
        "rwa_spacing_Hz": rwa / H,
        "relative_deviation": (spacing - rwa) / rwa,
        "n_harmonics": spec.n_harmonics,
        "converged": spec.converged,
    })
    run.add(run.out_path(default_ext=".json"), json_bytes(out))
    return EXIT_OK


COMMANDS = {
    "eval": cmd_eval,
    "minima": cmd_minima,
    "doublewell": cmd_doublewell,
    "scan": cmd_scan,
    "spectroscopy": cmd_scan,
    "compare-splitters": cmd_compare_splitters,
    "tof": cmd_tof,
    "floquet-check": cmd_floquet_check,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="data file path; extra outputs and the manifest are named after it")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--no-gravity", action="store_true", help="drop gravity from the scene")
    common.add_argument("--units-echo", action="store_true", help="print every unit conversion to stderr")

    p = argparse.ArgumentParser(prog="rfdress", description="RF-dressed atom chip trap analysis")
    p.add_argument("--version", action="version", version=f"rfdress {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_):
        s = sub.add_parser(name, parents=[common], help=help_)
        s.add_argument("scene", help="scene file, or the name of a bundled scene (ideal, chip, two_wire)")
        return s

    s = add("eval", "sample the potential on a named grid")
    s.add_argument("--grid")
    s.add_argument("--format", choices=["csv", "json"])
    s = add("minima", "refine minima seeded from a grid")
    s.add_argument("--grid")
    s = add("doublewell", "characterise the double well")
    for flag in ("--amplitude", "--angle", "--delta", "--frequency"):
        s.add_argument(flag, help="quantity with unit, e.g. '0.5 G' or '30 deg'")
    for name in ("scan", "spectroscopy"):
        s = add(name, "run a named scan (polarization, spectroscopy or amplitude ramp)")
        s.add_argument("--scan")
    add("compare-splitters", "quartic confinement of RF and two-wire splitters at their critical points")
    s = add("tof", "simulate time-of-flight shots and phase statistics")
    s.add_argument("--run")
    s.add_argument("--mode", choices=["coherent", "independent"])
    s.add_argument("--shots", type=int)
    add("floquet-check", "compare Floquet quasi-energies with the rotating-wave result")
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.workers < 1:
        print("error: --workers must be at least 1", file=sys.stderr)
        return EXIT_INPUT
    scene = None
    try:
        path = resolve_scene(args.scene)
        run = Run(args, path)
        scene = load_scene(path)
        if args.no_gravity:
            scene = scene.with_gravity(False)
        code = COMMANDS[args.command](run, scene)
    except (SchemaError, UsageError, ValueError) as exc:
        loc = getattr(exc, "location", "")
        print(f"error: {exc}" + (f" at {loc}" if loc and loc not in str(exc) else ""), file=sys.stderr)
        return EXIT_INPUT
    except CONVERGENCE_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except DOMAIN_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    run.write(scene)
    for path, _ in run.outputs:
        print(path)
    return code


if __name__ == "__main__":
    sys.exit(main())
