"""Scene files: strict JSON schema, unit conversion, and construction of core objects.

Every dimensional quantity is written either as a string ``"30 G"`` or as
``{"value": ..., "unit": "G"}`` (the value may be a list for vectors). The
parser converts to SI before anything else sees the numbers and records each
conversion so the CLI can echo it.
"""

from dataclasses import dataclass, field
import json
import re

import jsonschema
import numpy as np

from .constants import DEFAULT, PRESETS, Constants, Species
from .errors import SchemaError
from .fieldkit import Homogeneous, IdealIoffeQuad, RfDrive, StaticScene, UniformBias, WireSegment, WireSourced

AMU = 1.66053906660e-27  # kg

# unit -> (dimension, factor to SI)
UNITS = {
    "T": ("field", 1.0),
    "G": ("field", 1e-4),
    "mG": ("field", 1e-7),
    "m": ("length", 1.0),
    "mm": ("length", 1e-3),
    "um": ("length", 1e-6),
    "µm": ("length", 1e-6),
    "nm": ("length", 1e-9),
    "A": ("current", 1.0),
    "mA": ("current", 1e-3),
    "Hz": ("frequency", 1.0),
    "kHz": ("frequency", 1e3),
    "MHz": ("frequency", 1e6),
    "rad": ("angle", 1.0),
    "deg": ("angle", np.pi / 180),
    "s": ("time", 1.0),
    "ms": ("time", 1e-3),
    "us": ("time", 1e-6),
    "T/m": ("gradient", 1.0),
    "G/cm": ("gradient", 1e-2),
    "m/s2": ("acceleration", 1.0),
    "kg": ("mass", 1.0),
    "amu": ("mass", AMU),
}

_QTY_RE = re.compile(r"^\s*(\S+)\s+(\S+)\s*$")

QUANTITY = {
    "oneOf": [
        {"type": "string"},
        {
            "type": "object",
            "properties": {
                "value": {"oneOf": [{"type": "number"}, {"type": "array", "items": {"type": "number"}}]},
                "unit": {"type": "string"},
            },
            "required": ["value", "unit"],
            "additionalProperties": False,
        },
    ]
}
VECTOR = {
    "oneOf": [
        {"type": "array", "items": QUANTITY, "minItems": 3, "maxItems": 3},
        QUANTITY,
    ]
}
DIRECTION = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


WIRE = _obj(
    {
        "type": {"const": "wire"},
        "start": VECTOR,
        "end": VECTOR,
        "current": QUANTITY,
        "width": QUANTITY,
        "filaments": {"type": "integer", "minimum": 1},
        "width_direction": DIRECTION,
    },
    ["type", "start", "end", "current"],
)
IDEAL = _obj(
    {
        "type": {"const": "ideal_ioffe"},
        "gradient": QUANTITY,
        "ioffe": QUANTITY,
        "center": VECTOR,
        "axes": {"type": "array", "items": DIRECTION, "minItems": 3, "maxItems": 3},
    },
    ["type", "gradient", "ioffe"],
)
UNIFORM = _obj({"type": {"const": "uniform"}, "field": VECTOR}, ["type", "field"])
# dispatch on "type" so errors come from the intended branch, not the closest oneOf miss
SOURCE = {
    "type": "object",
    "properties": {"type": {"enum": ["wire", "ideal_ioffe", "uniform"]}},
    "required": ["type"],
    "allOf": [{"if": {"properties": {"type": {"const": k}}}, "then": v}
              for k, v in (("wire", WIRE), ("ideal_ioffe", IDEAL), ("uniform", UNIFORM))],
}

RF_WIRE = _obj(
    {"start": VECTOR, "end": VECTOR, "current": QUANTITY, "phase": QUANTITY},
    ["start", "end", "current"],
)
RF_DRIVE = _obj(
    {
        "frequency": QUANTITY,
        "homogeneous": _obj({"B_A": QUANTITY, "B_B": QUANTITY, "delta": QUANTITY}, ["B_A", "B_B"]),
        "wires": {"type": "array", "items": RF_WIRE, "minItems": 1},
    },
    ["frequency"],
)
SPECIES = _obj(
    {
        "preset": {"enum": sorted(PRESETS)},
        "mass": QUANTITY,
        "F": {"type": "number", "minimum": 0},
        "m_F": {"type": "number"},
        "g_F": {"type": "number"},
        "level": {"type": "number"},
    }
)
GRID = _obj(
    {
        "center": VECTOR,
        "snap_to_static_minimum": {"type": "boolean"},
        "axes": {"type": "array", "items": DIRECTION, "minItems": 1, "maxItems": 3},
        "half_widths": {"oneOf": [QUANTITY, {"type": "array", "items": QUANTITY}]},
        "resolution": {"oneOf": [{"type": "integer", "minimum": 1}, {"type": "array", "items": {"type": "integer", "minimum": 1}}]},
    },
    ["center", "half_widths", "resolution"],
)
RANGE = _obj({"start": QUANTITY, "stop": QUANTITY, "step": QUANTITY}, ["start", "stop", "step"])
SCAN = _obj(
    {
        "kind": {"enum": ["polarization", "spectroscopy", "amplitude-ramp"]},
        "range": RANGE,
        "amplitude": QUANTITY,
        "ratio": {"type": "number"},
        "angle": QUANTITY,
        "frequency": QUANTITY,
        "plane": GRID,
    },
    ["kind", "range"],
)
DOUBLEWELL = _obj(
    {
        "plane": GRID,
        "fit_window": QUANTITY,
        "amplitude": QUANTITY,
        "angle": QUANTITY,
        "delta": QUANTITY,
        "frequency": QUANTITY,
    },
    ["plane"],
)
SPLITTER_SIDE = _obj(
    {
        "kind": {"enum": ["rf_dressed", "two_wire"]},
        "gradient": QUANTITY,
        "ioffe": QUANTITY,
        "frequency": QUANTITY,
        "amplitude": QUANTITY,
        "half_separation": QUANTITY,
        "current": QUANTITY,
        "bias": QUANTITY,
        "tune": {"type": "boolean"},
    },
    ["kind"],
)
SPLITTER = _obj(
    {
        "first": SPLITTER_SIDE,
        "second": SPLITTER_SIDE,
        "B_bias": QUANTITY,
        "B_ioffe": QUANTITY,
        "fit_window": QUANTITY,
    },
    ["first", "second"],
)
TOF = _obj(
    {
        "mode": {"enum": ["coherent", "independent"]},
        "shots": {"type": "integer", "minimum": 1},
        "time": QUANTITY,
        "separation": QUANTITY,
        "axis_angle": QUANTITY,
        "sigma0": QUANTITY,
        "phase": QUANTITY,
        "phase_jitter": QUANTITY,
        "imbalance": {"type": "number", "minimum": 0, "maximum": 1},
        "grid_points": {"type": "integer", "minimum": 8},
        "box": QUANTITY,
        "save_images": {"type": "integer", "minimum": 0},
    },
    ["mode", "shots", "time", "separation"],
)
FLOQUET = _obj(
    {
        "point": VECTOR,
        "rabi_ratio": {"type": "number", "exclusiveMinimum": 0},
        "n_harmonics": {"type": "integer", "minimum": 3},
    }
)

SCHEMA = _obj(
    {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "constants": _obj({"g_earth": QUANTITY}),
        "species": SPECIES,
        "static_sources": {"type": "array", "items": SOURCE, "minItems": 1},
        "rf_drive": RF_DRIVE,
        "gravity": _obj({"enabled": {"type": "boolean"}, "direction": DIRECTION}),
        "analysis": _obj(
            {
                "grids": {"type": "object", "additionalProperties": GRID},
                "minima": _obj({"grid": {"type": "string"}}),
                "doublewell": DOUBLEWELL,
                "scans": {"type": "object", "additionalProperties": SCAN},
                "splitter": SPLITTER,
                "tof": {"type": "object", "additionalProperties": TOF},
                "floquet": FLOQUET,
            }
        ),
    },
    ["species", "static_sources"],
)


def _location(path):
    loc = "$"
    for p in path:
        loc += f"[{p}]" if isinstance(p, int) else f".{p}"
    return loc


def _deepest(err):
    # oneOf failures hide the useful message in their context
    best = err
    for sub in err.context or ():
        cand = _deepest(sub)
        if len(cand.absolute_path) >= len(best.absolute_path):
            best = cand
    return best


def validate(doc):
    """Raise :class:`SchemaError` pointing at the first offending location."""
    v = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(v.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        e = _deepest(errors[0])
        raise SchemaError(e.message, _location(e.absolute_path))


@dataclass
class UnitLog:
    """Every conversion made while reading a scene: location, user text, SI value."""

    entries: list = field(default_factory=list)

    def record(self, location, user, si, unit):
        self.entries.append({"location": location, "input": user, "si": si, "si_unit": unit})


SI_UNIT = {
    "field": "T",
    "length": "m",
    "current": "A",
    "frequency": "Hz",
    "angle": "rad",
    "time": "s",
    "gradient": "T/m",
    "acceleration": "m/s2",
    "mass": "kg",
}


def parse_quantity(q, dimension, location="$", log=None):
    """Convert a quantity to SI, checking that it has the expected dimension."""
    if isinstance(q, str):
        m = _QTY_RE.match(q)
        if not m:
            raise SchemaError(f"expected '<number> <unit>', got {q!r}", location)
        try:
            value = float(m.group(1))
        except ValueError:
            raise SchemaError(f"not a number: {m.group(1)!r}", location) from None
        unit = m.group(2)
    elif isinstance(q, dict):
        value, unit = q["value"], q["unit"]
    else:
        raise SchemaError("quantities need an explicit unit", location)
    if unit not in UNITS:
        raise SchemaError(f"unknown unit {unit!r}", location)
    dim, factor = UNITS[unit]
    if dim != dimension:
        raise SchemaError(f"unit {unit!r} is a {dim}, expected a {dimension}", location)
    arr = np.asarray(value, dtype=float) * factor
    if not np.all(np.isfinite(arr)):
        raise SchemaError("quantity is not finite", location)
    si = arr.tolist() if arr.ndim else float(arr)
    if log is not None:
        log.record(location, q, si, SI_UNIT[dim])
    return arr if arr.ndim else float(arr)


def parse_vector(q, dimension, location, log=None):
    if isinstance(q, list):
        return np.array([parse_quantity(c, dimension, f"{location}[{i}]", log) for i, c in enumerate(q)])
    v = np.asarray(parse_quantity(q, dimension, location, log), dtype=float)
    if v.shape != (3,):
        raise SchemaError("expected a 3-vector", location)
    return v


@dataclass
class Scene:
    """A parsed scene file with everything converted to SI."""

    doc: dict
    constants: Constants
    species: Species
    level: float
    static: StaticScene
    drive: object  # RfDrive or None
    units: UnitLog

    def q(self, path, dimension, default=None):
        """Quantity at a dotted path under ``analysis`` converted to SI."""
        node = self.doc
        loc = "$"
        for key in path.split("."):
            if not isinstance(node, dict) or key not in node:
                return default
            node = node[key]
            loc += f".{key}"
        return parse_quantity(node, dimension, loc, self.units)

    def with_gravity(self, enabled):
        if enabled:
            return self
        return Scene(self.doc, self.constants, self.species, self.level, self.static.without_gravity(),
                     self.drive, self.units)


def _wire_segments(spec, loc, log):
    p0 = parse_vector(spec["start"], "length", f"{loc}.start", log)
    p1 = parse_vector(spec["end"], "length", f"{loc}.end", log)
    current = parse_quantity(spec["current"], "current", f"{loc}.current", log)
    n = spec.get("filaments", 1)
    if "width" not in spec or n == 1:
        return [WireSegment(p0, p1, current)]
    width = parse_quantity(spec["width"], "length", f"{loc}.width", log)
    axis = (p1 - p0) / np.linalg.norm(p1 - p0)
    if "width_direction" in spec:
        u = np.asarray(spec["width_direction"], dtype=float)
    else:
        u = np.cross(axis, (0.0, 1.0, 0.0))
    u = u - (u @ axis) * axis
    if np.linalg.norm(u) == 0:
        raise SchemaError("width direction is parallel to the wire", loc)
    u = u / np.linalg.norm(u)
    # equal filaments at the centres of n equal strips
    offs = (np.arange(n) + 0.5) / n * width - width / 2
    return [WireSegment(p0 + o * u, p1 + o * u, current / n) for o in offs]


def build_static(sources, log):
    out = []
    for i, s in enumerate(sources):
        loc = f"$.static_sources[{i}]"
        if s["type"] == "wire":
            out.extend(_wire_segments(s, loc, log))
        elif s["type"] == "ideal_ioffe":
            G = parse_quantity(s["gradient"], "gradient", f"{loc}.gradient", log)
            B_I = parse_quantity(s["ioffe"], "field", f"{loc}.ioffe", log)
            center = parse_vector(s["center"], "length", f"{loc}.center", log) if "center" in s else np.zeros(3)
            axes = np.asarray(s["axes"], dtype=float) if "axes" in s else np.eye(3)
            try:
                out.append(IdealIoffeQuad(G, B_I, center, axes))
            except ValueError as exc:
                raise SchemaError(str(exc), loc) from None
        else:
            out.append(UniformBias(parse_vector(s["field"], "field", f"{loc}.field", log)))
    return out


def build_drive(spec, log, frequency=None):
    if spec is None:
        return None
    omega = 2 * np.pi * (frequency if frequency is not None
                         else parse_quantity(spec["frequency"], "frequency", "$.rf_drive.frequency", log))
    if "homogeneous" in spec and "wires" in spec:
        raise SchemaError("give either homogeneous or wires, not both", "$.rf_drive")
    if "homogeneous" in spec:
        h = spec["homogeneous"]
        loc = "$.rf_drive.homogeneous"
        delta = parse_quantity(h["delta"], "angle", f"{loc}.delta", log) if "delta" in h else 0.0
        return RfDrive(Homogeneous(parse_quantity(h["B_A"], "field", f"{loc}.B_A", log),
                                   parse_quantity(h["B_B"], "field", f"{loc}.B_B", log), delta), omega)
    if "wires" in spec:
        segs = []
        for i, w in enumerate(spec["wires"]):
            loc = f"$.rf_drive.wires[{i}]"
            amp = parse_quantity(w["current"], "current", f"{loc}.current", log)
            ph = parse_quantity(w["phase"], "angle", f"{loc}.phase", log) if "phase" in w else 0.0
            segs.append(WireSegment(parse_vector(w["start"], "length", f"{loc}.start", log),
                                    parse_vector(w["end"], "length", f"{loc}.end", log), amp * np.exp(1j * ph)))
        return RfDrive(WireSourced(segs), omega)
    raise SchemaError("rf_drive needs homogeneous or wires", "$.rf_drive")


def build_species(spec, log):
    loc = "$.species"
    if "preset" in spec:
        extra = set(spec) - {"preset", "level"}
        if extra:
            raise SchemaError(f"preset species cannot override {sorted(extra)}", loc)
        sp = PRESETS[spec["preset"]]
    else:
        missing = {"mass", "F", "m_F", "g_F"} - set(spec)
        if missing:
            raise SchemaError(f"missing {sorted(missing)}", loc)
        try:
            sp = Species(parse_quantity(spec["mass"], "mass", f"{loc}.mass", log), spec["F"], spec["m_F"], spec["g_F"])
        except ValueError as exc:
            raise SchemaError(str(exc), loc) from None
    level = spec.get("level", sp.m_F)
    if abs(level) > sp.F or not float(sp.F - level).is_integer():
        raise SchemaError(f"level {level} is not a dressed level of F={sp.F}", f"{loc}.level")
    return sp, float(level)


def load_scene(source):
    """Parse a scene from a path, a JSON string's bytes, or an already-loaded dict."""
    if isinstance(source, dict):
        doc = source
    else:
        try:
            with open(source, "rb") as fh:
                doc = json.loads(fh.read().decode("utf-8"))
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc.msg} (line {exc.lineno})", "$") from None
    if not isinstance(doc, dict):
        raise SchemaError("scene must be a JSON object", "$")
    validate(doc)
    log = UnitLog()
    consts = DEFAULT
    if "constants" in doc and "g_earth" in doc["constants"]:
        consts = Constants(g_earth=parse_quantity(doc["constants"]["g_earth"], "acceleration",
                                                  "$.constants.g_earth", log))
    species, level = build_species(doc["species"], log)
    sources = build_static(doc["static_sources"], log)
    grav = doc.get("gravity", {})
    if grav.get("enabled", True):
        direction = np.asarray(grav.get("direction", (0.0, -1.0, 0.0)), dtype=float)
        if np.linalg.norm(direction) == 0:
            raise SchemaError("gravity direction is zero", "$.gravity.direction")
        g = consts.g_earth * direction / np.linalg.norm(direction)
    else:
        g = (0.0, 0.0, 0.0)
    static = StaticScene(sources, gravity=g)
    drive = build_drive(doc.get("rf_drive"), log)
    return Scene(doc, consts, species, level, static, drive, log)
