import csv
import hashlib
import json
from importlib.resources import files

import numpy as np
import pytest

from rfdress.cli import main
from rfdress.constants import H
from rfdress.scenefile import UNITS

SCENES = files("rfdress") / "scenes"


def bundled(name):
    return json.loads((SCENES / f"{name}.json").read_text(encoding="utf-8"))


def write_scene(tmp_path, doc, name="scene.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc), encoding="utf-8")
    return str(p)


def run(argv):
    return main([str(a) for a in argv])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_eval_three_points(tmp_path):
    out = tmp_path / "axis.csv"
    assert run(["eval", "ideal", "--grid", "axis", "--out", out]) == 0
    rows = read_csv(out)
    assert rows[0] == ["x_m", "y_m", "z_m", "V_J", "V_over_h_Hz"]
    assert len(rows) == 4
    for r in rows[1:]:
        assert float(r[4]) == pytest.approx(float(r[3]) / 6.62607015e-34, rel=1e-15)
    xs = [float(r[0]) for r in rows[1:]]
    assert xs == sorted(xs)
    assert out.read_bytes().count(b"\r") == 0


def test_eval_json_format(tmp_path):
    out = tmp_path / "axis.json"
    assert run(["eval", "ideal", "--grid", "axis", "--out", out]) == 0
    rows = json.loads(out.read_text())
    assert len(rows) == 3 and rows[0]["V_over_h_Hz"] == pytest.approx(rows[0]["V_J"] / H)


def test_masked_point_reported(tmp_path):
    doc = bundled("two_wire")
    doc["analysis"]["grids"] = {"cut": {"center": ["115 um", "0 um", "0 um"], "axes": [[0, 1, 0]],
                                        "half_widths": "1 um", "resolution": 3}}
    out = tmp_path / "cut.csv"
    assert run(["eval", write_scene(tmp_path, doc), "--grid", "cut", "--out", out]) == 0
    rows = read_csv(out)
    assert len(rows) == 4
    assert rows[2][3] == "nan" and rows[1][3] != "nan" and rows[3][3] != "nan"
    manifest = json.loads((tmp_path / "cut.csv.manifest.json").read_text())
    assert manifest["warnings"]["masked_points"] == 1 and manifest["warnings"]["count"] >= 1


def test_manifest_contents(tmp_path):
    out = tmp_path / "axis.csv"
    scene = write_scene(tmp_path, bundled("ideal"))
    assert run(["eval", scene, "--grid", "axis", "--out", out, "--seed", 5]) == 0
    m = json.loads((tmp_path / "axis.csv.manifest.json").read_text())
    assert m["scene_sha256"] == hashlib.sha256(open(scene, "rb").read()).hexdigest()
    assert m["seed"] == 5 and m["version"] and m["timestamp"]
    assert m["outputs"] == [{"path": str(out), "sha256": hashlib.sha256(out.read_bytes()).hexdigest(),
                             "bytes": out.stat().st_size}]
    # every echoed quantity converts back to its user value
    assert m["units"]
    for u in m["units"]:
        text = u["input"]
        value, unit = (text.split() if isinstance(text, str) else (text["value"], text["unit"]))
        factor = UNITS[unit][1]
        np.testing.assert_allclose(np.asarray(u["si"]) / factor, np.asarray(value, dtype=float), rtol=1e-12)


def test_units_echo(tmp_path, capsys):
    assert run(["eval", "ideal", "--grid", "axis", "--out", tmp_path / "a.csv", "--units-echo"]) == 0
    err = capsys.readouterr().err
    assert "$.static_sources[0].gradient: 23.513 T/m -> 23.513" in err


def test_misspelled_key_writes_nothing(tmp_path, capsys):
    doc = bundled("ideal")
    doc["rf_drive"]["frequncy"] = doc["rf_drive"].pop("frequency")
    scene = write_scene(tmp_path, doc)
    out = tmp_path / "out" / "x.csv"
    assert run(["eval", scene, "--grid", "axis", "--out", out]) == 2
    assert "$.rf_drive" in capsys.readouterr().err
    assert not (tmp_path / "out").exists()


def test_empty_range_writes_nothing(tmp_path):
    doc = bundled("ideal")
    doc["analysis"]["scans"]["polarization"]["range"] = {"start": "90 deg", "stop": "0 deg", "step": "10 deg"}
    scene = write_scene(tmp_path, doc)
    assert run(["scan", scene, "--scan", "polarization", "--out", tmp_path / "pol.csv"]) == 2
    assert sorted(p.name for p in tmp_path.iterdir()) == ["scene.json"]


def test_missing_scene_file(tmp_path):
    assert run(["eval", tmp_path / "nope.json"]) == 2


def test_single_well_exit(tmp_path):
    out = tmp_path / "dw.json"
    assert run(["doublewell", "ideal", "--no-gravity", "--amplitude", "0.3 G", "--frequency", "650 kHz",
                "--out", out]) == 4
    rep = json.loads(out.read_text())
    assert rep["status"] == "single-well" and rep["b_J_per_m2"] > 0


def test_doublewell_x_polarisation(tmp_path):
    out = tmp_path / "dw.json"
    assert run(["doublewell", "ideal", "--no-gravity", "--out", out]) == 0
    rep = json.loads(out.read_text())
    theta = rep["theta_rad"]
    assert min(theta, np.pi - theta) < 0.005
    assert rep["barrier_kHz"] > 0 and rep["quartic_fit"]["b_J_per_m2"] < 0


def test_doublewell_gravity_asymmetry(tmp_path):
    out = tmp_path / "dw.json"
    assert run(["doublewell", "ideal", "--angle", "90 deg", "--out", out]) == 0
    rep = json.loads(out.read_text())
    assert rep["asymmetry_kHz_per_um"] == pytest.approx(2.136, abs=0.011)


def test_polarization_scan(tmp_path):
    out = tmp_path / "pol.csv"
    assert run(["scan", "ideal", "--no-gravity", "--scan", "polarization", "--out", out]) == 0
    rows = read_csv(out)[1:]
    assert len(rows) == 19
    assert all(r[-1] == "ok" for r in rows)
    assert max(float(r[3]) for r in rows) < np.radians(1)


def test_spectroscopy_alias(tmp_path):
    out = tmp_path / "spec.csv"
    assert run(["spectroscopy", "ideal", "--scan", "spectroscopy", "--out", out]) == 0
    rows = read_csv(out)[1:]
    delta = np.array([float(r[0]) for r in rows])
    f = np.array([float(r[2]) for r in rows])
    assert delta[np.argmin(f)] == pytest.approx(np.pi / 2)
    assert delta[np.argmax(f)] == pytest.approx(3 * np.pi / 2)


def test_compare_splitters(tmp_path):
    out = tmp_path / "cmp.json"
    assert run(["compare-splitters", "two_wire", "--out", out]) == 0
    rep = json.loads(out.read_text())
    assert rep["predicted_ratio"] == pytest.approx(900, rel=1e-3)
    assert 0.5 < rep["ratio_over_predicted"] < 2


def test_compare_identical_splitters(tmp_path):
    doc = bundled("two_wire")
    doc["analysis"]["splitter"]["first"] = dict(doc["analysis"]["splitter"]["second"])
    out = tmp_path / "cmp.json"
    assert run(["compare-splitters", write_scene(tmp_path, doc), "--out", out]) == 0
    assert json.loads(out.read_text())["ratio"] == pytest.approx(1.0, rel=1e-12)


def test_compare_not_critical(tmp_path):
    doc = bundled("two_wire")
    doc["analysis"]["splitter"]["second"].update(bias="27 G", tune=False)
    out = tmp_path / "cmp.json"
    assert run(["compare-splitters", write_scene(tmp_path, doc), "--out", out]) == 4
    rep = json.loads(out.read_text())
    assert rep["status"] == "not-at-critical-point" and rep["b_J_per_m2"] > 0


def _small_tof(tmp_path, shots=40):
    doc = bundled("ideal")
    for r in doc["analysis"]["tof"].values():
        r.update(shots=shots, grid_points=256, save_images=1)
    return write_scene(tmp_path, doc, "tof.json")


def test_tof_single_shot(tmp_path):
    out = tmp_path / "t.csv"
    assert run(["tof", _small_tof(tmp_path), "--run", "coherent", "--shots", 1, "--out", out]) == 0
    stats = json.loads((tmp_path / "t.stats.json").read_text())
    assert stats["circular_std_rad"] is None and len(stats["phases_rad"]) == 1
    assert len(read_csv(out)) == 2


def test_tof_coherent_stats(tmp_path):
    out = tmp_path / "t.csv"
    assert run(["tof", _small_tof(tmp_path, 200), "--run", "coherent", "--seed", 3, "--out", out]) == 0
    stats = json.loads((tmp_path / "t.stats.json").read_text())
    assert stats["fitted"] == 200
    assert stats["circular_std_rad"] == pytest.approx(0.2, abs=0.03)
    rows = read_csv(out)[1:]
    drawn = np.array([float(r[1]) for r in rows])
    fitted = np.array([float(r[2]) for r in rows])
    assert np.max(np.abs(np.angle(np.exp(1j * (fitted - drawn))))) < 0.05
    assert (tmp_path / "t.image0.csv").exists()


def test_floquet_check(tmp_path):
    out = tmp_path / "fl.json"
    assert run(["floquet-check", "ideal", "--out", out]) == 0
    rep = json.loads(out.read_text())
    assert rep["converged"] and max(abs(d) for d in rep["relative_deviation"]) < 1e-3


DETERMINISM = [
    ["eval", "ideal", "--grid", "plane"],
    ["minima", "ideal", "--no-gravity"],
    ["doublewell", "ideal"],
    ["scan", "ideal", "--scan", "polarization"],
    ["scan", "ideal", "--scan", "spectroscopy"],
    ["scan", "ideal", "--scan", "ramp"],
    ["compare-splitters", "two_wire"],
    ["floquet-check", "ideal"],
]


def _data_files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if not p.name.endswith(".manifest.json")}


@pytest.mark.parametrize("argv", DETERMINISM, ids=lambda a: "-".join(a[:1] + a[-1:]))
def test_byte_identical_across_workers(tmp_path, argv):
    outs = []
    for i, workers in enumerate((1, 4, 4)):
        d = tmp_path / f"run{i}"
        d.mkdir()
        ext = ".csv" if argv[0] in ("eval", "scan") else ".json"
        assert run(argv + ["--workers", workers, "--seed", 11, "--out", d / f"data{ext}"]) == 0
        outs.append(_data_files(d))
    assert outs[0] and outs[0] == outs[1] == outs[2]


def test_tof_byte_identical_across_workers(tmp_path):
    scene = _small_tof(tmp_path)
    outs = []
    for i, workers in enumerate((1, 3)):
        d = tmp_path / f"run{i}"
        d.mkdir()
        assert run(["tof", scene, "--run", "independent", "--workers", workers, "--seed", 2,
                    "--out", d / "t.csv"]) == 0
        outs.append(_data_files(d))
    assert len(outs[0]) == 3 and outs[0] == outs[1]
