"""Command line interface: exit codes, output files, determinism."""

import hashlib
import json
import subprocess
import sys

import pytest

from nelson_lab.cli import main

MINIMIZE_CFG = {
    "grid": {"n_sites": 8, "half_length": 3.141592653589793},
    "model": {
        "mass": 1.0, "meson_mass": 1.0, "charge": 1.0,
        "potential": {"kind": "harmonic", "strength": 0.5},
        "chi": {"kind": "sharp-band", "amplitude": 0.5,
                "k_lo": 1.0, "k_hi": 1.0},
    },
    "scenario": {"name": "minimize", "n_starts": 2},
}

DUHAMEL_CFG = {
    "grid": {"n_sites": 2, "half_length": 1.5707963267948966},
    "model": {
        "mass": 1.0, "meson_mass": 1.0, "charge": 1.0,
        "potential": {"kind": "harmonic", "strength": 1.0},
        "chi": {"kind": "sharp-band", "amplitude": 0.3,
                "k_lo": 2.0, "k_hi": 2.0},
    },
    "initial": {
        "z1": {"kind": "explicit", "values": [[0.05, 0.02], [-0.03, 0.01]]},
        "z2": {"kind": "modes", "entries": [[1, 0.08, -0.03]]},
    },
    "scenario": {"name": "duhamel", "eps": 0.5, "t": 0.25, "n_nodes": 17,
                 "nucleon_cap": 6, "meson_cap": 8,
                 "xi1": [[0.3, 0.1], [-0.2, 0.05]],
                 "xi2": [[0.0, 0.0], [0.25, -0.2]]},
}


def write_cfg(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return p


def test_validate_ok(tmp_path, capsys):
    p = write_cfg(tmp_path, MINIMIZE_CFG)
    assert main(["validate", "--config", str(p)]) == 0
    out = capsys.readouterr().out
    assert "ok" in out and "minimize" in out


def test_validate_bad_config(tmp_path, capsys):
    data = json.loads(json.dumps(MINIMIZE_CFG))
    data["grid"]["n_sites"] = 3
    p = write_cfg(tmp_path, data)
    assert main(["validate", "--config", str(p)]) == 2
    err = capsys.readouterr().err
    assert "config error at .grid" in err


def test_validate_missing_file(tmp_path, capsys):
    assert main(["validate", "--config", str(tmp_path / "nope.json")]) == 2
    assert "config error" in capsys.readouterr().err


def test_run_writes_outputs(tmp_path):
    p = write_cfg(tmp_path, MINIMIZE_CFG)
    out = tmp_path / "out"
    assert main(["run", "minimize", "--config", str(p),
                 "--out", str(out), "--seed", "0"]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["scenario"] == "minimize"
    assert summary["seed"] == 0
    assert summary["converged"] is True
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["scenario"] == "minimize"
    assert manifest["seed"] == 0
    assert "wall_time_s" in manifest
    for name, digest in manifest["files"].items():
        blob = (out / name).read_bytes()
        assert hashlib.sha256(blob).hexdigest() == digest
    assert (out / "minimizer_z1.csv").exists()
    assert (out / "start_energies.csv").exists()


def test_run_scenario_mismatch(tmp_path, capsys):
    p = write_cfg(tmp_path, MINIMIZE_CFG)
    assert main(["run", "theorem2", "--config", str(p),
                 "--out", str(tmp_path / "x")]) == 2
    assert "config error" in capsys.readouterr().err


def test_run_runtime_failure(tmp_path, capsys):
    data = json.loads(json.dumps(MINIMIZE_CFG))
    data["scenario"]["max_iter"] = 2
    p = write_cfg(tmp_path, data)
    assert main(["run", "minimize", "--config", str(p),
                 "--out", str(tmp_path / "x")]) == 3
    assert "run failed" in capsys.readouterr().err


def test_bad_seed_rejected(tmp_path):
    p = write_cfg(tmp_path, MINIMIZE_CFG)
    with pytest.raises(SystemExit) as exc:
        main(["run", "minimize", "--config", str(p), "--seed", "-1"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["run", "minimize", "--config", str(p),
              "--seed", str(2 ** 64)])
    assert exc.value.code == 2


def test_seed_accepts_u64_extremes(tmp_path):
    p = write_cfg(tmp_path, MINIMIZE_CFG)
    out = tmp_path / "big"
    assert main(["run", "minimize", "--config", str(p), "--out", str(out),
                 "--seed", str(2 ** 64 - 1)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["seed"] == 2 ** 64 - 1


def test_reruns_are_byte_identical(tmp_path):
    p = write_cfg(tmp_path, DUHAMEL_CFG)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out in (out_a, out_b):
        assert main(["run", "duhamel", "--config", str(p),
                     "--out", str(out), "--seed", "42"]) == 0
    for name in ("summary.json", "contributions.csv"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()
    ma = json.loads((out_a / "manifest.json").read_text())
    mb = json.loads((out_b / "manifest.json").read_text())
    ma.pop("wall_time_s"), mb.pop("wall_time_s")
    assert ma == mb


def test_manifest_records_config_hash(tmp_path):
    p = write_cfg(tmp_path, DUHAMEL_CFG)
    out = tmp_path / "out"
    assert main(["run", "duhamel", "--config", str(p),
                 "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    # reordering keys in the file must not change the recorded hash
    shuffled = {k: DUHAMEL_CFG[k] for k in reversed(list(DUHAMEL_CFG))}
    p2 = write_cfg(tmp_path, shuffled, "cfg2.json")
    out2 = tmp_path / "out2"
    assert main(["run", "duhamel", "--config", str(p2),
                 "--out", str(out2)]) == 0
    manifest2 = json.loads((out2 / "manifest.json").read_text())
    assert manifest["config_sha256"] == manifest2["config_sha256"]


def test_summary_json_is_sorted_and_plain(tmp_path):
    p = write_cfg(tmp_path, MINIMIZE_CFG)
    out = tmp_path / "out"
    assert main(["run", "minimize", "--config", str(p),
                 "--out", str(out)]) == 0
    text = (out / "summary.json").read_text()
    parsed = json.loads(text)
    assert list(parsed) == sorted(parsed)
    assert text == json.dumps(parsed, indent=2, sort_keys=True) + "\n"


def test_console_entry_point(tmp_path):
    p = write_cfg(tmp_path, MINIMIZE_CFG)
    proc = subprocess.run(
        [sys.executable, "-m", "nelson_lab.cli", "validate",
         "--config", str(p)],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "ok" in proc.stdout


def test_help_lists_scenarios(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    for name in ("classical-flow", "minimize", "duhamel", "theorem1",
                 "theorem2", "property-suite"):
        assert name in out
