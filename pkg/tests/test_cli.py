import json

import numpy as np
import pytest

from quadlind.cli import RunConfig, run, to_json


def _run_json(capsys, argv):
    code = run(argv)
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_steady_sec6(capsys, models_dir):
    code, doc = _run_json(capsys, ["steady", "--model", str(models_dir / "sec6_boson.json")])
    assert code == 0
    assert np.allclose(doc["gamma_ss"], -0.5 * np.eye(2))
    assert doc["physical"] is False
    assert doc["witness"] == pytest.approx(-1.0)


def test_spectrum_fermion_decay(capsys, models_dir):
    code, doc = _run_json(capsys, ["spectrum", "--model", str(models_dir / "fermion_decay.json")])
    assert code == 0
    assert doc["gap"] == pytest.approx(0.5)
    assert doc["stable"] and doc["relaxing"]
    assert [e["parity"] for e in doc["lambda"]] == ["even", "odd", "odd", "even"]


def test_spectrum_boson_nmax(capsys, models_dir):
    code, doc = _run_json(capsys, ["spectrum", "--model", str(models_dir / "boson_damped.json"), "--nmax", "3"])
    assert code == 0 and doc["truncation"] == 3 and len(doc["lambda"]) == 10


def test_unknown_subcommand(capsys):
    assert run(["bogus"]) == 1
    assert "usage" in capsys.readouterr().err


def test_missing_model_file(capsys):
    assert run(["steady", "--model", "/nonexistent.json"]) == 1
    assert "quadlind.model.ModelError" in capsys.readouterr().err


def test_invalid_model_document(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"statistics": "fermion", "n_modes": 1, "h": [[0, 1], [1, 0]]}))
    assert run(["structure", "--model", str(p)]) == 1


def test_evolve_presets(capsys):
    assert run(["evolve", "--model", "preset:boson_pumped", "--times", "0,1"]) == 0
    assert run(["evolve", "--model", "preset:fermion_decay", "--times", "0,1", "--gamma0", "zero"]) == 0


def test_singular_generator_is_numeric_failure(tmp_path, capsys):
    p = tmp_path / "free.json"
    p.write_text(json.dumps({"statistics": "fermion", "n_modes": 1, "h": [[0, 0.3], [-0.3, 0]]}))
    assert run(["evolve", "--model", str(p), "--times", "0,1"]) == 2
    assert "SingularGeneratorError" in capsys.readouterr().err


def test_structure_and_emit_K(tmp_path, capsys):
    kpath = tmp_path / "K.csv"
    code, doc = _run_json(capsys, ["structure", "--model", "preset:boson_pumped", "--emit-K", str(kpath)])
    assert code == 0
    assert np.allclose(doc["X0"], 0.5 * np.eye(2))
    assert np.allclose(np.loadtxt(kpath, delimiter=","), np.eye(4))


def test_evolve_csv(tmp_path, capsys):
    out = tmp_path / "traj.csv"
    assert run(["evolve", "--model", "preset:fermion_decay", "--gamma0", "zero",
                "--times", "0,1,2", "--method", "rk", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,g0_0,g0_1,g1_0,g1_1"
    rows = np.loadtxt(out, delimiter=",", skiprows=1)
    assert rows.shape == (3, 5)
    assert rows[2, 2] == pytest.approx(0.5 * (1 - np.exp(-2.0)), abs=1e-9)


def test_evolve_gamma0_file(tmp_path, capsys):
    g = tmp_path / "g.csv"
    g.write_text("0,-0.5\n0.5,0\n")
    assert run(["evolve", "--model", "preset:fermion_decay", "--gamma0", str(g), "--times", "0"]) == 0
    assert "0,0,-0.5,0.5,0" in capsys.readouterr().out


def test_bad_times(capsys):
    assert run(["evolve", "--model", "preset:fermion_decay", "--times", "1,0.5"]) == 1


def test_moments(capsys):
    code, doc = _run_json(capsys, ["moments", "--model", "preset:fermion_decay", "--kmax", "2", "--t", "0,1"])
    assert code == 0
    assert [e["t"] for e in doc["times"]] == [0, 1]
    assert doc["times"][0]["wick_deviation"] is None


def test_moments_from_file(tmp_path, capsys):
    g = tmp_path / "g.json"
    g.write_text(json.dumps({"gamma": [[0, 0.5, 0, 0], [-0.5, 0, 0, 0], [0, 0, 0, 0.5], [0, 0, -0.5, 0]]}))
    model = tmp_path / "m.json"
    h = np.zeros((4, 4))
    m = np.zeros((4, 4))
    m[0, 1], m[1, 0] = 0.5, -0.5
    model.write_text(json.dumps({"statistics": "fermion", "n_modes": 2, "h": h.tolist(),
                                 "linear_jumps": [{"re": [0.5, 0, 0, 0.5], "im": [0, 0, 0.5, 0]}],
                                 "quadratic_jumps": [m.tolist()]}))
    code, doc = _run_json(capsys, ["moments", "--model", str(model), "--init", "gaussian-from-file",
                                   "--gamma-file", str(g), "--kmax", "4", "--t", "0,0.5"])
    assert code == 0
    assert doc["times"][0]["wick_deviation"] == pytest.approx(0, abs=1e-14)
    assert doc["times"][1]["wick_deviation"] > 0


def test_moments_unphysical_steady(capsys):
    assert run(["moments", "--model", "preset:boson_pumped"]) == 1


def test_oracle_compare(capsys, models_dir):
    code, doc = _run_json(capsys, ["oracle", "--model", str(models_dir / "fermion_decay.json"), "--what", "compare"])
    assert code == 0 and doc["passed"]
    assert {c["name"] for c in doc["checks"]} == {"trajectory", "steady_state", "spectrum"}


@pytest.mark.parametrize("what", ["spectrum", "steady", "trajectory"])
def test_oracle_modes(capsys, what):
    code, doc = _run_json(capsys, ["oracle", "--model", "preset:boson_damped", "--cutoff", "8", "--what", what,
                                   "--times", "0,1"])
    assert code == 0 and doc["cutoff"] == 8
    if what == "steady":
        assert doc["conclusive"] and np.allclose(doc["gamma_ss"], 0.5 * np.eye(2), atol=1e-10)


def test_oracle_too_large(capsys):
    assert run(["oracle", "--model", "preset:boson_damped", "--cutoff", "100", "--what", "spectrum"]) == 2


def test_dense_cap_env(monkeypatch, capsys):
    monkeypatch.setenv("LQ_CAP_DENSE", "0")
    assert run(["steady", "--model", "preset:fermion_decay"]) == 1


def test_byte_identical_output(tmp_path, models_dir):
    outs = []
    for k in range(2):
        p = tmp_path / f"s{k}.json"
        assert run(["spectrum", "--model", str(models_dir / "fermion_decay.json"), "--out", str(p)]) == 0
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]


def test_float_format_round_trips():
    x = 0.1 + 0.2
    text = to_json({"x": x, "z": 1 + 2j, "nan": float("nan")})
    doc = json.loads(text)
    assert doc["x"] == x and doc["z"] == {"re": 1, "im": 2} and doc["nan"] is None
    assert "0.30000000000000004" in text


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig("steady", None, None, dense_cap=0, dim_cap=64, n_max=None, cutoff=None)


def test_check_runs_acceptance_suite(tmp_path, capsys):
    out = tmp_path / "check.json"
    assert run(["check", "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "8/8 criteria passed" in printed
    assert len(json.loads(out.read_text())) == 8
