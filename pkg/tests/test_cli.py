"""Command-line interface: subcommands, formats, exit codes, determinism."""
import json

import numpy as np
import pytest

from tzsoliton.cli import FIELD_HEADER, main, read_field_csv
from tzsoliton.dressing import SolitonConfig
from tzsoliton.spectral_curve import VacuumBackground
from tzsoliton.verify import polish_singularity_2d

N1_CLEAN = {
    "background": "vacuum",
    "solitons": {"placement": "canonical", "lambdas": [[1.0, 0.0]], "C": [[0.0, 1.0]]},
    "grid": {"x0": 0.0, "x1": 2.0, "t0": 0.0, "t1": 2.0, "nx": 17, "nt": 17},
}


def write_config(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def test_field_csv_shape(tmp_path):
    cfg = write_config(tmp_path, N1_CLEAN)
    out = tmp_path / "field.csv"
    assert main(["field", "--config", cfg, "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == FIELD_HEADER
    assert len(lines) == 1 + 17 * 17
    first = lines[1].split(",")
    assert len(first) == 7
    assert first[-1] == "ok"


def test_field_roundtrip(tmp_path, vacuum, one_soliton):
    cfg = write_config(tmp_path, N1_CLEAN)
    out = tmp_path / "field.csv"
    main(["field", "--config", cfg, "--out", str(out)])
    f = read_field_csv(str(out))
    assert f.u.shape == (17, 17)
    from tzsoliton.dressing import exp_u

    want = exp_u(float(f.xs[3]), float(f.ts[5]), one_soliton, vacuum)
    assert abs(f.exp_u[5, 3] - want) <= 1e-12 * abs(want)


def test_field_lab_frame(tmp_path, vacuum, one_soliton):
    doc = dict(N1_CLEAN, grid=dict(N1_CLEAN["grid"], frame="lab"))
    cfg = write_config(tmp_path, doc)
    out = tmp_path / "lab.csv"
    assert main(["field", "--config", cfg, "--out", str(out)]) == 0
    f = read_field_csv(str(out))
    from tzsoliton.dressing import exp_u

    X, T = float(f.xs[4]), float(f.ts[2])
    want = exp_u(0.5 * (T + X), 0.5 * (T - X), one_soliton, vacuum)
    assert abs(f.exp_u[2, 4] - want) <= 1e-12 * abs(want)


def test_determinism_byte_identical(tmp_path):
    cfg = write_config(tmp_path, N1_CLEAN)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["field", "--config", cfg, "--out", str(a)])
    main(["field", "--config", cfg, "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()
    va, vb = tmp_path / "va.json", tmp_path / "vb.json"
    main(["verify", "--config", cfg, "--out", str(va)])
    main(["verify", "--config", cfg, "--out", str(vb)])
    assert va.read_bytes() == vb.read_bytes()


def test_verify_passes_and_reports(tmp_path):
    cfg = write_config(tmp_path, N1_CLEAN)
    out = tmp_path / "verify.json"
    assert main(["verify", "--config", cfg, "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["pass"] is True
    assert rep["residual_lightcone"]["passed"] is True
    assert rep["residual_lab"]["passed"] is True
    assert rep["lax"]["passed"] is True
    assert rep["residue_identity"]["passed"] is True
    assert rep["route_equivalence"]["passed"] is True
    assert rep["goursat"]["passed"] is True
    assert rep["kinematics"][0]["v"] == pytest.approx(-1.0)


def test_verify_detects_corruption(tmp_path, monkeypatch):
    cfg = write_config(tmp_path, N1_CLEAN)
    out = tmp_path / "verify.json"
    monkeypatch.setenv("TZSOLITON_CORRUPT", "1")
    assert main(["verify", "--config", cfg, "--out", str(out)]) == 1
    rep = json.loads(out.read_text())
    assert rep["pass"] is False


def test_file_mode_verify(tmp_path, monkeypatch):
    cfg = write_config(tmp_path, N1_CLEAN)
    csv = tmp_path / "field.csv"
    main(["field", "--config", cfg, "--out", str(csv)])
    doc = dict(N1_CLEAN, verify={"field_csv": str(csv)})
    vcfg = write_config(tmp_path, doc, "file_verify.json")
    out = tmp_path / "fv.json"
    assert main(["verify", "--config", vcfg, "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["residual_lightcone"]["mode"] == "stencil"
    assert rep["residual_lab"] is None
    monkeypatch.setenv("TZSOLITON_CORRUPT", "1")
    assert main(["verify", "--config", vcfg, "--out", str(out)]) == 1


def test_scan_finds_singular_node(tmp_path):
    xs, ts, _ = polish_singularity_2d(
        SolitonConfig.canonical([1.0], [1.0]), VacuumBackground(), -3.5, 2.0
    )
    doc = {
        "background": "vacuum",
        "solitons": {"placement": "canonical", "lambdas": [[1.0, 0.0]], "C": [[1.0, 0.0]]},
        "grid": {"x0": xs - 1, "x1": xs + 1, "t0": ts - 1, "t1": ts + 1,
                 "nx": 9, "nt": 9},
    }
    cfg = write_config(tmp_path, doc)
    out = tmp_path / "scan.csv"
    assert main(["scan", "--config", cfg, "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "x,t,abs_det"
    assert len(lines) == 2
    x_hit, t_hit, tau = (float(v) for v in lines[1].split(","))
    assert x_hit == pytest.approx(xs, abs=1e-12)
    assert t_hit == pytest.approx(ts, abs=1e-12)
    assert tau <= 1e-10


def test_scan_clean_config(tmp_path):
    cfg = write_config(tmp_path, N1_CLEAN)
    out = tmp_path / "scan.csv"
    assert main(["scan", "--config", cfg, "--out", str(out)]) == 0
    assert out.read_text().splitlines() == ["x,t,abs_det"]


def test_velocities_output(tmp_path):
    doc = dict(N1_CLEAN, velocities={"epsilons": [0.0, 1.0]})
    cfg = write_config(tmp_path, doc)
    out = tmp_path / "vel.json"
    assert main(["velocities", "--config", cfg, "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["epsilons"] == [0.0, 1.0]
    row = rep["solitons"][0]
    assert row["v"] == pytest.approx(-1.0)
    assert row["trajectory_slope"] == pytest.approx(-1.0)
    assert row["V"][0] == pytest.approx(0.0, abs=1e-14)
    assert row["V"][1] == pytest.approx(-np.tanh(1.0), rel=1e-12)


def test_missing_config_exit_2(tmp_path, capsys):
    assert main(["field", "--config", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "x.csv")]) == 2


def test_malformed_json_exit_2(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert main(["field", "--config", str(p), "--out", str(tmp_path / "x.csv")]) == 2


def test_unknown_key_exit_2(tmp_path, capsys):
    cfg = write_config(tmp_path, dict(N1_CLEAN, extra=1))
    assert main(["field", "--config", cfg, "--out", str(tmp_path / "x.csv")]) == 2
    err = capsys.readouterr().err
    assert "unknown key" in err


def test_missing_required_key_message(tmp_path, capsys):
    doc = {"solitons": N1_CLEAN["solitons"], "grid": N1_CLEAN["grid"]}
    cfg = write_config(tmp_path, doc)
    assert main(["field", "--config", cfg, "--out", str(tmp_path / "x.csv")]) == 2
    assert "missing key 'background'" in capsys.readouterr().err


def test_degenerate_kinematics_exit_3(tmp_path):
    # Lambda = i placement has no defined trajectory slope
    doc = {
        "background": "vacuum",
        "solitons": {"placement": "explicit",
                     "points": [[[0.0, 1.0], [0.0, -1.0]]],
                     "C": [[1.0, 0.0]]},
        "grid": N1_CLEAN["grid"],
    }
    cfg = write_config(tmp_path, doc)
    assert main(["velocities", "--config", cfg, "--out",
                 str(tmp_path / "v.json")]) == 3


def test_nonvacuum_solitons_rejected(tmp_path):
    doc = {
        "background": {"genus": 0, "c": [2.0, 0.0]},
        "solitons": N1_CLEAN["solitons"],
        "grid": N1_CLEAN["grid"],
    }
    cfg = write_config(tmp_path, doc)
    assert main(["field", "--config", cfg, "--out", str(tmp_path / "x.csv")]) == 2
