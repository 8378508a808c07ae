import json

import numpy as np
import pytest

from helika.cli import main
from helika.states import load_state, save_state, to_lab, VectorState


def write_config(path, **overrides):
    doc = {
        "grid": {"kind": "box", "center": [5, 0, 0],
                 "half_widths": [2.7, 2.7, 2.7], "npts": 16},
        "I": [0, 0, 1],
        "I_prime": [1, 0, 0],
        "states": [{"type": "gaussian", "k0": [5, 0, 0],
                    "widths": [0.45, 0.45, 0.45],
                    "amps": [[0.7071067811865476, 0], [0, 0.7071067811865476]]}],
        "suites": ["frames"],
    }
    doc.update(overrides)
    path.write_text(json.dumps(doc))
    return path


@pytest.fixture()
def cfg(tmp_path):
    return write_config(tmp_path / "cfg.json")


def test_make_state_roundtrip(cfg, tmp_path):
    out = tmp_path / "out"
    assert main(["make-state", "--config", str(cfg), "--out", str(out)]) == 0
    s = load_state(out / "state_000.npz")
    assert s.values.shape[1] == 2
    manifest = json.loads((out / "make_state_manifest.json").read_text())
    assert manifest["n_states"] == 1


def test_make_state_validation_exit_2(tmp_path):
    cfg = write_config(
        tmp_path / "bad.json",
        grid={"kind": "sphere", "k_min": 3.8, "k_max": 6.2,
              "n_rad": 8, "n_pol": 8, "n_az": 8},
        states=[{"type": "spherical", "sigma": 1, "lam": 1, "mu": 3,
                 "k0": 5.0, "shell_width": 0.2}],
    )
    assert main(["make-state", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_make_state_singular_axis_exit_3(tmp_path):
    cfg = write_config(tmp_path / "sing.json", I=[1, 0, 0])
    assert main(["make-state", "--config", str(cfg), "--out", str(tmp_path)]) == 3


def test_unknown_key_exit_2(tmp_path):
    cfg = write_config(tmp_path / "cfg.json")
    doc = json.loads(cfg.read_text())
    doc["bogus"] = 1
    cfg.write_text(json.dumps(doc))
    assert main(["verify", "--config", str(cfg)]) == 2


def test_missing_config_exit_4(tmp_path):
    assert main(["verify", "--config", str(tmp_path / "nope.json")]) == 4


def test_bad_tol_override_exit_2(cfg):
    assert main(["verify", "--config", str(cfg),
                 "--tol-override", "tol_quad=-1"]) == 2
    assert main(["verify", "--config", str(cfg),
                 "--tol-override", "nonsense=1"]) == 2


def test_observe_reports(cfg, tmp_path, capsys):
    out = tmp_path / "out"
    main(["make-state", "--config", str(cfg), "--out", str(out)])
    capsys.readouterr()
    code = main(["observe", "--state", str(out / "state_000.npz"),
                 "--ops", "helicity,oam,momentum"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    rows = {r["name"]: r for r in doc["rows"]}
    assert rows["helicity"]["value"] == pytest.approx(1.0, abs=1e-10)
    assert rows["oam_additivity"]["value"] < 1e-12
    assert np.allclose(rows["momentum"]["value"], (5, 0, 0), atol=1e-10)
    lam = np.asarray(rows["oam_lambda"]["value"])
    m = np.asarray(rows["oam_m"]["value"])
    tot = np.asarray(rows["oam_total"]["value"])
    assert np.max(np.abs(tot - lam - m)) < 1e-12


def test_observe_unknown_op_exit_2(cfg, tmp_path, capsys):
    out = tmp_path / "out"
    main(["make-state", "--config", str(cfg), "--out", str(out)])
    assert main(["observe", "--state", str(out / "state_000.npz"),
                 "--ops", "nonsense"]) == 2


def test_verify_deterministic_report(cfg, tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["verify", "--config", str(cfg), "--suite", "frames",
                 "--out", str(out_a)]) == 0
    assert main(["verify", "--config", str(cfg), "--suite", "frames",
                 "--out", str(out_b), "--threads", "4"]) == 0
    def load(path):
        doc = json.loads((path / "verify_report.json").read_text())
        for suite in doc["suites"]:
            suite.pop("runtime_s")
        return doc

    assert load(out_a) == load(out_b)


def test_verify_corrupted_state_exit_1(cfg, tmp_path):
    out = tmp_path / "out"
    main(["make-state", "--config", str(cfg), "--out", str(out)])
    s = load_state(out / "state_000.npz")
    lab = to_lab(s)
    vals = lab.values.copy()
    vals[:, 0] += 0.3 * np.exp(
        -np.sum((lab.grid.nodes - [5.0, 0.0, 0.0]) ** 2, axis=1))
    save_state(out / "corrupt.npz", VectorState(lab.grid, vals, lab.t))
    assert main(["verify", "--config", str(cfg), "--suite", "frames",
                 "--state", str(out / "corrupt.npz")]) == 1


def test_gauge_run(cfg, tmp_path, capsys):
    out = tmp_path / "gauge"
    assert main(["gauge", "--config", str(cfg), "--out", str(out)]) == 0
    report = json.loads((out / "gauge_report.json").read_text())
    assert report["phase_check"]["passed"]
    header = (out / "gauge_phase.csv").read_text().splitlines()[0]
    assert header == "kx,ky,kz,phi,extracted_phase"


def test_gauge_identity_axes(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", I_prime=[0, 0, 1])
    out = tmp_path / "gauge"
    assert main(["gauge", "--config", str(cfg), "--out", str(out)]) == 0
    report = json.loads((out / "gauge_report.json").read_text())
    assert report["identical_axes"] is True
    assert not (out / "gauge_phase.csv").exists()


def test_gauge_non_eigenstate_exit_3(tmp_path):
    cfg = write_config(
        tmp_path / "cfg.json",
        states=[{"type": "gaussian", "k0": [5, 0, 0],
                 "widths": [0.45, 0.45, 0.45], "amps": [[1, 0], [0, 0]]}],
    )
    assert main(["gauge", "--config", str(cfg), "--out", str(tmp_path)]) == 3
