import json
import re
from pathlib import Path

import pytest

from oneside_levy.cli import main
from oneside_levy.config import ConfigError, parse_config_text


BASE = """
schema_version = 1
seed = 4040
symbol.kind = stable
symbol.alpha = 1.5
"""


def write_cfg(tmp_path, body, name="exp.cfg"):
    p = tmp_path / name
    p.write_text(BASE + body)
    return p


def test_config_parsing():
    cfg = parse_config_text("a.b = 1.5\nlist = 1, 2, 3\nname = stable # cmt\n")
    assert cfg["a.b"] == 1.5
    assert cfg["list"] == [1, 2, 3]
    assert cfg["name"] == "stable"
    with pytest.raises(ConfigError):
        parse_config_text("schema_version = 99\n")
    with pytest.raises(ConfigError):
        parse_config_text("no equals sign here\n")


def test_coeffs_command(tmp_path):
    cfg = write_cfg(tmp_path, "h = 1.0\nj_max = 32\n")
    out = tmp_path / "out"
    assert main(["coeffs", "--config", str(cfg), "--out", str(out)]) == 0
    lines = (out / "coeffs.csv").read_text().splitlines()
    assert lines[0] == "j,G_j,T_j"
    assert lines[1].startswith("0,1,")
    rep = json.loads((out / "report_coeffs.json").read_text())
    assert rep["all_pass"] and rep["schema_version"] == 1


def test_matrix_and_validate(tmp_path):
    cfg = write_cfg(tmp_path, "n = 9\nbc = N*D\n")
    out = tmp_path / "m"
    assert main(["matrix", "--config", str(cfg), "--out", str(out)]) == 0
    assert (out / "matrix_NsD_9.csv").exists()
    assert main(["validate", "--config", str(cfg), "--out", str(out)]) == 0
    rep = json.loads((out / "report_validate.json").read_text())
    names = {m["name"] for m in rep["metrics"]}
    assert "N*D_holding_rates" in names


def test_simulate_json_and_determinism(tmp_path):
    cfg = write_cfg(tmp_path, "n = 9\npaths = 5\nT = 1.0\n")
    out1, out2 = tmp_path / "s1", tmp_path / "s2"
    for out in (out1, out2):
        assert main(["simulate", "--config", str(cfg), "--out", str(out),
                     "--format", "json"]) == 0
    assert (out1 / "paths.jsonl").read_text() == (out2 / "paths.jsonl").read_text()


def test_report_byte_identical_modulo_wall_clock(tmp_path):
    cfg = write_cfg(tmp_path, "h = 1.0\nj_max = 24\n")
    texts = []
    for name in ("r1", "r2"):
        out = tmp_path / name
        assert main(["coeffs", "--config", str(cfg), "--out", str(out)]) == 0
        raw = (out / "report_coeffs.json").read_text()
        texts.append(re.sub(r'"wall_clock_s": [0-9.]+', '"wall_clock_s": X', raw))
    assert texts[0] == texts[1]


def test_scale_and_resolvent_and_exit(tmp_path):
    cfg = write_cfg(tmp_path, "a = 1.0\nq = 1.0\nm = 2000\nx = 0.5\n")
    out = tmp_path / "sc"
    assert main(["scale", "--config", str(cfg), "--out", str(out)]) == 0
    header = (out / "scale.csv").read_text().splitlines()[0]
    assert header == "x,W,Wq,Zq"
    assert main(["resolvent", "--config", str(cfg), "--out", str(out)]) == 0
    masses = json.loads((out / "resolvent_masses.json").read_text())
    assert masses["mass_NN"] == pytest.approx(1.0, abs=1e-6)
    assert main(["exit", "--config", str(cfg), "--out", str(out)]) == 0
    rep = json.loads((out / "report_exit.json").read_text())
    assert rep["all_pass"]
    assert rep["params"]["coordinate_bridge"].startswith("x_scale")


def test_semigroup_with_mc(tmp_path):
    cfg = write_cfg(tmp_path,
                    "n = 9\nbc = DD\ntimes = 0.1, 0.5\npaths = 4000\n"
                    "tv_tol = 0.05\n")
    out = tmp_path / "sg"
    assert main(["semigroup", "--config", str(cfg), "--out", str(out)]) == 0
    rep = json.loads((out / "report_semigroup.json").read_text())
    assert all(m["passed"] for m in rep["metrics"])


def test_convergence_command(tmp_path):
    cfg = write_cfg(tmp_path,
                    "n_list = 9, 19, 39\nexit.kind = DN\ntol = 0.1\n")
    out = tmp_path / "cv"
    assert main(["convergence", "--config", str(cfg), "--out", str(out)]) == 0
    rep = json.loads((out / "report_convergence.json").read_text())
    assert rep["params"]["grid_pair"] == "ND"
    assert rep["all_pass"]


def test_j1_command(tmp_path):
    pa = tmp_path / "a.jsonl"
    pb = tmp_path / "b.jsonl"
    pa.write_text(json.dumps({"initial": 0.0, "epochs": [0.5], "values": [1.0]}) + "\n")
    pb.write_text(json.dumps({"initial": 0.0, "epochs": [0.6], "values": [1.0]}) + "\n")
    cfg = write_cfg(tmp_path, f"path_a = {pa}\npath_b = {pb}\nT = 1.0\n")
    out = tmp_path / "j1"
    assert main(["j1", "--config", str(cfg), "--out", str(out)]) == 0
    d = json.loads((out / "j1.json").read_text())
    assert d["upper"] == pytest.approx(0.1, abs=1e-9)


def test_suite_and_exit_codes(tmp_path):
    sdir = tmp_path / "suite"
    sdir.mkdir()
    write_cfg(sdir, "kind = coeffs\nh = 1.0\nj_max = 24\n", name="one.cfg")
    write_cfg(sdir, "kind = validate\nn = 5\n", name="two.cfg")
    out = tmp_path / "agg"
    assert main(["suite", "--suite-dir", str(sdir), "--out", str(out)]) == 0
    agg = json.loads((out / "suite_report.json").read_text())
    assert agg["all_pass"] and len(agg["experiments"]) == 2
    # empty directory is a configuration error
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["suite", "--suite-dir", str(empty), "--out", str(out)]) == 2
    # missing config file
    assert main(["matrix", "--config", str(tmp_path / "nope.cfg"),
                 "--out", str(out)]) == 2
    # numerical failure surfaces as exit 3
    bad = write_cfg(tmp_path, "n = 9\nbc = DD\n", name="bad.cfg")
    bad.write_text(bad.read_text().replace("n = 9", "n = 1"))
    assert main(["matrix", "--config", str(bad), "--out", str(out)]) in (2, 3)


def test_threads_env_fallback(tmp_path, monkeypatch):
    sdir = tmp_path / "suite"
    sdir.mkdir()
    write_cfg(sdir, "kind = coeffs\nh = 1.0\nj_max = 24\n", name="one.cfg")
    monkeypatch.setenv("ONESIDE_LEVY_THREADS", "2")
    out = tmp_path / "agg"
    assert main(["suite", "--suite-dir", str(sdir), "--out", str(out)]) == 0
