import json

import numpy as np
import pytest

from cmc_hyp.cli import main

BOX = "-0.4,0.4,-0.4,0.4,0.6,1.6"


def read_summary(out):
    with open(out / "summary.json") as fh:
        return json.load(fh)


def test_verify_command(tmp_path):
    out = tmp_path / "v"
    assert main(["verify", "--k", "2", "--grid-n", "16",
                 "--out", str(out)]) == 0
    doc = read_summary(out)
    assert doc["status"] == "ok"
    assert doc["result"]["all_pass"]
    assert doc["config"]["tolerances"]["kernel_gap_factor"] == 100.0
    for check in doc["result"]["checks"].values():
        assert check["pass"]


def test_kernel_command(tmp_path):
    out = tmp_path / "k"
    assert main(["kernel", "--k", "2", "--grid-n", "16",
                 "--out", str(out)]) == 0
    doc = read_summary(out)
    assert doc["result"]["dimension"] == 9
    assert doc["result"]["gap"] > 100
    assert (out / "kernel.json").exists()


def test_spectrum_command(tmp_path):
    out = tmp_path / "s"
    assert main(["spectrum", "--k", "2", "--grid-n", "16",
                 "--out", str(out)]) == 0
    doc = read_summary(out)
    assert doc["result"]["triple_at_2k_error"] < 1e-6
    assert (out / "spectrum.json").exists()


def test_solve_command_and_artifacts(tmp_path):
    out = tmp_path / "sol"
    rc = main(["solve", "--k", "2", "--grid-n", "16",
               "--phi", "exp(-hypdist(0,0,1)^2)", "--eps", "0.01,0.005",
               "--box=" + BOX, "--out", str(out)])
    assert rc == 0
    doc = read_summary(out)
    assert doc["result"]["all_converged"]
    assert (out / "surface_0.01.csv").exists()
    assert (out / "surface_0.005.csv").exists()
    q = doc["result"]["steps"][0]["q"]
    assert np.linalg.norm(np.array(q) - [0, 0, 1]) < 0.05


def test_solve_refuses_without_critical_point(tmp_path):
    out = tmp_path / "ref"
    rc = main(["solve", "--k", "2", "--grid-n", "16", "--phi", "p1",
               "--eps", "0.01", "--box=" + BOX, "--out", str(out)])
    assert rc == 4
    doc = read_summary(out)
    assert doc["error_class"] == "no_critical_point"


def test_obstruction_command(tmp_path):
    out = tmp_path / "ob"
    assert main(["obstruction", "--k", "2", "--phi", "p1",
                 "--box=" + BOX, "--out", str(out)]) == 0
    doc = read_summary(out)
    assert "e1" in doc["result"]["obstructed"]


def test_melnikov_command(tmp_path):
    out = tmp_path / "mel"
    assert main(["melnikov", "--k", "2", "--phi", "exp(-hypdist(0,0,1)^2)",
                 "--box=" + BOX, "--out", str(out)]) == 0
    assert (out / "scan.csv").exists()
    doc = read_summary(out)
    assert len(doc["result"]["stable"]) == 1


def test_energy_curve_command(tmp_path):
    out = tmp_path / "ec"
    cfg = tmp_path / "curve.json"
    cfg.write_text(json.dumps({"t_range": [2.0, 1.2, 15]}))
    assert main(["energy-curve", "--k", "2", "--grid-n", "24",
                 "--config", str(cfg), "--out", str(out)]) == 0
    data = np.genfromtxt(out / "energy_curve.csv", delimiter=",", names=True)
    assert {"t", "E0", "closed_form"} <= set(data.dtype.names)
    assert read_summary(out)["result"]["closed_form_defect"] < 1e-8
    assert read_summary(out)["result"]["decreasing_toward_horosphere"]


def test_config_file_and_flag_precedence(tmp_path):
    cfgfile = tmp_path / "cfg.json"
    cfgfile.write_text(json.dumps({
        "k": 3.0, "grid_n": 16, "tolerances": {"kernel_gap_factor": 50.0}}))
    out = tmp_path / "cf"
    assert main(["verify", "--config", str(cfgfile), "--k", "2",
                 "--out", str(out)]) == 0
    doc = read_summary(out)
    assert doc["config"]["k"] == 2.0                   # flag wins
    assert doc["config"]["grid_n"] == 16               # from the file
    assert doc["config"]["tolerances"]["kernel_gap_factor"] == 50.0


def test_config_errors(tmp_path):
    assert main(["verify", "--k", "0.5", "--out", str(tmp_path / "x")]) == 2
    assert main(["solve", "--k", "2", "--phi", "exp(", "--eps", "0.01",
                 "--box=" + BOX, "--out", str(tmp_path / "y")]) == 2
    assert main(["solve", "--k", "2", "--phi", "1", "--eps", "0.01",
                 "--box", "1,-1,0,1,0.5,1", "--out", str(tmp_path / "z")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["verify", "--config", str(bad),
                 "--out", str(tmp_path / "w")]) == 2
    cfg = tmp_path / "badtol.json"
    cfg.write_text(json.dumps({"tolerances": {"no_such_tol": 1.0}}))
    assert main(["verify", "--config", str(cfg),
                 "--out", str(tmp_path / "v")]) == 2


def test_determinism(tmp_path):
    out1, out2 = tmp_path / "d1", tmp_path / "d2"
    args = ["melnikov", "--k", "2", "--phi", "exp(-hypdist(0,0,1)^2)",
            "--box=" + BOX]
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    s1 = (out1 / "summary.json").read_text().replace(str(out1), "OUT")
    s2 = (out2 / "summary.json").read_text().replace(str(out2), "OUT")
    assert s1 == s2
    assert (out1 / "scan.csv").read_text() == (out2 / "scan.csv").read_text()
