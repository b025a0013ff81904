import json
import os
import subprocess
import sys

import numpy as np
import pytest

from fikit import CheckReport, aggregate
from fikit.cli import main
from fikit.io import load_field, save_field, save_report

SMALL = ["--lo", "-5", "--hi", "5", "--n", "201"]


def run(*argv):
    return main([str(a) for a in argv])


def test_version_entry_point():
    out = subprocess.run([sys.executable, "-m", "fikit.cli", "--version"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("fikit ")


def test_unknown_subcommand():
    with pytest.raises(SystemExit) as err:
        run("frobnicate")
    assert err.value.code == 2


def test_space_gen_and_hopflax(tmp_path):
    space = tmp_path / "s.json"
    assert run("space", "gen", "--kind", "grid1d", "--a", -2, "--b", 2, "--n", 41,
               "-o", space) == 0
    x = np.linspace(-2, 2, 41)
    save_field(np.abs(x), tmp_path / "g.csv")
    u = tmp_path / "u.csv"
    assert run("hopflax", "--space", space, "--g", tmp_path / "g.csv", "--t", 1,
               "-o", u, "--check", "semigroup", "--s", 0.5) == 0
    assert (tmp_path / "run.lock.json").exists()
    assert (tmp_path / "semigroup.json").exists()
    head = u.read_text().splitlines()[0]
    assert head == "point_id,u,argmin_id"


def test_space_gen_graph(tmp_path):
    (tmp_path / "e.csv").write_text("i,j,length\n0,1,1\n1,2,0.5\n")
    assert run("space", "gen", "--kind", "graph", "--graph", tmp_path / "e.csv",
               "-o", tmp_path / "g.json") == 0
    assert json.loads((tmp_path / "g.json").read_text())["metric"]["type"] == "graph"


def test_nonpositive_time(tmp_path):
    run("space", "gen", "--kind", "grid1d", "--n", 5, "-o", tmp_path / "s.json")
    save_field(np.zeros(5), tmp_path / "g.csv")
    assert run("hopflax", "--space", tmp_path / "s.json", "--g", tmp_path / "g.csv",
               "--t", 0) == 2


def test_missing_file(tmp_path):
    assert run("hopflax", "--space", tmp_path / "none.json", "--g", tmp_path / "g.csv",
               "--t", 1) == 2


def test_check_pass_and_lock(tmp_path):
    assert run("check", "lsi", *SMALL, "--K", 0.9, "--family", "exp",
               "--out-dir", tmp_path) == 0
    lock = json.loads((tmp_path / "run.lock.json").read_text())
    assert lock["tool"] == "fikit" and lock["seed"] == 0
    assert lock["command"] == "check lsi"
    report = json.loads((tmp_path / "lsi.json").read_text())
    assert report["pass"] == (report["margin"] >= -report["tolerance"])


def test_check_fail(tmp_path):
    assert run("check", "lsi", *SMALL, "--K", 3, "--family", "exp",
               "--out-dir", tmp_path) == 1


def test_check_bad_exponent(tmp_path):
    assert run("check", "lsi", *SMALL, "--q", 2.5, "--out-dir", tmp_path) == 2


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"K": "3", "family": "exp", "n": 201, "lo": -5, "hi": 5}))
    assert run("check", "lsi", "--config", cfg, "--out-dir", tmp_path) == 1
    assert run("check", "lsi", "--config", cfg, "--K", 0.9, "--out-dir", tmp_path) == 0


def test_reports_reproducible(tmp_path, monkeypatch):
    monkeypatch.setenv("FIKIT_SEED", "11")
    outs = []
    for name in ("a", "b"):
        d = tmp_path / name
        assert run("check", "talagrand", *SMALL, "--n-samples", 4, "--out-dir", d) == 0
        outs.append({f: (d / f).read_bytes() for f in os.listdir(d) if f != "run.lock.json"})
        lock = json.loads((d / "run.lock.json").read_text())
        assert lock["seed"] == 11 and lock["config"]["out_dir"] == str(d)
    assert outs[0] == outs[1]


def test_hc_writes_curve(tmp_path):
    assert run("check", "hc", *SMALL, "--n-samples", 2, "--out-dir", tmp_path) == 0
    lines = (tmp_path / "hc.F.csv").read_text().splitlines()
    assert lines[0] == "sample,t,log_F,F"
    assert "np." not in "".join(lines)


def test_report_exit_codes(tmp_path):
    assert run("report", tmp_path) == 2
    save_report(CheckReport("ok", 0.0, 1.0), tmp_path, "ok")
    assert run("report", tmp_path, "-o", tmp_path / "summary.md") == 0
    assert "| ok |" in (tmp_path / "summary.md").read_text()
    inc = aggregate("maybe", [CheckReport("c", 0.0, 1.0)], inconclusive=True)
    save_report(inc, tmp_path, "maybe")
    assert run("report", tmp_path) == 3
    save_report(CheckReport("bad", 1.0, 0.0), tmp_path, "bad")
    assert run("report", tmp_path) == 1


def test_measure_csv(tmp_path):
    run("space", "gen", "--kind", "grid1d", "--a", -5, "--b", 5, "--n", 201,
        "-o", tmp_path / "s.json")
    x = np.linspace(-5, 5, 201)
    mu = np.exp(-x ** 2 / 2)
    save_field(mu / mu.sum(), tmp_path / "mu.csv")
    save_field(np.exp(x / 4), tmp_path / "f.csv")
    assert run("check", "lsi", "--space", tmp_path / "s.json", "--measure", tmp_path / "mu.csv",
               "--fields", tmp_path / "f.csv", "--K", 0.9, "--out-dir", tmp_path) == 0
    assert load_field(tmp_path / "mu.csv").sum() == pytest.approx(1.0)
