import json
import subprocess
import sys
from pathlib import Path

import pytest

from legendrian_lift.cli import main

FAST_DISPLACE = ["--run.r_list=2^-9,2^-10,2^-11", "--run.w=0.001"]


def _read(path):
    lines = Path(path).read_text().splitlines()
    assert lines[0].startswith("# ")
    meta = json.loads(lines[0][2:])
    return meta, lines[1:]


def test_holonomy_writes_csv_and_figure(tmp_path):
    out = tmp_path / "hol.csv"
    assert main(["holonomy", "--out", str(out)]) == 0
    meta, lines = _read(out)
    assert meta["experiment"] == "holonomy"
    assert meta["seed"] == 7
    assert lines[0].startswith("experiment,loop,quantity")
    assert (tmp_path / "hol_loops.png").exists()


def test_no_figures_flag(tmp_path):
    out = tmp_path / "hol.csv"
    assert main(["holonomy", "--out", str(out), "--no-figures"]) == 0
    assert not (tmp_path / "hol_loops.png").exists()


def test_center_runs(tmp_path):
    out = tmp_path / "center.csv"
    assert main(["center", "--out", str(out), "--run.samples=50"]) == 0
    meta, lines = _read(out)
    quantities = [line.split(",")[1] for line in lines[1:]]
    assert "nu" in quantities
    assert "closure_residual" in quantities


def test_gamma_runs(tmp_path):
    out = tmp_path / "gamma.csv"
    assert main(["gamma", "--out", str(out), "--run.r_list=0.01,0.001"]) == 0
    _meta, lines = _read(out)
    assert len(lines) == 3          # header + two radii
    assert (tmp_path / "gamma_curve.png").exists()


def test_displace_runs_and_is_deterministic(tmp_path):
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["displace", "--out", str(out1), "--no-figures"] + FAST_DISPLACE) == 0
    assert main(["displace", "--out", str(out2), "--no-figures"] + FAST_DISPLACE) == 0
    a = out1.read_text()
    b = out2.read_text()
    assert a == b                   # byte-identical output for identical config
    meta, lines = _read(out1)
    assert meta["config"]["run.r_list"] == [2 ** -9, 2 ** -10, 2 ** -11]
    radii = [float(line.split(",")[1]) for line in lines[1:]]
    assert radii == sorted(radii)   # rows in sorted parameter order


def test_displace_figure(tmp_path):
    out = tmp_path / "d.csv"
    assert main(["displace", "--out", str(out)] + FAST_DISPLACE) == 0
    assert (tmp_path / "d_scaling.png").exists()


def test_accumulate_runs(tmp_path):
    out = tmp_path / "acc.csv"
    assert main(["accumulate", "--out", str(out), "--run.N=4"]) == 0
    _meta, lines = _read(out)
    assert len(lines) == 5          # header + 4 loops
    assert (tmp_path / "acc_decay.png").exists()


def test_missing_chart_key_exits_2(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[chart]\nQ = x/2\n")
    code = main(["center", "--config", str(cfg), "--out", str(tmp_path / "o.csv")])
    assert code == 2


def test_rejected_hypothesis_exits_2(tmp_path):
    code = main(["accumulate", "--run.r=0.2", "--out", str(tmp_path / "o.csv")])
    assert code == 2


def test_numerical_failure_exits_3(tmp_path):
    # clamp the domain so hard that the default orbit lift leaves it
    code = main(["displace", "--chart.clamp=0.0008",
                 "--run.r_list=0.0007", "--run.w=0.0001",
                 "--out", str(tmp_path / "o.csv")])
    assert code == 3


def test_config_file_plus_override(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("[chart]\nP = -y/2\nQ = x/2\ndelta = 0.05\n\n[run]\nseed = 3\n")
    out = tmp_path / "c.csv"
    assert main(["center", "--config", str(cfg), "--out", str(out),
                 "--run.seed=9", "--run.samples=10"]) == 0
    meta, _ = _read(out)
    assert meta["seed"] == 9        # flag wins over file


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "legendrian_lift.cli", "holonomy",
         "--out", str(tmp_path / "h.csv"), "--no-figures"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "holonomy" in proc.stdout


def test_unknown_subcommand_exits_2():
    with pytest.raises(SystemExit) as err:
        main(["bogus"])
    assert err.value.code == 2
