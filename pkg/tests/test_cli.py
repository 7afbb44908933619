import json

import pytest

from dampednls.cli import main
from dampednls.experiments import RunConfig
from dampednls.model import ProblemSpec, gaussian_data, make_grid
from dampednls.snapshots import write_snapshot
from dampednls.solver import SolverConfig


def write_config(path, **kw):
    cfg = RunConfig(ProblemSpec(1, 4, -1, 0.1), make_grid(32, 256, 1),
                    {"kind": "gaussian", "amplitude": 1.0, "width": 1.0},
                    SolverConfig(dt_init=1e-3, T_final=0.05, sample_stride=10),
                    output_dir=str(path.parent / "runs"), **kw)
    path.write_text(cfg.to_json())
    return cfg


def test_verify_cutoff_exit_codes(capsys):
    assert main(["verify-cutoff", "--n", "2", "--eps", "0.05", "--c", "1"]) == 0
    out = capsys.readouterr()
    assert out.out.startswith("r,chi1,chi2,margin")
    assert "min margin" in out.err
    assert main(["verify-cutoff", "--n", "3", "--eps", "10", "--c", "1"]) == 1


def test_criteria_prints_verdicts(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", R=4.0)
    assert main(["criteria", "--config", str(tmp_path / "c.json")]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["config"] == cfg.config_hash()
    assert {v["theorem"] for v in data["verdicts"]} == {"1.2"}


def test_simulate_writes_reports(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json")
    assert main(["simulate", "--config", str(tmp_path / "c.json")]) == 0
    assert (tmp_path / "runs" / f"{cfg.config_hash()}.csv").exists()


def test_bad_config_is_precondition_error(tmp_path, capsys):
    (tmp_path / "c.json").write_text("not json")
    assert main(["criteria", "--config", str(tmp_path / "c.json")]) == 2
    assert main(["criteria", "--config", str(tmp_path / "nope.json")]) == 2
    assert "error" in capsys.readouterr().err


def test_threshold_precondition(tmp_path):
    write_config(tmp_path / "c.json")
    args = ["threshold", "--config", str(tmp_path / "c.json"), "--a-lo", "1", "--a-hi", "0.5", "--width", "0.1"]
    assert main(args) == 2


def test_scatter_precondition(tmp_path):
    write_config(tmp_path / "c.json")
    assert main(["scatter", "--config", str(tmp_path / "c.json"), "--t1", "0.013", "--t2", "0.05"]) == 2


def test_diagnose_snapshots(tmp_path, capsys):
    g = make_grid(16, 64, 1)
    spec = ProblemSpec(1, 4, -1, 0.1)
    for i in range(2):
        write_snapshot(tmp_path / f"s{i}.snap", gaussian_data(g).replace(t=0.5 * i), spec)
    assert main(["diagnose", "--snapshots", str(tmp_path), "--R", "2"]) == 0
    lines = capsys.readouterr().out.strip().split("\n")
    assert len(lines) == 3 and lines[1].startswith("s0.snap")
    assert main(["diagnose", "--snapshots", str(tmp_path / "empty")]) == 2


def test_missing_subcommand():
    with pytest.raises(SystemExit):
        main([])
