"""Command-line interface behavior."""

import csv
import os

import pytest

from moeswitchsim.cli import main

SMALL_CFG = """
[model]
name = tiny
hidden = 512
moe_hidden = 256
n_experts = 16
topk = 4
seq_len = 128

[system]
name = quad
n_gpu = 4

[compute]
tile_tokens = 16

[run]
method = dysharp_full
seed = 5
"""

SWEEP_CFG = SMALL_CFG + """
[sweep]
axis = topk
values = [2, 4]
methods = [deepep, dysharp_full]
"""


@pytest.fixture()
def small_cfg(tmp_path):
    p = tmp_path / "small.cfg"
    p.write_text(SMALL_CFG)
    return str(p)


@pytest.fixture()
def sweep_cfg(tmp_path):
    p = tmp_path / "sweep.cfg"
    p.write_text(SWEEP_CFG)
    return str(p)


def test_presets_lists_shipped_names(capsys):
    assert main(["presets"]) == 0
    out = capsys.readouterr().out.split()
    assert "fig11" in out and "oracle" in out


def test_validate_accepts_good_config(small_cfg, capsys):
    assert main(["validate", small_cfg, "--echo"]) == 0
    out = capsys.readouterr().out
    assert "[model]" in out and "ok:" in out


def test_validate_reports_line_of_error(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text("[model]\nhidden = 512\nwat = 1\n")
    assert main(["validate", str(p)]) == 2
    err = capsys.readouterr().err
    assert "line 3" in err


def test_missing_config_file_is_reported(capsys):
    assert main(["validate", "/nonexistent/x.cfg"]) == 2
    assert "error" in capsys.readouterr().err


def test_run_writes_runs_csv(small_cfg, tmp_path, capsys):
    out = str(tmp_path / "out")
    assert main(["run", "--config", small_cfg, "--out", out]) == 0
    with open(os.path.join(out, "runs.csv")) as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 1 and rows[0]["method"] == "dysharp_full"
    assert "total=" in capsys.readouterr().out


def test_run_method_override_and_json(small_cfg, tmp_path):
    out = str(tmp_path / "out")
    assert main(
        ["run", "--config", small_cfg, "--method", "deepep", "--format", "json", "--out", out]
    ) == 0
    assert os.path.exists(os.path.join(out, "run_deepep.json"))


def test_run_seed_override_changes_result(small_cfg, tmp_path):
    rows = []
    for seed in ("5", "6"):
        out = str(tmp_path / f"out{seed}")
        assert main(["run", "--config", small_cfg, "--seed", seed, "--out", out]) == 0
        with open(os.path.join(out, "runs.csv")) as f:
            rows.append(list(csv.DictReader(f))[0])
    assert rows[0]["seed"] == "5" and rows[1]["seed"] == "6"
    assert rows[0]["config_hash"] != rows[1]["config_hash"]


def test_sweep_jobs_output_identical(sweep_cfg, tmp_path):
    outs = []
    for jobs, tag in (("1", "a"), ("2", "b")):
        out = str(tmp_path / tag)
        assert main(["sweep", "--config", sweep_cfg, "--jobs", jobs, "--out", out]) == 0
        with open(os.path.join(out, "sweep.csv"), "rb") as f:
            outs.append(f.read())
    assert outs[0] == outs[1]


def test_sweep_without_section_errors(small_cfg, capsys):
    assert main(["sweep", "--config", small_cfg]) == 2
    assert "no [sweep]" in capsys.readouterr().err


def test_oracle_emits_tables(tmp_path, capsys):
    out = str(tmp_path / "o")
    assert main(["oracle", "--preset", "oracle", "--out", out, "--mc-samples", "5000"]) == 0
    text = capsys.readouterr().out
    assert "redundancy=0.4312" in text
    assert "mc d" in text
    with open(os.path.join(out, "codec.csv")) as f:
        rows = list(csv.DictReader(f))
    assert {r["transport"] for r in rows} == {"dymultimem", "explicit"}
    n8 = [
        r
        for r in rows
        if r["transport"] == "dymultimem"
        and r["granularity_bytes"] == "256"
        and r["n_targets"] == "8"
    ]
    assert float(n8[0]["request_efficiency"]) == 0.8


def test_spec_source_required(capsys):
    assert main(["run"]) == 2
    assert "--preset" in capsys.readouterr().err
