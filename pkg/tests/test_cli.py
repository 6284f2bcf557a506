import csv
import os

import numpy as np
import pytest

from verihom.cli import CONFIG_SCHEMA, load_config, main


def write(path, text):
    with open(path, "w") as fh:
        fh.write(text)


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_bad_config_exits_2(tmp_path):
    cfg = tmp_path / "cfg.yaml"
    write(cfg, "figure3:\n  backend: nonsense\n")
    assert main(["figure3", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    write(cfg, "unknown_section: {}\n")
    assert main(["figure3", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    write(cfg, "::: not yaml [\n")
    assert main(["figure3", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_schema_names_offending_field(tmp_path, capsys):
    cfg = tmp_path / "cfg.yaml"
    write(cfg, "sample:\n  shots: -3\n")
    assert main(["sample", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "sample/shots" in err


def test_sample_deterministic(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    cfg = tmp_path / "cfg.yaml"
    write(cfg, "sample:\n  shots: 50\n  lo_photons: 4.0\n")
    assert main(["sample", "--config", str(cfg), "--seed", "5", "--out", str(out1)]) == 0
    assert main(["sample", "--config", str(cfg), "--seed", "5", "--out", str(out2)]) == 0
    assert (out1 / "sample.csv").read_bytes() == (out2 / "sample.csv").read_bytes()
    rows = read_rows(out1 / "sample.csv")
    assert len(rows) == 50
    assert "truncation_deficit" in rows[0]


def test_figure3_small_sweep(tmp_path):
    cfg = tmp_path / "cfg.yaml"
    write(cfg, "figure3:\n  lo_photons: [20, 80]\n")
    assert main(["figure3", "--config", str(cfg), "--out", str(tmp_path), "--threads", "2"]) == 0
    rows = read_rows(tmp_path / "figure3.csv")
    assert len(rows) == 2
    for row in rows:
        z_lo, z_hi = float(row["z_lower"]), float(row["z_upper"])
        assert z_lo - 1e-9 <= float(row["squashed_first"]) <= z_hi + 1e-9
        assert float(row["z2_lower"]) - 1e-9 <= float(row["squashed_second"]) <= float(row["z2_upper"]) + 1e-9
    svg = (tmp_path / "figure3.svg").read_text()
    assert svg.startswith("<svg") and "polyline" in svg


def test_bounds_check_small(tmp_path):
    cfg = tmp_path / "cfg.yaml"
    write(cfg, "bounds_check:\n  n_two_mode: 2\n  n_four_mode: 1\n  n_three_mode: 1\n  total_photons: 3\n")
    assert main(["bounds-check", "--config", str(cfg), "--seed", "2", "--out", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "bounds_check.csv")
    assert all(r["verdict"] == "satisfied" for r in rows)
    assert all(float(r["slack"]) >= -1e-9 for r in rows)


def test_entanglement_demo_cli(tmp_path):
    cfg = tmp_path / "cfg.yaml"
    write(cfg, "entanglement_demo:\n  r: 0.5\n  lo_photons: [100]\n")
    assert main(["entanglement-demo", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "entanglement_demo.csv")
    assert rows[0]["verdict"] == "entangled-certified"
    assert float(rows[0]["margin"]) > 0.0


def test_verify_appendix_cli_reduced(tmp_path):
    cfg = tmp_path / "cfg.yaml"
    write(cfg, "verify_appendix:\n  diag_max: 3\n  grid_max: 30\n  uw_max: 3\n  samples: 10000\n  cutoff: 4\n")
    assert main(["verify-appendix", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "verify_appendix.csv")
    assert all(r["status"] == "pass" for r in rows)


def test_load_config_defaults():
    assert load_config(None) == {}
    assert "figure3" in CONFIG_SCHEMA["properties"]
