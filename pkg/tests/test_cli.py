import csv
import json
from pathlib import Path

import pytest

from tegsim.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def cfg(name):
    return str(CONFIGS / name)


def test_run_writes_outputs_and_manifest(tmp_path, capsys):
    assert main(["run", "--config", cfg("ubi.toml"), "--out", str(tmp_path)]) == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["rounds"] == 2 and set(manifest["checksums"]) == {"snapshots.csv", "metrics.csv"}
    assert "ubi: 2 rounds" in capsys.readouterr().out


def test_run_seed_override(tmp_path):
    assert main(["run", "--config", cfg("circles.toml"), "--seed", "11", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "manifest.json").read_text())["seed"] == 11


def test_run_bad_config_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text('[scenario]\nkind = "ubi"\n[ubi]\nomega = 100\ndelta = 0.1\nepsilon = 1.5\n')
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "ubi.epsilon" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "missing.toml")]) == 2


def test_run_scenario_error_exits_1_naming_the_round(tmp_path, capsys):
    drain = tmp_path / "drain.toml"
    drain.write_text('[scenario]\nkind = "ubi"\nrounds = 20\n[ubi]\nomega = 10\ndelta = 0.5\nepsilon = 0\n')
    assert main(["run", "--config", str(drain), "--out", str(tmp_path / "o")]) == 1
    assert "round 2" in capsys.readouterr().err


def test_batch_runs_each_seed(tmp_path, capsys):
    out = tmp_path / "batch"
    code = main(["batch", "--config", cfg("circles.toml"), "--seeds", "3..5", "--out", str(out), "--workers", "2"])
    assert code == 0
    assert sorted(p.name for p in out.iterdir()) == ["seed-3", "seed-4", "seed-5"]
    assert capsys.readouterr().out.count(": ok") == 3


def test_batch_rejects_bad_range():
    with pytest.raises(SystemExit) as info:
        main(["batch", "--config", cfg("circles.toml"), "--seeds", "5..3", "--out", "x"])
    assert info.value.code == 2


def test_analyze_zeta(tmp_path, capsys):
    out = tmp_path / "z.csv"
    assert main(["analyze", "zeta", "--input", cfg("identity3.csv"), "--out", str(out)]) == 0
    assert capsys.readouterr().out.startswith("zeta 1 zeta_star 0")
    assert list(csv.reader(out.open()))[1] == ["1", "0", "3"]
    assert main(["analyze", "zeta", "--input", cfg("identity3.csv"), "--active", "0,2"]) == 0


def test_analyze_arbitrage(tmp_path, capsys):
    out = tmp_path / "a.csv"
    assert main(["analyze", "arbitrage", "--input", cfg("rho_three_layers.csv"), "--out", str(out)]) == 3
    assert "arbitrage 1->2->3->1 gain 300" in capsys.readouterr().out
    assert list(csv.reader(out.open()))[1] == ["1->2->3->1", "300"]
    assert main(["analyze", "arbitrage", "--input", cfg("rho_tree.csv")]) == 0
    assert "no arbitrage" in capsys.readouterr().out


def test_analyze_theorem_b(capsys):
    assert main(["analyze", "theorem-b", "--input", cfg("rho_tree.csv")]) == 0
    assert "theorem-b Acyclic" in capsys.readouterr().out
    args = ["analyze", "theorem-b", "--input", cfg("rho_three_layers.csv")]
    assert main(args) == 2
    assert main(args + ["--mu", cfg("mu_three_layers.csv")]) == 3
    assert "Counterexample cycle" in capsys.readouterr().out


def test_analyze_theorem_b_zero_mu(tmp_path, capsys):
    mu = tmp_path / "mu.csv"
    mu.write_text("layer_a,layer_b,rate\n1,2,0\n")
    assert main(["analyze", "theorem-b", "--input", cfg("rho_three_layers.csv"), "--mu", str(mu)]) == 0
    assert "ZeroMu" in capsys.readouterr().out


def test_analyze_entropy(tmp_path, capsys):
    main(["run", "--config", cfg("pagerank.toml"), "--out", str(tmp_path)])
    capsys.readouterr()
    assert main(["analyze", "entropy", "--input", str(tmp_path / "snapshots.csv")]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 61 and lines[0] == "round 0 layer pagerank entropy_bits 1.58496250072"


def test_analyze_bad_input_exits_2(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("row,col,weight\n0,zero,1\n")
    assert main(["analyze", "zeta", "--input", str(bad)]) == 2
