import csv

import pytest

from swipt_harq.cli import EXIT_CONFIG, EXIT_DEVIATION, EXIT_OK, EXIT_RUNTIME, main

TABLE1 = ["--Ed", "5", "--e", "1", "--R0", "1", "--R1", "10"]


def test_solve_iid_prints_initial_value(capsys):
    assert main(["solve-iid", *TABLE1, "--lambda", "0.5"]) == EXIT_OK
    out, err = capsys.readouterr()
    assert out.startswith("b,m_bits,k_star,k_id,k_eh,rho_star")
    assert "k*(0,0) = 15.9941" in err


def test_solve_to_file(tmp_path, capsys):
    path = tmp_path / "t.csv"
    assert main(["solve-iid", *TABLE1, "--lambda", "0.5", "--out", str(path)]) == EXIT_OK
    assert "k*(0,0) = 15.9941" in capsys.readouterr().out
    assert path.read_text().startswith("b,m_bits")


def test_solve_corr_degenerates(capsys):
    assert main(["solve-corr", *TABLE1, "--lambda0", "0.5", "--lambda1", "0.5"]) == EXIT_OK
    assert "k*(0,0) = 15.9941" in capsys.readouterr().err
    assert main(["solve-corr", *TABLE1, "--lambda", "0.5"]) == EXIT_OK


def test_config_errors(capsys, tmp_path):
    assert main(["solve-iid", "--Ed", "0", "--e", "1", "--R0", "1", "--R1", "10",
                 "--lambda", "0.5"]) == EXIT_CONFIG
    assert main(["solve-iid", *TABLE1]) == EXIT_CONFIG
    assert main(["solve-iid", *TABLE1, "--lambda0", "0.2", "--lambda1", "0.7"]) == EXIT_CONFIG
    assert main(["frobnicate"]) == EXIT_CONFIG
    assert main(["--config", str(tmp_path / "missing.ini"), "solve-iid"]) == EXIT_CONFIG
    assert main(["simulate", *TABLE1, "--lambda", "0.5", "--policy", "greedy"]) == EXIT_CONFIG
    assert main(["sweep", *TABLE1, "--lambda", "0.5", "--axis", "R0"]) == EXIT_CONFIG
    assert "error:" in capsys.readouterr().err


def test_runtime_failure(capsys):
    assert main(["solve-iid", *TABLE1, "--lambda", "0"]) == EXIT_RUNTIME
    assert main(["simulate", *TABLE1, "--lambda", "0", "--policy", "bf",
                 "--episodes", "10"]) == EXIT_RUNTIME


def test_simulate_csv(capsys):
    assert main(["simulate", "--Ed", "1", "--e", "1", "--R0", "1", "--R1", "1", "--lambda", "1",
                 "--policy", "bf", "--episodes", "100"]) == EXIT_OK
    rows = list(csv.reader(capsys.readouterr().out.splitlines()))
    assert rows[0][:2] == ["policy", "Ed"] and "mean" in rows[0]
    assert float(rows[1][rows[0].index("mean")]) == 3.0


def test_config_precedence(tmp_path, capsys):
    ini = tmp_path / "c.ini"
    ini.write_text("[defaults]\nEd = 5\ne = 1\nR0 = 1\nR1 = 10\nlambda = 0.9\n"
                   "[solve-iid]\nlambda = 0.5\n")
    assert main(["--config", str(ini), "solve-iid"]) == EXIT_OK
    assert "15.9941" in capsys.readouterr().err
    assert main(["--config", str(ini), "solve-iid", "--R0", "3"]) == EXIT_OK
    assert "15.6250" in capsys.readouterr().err
    ini.write_text("[defaults]\nEd = five\n")
    assert main(["--config", str(ini), "solve-iid"]) == EXIT_CONFIG


def test_reproduce_uses_env_out_dir(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("SWIPT_HARQ_OUT", str(tmp_path))
    code = main(["reproduce", "table1", "--episodes", "4000", "--policy", "optimal,bf"])
    out = capsys.readouterr().out
    assert code == EXIT_OK, out
    assert (tmp_path / "table1.csv").exists()
    assert "PASS" in out


def test_reproduce_flags_deviation(tmp_path, capsys):
    # overriding E_d moves the analytical row away from the published column values
    code = main(["reproduce", "table1", "--Ed", "6", "--episodes", "2000", "--policy", "bf",
                 "--out", str(tmp_path)])
    assert code == EXIT_DEVIATION
    assert "FAIL" in capsys.readouterr().out


def test_sweep_command(tmp_path, capsys):
    code = main(["sweep", "--Ed", "2", "--e", "1", "--R1", "4", "--lambda", "0.5", "--axis", "R0",
                 "--values", "1,2,4", "--policy", "optimal,if", "--episodes", "2000",
                 "--out", str(tmp_path)])
    assert code == EXIT_OK
    rows = list(csv.reader((tmp_path / "custom.csv").read_text().splitlines()))
    assert [r[0] for r in rows[1:]] == ["1.0", "2.0", "4.0"]
