import csv
import dataclasses
import json

import numpy as np
import pytest

from barenblatt import cli
from barenblatt.solver import SolverError


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestSpecial:
    @pytest.mark.parametrize("table", ["phi", "rho", "hat"])
    def test_tables(self, tmp_path, table):
        out = tmp_path / f"{table}.csv"
        assert cli.main(["special", "--table", table, "--gamma", "0.5", "--zmax", "20",
                         "--out", str(out)]) == 0
        rows = read_rows(out)
        assert len(rows) == 201 and list(rows[0]) == ["z", "value", "d1", "d2", "residual"]
        res = np.array([float(r["residual"]) for r in rows])
        if table == "hat":
            assert np.all(res >= -1e-12)
        else:
            assert np.max(np.abs(res)) <= 1e-8

    def test_stdout_format(self, capsys):
        assert cli.main(["special", "--points", "3", "--zmax", "1"]) == 0
        text = capsys.readouterr().out
        assert "\r" not in text
        line = text.splitlines()[2].split(",")
        assert line[0] == "0.5" and len(line[1].replace("0.", "", 1)) >= 16


class TestVerify:
    def test_super_pass(self, tmp_path, capsys):
        out = tmp_path / "v.csv"
        assert cli.main(["verify", "--kind", "super", "--gamma", "0.5", "--D", "1", "--n", "5",
                         "--grid-preset", "fast", "--out", str(out)]) == 0
        assert "PASS" in capsys.readouterr().out
        rows = read_rows(out)
        assert {r["check"] for r in rows} >= {"continuity", "corner_gap", "P_inner"}

    def test_sub_pass(self, capsys):
        assert cli.main(["verify", "--kind", "sub", "--grid-preset", "fast", "--out",
                         "/dev/null"]) == 0

    def test_amplitude_out_of_range_is_usage_error(self, capsys):
        assert cli.main(["verify", "--kind", "sub", "--a", "4.5", "--grid-preset", "fast",
                         "--out", "/dev/null"]) == 1

    def test_gamma_above_one_refused(self, capsys):
        assert cli.main(["verify", "--gamma", "1.5", "--grid-preset", "fast"]) == 1

    def test_failed_certificate_exits_2(self, monkeypatch, capsys):
        # a time shift of one violates the corner condition
        select, build = cli.cmp.select_super_params, cli.cmp.matched_super
        monkeypatch.setattr(cli.cmp, "select_super_params",
                            lambda p: dataclasses.replace(select(p), t0=1.0))
        monkeypatch.setattr(cli.cmp, "matched_super", lambda sp, **k: build(sp, validate=False))
        assert cli.main(["verify", "--grid-preset", "fast", "--out", "/dev/null"]) == 2
        assert "FAIL corner" in capsys.readouterr().out

    def test_selection_failure_exits_2(self, monkeypatch, capsys):
        def fail(*a, **k):
            raise ArithmeticError("no admissible amplitude")
        monkeypatch.setattr(cli.cmp, "select_super_params", fail)
        assert cli.main(["verify", "--grid-preset", "fast"]) == 2


class TestUsage:
    @pytest.mark.parametrize("argv", [[], ["nosuch"], ["special", "--table", "bessel"],
                                      ["verify", "--gamma", "abc"],
                                      ["rates", "--sweep", "D=1"],
                                      ["rates", "--window", "1e4:1e2"]])
    def test_usage_errors(self, argv, capsys, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        assert cli.main(argv) == 1
        assert capsys.readouterr().err

    def test_unknown_config_key(self, tmp_path, capsys):
        cfg = tmp_path / "c.txt"
        cfg.write_text("colour = red\n")
        assert cli.main(["special", "--config", str(cfg)]) == 1

    def test_config_precedence(self, tmp_path):
        cfg = tmp_path / "c.txt"
        cfg.write_text("# table setup\npoints = 5  # short\nzmax = 2\ngamma=0.25\n")
        out = tmp_path / "a.csv"
        assert cli.main(["special", "--config", str(cfg), "--zmax", "4", "--out", str(out)]) == 0
        z = [float(r["z"]) for r in read_rows(out)]
        assert z == [0.0, 1.0, 2.0, 3.0, 4.0]
        direct = tmp_path / "b.csv"
        cli.main(["special", "--points", "5", "--zmax", "4", "--gamma", "0.25", "--out",
                  str(direct)])
        assert out.read_bytes() == direct.read_bytes()

    def test_solver_failure_exit_3(self, tmp_path, monkeypatch, capsys):
        def boom(*a, **k):
            raise SolverError("step size collapsed")
        monkeypatch.setattr(cli, "solve", boom)
        assert cli.main(["simulate", "--t-end", "1", "--out", str(tmp_path)]) == 3


class TestSimulate:
    def run(self, out):
        return cli.main(["simulate", "--data", "log-tail", "--gamma", "0.5", "--t-end", "1",
                         "--n-xi", "257", "--out", str(out)])

    def test_outputs_and_determinism(self, tmp_path, capsys):
        assert self.run(tmp_path / "a") == 0
        assert self.run(tmp_path / "b") == 0
        a, b = (tmp_path / d / "trajectory.csv" for d in "ab")
        assert a.read_bytes() == b.read_bytes()
        assert b"\r\n" not in a.read_bytes()
        m = json.loads((tmp_path / "a" / "manifest.json").read_text())
        mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
        assert m["config_hash"] == mb["config_hash"] and len(m["config_hash"]) == 64
        assert m["passed"] and m["verdicts"]["sandwich"]["passed"]
        assert {"A", "t0", "xi0"} <= set(m["constants"]["super"])
        assert {"a", "xi0"} <= set(m["constants"]["sub"])
        rows = read_rows(a)
        assert float(rows[0]["t"]) == 0.0
        assert all(float(r["phi"]) >= 0 for r in rows)

    def test_bump_has_no_sandwich(self, tmp_path, capsys):
        assert cli.main(["simulate", "--data", "bump", "--t-end", "0.5", "--n-xi", "129",
                         "--out", str(tmp_path)]) == 0
        m = json.loads((tmp_path / "manifest.json").read_text())
        assert "sandwich" not in m["verdicts"]


def test_rates_small(tmp_path, capsys):
    code = cli.main(["rates", "--sweep", "gamma=0.5", "--window", "1:100", "--n-xi", "257",
                     "--out", str(tmp_path)])
    assert code == 0
    rows = read_rows(tmp_path / "rates.csv")
    assert len(rows) == 1 and float(rows[0]["band_lo"]) > 0
    assert "PASS" in capsys.readouterr().out


@pytest.mark.slow
def test_reproduce_thm2(tmp_path, capsys):
    assert cli.main(["reproduce", "thm2", "--n", "5", "--D", "1", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "band_lo=" in out and out.strip().endswith("PASS")
    rows = read_rows(tmp_path / "series.csv")
    assert len(rows) >= 16
