import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest
from scipy import stats as sps

from depstat.cli import main, parse_angle
from depstat.dataio import read_dataset


def run(capsysbinary, *argv):
    code = main(list(argv))
    out, err = capsysbinary.readouterr()
    return code, out, err.decode()


def write_csv(path, header, rows):
    path.write_text(",".join(header) + "\n" + "".join(",".join(map(str, r)) + "\n" for r in rows))
    return str(path)


class TestTestCommand:
    def test_copied_column_has_unit_dcor(self, tmp_path, capsysbinary):
        xs = np.random.default_rng(0).standard_normal(40)
        path = write_csv(tmp_path / "d.csv", ["x1", "y1"], [(v, v) for v in xs])
        code, out, _ = run(capsysbinary, "test", path, "--stat", "dcor", "--perms", "50")
        doc = json.loads(out)
        assert code == 0
        assert doc["statistic"] == pytest.approx(1.0, abs=1e-12)
        assert doc["reject"] is True and doc["stat_kind"] == "dcor"
        assert set(doc) == {"statistic", "stat_kind", "threshold", "p_value", "reject", "n", "p", "q", "seed",
                            "null_model", "bandwidth_x", "bandwidth_y"}
        assert doc["bandwidth_x"] is None and (doc["n"], doc["p"], doc["q"]) == (40, 1, 1)

    def test_same_seed_is_byte_identical(self, tmp_path, capsysbinary):
        path = tmp_path / "g.csv"
        assert run(capsysbinary, "gen", "--theta", "pi/8", "--d", "2", "--n", "60", "--seed", "3", "--out", str(path))[0] == 0
        first = run(capsysbinary, "test", str(path), "--seed", "11")
        second = run(capsysbinary, "test", str(path), "--seed", "11")
        assert first[1] == second[1] and first[0] == 0
        other = run(capsysbinary, "test", str(path), "--seed", "12")
        assert json.loads(other[1])["statistic"] == json.loads(first[1])["statistic"]

    def test_logs_resolved_configuration(self, tmp_path, capsysbinary):
        path = write_csv(tmp_path / "d.csv", ["x1", "y1"], [(i, i % 3) for i in range(12)])
        _, _, err = run(capsysbinary, "test", path, "--bandwidth", "fixed:1.5,2", "--perms", "10")
        assert '"fixed_bandwidth":[1.5,2.0]' in err.replace(" ", "") and '"perms":10' in err.replace(" ", "")

    def test_fixed_bandwidth_reported(self, tmp_path, capsysbinary):
        path = write_csv(tmp_path / "d.csv", ["x1", "y1"], [(i, i % 3) for i in range(12)])
        doc = json.loads(run(capsysbinary, "test", path, "--bandwidth", "fixed:1.5,2", "--perms", "10")[1])
        assert (doc["bandwidth_x"], doc["bandwidth_y"]) == (1.5, 2.0)

    def test_gamma_null(self, tmp_path, capsysbinary):
        path = tmp_path / "g.csv"
        run(capsysbinary, "gen", "--theta", "0", "--d", "1", "--n", "80", "--out", str(path))
        doc = json.loads(run(capsysbinary, "test", str(path), "--null", "gamma")[1])
        assert doc["null_model"] == "gamma" and doc["threshold"] > 0

    def test_malformed_csv_exit_2_with_line(self, tmp_path, capsysbinary):
        path = write_csv(tmp_path / "bad.csv", ["x1", "y1"], [(1, 2), (3, 4), (5, "oops")])
        code, _, err = run(capsysbinary, "test", path)
        assert code == 2 and "line 4" in err
        path = write_csv(tmp_path / "short.csv", ["x1", "y1"], [(1, 2), (3,)])
        code, _, err = run(capsysbinary, "test", path)
        assert code == 2 and "line 3" in err

    def test_missing_file_exit_2(self, tmp_path, capsysbinary):
        assert run(capsysbinary, "test", str(tmp_path / "absent.csv"))[0] == 2

    def test_feuerverger_multivariate_exit_2(self, tmp_path, capsysbinary):
        path = tmp_path / "g.csv"
        run(capsysbinary, "gen", "--theta", "0.1", "--d", "2", "--n", "20", "--out", str(path))
        code, _, err = run(capsysbinary, "test", str(path), "--stat", "feuerverger")
        assert code == 2 and "univariate" in err

    @pytest.mark.parametrize("argv", [["test", "f.csv", "--bogus"], ["test", "f.csv", "--stat", "cca"],
                                      ["test", "f.csv", "--bandwidth", "fixed:1"], ["frobnicate"],
                                      ["test", "f.csv", "--alpha", "2"]])
    def test_usage_errors_exit_1(self, argv, capsysbinary):
        with pytest.raises(SystemExit) as info:
            code = main(argv)
            raise SystemExit(code)
        assert info.value.code == 1

    def test_stdin_input(self, capsysbinary, monkeypatch):
        monkeypatch.setattr(sys, "stdin", io.StringIO("x1,y1\n0,1\n1,0\n2,2\n3,1\n"))
        code, out, _ = run(capsysbinary, "test", "-", "--stat", "dcov", "--perms", "5")
        assert code == 0 and json.loads(out)["n"] == 4

    def test_end_to_end_calibration(self, tmp_path, capsysbinary):
        rejections = 0
        for seed in range(300):
            path = tmp_path / "cal.csv"
            assert run(capsysbinary, "gen", "--theta", "0", "--d", "1", "--n", "128", "--seed", str(seed),
                       "--out", str(path))[0] == 0
            code, out, _ = run(capsysbinary, "test", str(path), "--seed", str(seed))
            assert code == 0
            rejections += json.loads(out)["reject"]
        lo, hi = sps.binom.interval(0.99, 300, 0.05)
        assert lo <= rejections <= hi


class TestGenCommand:
    def test_same_seed_identical_files(self, tmp_path, capsysbinary):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            run(capsysbinary, "gen", "--theta", "0", "--d", "1", "--n", "100", "--seed", "7", "--out", str(path))
        assert a.read_bytes() == b.read_bytes()

    def test_shape_and_header(self, tmp_path, capsysbinary):
        path = tmp_path / "g.csv"
        code, _, err = run(capsysbinary, "gen", "--theta", "0.3", "--d", "2", "--n", "50", "--out", str(path))
        assert code == 0
        rows = list(csv.reader(path.read_text().splitlines()))
        assert rows[0] == ["x1", "x2", "y1", "y2"] and len(rows) == 51
        assert all(len(r) == 4 for r in rows)
        resolved = json.loads(err.strip().splitlines()[-1])
        assert resolved["d"] == 2 and resolved["n"] == 50 and resolved["theta"] == 0.3

    def test_stdout_output_round_trips(self, capsysbinary):
        code, out, _ = run(capsysbinary, "gen", "--theta", "pi/16", "--d", "4", "--n", "12")
        sample = read_dataset(out.decode())
        assert code == 0 and (sample.n, sample.p, sample.q) == (12, 4, 4)
        assert b"\r" not in out

    def test_quarter_pi_uncorrelated(self, tmp_path, capsysbinary):
        path = tmp_path / "g.csv"
        assert run(capsysbinary, "gen", "--theta", "0.7854", "--d", "1", "--n", "2048", "--out", str(path))[0] == 0
        sample = read_dataset(path.read_text())
        assert abs(np.corrcoef(sample.x[:, 0], sample.y[:, 0])[0, 1]) < 0.08

    @pytest.mark.parametrize("flags", [["--theta", "-0.2", "--d", "1", "--n", "10"],
                                       ["--theta", "1.3", "--d", "1", "--n", "10"],
                                       ["--theta", "0.1", "--d", "3", "--n", "10"],
                                       ["--theta", "0.1", "--d", "1", "--n", "1"],
                                       ["--theta", "pie", "--d", "1", "--n", "10"]])
    def test_invalid_config_exit_1(self, flags, capsysbinary):
        try:
            code = main(["gen", *flags])
        except SystemExit as exc:
            code = exc.code
        assert code == 1


class TestPowerCommand:
    def test_minimal_grid(self, tmp_path, capsysbinary):
        out = tmp_path / "p.csv"
        code, _, err = run(capsysbinary, "power", "--thetas", "0.2", "--ns", "32", "--ds", "1", "--tests", "hsic",
                           "--reps", "1", "--perms", "20", "--out", str(out))
        assert code == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 2 and lines[0].startswith("test,theta,n,d")
        assert lines[1].split(",")[6] in ("0.000000", "1.000000")
        assert "cells 1/1" in err

    def test_rows_tagged_with_test(self, tmp_path, capsysbinary):
        out = tmp_path / "p.csv"
        run(capsysbinary, "power", "--thetas", "0,pi/4", "--ns", "24", "--ds", "1,2", "--tests", "hsic,dcov",
            "--reps", "2", "--perms", "10", "--out", str(out))
        rows = list(csv.DictReader(out.read_text().splitlines()))
        assert len(rows) == 8
        assert sorted({r["test"] for r in rows}) == ["dcov", "hsic"]
        assert sum(r["test"] == "hsic" for r in rows) == 4

    def test_config_file_and_json(self, tmp_path, capsysbinary):
        config = tmp_path / "grid.json"
        config.write_text(json.dumps({"thetas": [0.1], "ns": [20], "ds": [1], "tests": ["dcor"], "repetitions": 2,
                                      "permutations": 10}))
        out = tmp_path / "p.json"
        code, _, _ = run(capsysbinary, "power", "--config", str(config), "--seed", "4", "--format", "json",
                         "--out", str(out))
        doc = json.loads(out.read_text())
        assert code == 0 and doc["grid"]["base_seed"] == 4 and len(doc["cells"]) == 1

    def test_bad_grid_exit_1(self, tmp_path, capsysbinary):
        code, _, _ = run(capsysbinary, "power", "--ds", "3", "--out", str(tmp_path / "p.csv"))
        assert code == 1

    def test_cell_failure_writes_partial_and_exits_3(self, tmp_path, capsysbinary):
        out = tmp_path / "p.csv"
        code, _, err = run(capsysbinary, "power", "--thetas", "0.1", "--ns", "20", "--ds", "1,2", "--tests",
                           "feuerverger", "--reps", "2", "--perms", "5", "--out", str(out))
        partial = tmp_path / "p.csv.partial"
        assert code == 3 and not out.exists() and partial.exists()
        rows = list(csv.DictReader(partial.read_text().splitlines()))
        assert [(r["test"], r["d"]) for r in rows] == [("feuerverger", "1")]
        assert "d=2" in err or "'d': 2" in err

    def test_desk_grid_calibration(self, tmp_path, capsysbinary):
        # every theta = 0 cell of the desk grid; cells depend only on their own coordinates
        out = tmp_path / "p.csv"
        code, _, _ = run(capsysbinary, "power", "--thetas", "0", "--out", str(out))
        rows = list(csv.DictReader(out.read_text().splitlines()))
        assert code == 0 and len(rows) == 8
        for row in rows:
            assert 0.91 <= float(row["accept_rate"]) <= 0.99, row


def test_parse_angle():
    assert parse_angle("pi/4") == math.pi / 4
    assert parse_angle("3*pi/16") == 3 * math.pi / 16
    assert parse_angle("0.5") == 0.5


def test_module_entry_point(tmp_path):
    path = tmp_path / "g.csv"
    proc = subprocess.run([sys.executable, "-m", "depstat", "gen", "--theta", "0", "--d", "1", "--n", "5",
                           "--out", str(path)], capture_output=True)
    assert proc.returncode == 0 and len(path.read_text().splitlines()) == 6
    proc = subprocess.run([sys.executable, "-m", "depstat", "test", str(path), "--nope"], capture_output=True)
    assert proc.returncode == 1


def test_full_preset_grid():
    from depstat.cli import _grid_from_args, build_parser

    args = build_parser().parse_args(["power", "--preset", "full", "--thetas", "0.1", "--out", "x.csv"])
    grid = _grid_from_args(args)
    assert grid.ns == (128, 512, 1024, 2048) and grid.ds == (1, 2, 4) and grid.repetitions == 500
    assert grid.thetas == (0.1,) and grid.density_x == "random"
