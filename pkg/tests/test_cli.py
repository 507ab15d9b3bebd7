import csv
import json

import pytest

from sosbm.cli import main
from sosbm.paths import read_path_csv


def simulate(out, *extra):
    return main(["simulate", "--set", "n=10", "--set", "paths=3", "--seed", "4", "--no-timestamp",
                 "--out", str(out), *extra])


def data_rows(path):
    return [line for line in path.read_text().splitlines() if line and not line.startswith("#")]


class TestSimulate:
    def test_files_and_manifest(self, tmp_path):
        assert simulate(tmp_path) == 0
        manifest = list(csv.reader(data_rows(tmp_path / "manifest.csv")))
        assert manifest[0] == ["path_id", "seed", "stream", "file"]
        assert len(manifest) == 4
        first = tmp_path / manifest[1][3]
        assert len(data_rows(first)) == 12  # header plus 11 observations
        path = read_path_csv(first)
        assert path.n == 10 and len(path.values) == 11 and path.seed == 4

    def test_byte_identical_reruns(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        simulate(a)
        simulate(b, "--jobs", "1")
        for name in ("manifest.csv", "paths/path_00000.csv", "paths/path_00002.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_timestamp_line(self, tmp_path):
        main(["simulate", "--set", "n=5", "--set", "paths=1", "--out", str(tmp_path)])
        assert (tmp_path / "manifest.csv").read_text().startswith("# created=")

    def test_config_file(self, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"rho": 2.0, "beta": -0.3, "n": 20, "paths": 2}))
        assert main(["simulate", "--config", str(cfg), "--no-timestamp", "--out", str(tmp_path / "o")]) == 0
        path = read_path_csv(tmp_path / "o" / "paths" / "path_00001.csv")
        assert path.params.rho == 2.0 and path.params.beta == -0.3 and path.n == 20


class TestEstimate:
    def test_round_trip_through_csv(self, tmp_path, capsys):
        main(["simulate", "--set", "n=2000", "--set", "paths=1", "--set", "sigma_plus=2", "--no-timestamp",
              "--out", str(tmp_path)])
        capsys.readouterr()
        code = main(["estimate", str(tmp_path / "paths" / "path_00000.csv"), "--joint", "--out", str(tmp_path)])
        assert code == 0
        header, row = capsys.readouterr().out.strip().splitlines()
        record = dict(zip(header.split(","), row.split(",")))
        assert record["n"] == "2000"
        assert (tmp_path / "estimate.csv").exists()

    def test_schema_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("i,t,x\n0,0.0,0.0\n1,0.1,oops\n")
        assert main(["estimate", str(bad)]) == 2
        assert "line 3" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["estimate", str(tmp_path / "absent.csv")]) == 2


class TestConfigErrors:
    @pytest.mark.parametrize("setting", ["x=nan", "paths=0", "u=cube", "beta=2", "nonsense"])
    def test_exit_code_two(self, tmp_path, capsys, setting):
        assert main(["simulate", "--set", setting, "--out", str(tmp_path)]) == 2
        assert capsys.readouterr().err.startswith("error:")

    def test_field_named(self, tmp_path, capsys):
        main(["convergence", "--set", "x=nan", "--out", str(tmp_path)])
        assert "'x'" in capsys.readouterr().err


class TestVerify:
    def test_scaling_identity(self, tmp_path):
        code = main(["verify", "scaling", "--set", "c=1", "--set", "rho=1", "--set", "beta=0.3",
                     "--out", str(tmp_path)])
        assert code == 0
        rows = list(csv.reader(data_rows(tmp_path / "verify_scaling.csv")))
        assert rows[0][-1] == "pass" and all(r[-1] == "true" for r in rows[1:])

    def test_prop57_without_stickiness(self, tmp_path):
        assert main(["verify", "prop57", "--set", "rho=0", "--out", str(tmp_path)]) == 0

    def test_kernel_single_cell(self, tmp_path):
        assert main(["verify", "kernel", "--set", "rho=1", "--set", "beta=-0.5", "--out", str(tmp_path)]) == 0
        assert (tmp_path / "verify_kernel.csv").exists()

    def test_reduction_single_cell(self, tmp_path):
        code = main(["verify", "reduction", "--set", "sigma_plus=2", "--set", "beta=0.3", "--set", "n=1",
                     "--set", "paths=5000", "--out", str(tmp_path)])
        assert code == 0


class TestConvergence:
    def test_small_run(self, tmp_path, capsys):
        code = main(["convergence", "--set", "n=1000,10000", "--set", "paths=100", "--set", "beta=0.5",
                     "--seed", "5", "--out", str(tmp_path)])
        out = capsys.readouterr().out
        assert "final_z_within_threshold" in out
        assert code in (0, 1)
        rows = list(csv.reader(data_rows(tmp_path / "convergence.csv")))
        assert rows[0][:3] == ["n", "u_n", "mc_mean"]
        assert [r[0] for r in rows[1:]] == ["1000", "10000"]
        assert (tmp_path / "convergence_checks.csv").exists()

    def test_negative_control_is_reported(self, tmp_path, capsys):
        code = main(["convergence", "--set", "g=hat0", "--set", "n=10000", "--set", "paths=100",
                     "--out", str(tmp_path)])
        assert "negative control" in capsys.readouterr().out
        assert code == 0

    def test_starved(self, tmp_path, capsys):
        code = main(["convergence", "--set", "x=30", "--set", "n=10", "--set", "paths=5", "--out", str(tmp_path)])
        assert code == 1
        assert "starved" in capsys.readouterr().err
