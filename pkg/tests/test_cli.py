"""Command-line interface: outputs, determinism, exit codes, config files."""

import json
import subprocess
import sys

from relaydde.cli import main

BIN = [sys.executable, "-m", "relaydde.cli"]


def run_cli(args):
    return subprocess.run(BIN + args, capture_output=True, text=True)


class TestSimulate:
    def test_summary_and_csv(self, tmp_path, capsys):
        out = tmp_path / "orbit.csv"
        rc = main(["simulate", "--Q", "0.4", "--Omega", "7", "--sigma", "-1",
                   "--events", "2600", "--seed-nu", "2", "--out", str(out)])
        assert rc == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["schema_version"] == 1
        assert summary["tag"] == "periodic"
        assert summary["label"] == "[H,Zbar,Hbar,Z]_2^S"
        assert summary["nu"] == 2
        text = out.read_text()
        assert text.splitlines()[0] == "t,x,y"

    def test_json_record_output(self, tmp_path, capsys):
        out = tmp_path / "orbit.json"
        rc = main(["simulate", "--Q", "1.5", "--Omega", "14", "--events", "400",
                   "--format", "json", "--out", str(out)])
        assert rc == 0
        capsys.readouterr()
        rec = json.loads(out.read_text().splitlines()[0])
        assert rec["schema_version"] == 1
        assert len(rec["events"]) == 400


class TestFixedpointSpectrum:
    def test_json_schema(self, capsys):
        rc = main(["fixedpoint", "--Q", "1.5", "--Omega", "14", "--nu", "3",
                   "--format", "json"])
        assert rc == 0
        rec = json.loads(capsys.readouterr().out)
        for key in ("nu", "Q", "Omega", "sigma", "Tstar", "yZstar", "zstar",
                    "deltastar", "xH", "valid", "roots", "unstable_count"):
            assert key in rec
        assert rec["unstable_count"] == 0
        assert len(rec["roots"]) == 4

    def test_csv_header(self, capsys):
        rc = main(["spectrum", "--Q", "1.5", "--Omega", "14", "--nu", "3"])
        assert rc == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].startswith("nu,Q,Omega,sigma,Tstar,yZstar")

    def test_numerical_failure_exit_code(self, capsys):
        rc = main(["fixedpoint", "--Q", "0.45", "--Omega", "200", "--nu", "0"])
        assert rc == 1
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "NoRoot"


class TestLocus:
    def test_ns_mode_points(self, capsys):
        rc = main(["locus", "--kind", "ns", "--nu", "3", "--Q", "1.5",
                   "--Omega", "1", "--omega-min", "2", "--omega-max", "20",
                   "--format", "json"])
        assert rc == 0
        recs = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
        omegas = sorted(r["Omega"] for r in recs)
        assert len(omegas) == 2
        assert abs(omegas[0] - 4.75) <= 0.01
        assert abs(omegas[1] - 14.78) <= 0.01

    def test_corner_points(self, capsys):
        rc = main(["locus", "--kind", "corner", "--nu", "2", "--Q", "1.5",
                   "--Omega", "1", "--omega-min", "5", "--omega-max", "30",
                   "--format", "json"])
        assert rc == 0
        recs = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
        kinds = {r["kind"]: r["Omega"] for r in recs}
        assert abs(kinds["corner1"] - 9.9965) < 1e-3
        assert abs(kinds["corner2"] - 23.3251) < 1e-3


class TestRegionAndDiagram:
    def test_region_rows(self, tmp_path):
        out = tmp_path / "region.csv"
        rc = main(["region", "--nus", "2,3", "--q-min", "1.4", "--q-max", "1.6",
                   "--omega-min", "9", "--omega-max", "11",
                   "--resolution", "3x3", "--out", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "nu,Q,Omega,exists,stable,unstable_count"
        assert len(lines) == 1 + 2 * 3 * 3

    def test_threads_flag_deterministic(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        base = ["region", "--nus", "3", "--q-min", "1.4", "--q-max", "1.6",
                "--omega-min", "9", "--omega-max", "11", "--resolution", "3x4"]
        assert main(base + ["--threads", "1", "--out", str(a)]) == 0
        assert main(base + ["--threads", "2", "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_period_diagram_header(self, tmp_path):
        out = tmp_path / "pd.csv"
        rc = main(["period-diagram", "--nus", "2", "--Q", "0.45",
                   "--omega-min", "20", "--omega-max", "24", "--samples", "12",
                   "--out", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "kind,nu,Q,Omega,Tstar,invP,xH,unstable_count,marker"

    def test_mode_trace(self, tmp_path):
        out = tmp_path / "trace.csv"
        rc = main(["mode-trace", "--nu0", "2", "--Q", "1.5",
                   "--omega-min", "9", "--omega-max", "11", "--samples", "20",
                   "--out", str(out)])
        assert rc == 0
        body = out.read_text().splitlines()[1:]
        nus = {int(line.split(",")[1]) for line in body if line.split(",")[0] == "branch"}
        assert nus == {2, 3}


class TestTorusScanCommand:
    def test_cluster_below_bifurcation(self, tmp_path, capsys):
        out = tmp_path / "torus.csv"
        rc = main(["torus-scan", "--Q", "1.5", "--omega-min", "14.5",
                   "--omega-max", "14.5", "--steps", "1", "--events", "6000",
                   "--transient-frac", "0.5", "--out", str(out)])
        assert rc == 0
        summary = json.loads(capsys.readouterr().out.splitlines()[0])
        assert summary["tag"] == "cluster"
        assert out.read_text().splitlines()[0] == "Q,Omega,tag,x,y"


class TestConfigAndErrors:
    def test_usage_error_exit_2(self):
        res = run_cli(["simulate", "--Q", "1.5"])  # missing --Omega -> None
        assert res.returncode in (1, 2)
        res = run_cli(["locus", "--kind", "ns", "--Q", "1.5"])  # missing required
        assert res.returncode == 2

    def test_config_file_with_flag_override(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("Q=1.5\nOmega=14\nnu=3\n")
        rc = main(["--config", str(cfg), "fixedpoint", "--format", "json"])
        assert rc == 0
        rec = json.loads(capsys.readouterr().out)
        assert rec["Omega"] == 14.0
        rc = main(["--config", str(cfg), "fixedpoint", "--Omega", "10",
                   "--format", "json"])
        assert rc == 0
        rec = json.loads(capsys.readouterr().out)
        assert rec["Omega"] == 10.0

    def test_repeat_invocation_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["locus", "--kind", "ns", "--nu", "2", "--Q", "1.5",
                "--Omega", "1", "--omega-min", "3", "--omega-max", "8"]
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_entry_point_installed(self):
        res = run_cli(["--help"])
        assert res.returncode == 0
        assert "torus-scan" in res.stdout
