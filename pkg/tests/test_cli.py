import json
import subprocess
import sys

import pytest

from thermoreg.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestPointQueries:
    def test_zero_distance(self, capsys):
        code, out, _ = run(capsys, "distance", "--manifold", "gaussian", "--a", "0,1", "--b", "0,1")
        assert code == 0 and "distance 0\n" in out

    def test_sigma_chart(self, capsys):
        code, out, _ = run(capsys, "distance", "--manifold", "gaussian", "--a", "0,1", "--b", "1,1", "--coords", "mu-sigma")
        assert code == 0 and "distance 0.980258143469" in out

    def test_domain_error(self, capsys):
        code, _, err = run(capsys, "distance", "--manifold", "gaussian", "--a", "0,-1", "--b", "0,1")
        assert code == 3 and "error" in err

    def test_parse_error(self, capsys):
        code, _, err = run(capsys, "distance", "--manifold", "gaussian", "--a", "0;1", "--b", "0,1")
        assert code == 2 and "usage" in err

    def test_unknown_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["distance", "--manifold", "gaussian", "--a", "0,1", "--b", "0,1", "--frobnicate"])
        assert exc.value.code == 2

    def test_json(self, capsys):
        code, out, _ = run(capsys, "kl", "--manifold", "gaussian", "--a", "0,1", "--b", "1,1", "--json")
        payload = json.loads(out)
        assert code == 0 and payload["kl_nats"] == pytest.approx(0.5)

    def test_vonmises(self, capsys):
        code, out, _ = run(capsys, "distance", "--manifold", "vonmises", "--a", "0,1", "--b", "0,2", "--json")
        assert code == 0 and json.loads(out)["distance"] == pytest.approx(0.498299259, abs=1e-6)

    def test_geodesic(self, capsys):
        code, out, _ = run(capsys, "geodesic", "--manifold", "gaussian", "--a", "0,1", "--b", "1,2", "--points", "5")
        lines = out.splitlines()
        assert code == 0 and lines[0] == "mu,tau" and len(lines) == 6

    def test_landauer(self, capsys):
        code, out, _ = run(capsys, "landauer", "--temperature", "300", "--json")
        assert code == 0 and json.loads(out)["joules_per_bit"] == pytest.approx(2.8711e-21, abs=1e-24)

    def test_efficiency_below_bound(self, capsys):
        code, _, err = run(capsys, "efficiency", "--bits", "1", "--joules", "1e-22")
        assert code == 3 and "Landauer" in err

    def test_crystallize(self, capsys):
        code, out, _ = run(capsys, "crystallize", "--tau", "2", "--kappa", "3")
        assert code == 0 and "index 6" in out and "critical" in out


class TestCheck:
    @pytest.mark.parametrize("suite", ["curvature", "invariance", "kl-quadratic", "thermo", "metric-axioms"])
    def test_suites_pass(self, capsys, suite):
        code, out, _ = run(capsys, "check", suite)
        assert code == 0 and "FAIL" not in out

    def test_curvature_value(self, capsys):
        code, out, _ = run(capsys, "check", "curvature", "--json")
        res = json.loads(out)["results"][0]
        assert res["measured"] <= 1e-3 and "-0.5" in res["detail"]

    def test_failing_override(self, capsys):
        code, out, _ = run(capsys, "check", "curvature", "--tol", "curvature=1e-12")
        assert code == 1 and "FAIL" in out

    def test_unknown_tolerance(self, capsys):
        code, _, _ = run(capsys, "check", "thermo", "--tol", "bogus=1")
        assert code == 2

    def test_unknown_suite(self):
        with pytest.raises(SystemExit) as exc:
            main(["check", "nonsense"])
        assert exc.value.code == 2


class TestExperiment:
    def smoke(self, tmp_path, **extra):
        cfg = {"prediction": 1, "replicates": 1, "task_family": {"steps": 50}, "output_dir": str(tmp_path / "out"), **extra}
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        return path

    def test_smoke_and_determinism(self, capsys, tmp_path):
        import time

        path = self.smoke(tmp_path)
        start = time.perf_counter()
        code, out, _ = run(capsys, "experiment", str(path))
        assert time.perf_counter() - start < 10
        assert code == 0 and "prediction1_pass" in out
        first = (tmp_path / "out" / "records.csv").read_bytes()
        code, _, _ = run(capsys, "experiment", str(path), "--output-dir", str(tmp_path / "again"))
        assert (tmp_path / "again" / "records.csv").read_bytes() == first

    def test_malformed(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"replicates": "many"')
        code, _, _ = run(capsys, "experiment", str(path))
        assert code == 2
        path.write_text('{"unknown": 1}')
        assert run(capsys, "experiment", str(path))[0] == 2

    def test_io_error(self, capsys, tmp_path):
        (tmp_path / "blocker").write_text("x")
        path = self.smoke(tmp_path, output_dir=str(tmp_path / "blocker" / "out"))
        code, _, err = run(capsys, "experiment", str(path))
        assert code == 5 and "blocker" in err

    def test_divergence_exit(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setattr("thermoreg.trajectory.MAX_CLAMP_EVENTS", 0)
        path = self.smoke(tmp_path, task_family={"steps": 20, "lr": 50.0})
        code, _, err = run(capsys, "experiment", str(path))
        assert code == 4 and "run 0" in err

    def test_env_seed(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv("THERMOREG_SEED", "9")
        path = self.smoke(tmp_path)
        run(capsys, "experiment", str(path))
        text = (tmp_path / "out" / "records.csv").read_text().splitlines()
        assert text[1].split(",")[2] == "9"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "thermoreg", "crystallize", "--tau", "1", "--kappa", "1", "--json"], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["regime"] == "critical"
