import csv
import json
from pathlib import Path

import numpy as np
import pytest

from agenet import cli

ROOT = Path(__file__).parent.parent

MINIMAL = """\
seed: 3
model: {alpha: 1.0, epsilon: 0.2, horizon: 1.0}
network: {n_neurons: 40, snapshot_grid: 11}
g0: {kind: uniform, lo: 0.0, hi: 1.0}
m0: {kind: dirac, value: 1.0}
intensity: {family: power_threshold, xi: 2.0, x_star: 0.5, slope_a: 1.0, offset_b: 0.5}
pde: {dx: 0.005}
"""


@pytest.fixture
def cfg_file(tmp_path):
    def write(text=MINIMAL, name="c.yaml"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return write


def rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def manifest(out):
    return json.loads((Path(out) / "manifest.json").read_text())


class TestSimulate:
    def test_three_files(self, cfg_file, tmp_path):
        out = tmp_path / "o"
        assert cli.main(["simulate", "--config", cfg_file(), "--out", str(out)]) == 0
        assert sorted(p.name for p in out.iterdir()) == ["events.csv", "manifest.json", "snapshots.csv"]
        snaps = rows(out / "snapshots.csv")
        assert len(snaps) == 11
        assert list(snaps[0]) == ["t", "M", "age_q10", "age_q50", "age_q90", "mean_a", "mean_a2"]
        m = manifest(out)
        assert set(m["outputs"]) == {"events.csv", "snapshots.csv"}
        assert m["seed"] == 3 and m["config"]["network"]["n_neurons"] == 40
        assert m["stats"]["spikes"] == sum(r["kind"] == "spike" for r in rows(out / "events.csv"))

    def test_seed_repeat_identical(self, cfg_file, tmp_path):
        for d in ("a", "b"):
            assert cli.main(["simulate", "--config", cfg_file(), "--out", str(tmp_path / d), "--seed", "42"]) == 0
        assert manifest(tmp_path / "a")["outputs"] == manifest(tmp_path / "b")["outputs"]
        assert manifest(tmp_path / "a")["seed"] == 42
        cli.main(["simulate", "--config", cfg_file(), "--out", str(tmp_path / "c"), "--seed", "43"])
        assert manifest(tmp_path / "c")["outputs"] != manifest(tmp_path / "a")["outputs"]

    def test_floats_round_trip(self, cfg_file, tmp_path):
        out = tmp_path / "o"
        cli.main(["simulate", "--config", cfg_file(), "--out", str(out), "--snapshot-grid", "5"])
        t = [float(r["t"]) for r in rows(out / "snapshots.csv")]
        np.testing.assert_array_equal(t, np.linspace(0.0, 1.0, 5))

    def test_missing_family(self, cfg_file, tmp_path, capsys):
        text = MINIMAL.replace("{family: power_threshold, xi: 2.0, x_star: 0.5, slope_a: 1.0, offset_b: 0.5}",
                               "{xi: 2.0}")
        assert cli.main(["simulate", "--config", cfg_file(text), "--out", str(tmp_path / "o")]) != 0
        assert "intensity.family" in capsys.readouterr().err

    def test_engine_error_echoed(self, cfg_file, tmp_path, capsys):
        text = MINIMAL.replace("snapshot_grid: 11", "snapshot_grid: 11, max_events: 2")
        assert cli.main(["simulate", "--config", cfg_file(text), "--out", str(tmp_path / "o")]) == 1
        assert "max_events=2" in capsys.readouterr().err

    def test_manifest_config_reparses(self, cfg_file, tmp_path):
        import yaml
        out = tmp_path / "o"
        cli.main(["simulate", "--config", cfg_file(), "--out", str(out)])
        echo = manifest(out)["config"]
        p = cfg_file(yaml.safe_dump(echo), "echo.yaml")
        assert cli.main(["simulate", "--config", p, "--out", str(tmp_path / "o2")]) == 0
        assert manifest(tmp_path / "o2")["outputs"] == manifest(out)["outputs"]


class TestMeanfield:
    def test_decoupled(self, cfg_file, tmp_path):
        out = tmp_path / "o"
        text = MINIMAL.replace("epsilon: 0.2", "epsilon: 0.0")
        assert cli.main(["meanfield", "--config", cfg_file(text), "--out", str(out)]) == 0
        r = rows(out / "meanfield.csv")
        t = np.array([float(v["t"]) for v in r])
        m = np.array([float(v["M"]) for v in r])
        np.testing.assert_allclose(m, np.exp(-t), rtol=0, atol=1e-8)

    def test_density(self, cfg_file, tmp_path):
        out = tmp_path / "o"
        assert cli.main(["meanfield", "--config", cfg_file(), "--out", str(out), "--emit-density", "true"]) == 0
        lines = (out / "density.csv").read_text().splitlines()
        assert lines[0].startswith("t,0.0,0.005,")
        assert "density.csv" in manifest(out)["outputs"]

    def test_cfl(self, cfg_file, tmp_path, capsys):
        text = MINIMAL.replace("pde: {dx: 0.005}", "pde: {dx: 0.005, dt: 0.01}")
        assert cli.main(["meanfield", "--config", cfg_file(text), "--out", str(tmp_path / "o")]) != 0
        assert "CFL" in capsys.readouterr().err

    def test_picard_failure(self, cfg_file, tmp_path, capsys):
        text = MINIMAL.replace("epsilon: 0.2", "epsilon: 5.0").replace("pde: {dx: 0.005}", "pde: {dx: 0.01, max_iters: 1}")
        out = tmp_path / "o"
        assert cli.main(["meanfield", "--config", cfg_file(text), "--out", str(out)]) != 0
        err = capsys.readouterr().err
        assert "residual history" in err and str(out / "picard_residuals.csv") in err
        assert len(rows(out / "picard_residuals.csv")) == 1

    def test_random_m0_refused(self, cfg_file, tmp_path):
        text = MINIMAL.replace("{kind: dirac, value: 1.0}", "{kind: uniform, lo: 0.0, hi: 1.0}")
        assert cli.main(["meanfield", "--config", cfg_file(text), "--out", str(tmp_path / "o")]) != 0


class TestChaos:
    def test_two_rows(self, cfg_file, tmp_path):
        out = tmp_path / "o"
        args = ["chaos", "--config", cfg_file(), "--out", str(out), "--n-list", "50,100", "--replicas", "2"]
        assert cli.main(args) == 0
        lines = (out / "report.csv").read_text().splitlines()
        assert lines[0] == "N,mean_D,se_D,mean_W1,se_W1" and len(lines) == 3
        rep = json.loads((out / "report.json").read_text())
        assert [r["N"] for r in rep["rows"]] == [50, 100]

    def test_one_replica(self, cfg_file, tmp_path):
        args = ["chaos", "--config", cfg_file(), "--out", str(tmp_path / "o"), "--n-list", "50,100", "--replicas", "1"]
        assert cli.main(args) != 0

    def test_repeat_hash(self, cfg_file, tmp_path):
        for d, w in (("a", "1"), ("b", "2")):
            args = ["chaos", "--config", cfg_file(), "--out", str(tmp_path / d), "--n-list", "20,40,80",
                    "--replicas", "2", "--workers", w, "--per-replica", "true"]
            assert cli.main(args) == 0
        assert manifest(tmp_path / "a")["outputs"] == manifest(tmp_path / "b")["outputs"]
        assert "replicas.csv" in manifest(tmp_path / "a")["outputs"]


class TestValidate:
    def test_linear_passes(self, cfg_file, capsys):
        text = MINIMAL.replace("{family: power_threshold, xi: 2.0, x_star: 0.5, slope_a: 1.0, offset_b: 0.5}",
                               "{family: pure_power, xi: 1.0}")
        assert cli.main(["validate", "--config", cfg_file(text)]) == 0
        assert capsys.readouterr().out.strip().endswith("PASS")

    def test_nonmonotone_toy_fails(self, cfg_file, capsys):
        text = MINIMAL.replace("{family: power_threshold, xi: 2.0, x_star: 0.5, slope_a: 1.0, offset_b: 0.5}",
                               "{family: custom, name: nonmonotone_toy}")
        assert cli.main(["validate", "--config", cfg_file(text)]) == 1
        assert "violating pair" in capsys.readouterr().out

    def test_zero_threshold_fails(self, capsys):
        assert cli.main(["validate", "--config", str(ROOT / "configs" / "counterexample.yaml")]) == 1
        out = capsys.readouterr().out
        assert "H3 uniform smallness near x=0: FAIL" in out and "for every sampled x in (0," in out

    def test_coarse_grid(self, cfg_file, capsys):
        assert cli.main(["validate", "--config", cfg_file(MINIMAL + "validate: {nx: 2}\n")]) != 0
        assert "too coarse" in capsys.readouterr().err
