"""End-to-end command-line tests driven through ``main`` in-process."""

import hashlib
import json
import os

import numpy as np
import numpy.testing as npt
import pytest
from scipy import stats

import skewswitch
from skewswitch import fbar, simulate_path, transition_density
from skewswitch.cli import main
from skewswitch.config import load_config

CONTRACTING_2R = """\
[model]
transition_matrix = [[0.9, 0.1], [0.2, 0.8]]
eps = "standard-normal"
iota = "standard-normal"

[[model.regimes]]
m = { family = "affine", intercept = 0.0, slope = 0.3 }
sigma = { family = "constant", value = 1.0 }
a = { family = "constant", value = 0.1 }

[[model.regimes]]
m = { family = "affine", intercept = 0.0, slope = 0.5 }
sigma = { family = "constant", value = 1.0 }
a = { family = "constant", value = 0.1 }
"""

EXPLOSIVE_1R = """\
[model]
transition_matrix = [[1.0]]
eps = "standard-normal"
iota = "standard-normal"

[[model.regimes]]
m = { family = "affine", intercept = 0.0, slope = 1.2 }
sigma = { family = "constant", value = 1.0 }
a = { family = "constant", value = 0.1 }
"""

IID_1R = """\
[model]
transition_matrix = [[1.0]]
eps = "standard-normal"
iota = "standard-normal"

[[model.regimes]]
m = { family = "constant", value = 0.0 }
sigma = { family = "constant", value = 1.0 }
a = { family = "constant", value = 1e-12 }
"""


def _write(tmp_path, text, name="run.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _json(out_dir, name):
    with open(os.path.join(str(out_dir), name), encoding="utf-8") as fh:
        return json.load(fh)


class TestCheck:
    def test_contracting_model_passes(self, tmp_path, capsys):
        cfg = _write(tmp_path, CONTRACTING_2R)
        out = tmp_path / "out"
        assert main(["check", cfg, "--out", str(out)]) == 0
        report = _json(out, "check_report.json")
        assert report["passed"] is True
        assert report["failures"] == []
        assert report["chain"]["irreducible"] is True
        assert report["chain"]["period"] == 1
        assert report["chain"]["aperiodic"] is True
        npt.assert_allclose(
            sum(report["chain"]["stationary_distribution"]), 1.0, atol=1e-12
        )
        assert report["innovations"]["eps"]["kappa"] == pytest.approx(3.0, abs=1e-6)
        assert report["assumption8"]["verdict"] == "pass"
        manifest = _json(out, "manifest.json")
        assert manifest["tool"] == "skewswitch"
        assert manifest["version"] == skewswitch.__version__
        assert manifest["command"] == "check"
        assert manifest["files"] == ["check_report.json"]
        assert manifest["config_sha256"] == hashlib.sha256(
            CONTRACTING_2R.encode("utf-8")
        ).hexdigest()
        assert "all checks passed" in capsys.readouterr().out

    def test_periodic_chain_flagged(self, tmp_path, capsys):
        cfg = _write(
            tmp_path,
            CONTRACTING_2R.replace(
                "[[0.9, 0.1], [0.2, 0.8]]", "[[0.0, 1.0], [1.0, 0.0]]"
            ),
        )
        out = tmp_path / "out"
        assert main(["check", cfg, "--out", str(out)]) == 1
        report = _json(out, "check_report.json")
        assert report["passed"] is False
        assert report["chain"]["period"] == 2
        assert report["chain"]["aperiodic"] is False
        assert report["chain"]["stationary_distribution"] is None
        assert any("periodic" in f for f in report["failures"])
        assert "FAIL" in capsys.readouterr().err

    def test_reducible_chain_flagged(self, tmp_path):
        cfg = _write(
            tmp_path,
            CONTRACTING_2R.replace(
                "[[0.9, 0.1], [0.2, 0.8]]", "[[1.0, 0.0], [0.0, 1.0]]"
            ),
        )
        out = tmp_path / "out"
        assert main(["check", cfg, "--out", str(out)]) == 1
        report = _json(out, "check_report.json")
        assert any("reducible" in f for f in report["failures"])
        assert report["chain"]["period"] is None

    def test_undefined_fourth_moment_flagged(self, tmp_path, capsys):
        cfg = _write(
            tmp_path,
            CONTRACTING_2R.replace(
                'iota = "standard-normal"',
                'iota = { family = "standardized-student-t", nu = 4.0 }',
            ),
        )
        out = tmp_path / "out"
        assert main(["check", cfg, "--out", str(out)]) == 1
        report = _json(out, "check_report.json")
        assert "error" in report["innovations"]["iota"]
        assert "error" in report["assumption8"]
        assert any("skew innovation" in f for f in report["failures"])
        assert "FAIL" in capsys.readouterr().err

    def test_explosive_drift_flagged(self, tmp_path):
        cfg = _write(tmp_path, EXPLOSIVE_1R)
        out = tmp_path / "out"
        assert main(["check", cfg, "--out", str(out)]) == 1
        report = _json(out, "check_report.json")
        assert report["assumption8"]["verdict"] == "fail"
        assert any("drift condition fails" in f for f in report["failures"])


class TestSimulate:
    def _cfg(self, extra):
        return CONTRACTING_2R + extra

    def test_writes_paths_and_manifest(self, tmp_path):
        cfg = _write(
            tmp_path,
            self._cfg("\n[simulate]\nn = 500\nreplications = 3\nseed = 9\n"),
        )
        out = tmp_path / "out"
        assert main(["simulate", cfg, "--out", str(out)]) == 0
        manifest = _json(out, "manifest.json")
        assert manifest["files"] == ["path_001.csv", "path_002.csv", "path_003.csv"]
        assert manifest["n_diverged"] == 0
        assert manifest["parameters"]["n"] == 500
        assert manifest["parameters"]["forced"] is False
        for row in manifest["replications"]:
            assert row["diverged"] is False
            assert row["length"] == 500
            assert (out / row["file"]).exists()
        header = (out / "path_001.csv").read_text().splitlines()[0]
        assert header == "t,regime,x"

    def test_byte_identical_runs_and_worker_counts(self, tmp_path):
        cfg = _write(
            tmp_path,
            self._cfg("\n[simulate]\nn = 2000\nreplications = 4\nseed = 42\n"),
        )
        outs = [tmp_path / f"out{i}" for i in range(3)]
        assert main(["simulate", cfg, "--out", str(outs[0])]) == 0
        assert main(["simulate", cfg, "--out", str(outs[1])]) == 0
        assert main(["simulate", cfg, "--out", str(outs[2]), "--workers", "8"]) == 0
        for name in (f"path_{i:03d}.csv" for i in range(1, 5)):
            first = (outs[0] / name).read_bytes()
            assert (outs[1] / name).read_bytes() == first
            assert (outs[2] / name).read_bytes() == first

    def test_seed_override(self, tmp_path):
        cfg = _write(
            tmp_path, self._cfg("\n[simulate]\nn = 200\nreplications = 1\nseed = 9\n")
        )
        base, override, matching = (tmp_path / n for n in ("a", "b", "c"))
        assert main(["simulate", cfg, "--out", str(base)]) == 0
        assert main(["simulate", cfg, "--out", str(override), "--seed", "123"]) == 0
        assert main(["simulate", cfg, "--out", str(matching), "--seed", "9"]) == 0
        first = (base / "path_001.csv").read_bytes()
        assert (override / "path_001.csv").read_bytes() != first
        assert (matching / "path_001.csv").read_bytes() == first
        assert _json(override, "manifest.json")["master_seed"]["entropy"] == 123

    def test_refuses_failing_model(self, tmp_path, capsys):
        cfg = _write(tmp_path, EXPLOSIVE_1R + "\n[simulate]\nn = 100\n")
        out = tmp_path / "out"
        assert main(["simulate", cfg, "--out", str(out)]) == 1
        assert not list(out.glob("path_*.csv"))
        assert "--force" in capsys.readouterr().err

    def test_force_runs_failing_model(self, tmp_path):
        cfg = _write(tmp_path, EXPLOSIVE_1R + "\n[simulate]\nn = 60\nseed = 77\n")
        out = tmp_path / "out"
        assert main(["simulate", cfg, "--out", str(out), "--force"]) == 0
        manifest = _json(out, "manifest.json")
        assert manifest["parameters"]["forced"] is True
        assert manifest["n_diverged"] == 0

    def test_all_diverged_is_a_failure(self, tmp_path, capsys):
        cfg = _write(
            tmp_path,
            EXPLOSIVE_1R
            + "\n[simulate]\nn = 10000\nreplications = 3\ninit_x = 50.0\nseed = 77\n",
        )
        out = tmp_path / "out"
        assert main(["simulate", cfg, "--out", str(out), "--force"]) == 1
        manifest = _json(out, "manifest.json")
        assert manifest["n_diverged"] == 3
        for row in manifest["replications"]:
            assert row["diverged"] is True
            assert row["length"] < 10000
        assert "all replications diverged" in capsys.readouterr().err

    def test_missing_simulate_table(self, tmp_path, capsys):
        cfg = _write(tmp_path, CONTRACTING_2R)
        assert main(["simulate", cfg, "--out", str(tmp_path / "out")]) == 2
        assert "config error" in capsys.readouterr().err


class TestDensity:
    def test_normalization_header_and_value_column(self, tmp_path):
        text = CONTRACTING_2R + (
            "\n[density]\nregime = 1\nx = 0.5\n"
            "u = { start = -4.0, stop = 4.0, count = 21 }\n"
        )
        cfg = _write(tmp_path, text)
        out = tmp_path / "out"
        assert main(["density", cfg, "--out", str(out)]) == 0
        lines = (out / "density.csv").read_text().splitlines()
        assert lines[0].startswith("# normalization,")
        normalization = float(lines[0].split(",", 1)[1])
        assert normalization == pytest.approx(1.0, abs=1e-6)
        assert lines[1] == "u,transition_density"
        spec = load_config(cfg).model
        grid = np.linspace(-4.0, 4.0, 21)
        for line, u in zip(lines[2:], grid):
            u_text, value_text = line.split(",")
            assert float(u_text) == u
            assert float(value_text) == transition_density(spec, 1, 0.5, float(u))
        manifest = _json(out, "manifest.json")
        assert manifest["normalization"] == normalization
        assert manifest["parameters"]["grid_points"] == 21

    def test_floored_skew_curve_matches_fbar(self, tmp_path):
        text = IID_1R.replace(
            'm = { family = "constant", value = 0.0 }',
            'm = { family = "affine", intercept = 0.0, slope = 0.3 }',
        ) + (
            "\n[density]\nregime = 1\nx = 1.0\n"
            "u = { start = -4.0, stop = 4.0, count = 21 }\n"
        )
        cfg = _write(tmp_path, text)
        out = tmp_path / "out"
        assert main(["density", cfg, "--out", str(out)]) == 0
        spec = load_config(cfg).model
        for line in (out / "density.csv").read_text().splitlines()[2:]:
            u_text, value_text = line.split(",")
            expected = fbar(spec, 1, 1.0, float(u_text))
            assert float(value_text) == pytest.approx(expected, abs=1e-6)

    def test_unit_skew_curve_matches_simulation_kde(self, tmp_path):
        # m = 0 makes every step an independent draw of eps + iota^2, so a
        # long path is a sample from the conditional law at any x
        text = IID_1R.replace(
            'a = { family = "constant", value = 1e-12 }',
            'a = { family = "constant", value = 1.0 }',
        ) + (
            "\n[density]\nregime = 1\nx = 0.0\n"
            "u = { start = -1.0, stop = 4.0, count = 11 }\n"
        )
        cfg = _write(tmp_path, text)
        out = tmp_path / "out"
        assert main(["density", cfg, "--out", str(out)]) == 0
        rows = [
            line.split(",")
            for line in (out / "density.csv").read_text().splitlines()[2:]
        ]
        spec = load_config(cfg).model
        draws = simulate_path(spec, 1, 0.0, 10**6, seed=404).values
        kde = stats.gaussian_kde(draws)
        for u_text, value_text in rows:
            estimate = kde(float(u_text))[0]
            assert float(value_text) == pytest.approx(estimate, rel=0.02)

    def test_missing_density_table(self, tmp_path, capsys):
        cfg = _write(tmp_path, CONTRACTING_2R)
        assert main(["density", cfg, "--out", str(tmp_path / "out")]) == 2
        assert "config error" in capsys.readouterr().err


class TestDiagnose:
    SMALL = (
        "\n[diagnose]\nlags = { start = 4, stop = 12 }\nreplications = 300\n"
        "x0 = [50.0]\nseed = 5\nreference_length = 20000\nburn_in = 2000\n"
    )

    def test_contracting_report(self, tmp_path, capsys):
        cfg = _write(tmp_path, CONTRACTING_2R + self.SMALL)
        out = tmp_path / "out"
        assert main(["diagnose", cfg, "--out", str(out)]) == 0
        report = _json(out, "diagnose_report.json")
        assert report["drift_constants"]["beta"] > 0.0
        assert 0.0 < report["convergence"]["fitted_rho"] < 1.0
        lag_lines = (out / "distance_vs_lag.csv").read_text().splitlines()
        assert lag_lines[0] == "lag,distance,above_noise_floor"
        assert len(lag_lines) == 1 + 9
        margin_lines = (out / "drift_margins.csv").read_text().splitlines()
        assert margin_lines[0] == "x,margin_regime_1,margin_regime_2"
        manifest = _json(out, "manifest.json")
        assert sorted(manifest["files"]) == [
            "diagnose_report.json",
            "distance_vs_lag.csv",
            "drift_margins.csv",
        ]
        assert manifest["master_seed"]["entropy"] == 5
        assert "fitted rho" in capsys.readouterr().out

    def test_iid_reports_already_stationary(self, tmp_path, capsys):
        cfg = _write(
            tmp_path,
            IID_1R
            + "\n[diagnose]\nlags = { start = 1, stop = 8 }\nreplications = 250\n"
            "x0 = [0.0]\nseed = 6\nreference_length = 20000\nburn_in = 2000\n",
        )
        out = tmp_path / "out"
        assert main(["diagnose", cfg, "--out", str(out)]) == 0
        report = _json(out, "diagnose_report.json")
        assert report["convergence"]["fitted_rho"] is None
        assert "already-stationary" in report["convergence"]["note"]
        assert "note" in capsys.readouterr().out

    def test_requires_passing_model(self, tmp_path, capsys):
        cfg = _write(tmp_path, EXPLOSIVE_1R + self.SMALL)
        assert main(["diagnose", cfg, "--out", str(tmp_path / "out")]) == 1
        assert "diagnose requires a passing model" in capsys.readouterr().err

    def test_insufficient_replications_exit_code(self, tmp_path, capsys):
        cfg = _write(
            tmp_path,
            IID_1R
            + "\n[diagnose]\nlags = { start = 1, stop = 8 }\nreplications = 2\n"
            "x0 = [0.0]\nseed = 6\nreference_length = 2000\nburn_in = 200\n",
        )
        assert main(["diagnose", cfg, "--out", str(tmp_path / "out")]) == 1
        assert "error" in capsys.readouterr().err


class TestUsageErrors:
    def test_broken_toml(self, tmp_path, capsys):
        cfg = _write(tmp_path, "x == broken", name="bad.toml")
        assert main(["check", cfg, "--out", str(tmp_path / "out")]) == 2
        err = capsys.readouterr().err
        assert "config error" in err
        assert "line 1" in err

    def test_missing_config_file(self, tmp_path, capsys):
        missing = str(tmp_path / "absent.toml")
        assert main(["check", missing, "--out", str(tmp_path / "out")]) == 2
        assert "cannot read config" in capsys.readouterr().err

    def test_unknown_config_key(self, tmp_path, capsys):
        cfg = _write(tmp_path, CONTRACTING_2R + "\n[plotting]\nstyle = \"x\"\n")
        assert main(["check", cfg, "--out", str(tmp_path / "out")]) == 2
        assert "unknown key" in capsys.readouterr().err

    def test_negative_seed(self, tmp_path, capsys):
        cfg = _write(tmp_path, CONTRACTING_2R)
        assert main(["check", cfg, "--seed", "-1"]) == 2
        assert "--seed" in capsys.readouterr().err

    def test_bad_worker_count(self, tmp_path, capsys):
        cfg = _write(tmp_path, CONTRACTING_2R)
        assert main(["check", cfg, "--workers", "0"]) == 2
        assert "--workers" in capsys.readouterr().err

    def test_missing_subcommand_is_usage_error(self):
        with pytest.raises(SystemExit) as info:
            main([])
        assert info.value.code == 2

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["--version"])
        assert info.value.code == 0
        assert skewswitch.__version__ in capsys.readouterr().out

    def test_out_directory_is_created(self, tmp_path):
        cfg = _write(tmp_path, CONTRACTING_2R)
        nested = tmp_path / "deep" / "nested" / "out"
        assert main(["check", cfg, "--out", str(nested)]) == 0
        assert nested.is_dir()
        assert (nested / "check_report.json").exists()
