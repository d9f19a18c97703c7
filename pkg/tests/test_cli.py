import json

import numpy as np
import pytest

from fracsep.cli import ConfigError, dispatch, main, parse_config
from fracsep.kernel import continuum_potentials

MINIMAL = """
gamma = 1.5
alpha = 0.2
beta = 0.8
kappa = 1.0
theta = 0.0
N = 64
"""


class TestParseConfig:
    def test_minimal_resolves_with_defaults(self):
        cfg = parse_config(MINIMAL)
        assert cfg["gamma"] == 1.5
        assert cfg["seed"] == 20240801
        assert cfg["pde"]["dt"] == 1e-3
        assert cfg["_model"].N == 64

    def test_json_accepted(self):
        cfg = parse_config(
            json.dumps({"gamma": 1.5, "alpha": 0.2, "beta": 0.8,
                        "kappa": 1.0, "theta": 0.0, "N": 32})
        )
        assert cfg["_model"].N == 32

    def test_unknown_key_suggests_nearest(self):
        with pytest.raises(ConfigError, match="did you mean 'gamma'"):
            parse_config(MINIMAL.replace("gamma", "gamm", 1))

    def test_unknown_section_key(self):
        with pytest.raises(ConfigError, match="did you mean 't_end'"):
            parse_config(MINIMAL + "\n[sim]\ntend = 0.1\n")

    def test_gamma_out_of_range(self):
        with pytest.raises(ConfigError, match=r"gamma must lie in \(1,2\)"):
            parse_config(MINIMAL.replace("gamma = 1.5", "gamma = 2.5"))

    def test_alpha_beta_order_enforced(self):
        bad = MINIMAL.replace("alpha = 0.2", "alpha = 0.9")
        with pytest.raises(ConfigError, match="alpha <= beta"):
            parse_config(bad)

    def test_config_file(self, tmp_path):
        path = tmp_path / "cfg.toml"
        path.write_text(MINIMAL)
        assert parse_config(path)["_model"].gamma == 1.5

    def test_invalid_toml(self):
        with pytest.raises(ConfigError, match="invalid TOML"):
            parse_config("gamma = = 1.5")


class TestDispatch:
    def test_simulate_deterministic_digests(self, tmp_path):
        cfg = parse_config(MINIMAL + "\nreplicas = 2\n[sim]\nt_end = 0.1\n")
        _, m1 = dispatch("simulate", cfg, tmp_path / "a")
        _, m2 = dispatch("simulate", cfg, tmp_path / "b")
        assert [o["sha256"] for o in m1["outputs"]] == [
            o["sha256"] for o in m2["outputs"]
        ]
        assert (tmp_path / "a" / "snapshots_r0000.csv").exists()
        assert (tmp_path / "a" / "snapshots_r0001.csv").exists()
        assert (tmp_path / "a" / "manifest.json").exists()
        header = (tmp_path / "a" / "snapshots_r0000.csv").read_text().splitlines()[0]
        assert header == "t,site,occupied"

    def test_manifest_digests_match_files(self, tmp_path):
        import hashlib

        cfg = parse_config(MINIMAL + "\nreplicas = 1\n")
        _, manifest = dispatch("simulate", cfg, tmp_path)
        for rec in manifest["outputs"]:
            blob = (tmp_path / rec["path"]).read_bytes()
            assert hashlib.sha256(blob).hexdigest() == rec["sha256"]

    def test_manifest_config_round_trips(self, tmp_path):
        # parse(serialize(resolved)) reproduces the resolved config, so a run
        # is reconstructible from its manifest alone.
        cfg = parse_config(MINIMAL + "\nreplicas = 1\n")
        _, manifest = dispatch("simulate", cfg, tmp_path)
        reparsed = parse_config(json.dumps(manifest["config"]))
        original = {k: v for k, v in cfg.items() if not k.startswith("_")}
        roundtrip = {k: v for k, v in reparsed.items() if not k.startswith("_")}
        assert roundtrip == original

    def test_stationary_close_to_rho_inf(self, tmp_path):
        cfg = parse_config(
            "gamma = 1.5\nalpha = 0.2\nbeta = 0.8\n"
            "[pde]\nn_grid = 128\nkappa_hat = 10000.0\n"
        )
        status, manifest = dispatch("stationary", cfg, tmp_path)
        assert status == 0
        rows = np.loadtxt(tmp_path / "profile.csv", delimiter=",", skiprows=1)
        rho_inf = continuum_potentials(1.5, 0.2, 0.8, rows[:, 0]).rho_bar_inf
        assert np.max(np.abs(rows[:, 1] - rho_inf)) <= 0.01

    def test_solve_writes_trajectory(self, tmp_path):
        cfg = parse_config(
            "gamma = 1.5\nalpha = 0.2\nbeta = 0.8\n"
            "[pde]\nn_grid = 32\nT = 0.01\ndt = 0.002\n"
        )
        status, manifest = dispatch("solve", cfg, tmp_path)
        assert status == 0
        rows = np.loadtxt(tmp_path / "trajectory.csv", delimiter=",", skiprows=1)
        assert rows.shape[1] == 3
        assert set(np.round(np.unique(rows[:, 0]), 6)) == {0.0, 0.002, 0.004, 0.006, 0.008, 0.01}

    def test_verify_hydro_report(self, tmp_path):
        cfg = parse_config(
            MINIMAL + "\nreplicas = 30\n[hydro]\ncheckpoints = [0.05]\n"
            "bin_width = 0.25\ntolerance = 0.1\n"
        )
        status, manifest = dispatch("verify-hydro", cfg, tmp_path)
        assert status == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["passed"] is True
        assert manifest["metrics_passed"] is True
        assert (tmp_path / "table_distance.csv").exists()
        assert len(manifest["replica_seeds"]) == 30

    def test_sweep_kappa_stationary(self, tmp_path):
        cfg = parse_config(
            "gamma = 1.5\nalpha = 0.4\nbeta = 0.4\n"
            "[sweep]\nkind = \"stationary\"\nkappas = [1.0, 10.0]\nn_grid = 64\n"
        )
        status, _ = dispatch("sweep-kappa", cfg, tmp_path)
        assert status == 0

    def test_explore_theta_requires_positive_theta(self, tmp_path):
        cfg = parse_config(MINIMAL)
        with pytest.raises(ConfigError):
            dispatch("explore-theta", cfg, tmp_path)

    def test_explore_theta_runs(self, tmp_path):
        cfg = parse_config(
            MINIMAL.replace("theta = 0.0", "theta = 0.1") + "\nreplicas = 3\n"
            "[hydro]\ncheckpoints = [0.05]\nbin_width = 0.25\n"
        )
        status, _ = dispatch("explore-theta", cfg, tmp_path)
        assert status == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["exploratory"] is True

    def test_unknown_command(self, tmp_path):
        with pytest.raises(ConfigError):
            dispatch("frobnicate", parse_config(MINIMAL), tmp_path)


class TestMain:
    def test_roundtrip(self, tmp_path):
        cfg_path = tmp_path / "c.toml"
        cfg_path.write_text(MINIMAL + "\nreplicas = 1\n")
        status = main(
            ["simulate", "--config", str(cfg_path), "--out", str(tmp_path / "out")]
        )
        assert status == 0

    def test_config_error_exit_code(self, tmp_path):
        cfg_path = tmp_path / "c.toml"
        cfg_path.write_text("gamm = 1.5\n")
        status = main(
            ["simulate", "--config", str(cfg_path), "--out", str(tmp_path / "out")]
        )
        assert status == 2

    def test_zero_replicas_rejected_without_outputs(self, tmp_path):
        cfg_path = tmp_path / "c.toml"
        cfg_path.write_text(MINIMAL + "\n[hydro]\ncheckpoints = [0.05]\n")
        out = tmp_path / "out"
        status = main(
            ["verify-hydro", "--config", str(cfg_path), "--out", str(out),
             "--replicas", "0"]
        )
        assert status == 2
        assert not (out / "report.json").exists()
        assert not (out / "manifest.json").exists()

    def test_seed_flag_overrides(self, tmp_path):
        cfg_path = tmp_path / "c.toml"
        cfg_path.write_text(MINIMAL + "\nreplicas = 1\n")
        main(["simulate", "--config", str(cfg_path), "--out", str(tmp_path / "o1"),
              "--seed", "42"])
        m = json.loads((tmp_path / "o1" / "manifest.json").read_text())
        assert m["master_seed"] == 42
