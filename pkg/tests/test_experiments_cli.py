import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from roughassim.cli import main
from roughassim.errors import InvalidSpecError
from roughassim.experiments import (
    config_hash,
    load_config,
    rmse_between,
    simulate_truth,
)
from roughassim.grid import SampledPath, TimeGrid


def lorenz_config(**overrides):
    cfg = {
        "model": {"name": "lorenz63"},
        "grid": {"T": 0.5, "n_steps": 128},
        "truth": {"initial_state": [1.0, 1.0, 25.0]},
        "observation": {"h_indices": "full", "R": 1.0, "noise_scale": 0.1, "seed": 7},
        "assimilation": {"initial_state": [1.5, 0.5, 24.0]},
        "cost": {"kind": "minimum_energy", "S": 50.0},
        "optimizer": {"grad_tol": 0.02, "max_iters": 200},
    }
    cfg.update(overrides)
    return cfg


def write_config(tmp_path, cfg, name="config.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return p


class TestLoadConfig:
    def test_dict_and_json_text_and_file_agree(self, tmp_path):
        cfg = lorenz_config()
        a = load_config(cfg)
        b = load_config(json.dumps(cfg))
        c = load_config(write_config(tmp_path, cfg))
        assert config_hash(a) == config_hash(b) == config_hash(c)
        assert a.grid.n_steps == 128
        assert a.model.name == "lorenz63"
        assert a.obs_dim == 3

    def test_defaults_filled(self):
        cfg = load_config({
            "model": {"name": "lorenz63"},
            "grid": {"T": 1.0, "n_steps": 8},
            "truth": {"initial_state": [1.0, 1.0, 25.0]},
            "observation": {},
        })
        assert cfg.noise_scale == 0.1
        assert cfg.cost_kind == "minimum_energy"
        assert cfg.control_set.kind == "all_space"

    @pytest.mark.parametrize("breakage", [
        {"model": {"name": "lorenz64"}},
        {"grid": {"T": -1.0, "n_steps": 8}},
        {"truth": {"initial_state": [1.0, 1.0]}},
        {"observation": {"noise_scale": -0.5}},
        {"cost": {"kind": "map"}},
        {"optimizer": {"grad_tol": -1.0}},
        {"control_set": {"kind": "simplex"}},
    ])
    def test_malformed_sections_rejected(self, breakage):
        cfg = lorenz_config(**breakage)
        with pytest.raises(Exception) as err:
            load_config(cfg)
        assert err.type.__name__ in ("InvalidSpecError", "InvalidParameterError")

    def test_hash_is_content_addressed(self):
        a = load_config(lorenz_config())
        b = load_config(lorenz_config(grid={"T": 0.5, "n_steps": 256}))
        assert config_hash(a) != config_hash(b)
        assert config_hash(a) == config_hash(load_config(lorenz_config()))


class TestSimulateTruth:
    def test_zero_noise_observation_is_integrated_h(self):
        cfg = load_config(lorenz_config(observation={"noise_scale": 0.0, "seed": 0}))
        truth, eta = simulate_truth(cfg)
        # eta should be the cumulative trapezoid of the full state
        hv = truth.values
        dt = cfg.grid.dt
        zeta = np.zeros_like(hv)
        zeta[1:] = np.cumsum(0.5 * dt * (hv[:-1] + hv[1:]), axis=0)
        assert np.array_equal(eta.values, zeta)

    def test_noise_deterministic_in_seed(self):
        cfg = load_config(lorenz_config())
        _, eta1 = simulate_truth(cfg)
        _, eta2 = simulate_truth(cfg)
        assert np.array_equal(eta1.values, eta2.values)

    def test_rmse_between(self):
        g = TimeGrid(1.0, 3)
        a = SampledPath.zeros(g, 2)
        b = SampledPath(g, np.full((4, 2), 3.0))
        # per-node squared error 18, RMSE = sqrt(18)
        assert rmse_between(a, b) == pytest.approx(np.sqrt(18.0))


class TestCliSimulate:
    def test_writes_artifacts_byte_deterministically(self, tmp_path):
        cfgfile = write_config(tmp_path, lorenz_config())
        runner = CliRunner()
        outs = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            r = runner.invoke(main, ["simulate", "-c", str(cfgfile), "-o", str(out)])
            assert r.exit_code == 0, r.output
            outs.append({f.name: f.read_bytes() for f in out.iterdir()})
        assert set(outs[0]) == {"truth.csv", "eta.csv", "manifest.json"}
        assert outs[0] == outs[1]

    def test_timings_flag_adds_wall_clock(self, tmp_path):
        cfgfile = write_config(tmp_path, lorenz_config())
        runner = CliRunner()
        out = tmp_path / "timed"
        r = runner.invoke(main, ["simulate", "-c", str(cfgfile), "-o", str(out), "--timings"])
        assert r.exit_code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert "wall_clock_s" in manifest and "per_phase_s" in manifest

    def test_invalid_config_exit_3(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        r = CliRunner().invoke(main, ["simulate", "-c", str(bad), "-o", str(tmp_path / "o")])
        assert r.exit_code == 3


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("assim")
    cfgfile = write_config(tmp, lorenz_config())
    r = CliRunner().invoke(main, ["simulate", "-c", str(cfgfile), "-o", str(tmp / "sim")])
    assert r.exit_code == 0
    return tmp, cfgfile


class TestCliAssimilate:
    def test_end_to_end_result_schema(self, sim_dir):
        tmp, cfgfile = sim_dir
        out = tmp / "run"
        r = CliRunner().invoke(main, [
            "assimilate", "-c", str(cfgfile), "--eta", str(tmp / "sim" / "eta.csv"),
            "-o", str(out),
        ])
        assert r.exit_code == 0, r.output
        result = json.loads((out / "result.json").read_text())
        expected = {
            "schema_version", "config_hash", "status", "iterations", "final_cost",
            "grad_norm", "mp_residual", "cost_kind", "cost_minimum_energy",
            "cost_onsager_machlup", "rmse_estimate", "rmse_free_run",
        }
        assert expected <= set(result)
        assert result["status"] == "converged"
        assert result["cost_kind"] == "minimum_energy"
        assert result["rmse_estimate"] < result["rmse_free_run"]
        for name in ("estimate.csv", "control.csv", "costate.csv"):
            assert (out / name).exists()

    def test_om_cost_recorded_alongside_me(self, sim_dir):
        tmp, _ = sim_dir
        cfg = lorenz_config(cost={"kind": "onsager_machlup", "S": 50.0})
        cfgfile = write_config(tmp, cfg, name="om.json")
        out = tmp / "om_run"
        r = CliRunner().invoke(main, [
            "assimilate", "-c", str(cfgfile), "--eta", str(tmp / "sim" / "eta.csv"),
            "-o", str(out),
        ])
        assert r.exit_code == 0, r.output
        result = json.loads((out / "result.json").read_text())
        assert result["cost_kind"] == "onsager_machlup"
        # The two running costs differ by the constant drift-divergence rate
        # plus the control-energy change from S = 50 I to the metric Gamma = I.
        gap = result["cost_onsager_machlup"] - result["cost_minimum_energy"]
        from roughassim.dynamics import Lorenz63Params
        from roughassim.grid import read_path_csv

        u = read_path_csv(out / "control.csv")
        energy = float(np.trapezoid(np.sum(u.values**2, axis=1), u.times))
        p = Lorenz63Params()
        expected = (p.sigma + 1 + p.b) * 0.5 + 0.5 * (1.0 - 50.0) * energy
        assert gap == pytest.approx(expected, rel=1e-9)

    def test_eta_grid_mismatch_exit_3(self, sim_dir, tmp_path):
        tmp, _ = sim_dir
        cfg = lorenz_config(grid={"T": 0.5, "n_steps": 64})
        cfgfile = write_config(tmp_path, cfg, name="mismatch.json")
        r = CliRunner().invoke(main, [
            "assimilate", "-c", str(cfgfile), "--eta", str(tmp / "sim" / "eta.csv"),
            "-o", str(tmp_path / "out"),
        ])
        assert r.exit_code == 3
        assert "invalid config" in r.output

    def test_nonconverged_exit_2(self, sim_dir, tmp_path):
        tmp, _ = sim_dir
        cfg = lorenz_config(optimizer={"grad_tol": 1e-12, "max_iters": 2})
        cfgfile = write_config(tmp_path, cfg, name="hard.json")
        r = CliRunner().invoke(main, [
            "assimilate", "-c", str(cfgfile), "--eta", str(tmp / "sim" / "eta.csv"),
            "-o", str(tmp_path / "out2"),
        ])
        assert r.exit_code == 2

    def test_assim_jobs_env_must_be_integer(self, sim_dir, monkeypatch, tmp_path):
        tmp, cfgfile = sim_dir
        monkeypatch.setenv("ASSIM_JOBS", "many")
        r = CliRunner().invoke(main, [
            "assimilate", "-c", str(cfgfile), "--eta", str(tmp / "sim" / "eta.csv"),
            "-o", str(tmp_path / "out3"),
        ])
        assert r.exit_code == 3

    def test_assim_jobs_env_overrides_flag(self, sim_dir, monkeypatch, tmp_path):
        tmp, cfgfile = sim_dir
        monkeypatch.setenv("ASSIM_JOBS", "2")
        out = tmp_path / "par"
        r = CliRunner().invoke(main, [
            "assimilate", "-c", str(cfgfile), "--eta", str(tmp / "sim" / "eta.csv"),
            "-o", str(out), "--jobs", "1",
        ])
        assert r.exit_code == 0, r.output


class TestCliCheck:
    def test_single_suite_report_and_output(self, tmp_path):
        r = CliRunner().invoke(main, [
            "check", "--suite", "duality", "--seed", "1", "-o", str(tmp_path),
        ])
        assert r.exit_code == 0, r.output
        assert "[PASS] duality/" in r.output
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["suite"] == "duality"
        assert report["seed"] == 1
        assert report["passed"] is True
        for rec in report["checks"]:
            assert {"suite", "name", "value", "tolerance", "passed"} <= set(rec)

    def test_unknown_suite_rejected_by_click(self, tmp_path):
        r = CliRunner().invoke(main, ["check", "--suite", "nonsense", "-o", str(tmp_path)])
        assert r.exit_code == 2  # click usage error


class TestCliValueProbe:
    def test_scalar_linear_probe_runs(self, tmp_path):
        cfg = {
            "model": {"name": "linear", "params": {"A": [[-1.0]]}},
            "grid": {"T": 1.0, "n_steps": 256},
            "truth": {"initial_state": [1.0]},
            "observation": {"noise_scale": 0.0, "seed": 0},
        }
        cfgfile = write_config(tmp_path, cfg)
        r = CliRunner().invoke(main, [
            "value-probe", "-c", str(cfgfile), "--h", "1e-4", "--solver", "shoot",
        ])
        assert r.exit_code == 0, r.output
        assert "max_abs_gap" in r.output
        gap = float(r.output.split("max_abs_gap =")[1].splitlines()[0])
        assert gap < 1e-2
