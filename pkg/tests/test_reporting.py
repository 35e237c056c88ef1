"""
Tests for run configurations, report files and the command line.
"""

import json

import numpy as np
import pandas as pd
import pytest

from reporting import ReportWriter, cmd_check, cmd_converge, cmd_simulate, to_jsonable
from run_lab import main
from tests.conftest import C2_M, C2_Q
from utils.config_loader import apply_overrides, load_run_config, validate_run_config
from utils.errors import ConfigError

C2_MODEL = {"backend": "chain", "Q": C2_Q, "m": C2_M, "name": "C2"}


def c2_config(out_dir, **extra):
    raw = {
        "model": C2_MODEL,
        "measures": {"atom": {"masses": [1, 0]}, "reference": "reference"},
        "sequences": {
            "reference_up": {"kind": "monotone_up", "limit": "reference"},
            "atom_down": {"kind": "monotone_down", "limit": "atom"},
        },
        "seed": 7,
        "paths": 2000,
        "grids": {"t_max": 2.0, "t_points": 5, "n_max": 6},
        "output_dir": str(out_dir),
    }
    raw.update(extra)
    return raw


def write_config(path, raw):
    path.write_text(json.dumps(raw), encoding="utf-8")
    return str(path)


class TestRunConfig:
    def test_defaults_are_filled(self):
        cfg = validate_run_config({"model": C2_MODEL})
        assert cfg.grids["alpha"] == [0.5, 1.0, 2.0, 10.0]
        assert cfg.experiments == [] and cfg.workers >= 1
        assert cfg.to_dict()["model"] == C2_MODEL

    @pytest.mark.parametrize("raw", [
        {"model": C2_MODEL, "colour": "red"},
        {"measures": {}},
        {"model": C2_MODEL, "grids": {"t_max": -1}},
        {"model": C2_MODEL, "grids": {"t_points": 1}},
        {"model": C2_MODEL, "grids": {"alpha": [1, 0]}},
        {"model": C2_MODEL, "grids": {"n_max": 3.5}},
        {"model": C2_MODEL, "seed": -1},
        {"model": C2_MODEL, "workers": True},
        {"model": C2_MODEL, "experiments": {}},
        {"model": C2_MODEL, "simulate": [{"quantity": "variance"}]},
        {"model": C2_MODEL, "checks": {"tolerance": 1}},
    ])
    def test_rejects(self, raw):
        with pytest.raises(ConfigError):
            validate_run_config(raw)

    def test_overrides(self):
        merged = apply_overrides({"model": C2_MODEL, "grids": {"t_max": 1.0}},
                                 {"seed": 3, "n_max": 10, "t_points": 7, "paths": None})
        assert merged["seed"] == 3
        assert merged["grids"] == {"t_max": 1.0, "n_max": 10, "t_points": 7}
        assert "paths" not in merged
        with pytest.raises(ConfigError):
            apply_overrides({}, {"colour": "red"})

    def test_load_errors(self, tmp_path):
        with pytest.raises(ConfigError):
            load_run_config(str(tmp_path / "missing.json"))
        broken = tmp_path / "broken.json"
        broken.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_run_config(str(broken))

    def test_conservative_generator_is_a_config_error(self):
        cfg = validate_run_config({"model": {"backend": "chain", "Q": [[-1, 1], [1, -1]], "m": [1, 1]}})
        with pytest.raises(ConfigError):
            cfg.build_model()

    def test_unknown_backend(self):
        with pytest.raises(ConfigError):
            validate_run_config({"model": {"backend": "lattice"}}).build_model()

    def test_bad_measure(self):
        cfg = validate_run_config({"model": C2_MODEL, "measures": {"bad": {"masses": [1, -1]}}})
        with pytest.raises(ConfigError):
            cfg.build_measures(cfg.build_model())


class TestWriter:
    def test_to_jsonable(self):
        payload = {"a": np.float64(1.5), "b": np.int64(2), "c": np.bool_(True), "d": float("nan"),
                   "e": {"y", "x"}, "f": np.arange(3), "g": pd.DataFrame({"n": [1]}), 3: None}
        assert to_jsonable(payload) == {"a": 1.5, "b": 2, "c": True, "d": None, "e": ["x", "y"],
                                        "f": [0, 1, 2], "g": [{"n": 1}], "3": None}

    def test_files(self, tmp_path):
        writer = ReportWriter(str(tmp_path), "check")
        csv_path = writer.write_csv("rows", pd.DataFrame({"n": [1, 2], "err": [0.5, 0.25]}))
        json_path = writer.write_json("summary", {"b": 1, "a": [1.0]})
        assert open(csv_path, encoding="utf-8").read().splitlines()[1] == "1,5.000000000000e-01"
        text = open(json_path, encoding="utf-8").read()
        assert text.endswith("\n") and text.index('"a"') < text.index('"b"')


class TestCommands:
    def test_check(self, tmp_path):
        cfg = validate_run_config(c2_config(tmp_path, checks={"cmp_trials": 200, "random_measures": 3}))
        assert cmd_check(cfg) == 0
        table = pd.read_csv(tmp_path / "check" / "checks.csv")
        assert table["passed"].all()
        assert {"atom", "reference", "random_0"} <= set(table["measure"])
        summary = json.loads((tmp_path / "check" / "summary.json").read_text(encoding="utf-8"))
        assert summary["passed"] and summary["failed"] == []
        family = summary["families"]["atom"]
        assert family["zero_time_is_hitting"] is True
        assert family["holomorphy"].startswith("satisfied-by-backend")
        assert family["support_size"] == 1
        assert (tmp_path / "check" / "resolved_config.json").exists()

    def test_check_unknown_measure(self, tmp_path):
        cfg = validate_run_config(c2_config(tmp_path, checks={"measures": ["nope"]}))
        with pytest.raises(ConfigError):
            cmd_check(cfg)

    def test_converge_is_reproducible(self, tmp_path):
        experiments = [
            {"name": "semigroup_up", "theorem": "semigroup", "mode": "monotone", "sequence": "reference_up"},
            {"name": "hitting_down", "theorem": "hitting", "sequence": "atom_down"},
            {"name": "fdd_down", "theorem": "fdd", "sequence": "atom_down", "mc": {}},
            {"name": "full_support_atom", "theorem": "semigroup", "mode": "full_support", "sequence": "atom_down"},
        ]
        outputs = []
        for run in ("first", "second"):
            cfg = validate_run_config(c2_config(tmp_path / run, experiments=experiments))
            assert cmd_converge(cfg) == 0
            directory = tmp_path / run / "converge"
            outputs.append({p.name: p.read_bytes() for p in sorted(directory.iterdir())
                            if p.name != "resolved_config.json"})
        assert outputs[0] == outputs[1]
        assert {"semigroup_up.csv", "semigroup_up_audit.csv", "hitting_down_audit.csv", "summary.json"} <= set(outputs[0])

        summary = json.loads(outputs[0]["summary.json"])
        assert summary["semigroup_up"]["hypothesis_ok"]
        assert not summary["full_support_atom"]["passed"]
        assert summary["fdd_down"]["extras"]["mc"]["exact"] > 0
        for name in ("semigroup_up", "full_support_atom"):
            assert summary[name]["extras"]["family"]["zero_time_is_hitting"] is True
            assert any(note.startswith("holomorphy: satisfied-by-backend") for note in summary[name]["notes"])
            assert any(note.startswith("P_0 = P_F") for note in summary[name]["notes"])

    def test_converge_needs_experiments(self, tmp_path):
        with pytest.raises(ConfigError):
            cmd_converge(validate_run_config(c2_config(tmp_path)))

    def test_converge_rejects_bad_block(self, tmp_path):
        cfg = validate_run_config(c2_config(tmp_path, experiments=[{"theorem": "potential", "sequence": "nope"}]))
        with pytest.raises(ConfigError):
            cmd_converge(cfg)

    def test_simulate_zero_function(self, tmp_path):
        cases = [{"name": "zero", "quantity": "semigroup", "measure": "atom", "u": "zeros", "x": 1},
                 {"name": "zero_resolvent", "quantity": "resolvent", "measure": "atom", "u": "zeros"}]
        cfg = validate_run_config(c2_config(tmp_path, simulate=cases))
        assert cmd_simulate(cfg) == 0
        table = pd.read_csv(tmp_path / "simulate" / "estimates.csv")
        assert list(table["quantity"]) == ["semigroup", "resolvent/randomized", "resolvent/functional"]
        assert (table["estimate"] == 0.0).all() and (table["z"] == 0.0).all()

    def test_simulate_state_labels(self, tmp_path):
        cases = [{"name": "by_label", "quantity": "semigroup", "measure": "atom", "u": "zeros", "x": "2"}]
        cfg = validate_run_config(c2_config(tmp_path, simulate=cases))
        assert cmd_simulate(cfg) == 0

    def test_simulate_unknown_measure(self, tmp_path):
        cfg = validate_run_config(c2_config(tmp_path, simulate=[{"quantity": "semigroup", "measure": "nope"}]))
        with pytest.raises(ConfigError):
            cmd_simulate(cfg)

    def test_simulate_requires_chain(self, tmp_path):
        raw = {"model": {"backend": "diffusion", "grid_size": 50}, "output_dir": str(tmp_path),
               "simulate": [{"quantity": "lifetime"}]}
        with pytest.raises(ConfigError):
            cmd_simulate(validate_run_config(raw))


class TestCommandLine:
    def test_missing_config_exits_with_two(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        assert main(["check", "--config", str(tmp_path / "missing.json")]) == 2

    def test_bad_grid_flag_exits_with_two(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        path = write_config(tmp_path / "c2.json", c2_config(tmp_path))
        assert main(["converge", "--config", path, "--grid-t", "five"]) == 2

    def test_check_passes(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        path = write_config(tmp_path / "c2.json", c2_config(tmp_path / "unused", checks={"cmp_trials": 100}))
        assert main(["check", "--config", path, "--out", str(tmp_path / "reports"), "--log-level", "warning"]) == 0
        resolved = json.loads((tmp_path / "reports" / "check" / "resolved_config.json").read_text(encoding="utf-8"))
        assert resolved["output_dir"] == str(tmp_path / "reports")

    def test_converge_reports_without_gating(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        experiments = [{"name": "full_support_atom", "theorem": "semigroup", "mode": "full_support",
                        "sequence": "atom_down"}]
        path = write_config(tmp_path / "c2.json", c2_config(tmp_path, experiments=experiments))
        assert main(["converge", "--config", path]) == 0
        summary = json.loads((tmp_path / "converge" / "summary.json").read_text(encoding="utf-8"))
        assert summary["full_support_atom"]["passed"] is False

    def test_failing_simulation_exits_with_three(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        monkeypatch.setattr("config.MC_Z_GATE", -1.0)
        cases = [{"name": "lifetime", "quantity": "lifetime", "x": 0}]
        path = write_config(tmp_path / "c2.json", c2_config(tmp_path, simulate=cases))
        assert main(["simulate", "--config", path]) == 3

    def test_unknown_command(self):
        with pytest.raises(SystemExit):
            main(["plot", "--config", "x.json"])
