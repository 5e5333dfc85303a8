"""Scenario loading, generators, and deterministic reports."""

import json

import numpy as np
import pytest

from orbitmart.simulate import Scenario, load_scenario, run_scenario, write_report


class TestScenario:
    def test_validation(self):
        with pytest.raises(ValueError):
            Scenario(group="perm", generator="iid_gaussian", horizon=0, replications=1)
        with pytest.raises(ValueError):
            Scenario(group="perm", generator="iid_gaussian", horizon=10, replications=0)
        with pytest.raises(ValueError):
            Scenario(group="perm", generator="unknown", horizon=10, replications=1)
        with pytest.raises(ValueError):
            Scenario(group="warp", generator="iid_gaussian", horizon=10, replications=1)
        with pytest.raises(ValueError):
            Scenario(group="isotropy:2", generator="iid_gaussian", horizon=10,
                     replications=1)
        with pytest.raises(ValueError):
            Scenario(group="perm", generator="linear_model", horizon=10,
                     replications=1)

    def test_load_from_yaml(self, tmp_path):
        path = tmp_path / "scenario.yaml"
        path.write_text(
            "group: perm-mod:2\n"
            "generator: changepoint\n"
            "horizon: 50\n"
            "replications: 3\n"
            "seed: 7\n"
            "calibrator: hist:4:1\n"
            "alpha: 0.1\n"
            "n0: 20\n"
            "mu_shift: 1.5\n"
        )
        scenario = load_scenario(path)
        assert scenario.group == "perm-mod:2"
        assert scenario.gen_params == {"n0": 20, "mu_shift": 1.5}

    def test_load_rejects_non_mapping(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ValueError):
            load_scenario(path)


class TestGeneratorValidation:
    @pytest.mark.parametrize("generator,params", [
        ("iid_gaussian", {"sigma": 0.0}),
        ("ar1", {"rho": 1.0}),
        ("heavy_tail", {"df": -1.0}),
        ("dependent_pair", {"rho": 1.5}),
        ("linear_model", {"noise": 0.0}),
        ("changepoint", {"n0": -5}),
    ])
    def test_bad_parameters_surface(self, generator, params):
        group = "isotropy:1" if generator == "linear_model" else "perm"
        scenario = Scenario(group=group, generator=generator, horizon=10,
                            replications=1, gen_params=params)
        with pytest.raises(ValueError):
            run_scenario(scenario)


class TestRunScenario:
    def tiny(self, **overrides):
        base = dict(group="perm", generator="iid_gaussian", horizon=40,
                    replications=5, seed=11, calibrator="power-mixture",
                    alpha=0.05)
        base.update(overrides)
        return Scenario(**base)

    def test_report_fields(self):
        result = run_scenario(self.tiny())
        report = result["report"]
        assert report["pooled_ranks"]["count"] == 200
        assert 0.0 <= report["pooled_ranks"]["ks_pvalue"] <= 1.0
        assert result["trajectories"].shape == (5, len(result["checkpoints"]))
        assert result["checkpoints"][-1] == 40

    def test_deterministic_across_runs_and_workers(self):
        first = run_scenario(self.tiny())
        second = run_scenario(self.tiny())
        parallel = run_scenario(self.tiny(), jobs=2)
        assert first["report"] == second["report"]
        assert first["report"] == parallel["report"]
        np.testing.assert_array_equal(first["trajectories"], parallel["trajectories"])

    def test_every_family_runs(self):
        cases = [
            self.tiny(group="perm-mod:3"),
            self.tiny(group="perm-label:2"),
            self.tiny(group="sphere"),
            self.tiny(group="isotropy:1", generator="linear_model",
                      gen_params={"beta": [0.5], "noise": 1.0}),
            self.tiny(group="isotropy:2", generator="linear_model",
                      gen_params={"beta": [0.5, -1.0], "noise": 1.0}),
            self.tiny(generator="ar1", gen_params={"rho": 0.6}),
            self.tiny(generator="heavy_tail", gen_params={"df": 3.0}),
            self.tiny(generator="changepoint", gen_params={"n0": 20, "mu_shift": 2.0}),
        ]
        for scenario in cases:
            report = run_scenario(scenario)["report"]
            assert report["pooled_ranks"]["count"] == 200

    def test_joint_generator(self):
        scenario = self.tiny(generator="dependent_pair", calibrator="histkd:4:1",
                             gen_params={"rho": 0.9})
        report = run_scenario(scenario)["report"]
        # Two streams pool twice the ranks.
        assert report["pooled_ranks"]["count"] == 400

    def test_write_report(self, tmp_path):
        result = run_scenario(self.tiny())
        write_report(result, tmp_path / "out")
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report == result["report"]
        csv_lines = (tmp_path / "out" / "trajectories.csv").read_text().splitlines()
        assert len(csv_lines) == 1 + 5
        assert csv_lines[0].startswith("replication,")
