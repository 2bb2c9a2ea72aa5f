import csv
import json

import numpy as np
import pytest

from quasioverlap.cli import main as cli_main
from quasioverlap.experiments import (CSV_COLUMNS, ConfigError, ExperimentConfig,
                                      ResultRow, read_results, run_circuit_compare,
                                      run_povm_search, run_randmeas_compare,
                                      run_scaling, run_single_estimate, write_results)


class TestConfig:
    def test_defaults_validate(self):
        ExperimentConfig().validate()

    @pytest.mark.parametrize("field,value", [
        ("experiment", "fourier"), ("n", 0), ("family", "ghz"),
        ("epsilon", 1.5), ("shots", 0), ("bond_dim", 0),
        ("target_overlap", 1.5), ("n_batches", 0),
    ])
    def test_bad_values_rejected(self, field, value):
        cfg = ExperimentConfig()
        setattr(cfg, field, value)
        with pytest.raises(ConfigError):
            cfg.validate()

    def test_from_ini(self, tmp_path):
        path = tmp_path / "run.ini"
        path.write_text("[run]\nexperiment = estimate\nn = 3\nshots = 2000\n"
                        "pooled = false\nseed = 11\n")
        cfg = ExperimentConfig.from_ini(path)
        assert cfg.n == 3 and cfg.shots == 2000 and cfg.pooled is False and cfg.seed == 11

    def test_from_ini_unknown_key(self, tmp_path):
        path = tmp_path / "run.ini"
        path.write_text("[run]\nwarp = 9\n")
        with pytest.raises(ConfigError):
            ExperimentConfig.from_ini(path)

    def test_from_ini_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_ini(tmp_path / "nope.ini")


class TestResultsIO:
    def _rows(self):
        return [ResultRow("estimate", 2, "qpr", 0, 0.5, 0.49, 0.01, 100, 7, 1.25),
                ResultRow("estimate", 2, "qpr", 1, 0.4, 0.44, 0.04, 100, 7, 1.5)]

    def test_round_trip(self, tmp_path):
        path = tmp_path / "r.csv"
        write_results(self._rows(), path, ExperimentConfig())
        back = read_results(path)
        assert back == self._rows()

    def test_header(self, tmp_path):
        path = tmp_path / "r.csv"
        write_results(self._rows(), path, ExperimentConfig())
        with open(path) as fh:
            header = next(csv.reader(fh))
        assert header == CSV_COLUMNS

    def test_manifest_contents(self, tmp_path):
        path = tmp_path / "r.csv"
        cfg = ExperimentConfig(seed=123)
        manifest_path = write_results(self._rows(), path, cfg)
        manifest = json.load(open(manifest_path))
        assert manifest["master_seed"] == 123
        assert manifest["rows"] == 2
        assert manifest["config"]["seed"] == 123
        assert "version" in manifest

    def test_read_rejects_wrong_columns(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError):
            read_results(path)


class TestRunners:
    def test_single_estimate(self):
        cfg = ExperimentConfig(experiment="estimate", n=2, shots=4000, seed=5)
        rows, summary = run_single_estimate(cfg)
        assert len(rows) == 1
        r = rows[0]
        assert abs(r.abs_error - abs(r.estimate - r.true_overlap)) < 1e-12
        assert summary["planned_shots"] > 0

    def test_scaling_small(self):
        cfg = ExperimentConfig(experiment="scaling", n_min=1, n_max=2,
                               n_batches=3, seed=2)
        rows, summary = run_scaling(cfg)
        assert len(rows) == 2 * 2 * 3  # families x sizes x batches
        for fam in ("product", "entangled"):
            assert set(summary["families"][fam]["shots_by_n"]) == {1, 2}

    def test_scaling_determinism(self):
        cfg = ExperimentConfig(experiment="scaling", n_min=1, n_max=2,
                               n_batches=2, seed=4)
        rows_a, sum_a = run_scaling(cfg)
        rows_b, sum_b = run_scaling(cfg)
        strip = lambda rows: [(r.n, r.method, r.pair_id, r.abs_error, r.shots) for r in rows]
        assert strip(rows_a) == strip(rows_b)
        assert sum_a["families"]["product"]["exponent"] == sum_b["families"]["product"]["exponent"]

    def test_circuit_compare_small(self):
        cfg = ExperimentConfig(experiment="circuit-compare", n_pairs=3, seed=1)
        rows, summary = run_circuit_compare(cfg)
        methods = {r.method for r in rows}
        assert methods == {"qpr", "swap-circuit", "bell-circuit"}
        assert set(summary["cases"]) == {2, 3}
        assert summary["cases"][2]["nn_cnots"] > summary["cases"][3]["nn_cnots"]

    def test_randmeas_compare_small(self):
        cfg = ExperimentConfig(experiment="randmeas-compare", n_instances=2,
                               n_min=2, n_max=2, shots=2000, n_settings=20,
                               shots_per_setting=50, seed=3)
        rows, summary = run_randmeas_compare(cfg)
        assert {r.method for r in rows} == {"qpr", "randmeas"}
        assert len(rows) == 4

    def test_povm_search_small(self):
        cfg = ExperimentConfig(experiment="povm-search", mcmc_steps=100,
                               grid_resolution_deg=30, seed=0)
        rows, summary = run_povm_search(cfg)
        assert summary["grid"][6]["negativity"] >= 9.0 - 1e-9
        assert summary["mcmc"]["negativity"] >= 9.0 - 1e-9


class TestCLI:
    def test_estimate_writes_outputs(self, tmp_path, capsys):
        out = tmp_path / "est.csv"
        code = cli_main(["estimate", "--n", "2", "--shots", "1000",
                         "--seed", "3", "--out", str(out)])
        assert code == 0
        assert out.exists() and (tmp_path / "est.csv.manifest.json").exists()
        payload = json.loads(capsys.readouterr().out)
        assert "summary" in payload

    def test_validation_error_exits_two(self, tmp_path):
        code = cli_main(["estimate", "--n", "99", "--out", str(tmp_path / "x.csv")])
        assert code == 2

    def test_config_file_plus_override(self, tmp_path, capsys):
        ini = tmp_path / "run.ini"
        ini.write_text("[run]\nn = 2\nshots = 500\nseed = 1\n")
        out = tmp_path / "est.csv"
        code = cli_main(["estimate", "--config", str(ini), "--seed", "9",
                         "--out", str(out)])
        assert code == 0
        manifest = json.load(open(str(out) + ".manifest.json"))
        assert manifest["master_seed"] == 9
        assert manifest["config"]["shots"] == 500

    def test_bad_config_exits_two(self, tmp_path):
        ini = tmp_path / "run.ini"
        ini.write_text("[run]\nshots = minus\n")
        assert cli_main(["estimate", "--config", str(ini)]) == 2

    def test_csv_determinism_except_wall_time(self, tmp_path):
        outs = []
        for tag in ("a", "b"):
            out = tmp_path / f"{tag}.csv"
            assert cli_main(["estimate", "--n", "2", "--shots", "1000",
                             "--seed", "5", "--out", str(out)]) == 0
            with open(out) as fh:
                outs.append(list(csv.DictReader(fh)))
        for ra, rb in zip(*outs):
            for col in CSV_COLUMNS:
                if col != "wall_ms":
                    assert ra[col] == rb[col]
