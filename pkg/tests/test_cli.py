import json

import pytest

from mfsim.cli import EXIT_CONFIG, EXIT_OK, EXIT_RESOURCE, main


@pytest.fixture
def config_file(tmp_path):
    cfg = {
        "hamiltonian": {
            "n_qubits": 3,
            "terms": [
                {"sites": [0, 1], "axes": "XX", "coeff": 1.0},
                {"sites": [1, 2], "axes": "XX", "coeff": 1.0},
            ],
        },
        "t": 0.3,
        "n_steps": 2,
        "trajectories": 2,
        "master_seed": 9,
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


class TestSimulate:
    def test_writes_report_files(self, config_file, tmp_path, capsys):
        out = tmp_path / "run"
        code = main(["simulate", "--config", str(config_file), "--out", str(out)])
        assert code == EXIT_OK
        assert (out / "report.json").exists()
        assert (out / "audit.jsonl").exists()
        printed = capsys.readouterr().out
        assert "report.json" in printed

    def test_csv_format(self, config_file, tmp_path):
        out = tmp_path / "run"
        code = main([
            "simulate", "--config", str(config_file), "--out", str(out),
            "--format", "csv",
        ])
        assert code == EXIT_OK
        csv_text = (out / "rounds_per_rotation.csv").read_text()
        assert csv_text.startswith("rotation_site,mean_rounds")

    def test_reruns_byte_identical(self, config_file, tmp_path):
        outs = [tmp_path / "a", tmp_path / "b"]
        for out in outs:
            assert main(["simulate", "--config", str(config_file), "--out", str(out)]) == EXIT_OK
        for name in ("report.json", "audit.jsonl"):
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()

    def test_env_var_overrides_out(self, config_file, tmp_path, monkeypatch):
        env_dir = tmp_path / "from-env"
        monkeypatch.setenv("MFSIM_OUT_DIR", str(env_dir))
        code = main(["simulate", "--config", str(config_file), "--out", str(tmp_path / "ignored")])
        assert code == EXIT_OK
        assert (env_dir / "report.json").exists()
        assert not (tmp_path / "ignored").exists()

    def test_bad_config_exit_code(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{")
        assert main(["simulate", "--config", str(path)]) == EXIT_CONFIG

    def test_missing_config_exit_code(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "none.json")]) == EXIT_CONFIG

    def test_register_cap_exit_code(self, tmp_path):
        cfg = {"hamiltonian": {"n_qubits": 11, "terms": []}, "t": 0.1, "n_steps": 1}
        path = tmp_path / "big.json"
        path.write_text(json.dumps(cfg))
        assert main(["simulate", "--config", str(path)]) == EXIT_RESOURCE


class TestProbeRound:
    def test_prints_distribution(self, capsys):
        code = main(["probe-round", "--eps", "0.2", "--samples", "1000", "--seed", "1"])
        assert code == EXIT_OK
        out = json.loads(capsys.readouterr().out)
        assert sum(out["counts"].values()) == 1000
        assert out["analytic"]["plus"] == pytest.approx(0.34)

    def test_seed_reproducible(self, capsys):
        main(["probe-round", "--eps", "0.4", "--samples", "500", "--seed", "7"])
        first = capsys.readouterr().out
        main(["probe-round", "--eps", "0.4", "--samples", "500", "--seed", "7"])
        assert capsys.readouterr().out == first

    def test_bad_eps(self, capsys):
        assert main(["probe-round", "--eps", "1.7"]) == EXIT_CONFIG


class TestSchedule:
    def test_prints_plan_and_budget(self, config_file, capsys):
        code = main(["schedule", "--config", str(config_file)])
        assert code == EXIT_OK
        out = json.loads(capsys.readouterr().out)
        assert out["budget"]["layers_per_sweep"] == 2
        assert out["budget"]["serial_rounds"] > 0
        assert 0 < out["paper_bulk_success_probability"] < 1

    def test_confidence_flag(self, config_file, capsys):
        main(["schedule", "--config", str(config_file), "--confidence", "0.5"])
        loose = json.loads(capsys.readouterr().out)["budget"]["parallel_depth"]
        main(["schedule", "--config", str(config_file), "--confidence", "0.999"])
        tight = json.loads(capsys.readouterr().out)["budget"]["parallel_depth"]
        assert tight > loose


class TestCnotDemoCommand:
    def test_noiseless(self, capsys):
        code = main(["cnot-demo", "--seed", "2"])
        assert code == EXIT_OK
        out = json.loads(capsys.readouterr().out)
        assert out["process_fidelity"] >= 1 - 1e-9
        assert out["backup"] is False

    def test_lossy_enables_backup(self, capsys):
        code = main(["cnot-demo", "--p-loss", "0.3", "--seed", "2"])
        assert code == EXIT_OK
        out = json.loads(capsys.readouterr().out)
        assert out["backup"] is True
        assert out["process_fidelity"] >= 1 - 1e-9


class TestOracle:
    def test_reports_plan_fidelity(self, config_file, capsys):
        code = main(["oracle", "--config", str(config_file)])
        assert code == EXIT_OK
        out = json.loads(capsys.readouterr().out)
        # commuting XX chain: plan is exact
        assert out["noiseless_plan_fidelity"] == pytest.approx(1.0)
