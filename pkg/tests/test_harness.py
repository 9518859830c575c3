import json
import math

import numpy as np
import pytest

from mfsim.compiler import HamiltonianSpec
from mfsim.errors import ConfigError, ResourceError
from mfsim.feedback import EpsilonPolicy, PolicyMode
from mfsim.harness import (
    CNOT_MATRIX,
    ProtocolConfig,
    aggregate_report,
    build_register,
    cnot_demo,
    cnot_dressing,
    emit_report,
    haar_random_amplitudes,
    noiseless_plan_fidelity,
    probe_rounds,
    run_ensemble,
    run_trajectory,
    trajectory_rng,
)

from conftest import kron_le


def chain_config(**overrides) -> ProtocolConfig:
    base = {
        "hamiltonian": {
            "n_qubits": 3,
            "terms": [
                {"sites": [0, 1], "axes": "XX", "coeff": 1.0},
                {"sites": [1, 2], "axes": "ZZ", "coeff": 0.7},
            ],
        },
        "t": 0.3,
        "n_steps": 2,
        "trajectories": 3,
        "master_seed": 7,
        "initial_state": {"random_seed": 11},
    }
    base.update(overrides)
    return ProtocolConfig.from_dict(base)


class TestProtocolConfig:
    def test_round_trip(self):
        cfg = chain_config()
        again = ProtocolConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
        assert again.to_dict() == cfg.to_dict()

    def test_defaults(self):
        cfg = ProtocolConfig.from_dict(
            {"hamiltonian": {"n_qubits": 2, "terms": []}, "t": 1.0, "n_steps": 1}
        )
        assert cfg.policy.mode is PolicyMode.RESIDUAL_EXACT
        assert cfg.loss.p_loss == 0.0
        assert cfg.trajectories == 1

    def test_bad_steps(self):
        with pytest.raises(ConfigError):
            chain_config(n_steps=0)

    def test_bad_file(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            ProtocolConfig.from_json_file(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            ProtocolConfig.from_json_file(tmp_path / "nope.json")


class TestInitialStates:
    def test_all_zeros(self):
        cfg = chain_config(initial_state="all_zeros")
        _, st = build_register(cfg)
        assert st.amplitudes[0] == pytest.approx(1.0)

    def test_all_plus(self):
        cfg = chain_config(initial_state="all_plus")
        _, st = build_register(cfg)
        assert np.allclose(st.amplitudes[:8], np.full(8, 1 / math.sqrt(8)))

    def test_explicit_amplitudes_normalized(self):
        amp = [[2.0, 0.0]] + [[0.0, 0.0]] * 7
        cfg = chain_config(initial_state={"amplitudes": amp})
        _, st = build_register(cfg)
        assert st.amplitudes[0] == pytest.approx(1.0)

    def test_wrong_length_rejected(self):
        cfg = chain_config(initial_state={"amplitudes": [[1.0, 0.0], [0.0, 0.0]]})
        with pytest.raises(ConfigError):
            build_register(cfg)

    def test_unknown_preset(self):
        cfg = chain_config(initial_state="sideways")
        with pytest.raises(ConfigError):
            build_register(cfg)

    def test_register_cap(self):
        cfg = ProtocolConfig.from_dict(
            {"hamiltonian": {"n_qubits": 11, "terms": []}, "t": 0.1, "n_steps": 1}
        )
        with pytest.raises(ResourceError):
            build_register(cfg)  # 11 data + 2 photons > 12-qubit cap


class TestTrajectoryRng:
    def test_same_key_same_stream(self):
        a = trajectory_rng(42, 3).random(5)
        b = trajectory_rng(42, 3).random(5)
        assert np.array_equal(a, b)

    def test_index_changes_stream(self):
        a = trajectory_rng(42, 3).random(5)
        b = trajectory_rng(42, 4).random(5)
        assert not np.array_equal(a, b)

    def test_haar_amplitudes_normalized(self):
        v = haar_random_amplitudes(3, trajectory_rng(0, 0))
        assert np.linalg.norm(v) == pytest.approx(1.0)


class TestRunTrajectory:
    def test_single_term_matches_oracle(self):
        cfg = chain_config(
            hamiltonian={
                "n_qubits": 2,
                "terms": [{"sites": [0, 1], "axes": "XY", "coeff": 0.9}],
            },
            n_steps=1,
            t=0.5,
        )
        stats = run_trajectory(cfg, 0)
        # one term: the Trotter plan is exact, so only feedback could lose fidelity
        assert stats.fidelity_vs_oracle >= 1 - 1e-9
        assert not stats.failed

    def test_deterministic_replay(self):
        cfg = chain_config()
        a = run_trajectory(cfg, 1)
        b = run_trajectory(cfg, 1)
        assert a.to_dict() == b.to_dict()

    def test_trotter_fidelity_bounded_by_plan(self):
        # stochastic execution realizes exactly the plan unitary, so the
        # fidelity loss equals the deterministic Trotter error
        cfg = chain_config(n_steps=8, trajectories=1)
        want = noiseless_plan_fidelity(cfg)
        stats = run_trajectory(cfg, 0)
        assert stats.fidelity_vs_oracle == pytest.approx(want, abs=1e-9)

    def test_exhaustion_reported_not_raised(self):
        cfg = chain_config(policy={"max_rounds": 1}, trajectories=1)
        # with a single allowed round some rotation eventually stays incomplete
        failures = 0
        for i in range(10):
            stats = run_trajectory(cfg, i)
            failures += stats.failed
            if stats.failed:
                assert "incomplete" in stats.failure_reason
        assert failures > 0


class TestEnsembleAndReport:
    def test_report_shape(self):
        cfg = chain_config()
        report, stats = run_ensemble(cfg)
        assert report["n_trajectories"] == 3
        assert set(report["outcome_frequencies"]) <= {"plus", "minus", "hh", "vv", "loss"}
        assert report["fidelity"]["mean"] is not None
        assert report["rounds"]["total"] == sum(s.rounds_total for s in stats)

    def test_outcome_frequencies_normalized(self):
        cfg = chain_config(trajectories=5)
        report, _ = run_ensemble(cfg)
        assert sum(report["outcome_frequencies"].values()) == pytest.approx(1.0)

    def test_rounds_per_rotation_keys(self):
        cfg = chain_config()
        report, _ = run_ensemble(cfg)
        assert set(report["rounds_per_rotation_site"]) == {"0-1:XX", "1-2:ZZ"}

    def test_emit_report_files(self, tmp_path):
        cfg = chain_config(trajectories=2)
        report, stats = run_ensemble(cfg)
        written = emit_report(report, stats, tmp_path, fmt="csv")
        names = {p.name for p in written}
        assert names == {"report.json", "audit.jsonl", "rounds_per_rotation.csv"}
        parsed = json.loads((tmp_path / "report.json").read_text())
        assert parsed == report
        lines = (tmp_path / "audit.jsonl").read_text().splitlines()
        assert len(lines) == 2
        assert json.loads(lines[0])["trajectory"] == 0

    def test_reports_are_byte_identical(self, tmp_path):
        cfg = chain_config(trajectories=2)
        for sub in ("a", "b"):
            report, stats = run_ensemble(cfg)
            emit_report(report, stats, tmp_path / sub)
        for name in ("report.json", "audit.jsonl"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_no_wall_time_in_outputs(self, tmp_path):
        cfg = chain_config(trajectories=1)
        report, stats = run_ensemble(cfg)
        emit_report(report, stats, tmp_path)
        blob = (tmp_path / "report.json").read_text() + (tmp_path / "audit.jsonl").read_text()
        assert "wall_time" not in blob
        assert stats[0].wall_time > 0  # still tracked in memory


class TestProbeRounds:
    def test_counts_sum_to_samples(self):
        out = probe_rounds(0.2, 5000, trajectory_rng(0, 0))
        assert sum(out["counts"].values()) == 5000

    def test_frequencies_near_analytic(self):
        n = 200_000
        out = probe_rounds(0.3, n, trajectory_rng(1, 0))
        for lab, p in out["analytic"].items():
            se = math.sqrt(p * (1 - p) / n)
            assert abs(out["frequencies"][lab] - p) <= 4 * se

    def test_analytic_matches_closed_form(self):
        out = probe_rounds(0.25, 10, trajectory_rng(0, 0))
        assert out["analytic"]["plus"] == pytest.approx(0.5 * (0.75**2 + 0.25**2))
        assert out["analytic"]["hh"] == pytest.approx(0.25 * 0.75)


class TestCnotDemo:
    def test_dressing_identity(self):
        # dense check: (A1 x A2) e^{i pi/4 XX} (B1 x B2) = CNOT up to phase
        a1, a2, b1, b2 = cnot_dressing()
        xx = kron_le(
            np.array([[0, 1], [1, 0]], dtype=complex),
            np.array([[0, 1], [1, 0]], dtype=complex),
        )
        v = np.cos(np.pi / 4) * np.eye(4) + 1j * np.sin(np.pi / 4) * xx
        u = kron_le(a1, a2) @ v @ kron_le(b1, b2)
        phase = u[0, 0] / abs(u[0, 0])
        assert np.allclose(u / phase, CNOT_MATRIX, atol=1e-12)

    def test_noiseless_process_fidelity(self):
        out = cnot_demo(EpsilonPolicy(max_rounds=256), master_seed=3)
        assert out["process_fidelity"] >= 1 - 1e-9

    def test_lossy_with_backup(self):
        out = cnot_demo(
            EpsilonPolicy(max_rounds=4096), master_seed=5, p_loss=0.4, backup=True
        )
        assert out["process_fidelity"] >= 1 - 1e-9
        assert out["total_rounds"] > 6  # retries actually happened
