"""Trajectory execution, ensemble statistics, oracle comparison, and reporting.

Every trajectory derives its random generator purely from
(master_seed, trajectory index), so reruns of the same configuration are
bit-identical regardless of execution order.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .compiler import HamiltonianSpec, TrotterPlan, compile_plan, round_budget, schedule_parallel
from .emission import (
    BeamSplitterOutcome,
    PhotonEncoding,
    joint_emission,
    bell_projectors,
    outcome_probabilities,
)
from .errors import ConfigError, IncompleteRotationError, ResourceError
from .feedback import (
    BackupRoundEngine,
    DirectRoundEngine,
    EpsilonPolicy,
    PolicyMode,
    RoundRecord,
    realize_v,
    realize_v_kl,
)
from .loss import LossConfig
from .pauli import ErrorFrame, PauliString
from .statevec import (
    DEFAULT_QUBIT_CAP,
    RegisterLayout,
    StateVector,
    _apply_subset_operator,
    apply_local,
    apply_pauli_string,
    exact_evolution,
)

_H_GATE = np.array([[1, 1], [1, -1]], dtype=float) / np.sqrt(2)


@dataclass(frozen=True)
class ProtocolConfig:
    hamiltonian: HamiltonianSpec
    t: float
    n_steps: int
    policy: EpsilonPolicy = EpsilonPolicy()
    loss: LossConfig = LossConfig()
    initial_state: object = "all_zeros"  # preset name, {"random_seed": k}, or amplitudes
    trajectories: int = 1
    master_seed: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> "ProtocolConfig":
        try:
            h = HamiltonianSpec.from_dict(d["hamiltonian"])
            t = float(d["t"])
            n_steps = int(d["n_steps"])
            pol = d.get("policy", {})
            policy = EpsilonPolicy(
                mode=PolicyMode(pol.get("mode", "residual_exact")),
                max_rounds=int(pol.get("max_rounds", 64)),
            )
            lo = d.get("loss", {})
            loss = LossConfig(
                p_loss=float(lo.get("p_loss", 0.0)),
                encoding=PhotonEncoding(lo.get("encoding", "polarization")),
                backup_enabled=bool(lo.get("backup_enabled", False)),
            )
            initial = d.get("initial_state", "all_zeros")
            trajectories = int(d.get("trajectories", 1))
            master_seed = int(d.get("master_seed", 0))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad configuration: {exc}") from exc
        if n_steps < 1:
            raise ConfigError("n_steps must be at least 1")
        if trajectories < 0:
            raise ConfigError("trajectories must be non-negative")
        return cls(h, t, n_steps, policy, loss, initial, trajectories, master_seed)

    @classmethod
    def from_json_file(cls, path) -> "ProtocolConfig":
        try:
            with open(path) as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        init = self.initial_state
        if isinstance(init, np.ndarray):
            init = {"amplitudes": [[float(a.real), float(a.imag)] for a in init]}
        return {
            "hamiltonian": self.hamiltonian.to_dict(),
            "t": self.t,
            "n_steps": self.n_steps,
            "policy": {"mode": self.policy.mode.value, "max_rounds": self.policy.max_rounds},
            "loss": {
                "p_loss": self.loss.p_loss,
                "encoding": self.loss.encoding.value,
                "backup_enabled": self.loss.backup_enabled,
            },
            "initial_state": init,
            "trajectories": self.trajectories,
            "master_seed": self.master_seed,
        }


def trajectory_rng(master_seed: int, index: int) -> np.random.Generator:
    """Deterministic per-trajectory generator, a pure function of (seed, index)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([master_seed, index])))


def haar_random_amplitudes(n_qubits: int, rng: np.random.Generator) -> np.ndarray:
    dim = 1 << n_qubits
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def _initial_data_amplitudes(cfg: ProtocolConfig) -> np.ndarray:
    n = cfg.hamiltonian.n_qubits
    dim = 1 << n
    init = cfg.initial_state
    if isinstance(init, str):
        if init == "all_zeros":
            amp = np.zeros(dim, dtype=complex)
            amp[0] = 1.0
            return amp
        if init == "all_plus":
            return np.full(dim, 1.0 / math.sqrt(dim), dtype=complex)
        raise ConfigError(f"unknown initial-state preset {init!r}")
    if isinstance(init, np.ndarray):
        amp = init.astype(complex)
    elif isinstance(init, dict) and "random_seed" in init:
        return haar_random_amplitudes(n, np.random.default_rng(int(init["random_seed"])))
    elif isinstance(init, dict) and "amplitudes" in init:
        amp = np.array([complex(re, im) for re, im in init["amplitudes"]])
    else:
        raise ConfigError(f"cannot interpret initial state {init!r}")
    if amp.shape != (dim,):
        raise ConfigError(f"initial state has {amp.shape[0]} amplitudes, expected {dim}")
    nrm = np.linalg.norm(amp)
    if nrm < 1e-12:
        raise ConfigError("initial state has zero norm")
    return amp / nrm


def build_register(cfg: ProtocolConfig) -> tuple[RegisterLayout, StateVector]:
    """Full register (data, optional backups, photon pair) in its initial state."""
    n = cfg.hamiltonian.n_qubits
    layout = RegisterLayout.build(n, with_backup=cfg.loss.backup_enabled)
    if layout.n_qubits > DEFAULT_QUBIT_CAP:
        raise ResourceError(
            f"register of {layout.n_qubits} qubits exceeds the cap of {DEFAULT_QUBIT_CAP}"
        )
    data_amp = _initial_data_amplitudes(cfg)
    full = np.zeros(1 << layout.n_qubits, dtype=complex)
    full[: data_amp.size] = data_amp  # data qubits are the low bits; rest in |0>
    return layout, StateVector(full, layout)


@dataclass
class TrajectoryStats:
    index: int
    rounds_total: int
    rounds_per_rotation: list[int]
    outcome_histogram: dict[str, int]
    loss_events: int
    photon_retry_counts: list[int]
    final_frame: str
    fidelity_vs_oracle: float
    failed: bool
    failure_reason: Optional[str]
    wall_time: float  # kept in memory only; excluded from reports for reproducibility
    records: list[RoundRecord] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "trajectory": self.index,
            "rounds_total": self.rounds_total,
            "rounds_per_rotation": self.rounds_per_rotation,
            "outcome_histogram": dict(sorted(self.outcome_histogram.items())),
            "loss_events": self.loss_events,
            "photon_retry_counts": self.photon_retry_counts,
            "final_frame": self.final_frame,
            "fidelity_vs_oracle": self.fidelity_vs_oracle,
            "failed": self.failed,
            "failure_reason": self.failure_reason,
            "rounds": [r.to_dict() for r in self.records],
        }


def _make_engine(cfg: ProtocolConfig, layout: RegisterLayout):
    photons = tuple(layout.photon_qubits[:2])
    if cfg.loss.backup_enabled:
        return BackupRoundEngine(photons, layout.backup_of, cfg.loss)
    loss_cfg = cfg.loss if cfg.loss.p_loss > 0.0 else None
    return DirectRoundEngine(photons, loss_cfg)


def _oracle_state(cfg: ProtocolConfig, layout: RegisterLayout) -> np.ndarray:
    u = exact_evolution(cfg.hamiltonian, cfg.t)
    return u @ _initial_data_amplitudes(cfg)


def run_trajectory(cfg: ProtocolConfig, index: int) -> TrajectoryStats:
    """Execute the compiled plan once, then compare against the exact oracle."""
    started = time.perf_counter()
    rng = trajectory_rng(cfg.master_seed, index)
    layout, state = build_register(cfg)
    n = layout.n_qubits
    plan = compile_plan(cfg.hamiltonian, cfg.t, cfg.n_steps)
    engine = _make_engine(cfg, layout)

    frame = ErrorFrame.identity(n)
    all_records: list[RoundRecord] = []
    rounds_per_rotation: list[int] = []
    failed = False
    failure_reason = None

    for _ in range(plan.n_steps):
        for rot in plan.sweep_rotations():
            try:
                state, frame, recs = realize_v_kl(
                    state, rot.sites, rot.axes[0], rot.axes[1], rot.angle,
                    cfg.policy, frame, rng, engine,
                )
            except IncompleteRotationError as exc:
                state, frame, recs = exc.state, exc.frame, exc.records
                failed = True
                failure_reason = (
                    f"rotation on {rot.sites} incomplete, residual {exc.residual:.3e}"
                )
            all_records.extend(recs)
            rounds_per_rotation.append(len(recs))
            if failed:
                break
        if failed:
            break

    corrected = apply_pauli_string(state, frame.byproduct)
    data_dim = 1 << cfg.hamiltonian.n_qubits
    data_amp = corrected.amplitudes[:data_dim]
    oracle = _oracle_state(cfg, layout)
    fid = float(abs(np.vdot(oracle, data_amp)) ** 2)

    histogram: dict[str, int] = {}
    loss_events = 0
    retry_counts: list[int] = []
    pending_losses = 0
    for rec in all_records:
        histogram[rec.outcome] = histogram.get(rec.outcome, 0) + 1
        if rec.outcome == "loss":
            loss_events += 1
            pending_losses += 1
        else:
            retry_counts.append(pending_losses + 1)
            pending_losses = 0

    return TrajectoryStats(
        index=index,
        rounds_total=len(all_records),
        rounds_per_rotation=rounds_per_rotation,
        outcome_histogram=histogram,
        loss_events=loss_events,
        photon_retry_counts=retry_counts,
        final_frame=str(frame),
        fidelity_vs_oracle=fid,
        failed=failed,
        failure_reason=failure_reason,
        wall_time=time.perf_counter() - started,
        records=all_records,
    )


def run_ensemble(cfg: ProtocolConfig) -> tuple[dict, list[TrajectoryStats]]:
    """Run all trajectories and aggregate; failed trajectories are kept, not resampled."""
    stats = [run_trajectory(cfg, i) for i in range(cfg.trajectories)]
    return aggregate_report(cfg, stats), stats


def aggregate_report(cfg: ProtocolConfig, stats: list[TrajectoryStats]) -> dict:
    fids = [s.fidelity_vs_oracle for s in stats]
    rounds = [s.rounds_total for s in stats]
    retries = [r for s in stats for r in s.photon_retry_counts]
    histogram: dict[str, int] = {}
    for s in stats:
        for k, v in s.outcome_histogram.items():
            histogram[k] = histogram.get(k, 0) + v
    per_rotation: dict[str, list[int]] = {}
    plan = compile_plan(cfg.hamiltonian, cfg.t, cfg.n_steps)
    sweep = list(plan.sweep_rotations())
    for s in stats:
        for i, count in enumerate(s.rounds_per_rotation):
            rot = sweep[i % len(sweep)] if sweep else None
            key = f"{rot.sites[0]}-{rot.sites[1]}:{rot.axes[0].value}{rot.axes[1].value}" if rot else "?"
            per_rotation.setdefault(key, []).append(count)

    n_out = sum(histogram.values())
    report = {
        "config": cfg.to_dict(),
        "n_trajectories": len(stats),
        "n_failed": sum(1 for s in stats if s.failed),
        "fidelity": {
            "mean": float(np.mean(fids)) if fids else None,
            "variance": float(np.var(fids)) if fids else None,
            "min": float(min(fids)) if fids else None,
        },
        "rounds": {
            "total": int(sum(rounds)),
            "mean_per_trajectory": float(np.mean(rounds)) if rounds else None,
            "mean_per_rotation": (
                float(np.mean([c for s in stats for c in s.rounds_per_rotation]))
                if any(s.rounds_per_rotation for s in stats)
                else None
            ),
        },
        "outcome_frequencies": {
            k: v / n_out for k, v in sorted(histogram.items())
        } if n_out else {},
        "outcome_counts": dict(sorted(histogram.items())),
        "loss": {
            "events": int(sum(s.loss_events for s in stats)),
            "retry_mean": float(np.mean(retries)) if retries else None,
            "retry_count": len(retries),
        },
        "rounds_per_rotation_site": {
            k: float(np.mean(v)) for k, v in sorted(per_rotation.items())
        },
    }
    return report


def probe_rounds(eps: float, samples: int, rng: np.random.Generator) -> dict:
    """Sample the four-outcome law at fixed eps.

    The outcome distribution of a round is independent of the atomic state,
    so the Born probabilities are computed once through the full emission and
    projection machinery and the outcomes drawn as one multinomial.
    """
    layout = RegisterLayout.build(2)
    state = StateVector.computational_basis(layout, 0)
    photons = tuple(layout.photon_qubits)
    state = joint_emission(state, (0, 1), photons, eps)
    probs = []
    for proj in bell_projectors():
        branch = _apply_subset_operator(state, photons, proj)
        probs.append(float(np.vdot(branch, branch).real))
    counts = rng.multinomial(samples, np.array(probs) / sum(probs))
    labels = ["minus", "plus", "hh", "vv"]
    analytic = outcome_probabilities(eps)
    return {
        "eps": eps,
        "samples": samples,
        "counts": {lab: int(c) for lab, c in zip(labels, counts)},
        "frequencies": {lab: float(c / samples) for lab, c in zip(labels, counts)},
        "analytic": {k.value: v for k, v in analytic.items()},
    }


# Local dressing turning e^{i pi/4 XX} into CNOT (control = first qubit),
# verified against the dense oracle in the test suite:
#   (A1 (x) A2) . e^{i pi/4 XX} . (B1 (x) B2) = CNOT up to global phase.
def cnot_dressing() -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    rz = np.diag([np.exp(-1j * np.pi / 4), np.exp(1j * np.pi / 4)])  # e^{-i pi/4 Z}
    rx = np.cos(np.pi / 4) * np.eye(2) - 1j * np.sin(np.pi / 4) * np.array([[0, 1], [1, 0]])
    a1 = rz @ _H_GATE
    a2 = rx
    b1 = _H_GATE.astype(complex)
    b2 = np.eye(2, dtype=complex)
    return a1, a2, b1, b2


CNOT_MATRIX = np.array(
    [[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex
)


def _cnot_demo_inputs() -> list[np.ndarray]:
    basis = [np.eye(4, dtype=complex)[i] for i in range(4)]
    plus_plus = np.full(4, 0.5, dtype=complex)
    bell = np.zeros(4, dtype=complex)
    bell[0] = bell[3] = 1 / math.sqrt(2)
    return basis + [plus_plus, bell]


def cnot_demo(
    policy: EpsilonPolicy,
    master_seed: int = 0,
    p_loss: float = 0.0,
    backup: bool = False,
    t: float = math.pi / 4,
) -> dict:
    """Realize V(pi/4) by feedback, dress it with local gates, compare to CNOT.

    Process fidelity is the mean state fidelity over the four computational
    basis inputs plus two superposition inputs.
    """
    a1, a2, b1, b2 = cnot_dressing()
    loss = LossConfig(
        p_loss=p_loss,
        encoding=PhotonEncoding.POLARIZATION,
        backup_enabled=backup,
    )
    layout = RegisterLayout.build(2, with_backup=backup)
    photons = tuple(layout.photon_qubits)
    if backup:
        engine = BackupRoundEngine(photons, layout.backup_of, loss)
    else:
        engine = DirectRoundEngine(photons, loss if p_loss > 0 else None)

    fidelities = []
    total_rounds = 0
    for i, data_amp in enumerate(_cnot_demo_inputs()):
        rng = trajectory_rng(master_seed, i)
        full = np.zeros(1 << layout.n_qubits, dtype=complex)
        full[:4] = data_amp
        state = StateVector(full, layout)
        state = apply_local(state, 0, b1)
        state = apply_local(state, 1, b2)
        frame = ErrorFrame.identity(layout.n_qubits)
        state, frame, recs = realize_v(state, (0, 1), t, policy, frame, rng, engine)
        total_rounds += len(recs)
        state = apply_pauli_string(state, frame.byproduct)
        state = apply_local(state, 0, a1)
        state = apply_local(state, 1, a2)
        got = state.amplitudes[:4]
        want = CNOT_MATRIX @ data_amp
        fidelities.append(float(abs(np.vdot(want, got)) ** 2))

    return {
        "t": t,
        "p_loss": p_loss,
        "backup": backup,
        "input_fidelities": fidelities,
        "process_fidelity": float(np.mean(fidelities)),
        "total_rounds": total_rounds,
    }


def noiseless_plan_fidelity(cfg: ProtocolConfig) -> float:
    """Fidelity of the dense noiseless plan execution against the exact oracle."""
    plan = compile_plan(cfg.hamiltonian, cfg.t, cfg.n_steps)
    from .compiler import plan_unitary

    u_plan = plan_unitary(plan)
    psi0 = _initial_data_amplitudes(cfg)
    u_exact = exact_evolution(cfg.hamiltonian, cfg.t)
    return float(abs(np.vdot(u_exact @ psi0, u_plan @ psi0)) ** 2)


def emit_report(
    report: dict,
    stats: list[TrajectoryStats],
    out_dir,
    fmt: str = "json",
) -> list[Path]:
    """Write the aggregate report plus the per-trajectory JSON-lines audit log.

    Wall-clock timings are deliberately excluded so identical configurations
    produce byte-identical files.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        report_path = out / "report.json"
        report_path.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
        written.append(report_path)

        audit_path = out / "audit.jsonl"
        with open(audit_path, "w") as f:
            for s in stats:
                f.write(json.dumps(s.to_dict(), sort_keys=True) + "\n")
        written.append(audit_path)

        if fmt == "csv":
            csv_path = out / "rounds_per_rotation.csv"
            with open(csv_path, "w", newline="") as f:
                w = csv.writer(f)
                w.writerow(["rotation_site", "mean_rounds"])
                for key, val in report.get("rounds_per_rotation_site", {}).items():
                    w.writerow([key, val])
            written.append(csv_path)
        return written
    except OSError as exc:
        raise OSError(f"failed writing report under {out}: {exc}") from exc
